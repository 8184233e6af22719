#include "mag/vec.hpp"

#include <algorithm>
#include <ostream>

namespace mag {

double mat2_norm(const Mat2c& m) {
    // singular values of a 2x2: from eigenvalues of m^* m
    Mat2c g = m.adjoint() * m;
    double a = g(0, 0).real(), d = g(1, 1).real();
    cplx b = g(0, 1);
    double tr = a + d;
    double det = a * d - std::norm(b);
    double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    return std::sqrt(std::max(0.0, tr / 2.0 + disc));
}

std::array<double, 2> mat2_herm_eigs(const Mat2c& m) {
    double a = m(0, 0).real(), d = m(1, 1).real();
    double tr = a + d;
    double det = a * d - std::norm(m(0, 1));
    double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    return {tr / 2.0 - disc, tr / 2.0 + disc};
}

std::ostream& operator<<(std::ostream& os, const Vec3& v) {
    return os << "(" << v.x << ", " << v.y << ", " << v.z << ")";
}

}  // namespace mag
