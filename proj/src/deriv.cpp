#include "mag/deriv.hpp"

#include <cmath>

namespace mag {

// 6th-order central coefficients, offsets -4..4.
namespace {
const double C1[9] = {1.0 / 280, -4.0 / 105, 1.0 / 5, -4.0 / 5, 0.0, 4.0 / 5, -1.0 / 5, 4.0 / 105, -1.0 / 280};
const double C2[9] = {-1.0 / 560, 8.0 / 315, -1.0 / 5, 8.0 / 5, -205.0 / 72, 8.0 / 5, -1.0 / 5, 8.0 / 315, -1.0 / 560};
const double C3[9] = {-7.0 / 240, 3.0 / 10, -169.0 / 120, 61.0 / 30, 0.0, -61.0 / 30, 169.0 / 120, -3.0 / 10, 7.0 / 240};
const double C4[9] = {7.0 / 240, -2.0 / 5, 169.0 / 60, -122.0 / 15, 91.0 / 8, -122.0 / 15, 169.0 / 60, -2.0 / 5, 7.0 / 240};
}  // namespace

std::array<double, 4> Stencil9::derivatives(const std::array<double, 9>& f, double h) {
    // pairwise symmetric combinations: exact zeros on constant and odd/even data
    std::array<double, 4> d{};
    for (int m = 0; m < 4; ++m) {
        double anti = f[m] - f[8 - m];
        double sym = (f[m] - f[4]) + (f[8 - m] - f[4]);
        d[0] += C1[m] * anti;
        d[1] += C2[m] * sym;
        d[2] += C3[m] * anti;
        d[3] += C4[m] * sym;
    }
    d[0] /= h;
    d[1] /= h * h;
    d[2] /= h * h * h;
    d[3] /= h * h * h * h;
    return d;
}

std::array<Vec3, 4> directional_derivatives(const std::function<Vec3(const Vec3&)>& field,
                                            const Vec3& x, const Vec3& dir, double h) {
    std::array<double, 9> fx, fy, fz;
    for (int m = -4; m <= 4; ++m) {
        Vec3 v = field(x + dir * (m * h));
        fx[m + 4] = v.x;
        fy[m + 4] = v.y;
        fz[m + 4] = v.z;
    }
    auto dx = Stencil9::derivatives(fx, h);
    auto dy = Stencil9::derivatives(fy, h);
    auto dz = Stencil9::derivatives(fz, h);
    std::array<Vec3, 4> out;
    for (int g = 0; g < 4; ++g) out[g] = {dx[g], dy[g], dz[g]};
    return out;
}

std::array<double, 4> directional_derivatives_scalar(const std::function<double(const Vec3&)>& f,
                                                     const Vec3& x, const Vec3& dir, double h) {
    std::array<double, 9> v;
    for (int m = -4; m <= 4; ++m) v[m + 4] = f(x + dir * (m * h));
    return Stencil9::derivatives(v, h);
}

namespace {
// 5-point 4th-order first derivative
double d1_5pt(const std::function<double(double)>& g, double h) {
    return (g(-2 * h) - 8 * g(-h) + 8 * g(h) - g(2 * h)) / (12 * h);
}
}  // namespace

Vec3 gradient_fd(const std::function<double(const Vec3&)>& f, const Vec3& x, double h) {
    Vec3 g;
    for (int a = 0; a < 3; ++a) {
        g[a] = d1_5pt([&](double t) {
            Vec3 p = x;
            p[a] += t;
            return f(p);
        }, h);
    }
    return g;
}

Vec3 curl_fd(const std::function<Vec3(const Vec3&)>& field, const Vec3& x, double h) {
    double J[3][3];
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            J[a][b] = d1_5pt([&](double t) {
                Vec3 p = x;
                p[b] += t;
                return field(p)[a];
            }, h);
        }
    }
    return {J[2][1] - J[1][2], J[0][2] - J[2][0], J[1][0] - J[0][1]};
}

double divergence_fd(const std::function<Vec3(const Vec3&)>& field, const Vec3& x, double h) {
    double s = 0.0;
    for (int a = 0; a < 3; ++a) {
        s += d1_5pt([&](double t) {
            Vec3 p = x;
            p[a] += t;
            return field(p)[a];
        }, h);
    }
    return s;
}

const std::vector<Vec3>& probe_directions() {
    static const std::vector<Vec3> dirs = [] {
        std::vector<Vec3> d;
        for (int i = -1; i <= 1; ++i)
            for (int j = -1; j <= 1; ++j)
                for (int k = -1; k <= 1; ++k) {
                    if (i == 0 && j == 0 && k == 0) continue;
                    // keep one of each antipodal pair
                    if (i < 0 || (i == 0 && j < 0) || (i == 0 && j == 0 && k < 0)) continue;
                    d.push_back(normalized(Vec3{double(i), double(j), double(k)}));
                }
        return d;
    }();
    return dirs;
}

namespace {
double halton1(int i, int base) {
    double f = 1.0, r = 0.0;
    for (int n = i + 1; n > 0; n /= base) {
        f /= base;
        r += f * (n % base);
    }
    return r;
}
}  // namespace

Vec3 halton3(int i) { return {halton1(i, 2), halton1(i, 3), halton1(i, 5)}; }

std::vector<Vec3> ball_lowdisc_points(int n) {
    std::vector<Vec3> pts;
    pts.reserve(n);
    for (int i = 0; i < n; ++i) {
        Vec3 u = halton3(i);
        double r = std::cbrt(u.x);
        double ct = 2.0 * u.y - 1.0;
        double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
        double ph = 2.0 * M_PI * u.z;
        pts.push_back({r * st * std::cos(ph), r * st * std::sin(ph), r * ct});
    }
    return pts;
}

}  // namespace mag
