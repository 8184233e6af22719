#pragma once

#include <functional>

#include "mag/field.hpp"
#include "mag/quadrature.hpp"
#include "mag/scales.hpp"
#include "mag/vec.hpp"

namespace mag {

/// Pressure of the three-dimensional Landau gas, both algebraic forms.
/// form 0: (B/3pi^2)(W^{3/2} + 2 sum_{nu>=1} [W-2nuB]_+^{3/2})
/// form 1: (2/3pi) sum_{nu>=0} d_nu B [W-2nuB]_+^{3/2}, d_0 = 1/2pi, d_nu = 1/pi
double landau_pressure(double B, double W, int form = 0);

/// Semiclassical energy E = -h^-3 int P(h|B(x)|, [V(x)]_-) dx over the support
/// box of the negative part of V.
struct SemiclassicalResult {
    double energy = 0.0;
    double quad_error = 0.0;
    bool converged = true;
};
SemiclassicalResult semiclassical_energy(const MagneticFieldModel& field,
                                         const std::function<double(const Vec3&)>& V, double h,
                                         const Box& support, double rel_tol = 1e-7);

/// Right-hand side of the uniform eigenvalue-sum bound, three-term breakdown
/// (unit universal constants; callers report measured ratios).
struct BoundBreakdown {
    double term1 = 0.0;  // int [V]_-^{5/2}
    double term2 = 0.0;  // int |B| [V]_-^{3/2}
    double term3 = 0.0;  // int (|B| + Lc^-2) Lc^-1 [V]_-
    double err1 = 0.0, err2 = 0.0, err3 = 0.0;
    double total() const { return term1 + term2 + term3; }
};
BoundBreakdown lt_rhs(const MagneticFieldModel& field, const std::function<double(const Vec3&)>& V,
                      const ScaleProfile& scales, const Box& support, double rel_tol = 1e-6,
                      bool field_is_constant = false, int term3_coarse = 4, int term3_fine = 8);

/// Pointwise zero-mode density bound (|B(x)| + Lc^-2) Lc^-1 (zero for constant fields).
double zero_mode_density_bound(const MagneticFieldModel& field, const Vec3& x,
                               const ScaleProfile& scales);

}  // namespace mag
