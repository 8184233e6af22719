#include "mag/analytic.hpp"

#include <cmath>

#include "mag/errors.hpp"

namespace mag {

double landau_pressure(double B, double W, int form) {
    if (B < 0.0 || W < 0.0) throw config_error("landau_pressure: B, W must be nonnegative");
    if (W == 0.0) return 0.0;
    if (B == 0.0) {
        // Landau-level sum degenerates to the Weyl integral
        return 2.0 / (15.0 * M_PI * M_PI) * std::pow(W, 2.5);
    }
    if (form == 0) {
        double s = std::pow(W, 1.5);
        for (int nu = 1; 2.0 * nu * B < W; ++nu) s += 2.0 * std::pow(W - 2.0 * nu * B, 1.5);
        return B / (3.0 * M_PI * M_PI) * s;
    }
    double s = (1.0 / (2.0 * M_PI)) * std::pow(W, 1.5);
    for (int nu = 1; 2.0 * nu * B < W; ++nu) s += (1.0 / M_PI) * std::pow(W - 2.0 * nu * B, 1.5);
    return 2.0 / (3.0 * M_PI) * B * s;
}

SemiclassicalResult semiclassical_energy(const MagneticFieldModel& field,
                                         const std::function<double(const Vec3&)>& V, double h,
                                         const Box& support, double rel_tol) {
    if (h <= 0.0) throw config_error("semiclassical_energy: h must be positive");
    auto f = [&](const Vec3& x) {
        double w = std::max(0.0, -V(x));
        if (w == 0.0) return 0.0;
        return landau_pressure(h * norm(field(x)), w);
    };
    QuadResult q = adaptive_box_integrate(f, support, rel_tol);
    SemiclassicalResult r;
    r.energy = -q.value / (h * h * h);
    r.quad_error = q.error_estimate / (h * h * h);
    r.converged = q.converged;
    if (!q.converged) throw numerical_error("semiclassical_energy: quadrature did not converge");
    return r;
}

BoundBreakdown lt_rhs(const MagneticFieldModel& field, const std::function<double(const Vec3&)>& V,
                      const ScaleProfile& scales, const Box& support, double rel_tol,
                      bool field_is_constant, int term3_coarse, int term3_fine) {
    BoundBreakdown out;
    auto vminus = [&](const Vec3& x) { return std::max(0.0, -V(x)); };
    {
        QuadResult q = adaptive_box_integrate([&](const Vec3& x) { return std::pow(vminus(x), 2.5); },
                                              support, rel_tol);
        out.term1 = q.value;
        out.err1 = q.error_estimate;
    }
    {
        QuadResult q = adaptive_box_integrate(
            [&](const Vec3& x) { return norm(field(x)) * std::pow(vminus(x), 1.5); }, support, rel_tol);
        out.term2 = q.value;
        out.err2 = q.error_estimate;
    }
    if (field_is_constant || field.descriptor().name == "constant") {
        out.term3 = 0.0;  // combined scale is infinite, the linear term drops
        return out;
    }
    // L_c evaluations are expensive: fixed midpoint grid with one refinement level
    auto term3_integrand = [&](const Vec3& x) {
        double w = vminus(x);
        if (w == 0.0) return 0.0;
        double lc = scales.combined_scale(x);
        if (std::isinf(lc)) return 0.0;
        double inv = 1.0 / lc;
        return (norm(field(x)) + inv * inv) * inv * w;
    };
    auto grid_sum = [&](int n) {
        Vec3 s = support.side();
        double acc = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    Vec3 p = support.lo +
                             Vec3{s.x * (i + 0.5) / n, s.y * (j + 0.5) / n, s.z * (k + 0.5) / n};
                    acc += term3_integrand(p);
                }
        return acc * support.volume() / (double(n) * n * n);
    };
    double coarse = grid_sum(term3_coarse), fine = grid_sum(term3_fine);
    out.term3 = fine;
    out.err3 = std::abs(fine - coarse);
    return out;
}

double zero_mode_density_bound(const MagneticFieldModel& field, const Vec3& x,
                               const ScaleProfile& scales) {
    double lc = scales.combined_scale(x);
    if (std::isinf(lc)) return 0.0;
    double inv = 1.0 / lc;
    return (norm(field(x)) + inv * inv) * inv;
}

}  // namespace mag
