#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "mag/field.hpp"
#include "mag/vec.hpp"

namespace mag {

constexpr double kScaleInfinity = std::numeric_limits<double>::infinity();

struct ScaleOptions {
    int sup_seeds = 128;        // low-discrepancy seeds for ball extremization
    int sup_refine = 60;        // pattern-search rounds
    int deriv_seeds = 32;       // cheaper search for derivative sup objectives
    int bisect_iters = 60;
    double bracket_lo = 1e-6;   // times reference length
    double bracket_hi = 1e6;
};

/// Local lengthscales of a magnetic field: sup/inf field strength over balls,
/// magnetic scale, variation scale, combined and tempered scales,
/// ell = eps L and the energy shift P = eps^-5 ell^-2.
class ScaleProfile {
public:
    ScaleProfile(FieldPtr field, double epsilon = 1.0 / 1024.0, ScaleOptions opts = {});

    double sup_field(const Vec3& x, double L) const;  // B_L
    double inf_field(const Vec3& x, double L) const;  // b_L

    double magnetic_scale(const Vec3& x) const;       // L_m, +inf sentinel
    double variation_scale(const Vec3& x) const;      // L_v, +inf sentinel, 0 on failure
    double combined_scale(const Vec3& x) const;       // L_c = max(L_m, L_v)
    double tempered_scale(const Vec3& x) const;       // L = L_c / 2
    double ell(const Vec3& x) const;                  // eps * L
    double pressure_scale(const Vec3& x) const;       // P = eps^-5 ell^-2 (0 when ell = inf)

    double epsilon() const { return eps_; }
    const MagneticFieldModel& field() const { return *field_; }
    FieldPtr field_ptr() const { return field_; }

    // max over the probe set of the g-th derivative sup over B(x,L), g=1..4
    std::array<double, 4> derivative_sup(const Vec3& x, double L) const;

private:
    FieldPtr field_;
    double eps_;
    ScaleOptions opts_;
};

struct TemperReport {
    bool ok = true;
    double worst_lo = 1.0, worst_hi = 1.0;  // extreme ratios f(y)/f(x) over tested pairs
    Vec3 bad_x, bad_y;
    int pairs_tested = 0;
};

/// Validates the eps-tempered property of a positive function on supplied pairs:
/// |x-y| <= f(x)/eps must imply 1/2 <= f(y)/f(x) <= 2.
TemperReport check_tempered(const std::function<double(const Vec3&)>& f, double eps,
                            const std::vector<std::pair<Vec3, Vec3>>& pairs);

/// Deterministic admissible pair generation around base points in a box.
std::vector<std::pair<Vec3, Vec3>> tempered_test_pairs(const std::function<double(const Vec3&)>& f,
                                                       double eps, const Box& box, int n_base,
                                                       int pairs_per_base, unsigned seed = 12345);

}  // namespace mag
