#pragma once

#include <functional>
#include <memory>

#include "mag/covering.hpp"
#include "mag/field.hpp"

namespace mag {

/// Per-ball approximate field B_i with gauge A_i. Strong case: B_i equals B on
/// B(x_i, 6 ell_i) and freezes to B(x_i) outside B(x_i, 7 ell_i). Weak case:
/// B_i = chi_tilde B + grad(chi_tilde) x A_hat, supported in D-tilde.
class LocalField : public MagneticFieldModel {
public:
    enum class Kind { strong, weak };

    Vec3 operator()(const Vec3& x) const override;
    double reference_length() const override { return ell_; }

    Vec3 gauge(const Vec3& x) const;  // A_i

    Kind kind() const { return kind_; }
    const Vec3& center() const { return center_; }
    double ell() const { return ell_; }
    Vec3 exterior_value() const { return b_exterior_; }  // B(x_i) (strong) or 0 (weak)
    double identity_radius() const { return 6.0 * ell_; }
    double support_radius() const { return 7.0 * ell_; }

    friend LocalField strong_local_field(FieldPtr field, const BallCover& cover, size_t i,
                                         double eps, double poincare_tol);
    friend LocalField weak_local_field(FieldPtr field, GaugePtr global_gauge, const BallCover& cover,
                                       size_t i, double poincare_tol);

private:
    LocalField() = default;
    FieldPtr base_;
    GaugePtr global_gauge_;   // weak case only
    GaugePtr sharp_;          // strong: Poincare gauge of B - B(x_i); weak: Poincare of B
    Kind kind_ = Kind::strong;
    size_t index_ = 0;
    Vec3 center_;
    double ell_ = 0.0;
    Vec3 b_center_;
    Vec3 b_exterior_;
};

/// Lemma-5.6-style construction on a strong ball: B_i = curl(chi_tilde A#) + B(x_i),
/// A# the Poincare gauge of B - B(x_i) based at x_i. Requires (D-tilde,1)-regularity
/// of the input field; the check is the caller's (assess_regularity).
LocalField strong_local_field(FieldPtr field, const BallCover& cover, size_t i, double eps,
                              double poincare_tol = 1e-10);

/// Weak-ball construction: A_i = A - (1 - chi_tilde) A_hat with A_hat the Poincare
/// gauge of B based at x_i.
LocalField weak_local_field(FieldPtr field, GaugePtr global_gauge, const BallCover& cover, size_t i,
                            double poincare_tol = 1e-10);

/// Transverse homotopy gauge for a closed 2-form beta (given by its dual vector
/// field): alpha with d(alpha) = beta and alpha(0,0,xi3) = 0.
class TransverseGauge {
public:
    TransverseGauge(std::function<Vec3(const Vec3&)> beta_dual, int quad_order = 32);

    Vec3 alpha(const Vec3& xi) const;

    // moment functional b_{k,m}(xi_perp): line integrals of sup norms of grad^m beta
    // with the sup taken over the given transverse sampling box.
    double moment(int k, int m, const Vec3& xi, const Box& sup_box, int sup_samples = 12) const;

    // residual |curl(alpha) - beta| / (1 + |beta|) at xi, central differences
    double exactness_residual(const Vec3& xi, double fd_step) const;

private:
    std::function<Vec3(const Vec3&)> beta_;
    int order_;
};

}  // namespace mag
