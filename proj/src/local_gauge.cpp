#include "mag/local_gauge.hpp"

#include <cmath>

#include "mag/deriv.hpp"
#include "mag/errors.hpp"
#include "mag/quadrature.hpp"

namespace mag {

namespace {

// shifted field B - B0 as a model, for the Poincare gauge of the difference
class ShiftedField final : public MagneticFieldModel {
public:
    ShiftedField(FieldPtr base, Vec3 shift) : base_(std::move(base)), shift_(shift) {
        descriptor_ = {"shifted:" + base_->descriptor().name, {}};
    }
    Vec3 operator()(const Vec3& x) const override { return (*base_)(x) - shift_; }
    double reference_length() const override { return base_->reference_length(); }

private:
    FieldPtr base_;
    Vec3 shift_;
};

RadialCutoff tilde_profile(double ell) { return RadialCutoff(6.0 * ell, 7.0 * ell, 1); }

}  // namespace

Vec3 LocalField::operator()(const Vec3& x) const {
    Vec3 d = x - center_;
    double r = norm(d);
    RadialCutoff prof = tilde_profile(ell_);
    double ct = prof.value(r);
    Vec3 grad_ct = r > 0.0 ? (prof.slope(r) / r) * d : Vec3{};
    if (kind_ == Kind::strong) {
        if (r >= 7.0 * ell_) return b_center_;
        Vec3 db = (*base_)(x) - b_center_;
        Vec3 shell = norm2(grad_ct) > 0.0 ? cross(grad_ct, (*sharp_)(x)) : Vec3{};
        return b_center_ + ct * db + shell;
    }
    if (r >= 7.0 * ell_) return {};
    Vec3 shell = norm2(grad_ct) > 0.0 ? cross(grad_ct, (*sharp_)(x)) : Vec3{};
    return ct * (*base_)(x) + shell;
}

Vec3 LocalField::gauge(const Vec3& x) const {
    double r = norm(x - center_);
    double ct = tilde_profile(ell_).value(r);
    if (kind_ == Kind::strong) {
        Vec3 lin = 0.5 * cross(b_center_, x - center_);
        return (ct > 0.0 ? ct * (*sharp_)(x) : Vec3{}) + lin;
    }
    Vec3 a = (*global_gauge_)(x);
    return a - (1.0 - ct) * (*sharp_)(x);
}

LocalField strong_local_field(FieldPtr field, const BallCover& cover, size_t i, double eps,
                              double poincare_tol) {
    if (!cover.strong_flags.empty() && !cover.strong_flags[i])
        throw config_error("strong_local_field: index is not strong");
    LocalField lf;
    lf.kind_ = LocalField::Kind::strong;
    lf.index_ = i;
    lf.center_ = cover.centers[i];
    lf.ell_ = cover.radii[i];
    lf.base_ = field;
    lf.b_center_ = (*field)(lf.center_);
    lf.b_exterior_ = lf.b_center_;
    if (norm(lf.b_center_) < 1.0 / (eps * eps * lf.ell_ * lf.ell_))
        throw config_error("strong_local_field: center fails the strong-field threshold");
    auto shifted = std::make_shared<ShiftedField>(field, lf.b_center_);
    lf.sharp_ = std::make_shared<PoincareGauge>(shifted, lf.center_, poincare_tol, norm(lf.b_center_));
    lf.descriptor_ = {"local-strong:" + field->descriptor().name, {{"index", double(i)}}};
    return lf;
}

LocalField weak_local_field(FieldPtr field, GaugePtr global_gauge, const BallCover& cover, size_t i,
                            double poincare_tol) {
    LocalField lf;
    lf.kind_ = LocalField::Kind::weak;
    lf.index_ = i;
    lf.center_ = cover.centers[i];
    lf.ell_ = cover.radii[i];
    lf.base_ = field;
    lf.global_gauge_ = std::move(global_gauge);
    lf.b_center_ = (*field)(lf.center_);
    lf.b_exterior_ = {};
    lf.sharp_ = poincare_gauge(field, lf.center_, poincare_tol);
    lf.descriptor_ = {"local-weak:" + field->descriptor().name, {{"index", double(i)}}};
    return lf;
}

// ---------------------------------------------------------------------------
// transverse gauge
// ---------------------------------------------------------------------------

TransverseGauge::TransverseGauge(std::function<Vec3(const Vec3&)> beta_dual, int quad_order)
    : beta_(std::move(beta_dual)), order_(quad_order) {}

Vec3 TransverseGauge::alpha(const Vec3& xi) const {
    // beta matrix from the dual vector: beta_12 = B3, beta_23 = B1, beta_31 = B2
    const auto& gl = gauss_legendre(order_);
    Vec3 out{};
    for (int q = 0; q < order_; ++q) {
        double s = 0.5 * (gl.nodes[q] + 1.0);
        double w = 0.5 * gl.weights[q];
        Vec3 b = beta_({s * xi.x, s * xi.y, xi.z});
        // alpha_1 += xi2 * s * beta_21 = -xi2 s B3 ; alpha_2 += xi1 s B3
        out.x += w * (-xi.y * s * b.z);
        out.y += w * (xi.x * s * b.z);
        // alpha_3 += xi1 * beta_13 + xi2 * beta_23 = -xi1 B2 + xi2 B1 (weight 1)
        out.z += w * (-xi.x * b.y + xi.y * b.x);
    }
    return out;
}

double TransverseGauge::moment(int k, int m, const Vec3& xi, const Box& sup_box, int sup_samples) const {
    if (m > 1) throw config_error("TransverseGauge::moment: derivative order must be 0 or 1");
    double h = 1e-4 * std::max({std::abs(xi.x), std::abs(xi.y), norm(sup_box.side()), 1e-12});
    auto norm_dm = [&](const Vec3& p) {
        if (m == 0) return norm(beta_(p));
        double worst = 0.0;
        for (const Vec3& d : probe_directions())
            worst = std::max(worst, norm(directional_derivatives(beta_, p, d, h)[0]));
        return worst;
    };
    auto sup_line = [&](int axis, double u) {
        // sup over the two complementary coordinates, sampled on the box
        double worst = 0.0;
        int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
        for (int i = 0; i < sup_samples; ++i)
            for (int j = 0; j < sup_samples; ++j) {
                Vec3 p;
                p[axis] = u;
                p[a1] = sup_box.lo[a1] + (sup_box.side()[a1] * (i + 0.5)) / sup_samples;
                p[a2] = sup_box.lo[a2] + (sup_box.side()[a2] * (j + 0.5)) / sup_samples;
                double v = norm_dm(p);
                if (!std::isfinite(v)) throw numerical_error("TransverseGauge::moment diverged");
                worst = std::max(worst, v);
            }
        return worst;
    };
    double total = 0.0;
    for (int axis = 0; axis < 2; ++axis) {
        double xl = xi[axis];
        double a = std::min(0.0, xl), b = std::max(0.0, xl);
        if (a == b) continue;
        total += gl_integrate([&](double u) { return std::pow(std::abs(u), k) * sup_line(axis, u); },
                              a, b, order_);
    }
    return total;
}

double TransverseGauge::exactness_residual(const Vec3& xi, double fd_step) const {
    Vec3 curl_alpha = curl_fd([this](const Vec3& p) { return alpha(p); }, xi, fd_step);
    Vec3 b = beta_(xi);
    return norm(curl_alpha - b) / (1.0 + norm(b));
}

}  // namespace mag
