#include "mag/field.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "mag/deriv.hpp"
#include "mag/errors.hpp"
#include "mag/profiles.hpp"
#include "mag/quadrature.hpp"

namespace mag {

std::array<Vec3, 4> MagneticFieldModel::dir_derivatives(const Vec3& x, const Vec3& dir) const {
    double h = 1e-3 * reference_length();
    return directional_derivatives([this](const Vec3& p) { return (*this)(p); }, x, dir, h);
}

std::array<double, 4> MagneticFieldModel::derivative_norms(const Vec3& x) const {
    std::array<double, 4> out{};
    for (const Vec3& d : probe_directions()) {
        auto dv = dir_derivatives(x, d);
        for (int g = 0; g < 4; ++g) out[g] = std::max(out[g], norm(dv[g]));
    }
    return out;
}

Vec3 MagneticFieldModel::unit_direction(const Vec3& x) const {
    Vec3 b = (*this)(x);
    double m = norm(b);
    if (m == 0.0) throw numerical_error("unit_direction: field vanishes at query point");
    return b / m;
}

// ---------------------------------------------------------------------------
// builtins
// ---------------------------------------------------------------------------

namespace {

double get(const std::map<std::string, double>& p, const std::string& k, double dflt) {
    auto it = p.find(k);
    return it == p.end() ? dflt : it->second;
}

class ConstantField final : public MagneticFieldModel {
public:
    explicit ConstantField(Vec3 b) : b_(b) {
        descriptor_ = {"constant", {{"bx", b.x}, {"by", b.y}, {"bz", b.z}}};
    }
    Vec3 operator()(const Vec3&) const override { return b_; }
    std::array<Vec3, 4> dir_derivatives(const Vec3&, const Vec3&) const override { return {}; }

private:
    Vec3 b_;
};

class ConstantDirectionField final : public MagneticFieldModel {
public:
    ConstantDirectionField(double b0, double lambda) : b0_(b0), lambda_(lambda) {
        if (b0 <= 0.0) throw config_error("constant-direction: b0 must be positive");
        descriptor_ = {"constant-direction", {{"b0", b0}, {"lambda", lambda}}};
    }
    Vec3 operator()(const Vec3& x) const override { return {0.0, 0.0, b0_ * (1.0 + x.x / lambda_)}; }
    std::array<Vec3, 4> dir_derivatives(const Vec3&, const Vec3& d) const override {
        std::array<Vec3, 4> out{};
        out[0] = {0.0, 0.0, b0_ * d.x / lambda_};
        return out;
    }
    double reference_length() const override { return lambda_; }

private:
    double b0_, lambda_;
};

// B = b0 ( a sin(q x3), 0, 1 + a cos(q x1) ): divergence-free, strength and
// direction both vary on scale 1/q with relative amplitude a.
class TubeRegularField final : public MagneticFieldModel {
public:
    TubeRegularField(double b0, double q, double a) : b0_(b0), q_(q), a_(a) {
        if (b0 <= 0.0 || q <= 0.0) throw config_error("tube-regular: b0 and q must be positive");
        if (a < 0.0 || a >= 0.5) throw config_error("tube-regular: need 0 <= a < 1/2");
        descriptor_ = {"tube-regular", {{"b0", b0}, {"q", q}, {"a", a}}};
    }
    Vec3 operator()(const Vec3& x) const override {
        return {b0_ * a_ * std::sin(q_ * x.z), 0.0, b0_ * (1.0 + a_ * std::cos(q_ * x.x))};
    }
    std::array<Vec3, 4> dir_derivatives(const Vec3& x, const Vec3& d) const override {
        std::array<Vec3, 4> out{};
        double s3 = std::sin(q_ * x.z), c3 = std::cos(q_ * x.z);
        double s1 = std::sin(q_ * x.x), c1 = std::cos(q_ * x.x);
        double f3 = q_ * d.z, f1 = q_ * d.x;
        // derivative cycles of sin/cos
        double sc3[4] = {c3, -s3, -c3, s3};
        double sc1[4] = {-s1, -c1, s1, c1};
        double p3 = 1.0, p1 = 1.0;
        for (int g = 0; g < 4; ++g) {
            p3 *= f3;
            p1 *= f1;
            out[g] = {b0_ * a_ * p3 * sc3[g], 0.0, b0_ * a_ * p1 * sc1[g]};
        }
        return out;
    }
    double reference_length() const override { return 1.0 / q_; }

private:
    double b0_, q_, a_;
};

Vec3 ly_uvec(const Vec3& y, const Vec3& w) {
    double r2 = norm2(y);
    return 0.5 * (1.0 - r2) * w + dot(w, y) * y + cross(y, w);
}

class LossYauField final : public MagneticFieldModel {
public:
    LossYauField(double scale, Vec3 w) : s_(scale), w_(normalized(w)) {
        if (scale <= 0.0) throw config_error("loss-yau: scale must be positive");
        descriptor_ = {"loss-yau", {{"scale", scale}, {"wx", w_.x}, {"wy", w_.y}, {"wz", w_.z}}};
    }
    Vec3 operator()(const Vec3& x) const override {
        Vec3 y = s_ * x;
        double r2 = norm2(y);
        double c = 1.0 + r2;
        return (-24.0 * s_ * s_ / (c * c * c)) * ly_uvec(y, w_);
    }
    double reference_length() const override { return 1.0 / s_; }
    double scale() const { return s_; }
    const Vec3& w() const { return w_; }

private:
    double s_;
    Vec3 w_;
};

// A = amp * g(|x-c|) * u with g a C^4 radial plateau vanishing for r <= delta
// and r >= 2 delta; B = amp g'(r) (rhat x u) is supported in the shell.
class CompactBumpField final : public MagneticFieldModel {
public:
    CompactBumpField(double delta, double amp, Vec3 c, Vec3 u)
        : delta_(delta), amp_(amp), c_(c), u_(normalized(u)) {
        if (delta <= 0.0) throw config_error("compact-bump: delta must be positive");
        descriptor_ = {"compact-bump",
                       {{"delta", delta}, {"amplitude", amp}, {"cx", c.x}, {"cy", c.y}, {"cz", c.z},
                        {"ux", u_.x}, {"uy", u_.y}, {"uz", u_.z}}};
    }
    double profile(double r) const {
        // rises 0->1 on [delta, 1.5 delta], falls 1->0 on [1.5 delta, 2 delta]
        if (r <= delta_ || r >= 2.0 * delta_) return 0.0;
        double w = 0.5 * delta_;
        return r < 1.5 * delta_ ? smoothstep9((r - delta_) / w) : smoothstep9((2.0 * delta_ - r) / w);
    }
    double profile_slope(double r) const {
        if (r <= delta_ || r >= 2.0 * delta_) return 0.0;
        double w = 0.5 * delta_;
        return r < 1.5 * delta_ ? smoothstep9_d1((r - delta_) / w) / w
                                : -smoothstep9_d1((2.0 * delta_ - r) / w) / w;
    }
    Vec3 operator()(const Vec3& x) const override {
        Vec3 d = x - c_;
        double r = norm(d);
        if (r <= delta_ || r >= 2.0 * delta_) return {};
        return amp_ * profile_slope(r) * cross(d / r, u_);
    }
    Vec3 potential(const Vec3& x) const {
        return amp_ * profile(norm(x - c_)) * u_;
    }
    double reference_length() const override { return delta_; }

private:
    double delta_, amp_;
    Vec3 c_, u_;
};

}  // namespace

FieldPtr builtin_field(const std::string& name, const std::map<std::string, double>& params) {
    if (name == "constant") {
        Vec3 b{get(params, "bx", 0.0), get(params, "by", 0.0), get(params, "bz", 1.0)};
        return std::make_shared<ConstantField>(b);
    }
    if (name == "constant-direction") {
        return std::make_shared<ConstantDirectionField>(get(params, "b0", 1.0), get(params, "lambda", 100.0));
    }
    if (name == "tube-regular") {
        return std::make_shared<TubeRegularField>(get(params, "b0", 1e14), get(params, "q", M_PI),
                                                  get(params, "a", 0.3));
    }
    if (name == "loss-yau") {
        Vec3 w{get(params, "wx", 0.0), get(params, "wy", 0.0), get(params, "wz", 1.0)};
        return std::make_shared<LossYauField>(get(params, "scale", 1.0), w);
    }
    if (name == "compact-bump") {
        Vec3 c{get(params, "cx", 0.0), get(params, "cy", 0.0), get(params, "cz", 0.0)};
        Vec3 u{get(params, "ux", 0.0), get(params, "uy", 0.0), get(params, "uz", 1.0)};
        return std::make_shared<CompactBumpField>(get(params, "delta", 1.0), get(params, "amplitude", 1.0), c, u);
    }
    throw config_error("unknown builtin field: " + name);
}

GaugePtr builtin_gauge(const FieldPtr& field) {
    const auto& d = field->descriptor();
    if (d.name == "constant") {
        Vec3 b{d.params.at("bx"), d.params.at("by"), d.params.at("bz")};
        return std::make_shared<LinearConstantGauge>(b);
    }
    if (d.name == "loss-yau") {
        double s = d.params.at("scale");
        Vec3 w{d.params.at("wx"), d.params.at("wy"), d.params.at("wz")};
        return std::make_shared<ExplicitGauge>([s, w](const Vec3& x) {
            Vec3 y = s * x;
            double c = 1.0 + norm2(y);
            return (6.0 * s / (c * c)) * ly_uvec(y, w);
        });
    }
    if (d.name == "compact-bump") {
        auto cb = std::dynamic_pointer_cast<const CompactBumpField>(field);
        return std::make_shared<ExplicitGauge>([cb](const Vec3& x) { return cb->potential(x); });
    }
    if (d.name == "tube-regular") {
        double b0 = d.params.at("b0"), q = d.params.at("q"), a = d.params.at("a");
        return std::make_shared<ExplicitGauge>([b0, q, a](const Vec3& x) {
            double a2 = b0 * (x.x + (a / q) * std::sin(q * x.x)) + (a * b0 / q) * std::cos(q * x.z);
            return Vec3{0.0, a2, 0.0};
        });
    }
    if (d.name == "constant-direction") {
        double b0 = d.params.at("b0"), lam = d.params.at("lambda");
        return std::make_shared<ExplicitGauge>([b0, lam](const Vec3& x) {
            return Vec3{0.0, b0 * (x.x + x.x * x.x / (2.0 * lam)), 0.0};
        });
    }
    return nullptr;
}

std::array<cplx, 2> loss_yau_spinor(const Vec3& x, double scale) {
    // psi = (1+|y|^2)^{-3/2} (1 - i sigma.y) phi0 at y = scale*x, phi0 = (1,0)
    Vec3 y = scale * x;
    double f = std::pow(1.0 + norm2(y), -1.5) * std::pow(scale, 1.5);
    return {f * cplx(1.0, -y.z), f * cplx(y.y, -y.x)};
}

// ---------------------------------------------------------------------------
// Poincare gauge
// ---------------------------------------------------------------------------

PoincareGauge::PoincareGauge(FieldPtr field, Vec3 base, double tol, double noise_scale)
    : VectorPotential(GaugeTag::poincare), field_(std::move(field)), base_(base), tol_(tol),
      noise_scale_(noise_scale) {}

namespace {

// one adaptive pass for all three components, relative error control
void poincare_rec(const std::function<Vec3(double)>& f, double a, double b, double tol, int depth,
                  Vec3& acc, bool& ok) {
    const auto& gl = gauss_legendre(8);
    auto seg = [&](double lo, double hi) {
        Vec3 s{};
        double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
        for (int i = 0; i < 8; ++i) s += f(mid + half * gl.nodes[i]) * (gl.weights[i] * half);
        return s;
    };
    Vec3 coarse = seg(a, b);
    double mid = 0.5 * (a + b);
    Vec3 fine = seg(a, mid) + seg(mid, b);
    double accept = std::max(tol, 4e-15 * norm(fine));  // round-off floor
    if (norm(fine - coarse) <= accept || depth >= 30) {
        acc += fine;
        if (depth >= 30 && norm(fine - coarse) > accept) ok = false;
        return;
    }
    poincare_rec(f, a, mid, 0.5 * tol, depth + 1, acc, ok);
    poincare_rec(f, mid, b, 0.5 * tol, depth + 1, acc, ok);
}

}  // namespace

Vec3 PoincareGauge::operator()(const Vec3& x) const {
    Vec3 r = x - base_;
    if (norm2(r) == 0.0) return {};
    auto f = [&](double s) { return cross((*field_)(base_ + s * r), r) * s; };
    // scale for the relative tolerance from a coarse pass
    Vec3 probe{};
    const auto& gl = gauss_legendre(16);
    for (int i = 0; i < 16; ++i) {
        double s = 0.5 * (gl.nodes[i] + 1.0);
        probe += f(s) * (0.5 * gl.weights[i]);
    }
    double tol = tol_ * std::max(norm(probe), 1e-300);
    // cancellation floor: field evaluations carry ~eps * noise_scale round-off
    tol = std::max(tol, 64.0 * 1e-16 * noise_scale_ * norm(r));
    Vec3 acc{};
    bool ok = true;
    poincare_rec(f, 0.0, 1.0, tol, 0, acc, ok);
    if (!ok) throw numerical_error("poincare_gauge: quadrature did not converge");
    return acc;
}

GaugePtr poincare_gauge(FieldPtr field, const Vec3& base, double tol) {
    return std::make_shared<PoincareGauge>(std::move(field), base, tol);
}

// ---------------------------------------------------------------------------
// ball extremization and regularity assessment
// ---------------------------------------------------------------------------

double ball_sup(const std::function<double(const Vec3&)>& f, const Vec3& x, double L, int seeds,
                int refine_iters) {
    if (L <= 0.0) return f(x);
    static const std::vector<Vec3> moves = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    auto clip = [&](Vec3 p) {
        Vec3 d = p - x;
        double r = norm(d);
        return r <= L ? p : x + d * (L / r);
    };
    // deterministic seeding, keep the best few, pattern-search each
    std::vector<Vec3> pts = ball_lowdisc_points(seeds);
    double best = f(x);
    Vec3 bestp = x;
    std::vector<std::pair<double, Vec3>> top;
    top.reserve(seeds + 1);
    top.push_back({best, x});
    for (const Vec3& u : pts) {
        Vec3 p = x + u * L;
        double v = f(p);
        top.push_back({v, p});
        if (v > best) {
            best = v;
            bestp = p;
        }
    }
    std::partial_sort(top.begin(), top.begin() + std::min<size_t>(4, top.size()), top.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });
    for (size_t k = 0; k < std::min<size_t>(4, top.size()); ++k) {
        Vec3 p = top[k].second;
        double v = top[k].first;
        double step = 0.35 * L;
        for (int it = 0; it < refine_iters; ++it) {
            bool improved = false;
            for (const Vec3& m : moves) {
                Vec3 q = clip(p + m * step);
                double w = f(q);
                if (w > v) {
                    v = w;
                    p = q;
                    improved = true;
                }
            }
            if (!improved) step *= 0.5;
            if (step < 1e-7 * L) break;
        }
        if (v > best) {
            best = v;
            bestp = p;
        }
    }
    (void)bestp;
    return best;
}

RegularityReport assess_regularity(const MagneticFieldModel& field, const Vec3& z0, double ell,
                                   double K, double epsilon, const RegularityOptions& opts) {
    if (ell <= 0.0 || K <= 0.0) throw config_error("assess_regularity: ell and K must be positive");
    if (!(epsilon > 0.0 && epsilon < 1e-3)) throw config_error("assess_regularity: need 0 < eps < 1/1000");

    RegularityReport rep;
    rep.center = z0;
    rep.radius = ell;
    rep.K = K;
    rep.epsilon = epsilon;
    rep.field_at_center = norm(field(z0));
    rep.is_strong = rep.field_at_center >= 1.0 / (epsilon * epsilon * ell * ell);

    // FD step follows the model's own variation scale, not the ball radius:
    // high-order stencils on a much finer step drown in round-off
    double h = opts.fd_step_rel * field.reference_length();
    auto absB = [&](const Vec3& p) { return norm(field(p)); };

    if (rep.is_strong) {
        // n undefined where B vanishes; detect that before probing derivatives
        double binf = -ball_sup([&](const Vec3& p) { return -norm(field(p)); }, z0, ell, opts.seeds,
                                opts.refine_iters);
        if (binf <= 0.0)
            throw numerical_error("assess_regularity: field vanishes inside a strong ball");
    }

    double grade = opts.grading_ell > 0.0 ? opts.grading_ell : ell;
    for (int g = 0; g < 4; ++g) {
        auto obj_abs = [&](const Vec3& p) {
            double m = 0.0;
            for (const Vec3& d : probe_directions())
                m = std::max(m, std::abs(directional_derivatives_scalar(absB, p, d, h)[g]));
            return m;
        };
        rep.sup_dnorm_absB[g] = ball_sup(obj_abs, z0, ell, opts.seeds, opts.refine_iters);
        double bound = K * std::pow(epsilon / grade, g + 1.0);
        rep.pass_absB[g] = rep.sup_dnorm_absB[g] <= bound * rep.field_at_center * (1.0 + 1e-9);

        if (rep.is_strong || rep.field_at_center > 0.0) {
            auto obj_dir = [&](const Vec3& p) {
                double m = 0.0;
                for (const Vec3& d : probe_directions()) {
                    auto dn = directional_derivatives(
                        [&](const Vec3& q) {
                            Vec3 b = field(q);
                            double nb = norm(b);
                            return nb > 0.0 ? b / nb : Vec3{};
                        },
                        p, d, h);
                    m = std::max(m, norm(dn[g]));
                }
                return m;
            };
            rep.sup_dnorm_dir[g] = ball_sup(obj_dir, z0, ell, opts.seeds, opts.refine_iters);
            rep.pass_dir[g] = rep.sup_dnorm_dir[g] <= bound * (1.0 + 1e-9);
        } else {
            rep.sup_dnorm_dir[g] = 0.0;
            rep.pass_dir[g] = true;
        }
    }
    return rep;
}

}  // namespace mag
