#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mag/vec.hpp"

namespace mag {

struct FieldDescriptor {
    std::string name;
    std::map<std::string, double> params;
};

/// Analytic magnetic field B(x): a pure function of position with directional
/// derivatives available up to order 4 (finite differences unless the builtin
/// supplies closed forms).
class MagneticFieldModel {
public:
    virtual ~MagneticFieldModel() = default;

    virtual Vec3 operator()(const Vec3& x) const = 0;

    // d^g/dt^g B(x + t d) at t=0 for g=1..4, |d|=1.
    virtual std::array<Vec3, 4> dir_derivatives(const Vec3& x, const Vec3& dir) const;

    // natural variation scale; sets finite-difference steps and search brackets
    virtual double reference_length() const { return 1.0; }

    // max over the probe direction set of |g-th directional derivative| (g=1..4)
    std::array<double, 4> derivative_norms(const Vec3& x) const;

    Vec3 unit_direction(const Vec3& x) const;  // n = B/|B|; throws where B = 0

    const FieldDescriptor& descriptor() const { return descriptor_; }
    double div_check_tolerance() const { return 1e-6; }

protected:
    FieldDescriptor descriptor_;
};

using FieldPtr = std::shared_ptr<const MagneticFieldModel>;

enum class GaugeTag { poincare, linear_constant, explicit_form };

/// Vector potential A with curl A = B.
class VectorPotential {
public:
    virtual ~VectorPotential() = default;
    virtual Vec3 operator()(const Vec3& x) const = 0;
    GaugeTag tag() const { return tag_; }

protected:
    explicit VectorPotential(GaugeTag t) : tag_(t) {}
    GaugeTag tag_;
};

using GaugePtr = std::shared_ptr<const VectorPotential>;

/// A(x) = int_0^1 s B(base + s(x-base)) x (x-base) ds, adaptive Gauss-Legendre.
class PoincareGauge : public VectorPotential {
public:
    // noise_scale: magnitude of cancellation inside the field evaluation (for
    // shifted fields B - B0 this is |B0|); sets an absolute quadrature floor.
    PoincareGauge(FieldPtr field, Vec3 base, double tol = 1e-10, double noise_scale = 0.0);
    Vec3 operator()(const Vec3& x) const override;
    const Vec3& base() const { return base_; }

private:
    FieldPtr field_;
    Vec3 base_;
    double tol_;
    double noise_scale_;
};

/// A(x) = 1/2 B0 x (x - base) for a constant field B0.
class LinearConstantGauge : public VectorPotential {
public:
    LinearConstantGauge(Vec3 b0, Vec3 base = {}) : VectorPotential(GaugeTag::linear_constant), b0_(b0), base_(base) {}
    Vec3 operator()(const Vec3& x) const override { return 0.5 * cross(b0_, x - base_); }

private:
    Vec3 b0_, base_;
};

class ExplicitGauge : public VectorPotential {
public:
    explicit ExplicitGauge(std::function<Vec3(const Vec3&)> a)
        : VectorPotential(GaugeTag::explicit_form), a_(std::move(a)) {}
    Vec3 operator()(const Vec3& x) const override { return a_(x); }

private:
    std::function<Vec3(const Vec3&)> a_;
};

GaugePtr poincare_gauge(FieldPtr field, const Vec3& base, double tol = 1e-10);

/// builtin field library: constant, constant-direction, tube-regular, loss-yau,
/// compact-bump. Unknown names or non-positive strength parameters throw.
FieldPtr builtin_field(const std::string& name, const std::map<std::string, double>& params = {});

/// Closed-form gauge for builtins that have one (loss-yau, compact-bump, constant).
/// Returns nullptr when only the Poincare route exists.
GaugePtr builtin_gauge(const FieldPtr& field);

/// Zero mode of the loss-yau builtin evaluated at x (2-spinor), unnormalized.
std::array<cplx, 2> loss_yau_spinor(const Vec3& x, double scale = 1.0);

/// (D,K)-regularity check of Definition-style conditions on a ball.
struct RegularityReport {
    Vec3 center;
    double radius = 0.0;
    double K = 0.0;
    double epsilon = 0.0;
    double field_at_center = 0.0;
    bool is_strong = false;
    // measured sup norms over the ball, orders 1..4
    std::array<double, 4> sup_dnorm_absB{};   // |grad^g |B||
    std::array<double, 4> sup_dnorm_dir{};    // |grad^g n|
    std::array<bool, 4> pass_absB{};          // vs K eps^g ell^-g |B(z0)|
    std::array<bool, 4> pass_dir{};           // vs K eps^g ell^-g
    bool all_pass(int max_order = 4) const {
        for (int g = 0; g < max_order; ++g)
            if (!pass_absB[g] || !pass_dir[g]) return false;
        return true;
    }
};

struct RegularityOptions {
    int seeds = 64;
    int refine_iters = 60;
    double fd_step_rel = 1e-3;   // FD step relative to the field's own scale
    double grading_ell = 0.0;    // derivative grading length (0: the ball radius)
};

RegularityReport assess_regularity(const MagneticFieldModel& field, const Vec3& z0, double ell,
                                   double K, double epsilon, const RegularityOptions& opts = {});

// Deterministic sampled maximization of f over the closed ball B(x, L).
double ball_sup(const std::function<double(const Vec3&)>& f, const Vec3& x, double L,
                int seeds = 128, int refine_iters = 60);

}  // namespace mag
