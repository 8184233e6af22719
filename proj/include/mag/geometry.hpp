#pragma once

#include <functional>
#include <map>
#include <memory>
#include <vector>

#include "mag/field.hpp"
#include "mag/vec.hpp"

namespace mag {

/// Cubic spline with not-a-knot ends on a uniform grid.
class CubicSpline {
public:
    CubicSpline() = default;
    CubicSpline(double t0, double dt, std::vector<double> values);
    double value(double t) const;
    double derivative(double t) const;
    double t_min() const { return t0_; }
    double t_max() const { return t0_ + dt_ * (y_.size() - 1); }

private:
    double t0_ = 0.0, dt_ = 1.0;
    std::vector<double> y_, m_;  // values and second derivatives
};

struct OdeOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = 0.0;  // 0: no cap
};

/// Adaptive Dormand-Prince RK45 for small systems.
void rk45_integrate(const std::function<void(double, const double*, double*)>& rhs, int dim,
                    double t0, double t1, double* state, const OdeOptions& opts);

/// Sampled field line with arc-length parametrization. Piecewise-quintic
/// Hermite interpolation on (position, tangent, curvature vector) keeps the
/// curve C^2, which the leaf-normal flow needs.
struct FieldLine {
    double tau0 = 0.0, dtau = 0.0;
    std::vector<Vec3> points, tangents, seconds;
    Vec3 at(double tau) const;
    Vec3 tangent(double tau) const;
    Vec3 second_derivative(double tau) const;
    double tau_min() const { return tau0; }
    double tau_max() const { return tau0 + dtau * (points.size() - 1); }
};

FieldLine trace_field_line(const MagneticFieldModel& field, const Vec3& z, double tau_lo,
                           double tau_hi, double dtau_sample, const OdeOptions& opts = {});

/// Field-line projection onto the plane {(x - origin) . n = 0}, following the
/// line through x backwards/forwards to the crossing.
Vec3 project_to_plane(const MagneticFieldModel& field, const Vec3& x, const Vec3& plane_origin,
                      const Vec3& n, const OdeOptions& opts = {});

struct FrameOptions {
    OdeOptions ode;
    double sample_dtau_fraction = 1.0 / 96.0;  // line sampling step in units of ell
    double tau_span_factor = 8.0;              // traced span in units of ell
    double root_tol_rel = 1e-13;
    double fd_step_rel = 1e-4;                 // for kappa and direction derivatives
    bool force_general = false;                // disable the rigid-motion shortcut
};

/// Coordinates adapted to one field line of an extended regular field:
/// leaves orthogonal to the line (spherical caps of curvature kappa(tau) blended
/// to parallel planes), transverse coordinates transported along the leaf normal,
/// longitudinal coordinate reparametrized so the field strength is constant in
/// the conformal metric.
class FieldLineFrame {
public:
    FieldLineFrame(const MagneticFieldModel& field, Vec3 ball_center, double ell, Vec3 b_infinity,
                   double zhat1 = 0.0, double zhat2 = 0.0, const FrameOptions& opts = {});

    Vec3 xi_of_x(const Vec3& x) const;          // (xi1, xi2, xi3)
    Vec3 x_of_xi(const Vec3& xi) const;
    double leaf_label(const Vec3& x) const;     // t(x)
    double omega(const Vec3& x) const;          // conformal factor at x
    double h_factor(const Vec3& x) const;       // longitudinal metric factor
    double f_of_xi3(double xi3) const;          // (|B(x(0,xi3))| / b)^(1/2)
    Mat2c spin_up(const Vec3& x) const;         // 1/2 [1 + sigma . n(line point)]

    const FieldLine& line() const { return line_; }
    const Vec3& base() const { return base_; }
    const Vec3& n_infinity() const { return n_inf_; }
    const Vec3& p1() const { return p1_; }
    const Vec3& p2() const { return p2_; }
    double b_exterior() const { return b_inf_; }
    double ell() const { return ell_; }
    double kappa(double tau) const { return kappa_.value(tau); }
    bool trivial() const { return trivial_; }

    // chart guard radius (transverse) in units of ell
    double chart_radius() const { return 10.0 * ell_; }

private:
    struct FlowResult {
        Vec3 plane_point;
        double logG;
        double gtt_at_start;
    };
    FlowResult flow_to_plane(const Vec3& x, double t_start) const;
    Vec3 grad_t(const Vec3& x) const;
    double cap_tau(const Vec3& x) const;
    double plane_label(const Vec3& x) const;
    double chi_blend(const Vec3& x) const;

    const MagneticFieldModel* field_;
    Vec3 z0_;          // ball center
    double ell_;       // ball radius (field constant outside)
    Vec3 b_vec_inf_;
    double b_inf_;
    Vec3 n_inf_, p1_, p2_;
    Vec3 plane_origin_;  // z0 - ell n_inf
    Vec3 base_;          // base point of the central line on the plane
    FieldLine line_;
    CubicSpline kappa_, logb_line_, xi3_of_t_;
    double blend_ylo_ = 0.0, blend_yhi_ = 0.0, c_lo_ = 0.0, c_hi_ = 0.0;
    bool trivial_ = false;  // straight line, constant strength: rigid-motion chart
    FrameOptions opts_;
};

/// Square lattice of field-line frames with Gaussian transversal localizers.
class TubeGrid {
public:
    TubeGrid(const MagneticFieldModel& field, Vec3 ball_center, double ell, Vec3 b_infinity,
             double eta, const FrameOptions& opts = {});

    double gaussian(int j1, int j2, const Vec3& x) const;          // v_j(x)
    double xi_perp_sq(int j1, int j2, const Vec3& x) const;
    Mat2c spin_up(int j1, int j2, const Vec3& x) const;

    // sum over the lattice of (eta b)^kappa [xi_perp^2]^kappa v^gamma, with the
    // window chosen from the Gaussian tail; throws if the tail bound exceeds tol.
    double moment_sum(const Vec3& x, int kappa, double gamma, double tail_tol = 1e-10) const;

    // min eigenvalue of sum_j v_j^4 [ b (lambda - eta^2 b xi_perp^2) P_j + C0 ell^-2 ]
    double spin_alloc_min_eig(const Vec3& x, double lambda, double C0) const;

    double eta() const { return eta_; }
    double b() const { return b_; }
    double spacing() const { return spacing_; }

private:
    const FieldLineFrame& frame(int j1, int j2) const;
    const MagneticFieldModel* field_;
    Vec3 z0_;
    double ell_;
    Vec3 b_vec_inf_;
    double b_, eta_, spacing_;
    FrameOptions opts_;
    mutable std::map<std::pair<int, int>, std::unique_ptr<FieldLineFrame>> cache_;
};

/// Residual of the magnetic localization identity for the constant-field Dirac
/// operator: D_eta v^2 psi = v^2 Dtilde psi + 2 i eta b v^2 (s1 xi1 + s2 xi2) s_up psi.
/// mode "exact": analytic derivatives of a family of Gaussian test spinors.
/// mode "stencil": central differences with step h on a grid sampling.
double magnetic_localization_residual(double b, double eta, bool stencil_mode = false,
                                      double stencil_h = 0.05, unsigned seed = 99);

}  // namespace mag
