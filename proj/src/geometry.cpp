#include "mag/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mag/deriv.hpp"
#include "mag/errors.hpp"
#include "mag/profiles.hpp"

namespace mag {

// ---------------------------------------------------------------------------
// spline
// ---------------------------------------------------------------------------

CubicSpline::CubicSpline(double t0, double dt, std::vector<double> values)
    : t0_(t0), dt_(dt), y_(std::move(values)) {
    const int n = int(y_.size());
    m_.assign(n, 0.0);
    if (n < 4) return;
    // not-a-knot: third derivative continuous at the second and second-to-last knots
    std::vector<double> a(n), b(n), c(n), d(n);
    b[0] = 1.0;
    c[0] = -2.0;
    a[0] = 0.0;
    d[0] = 0.0;  // m0 - 2 m1 + m2 = 0, closed below via sweep trick
    for (int i = 1; i < n - 1; ++i) {
        a[i] = 1.0;
        b[i] = 4.0;
        c[i] = 1.0;
        d[i] = 6.0 * (y_[i - 1] - 2.0 * y_[i] + y_[i + 1]) / (dt_ * dt_);
    }
    a[n - 1] = -2.0;
    b[n - 1] = 1.0;
    c[n - 1] = 0.0;
    d[n - 1] = 0.0;
    // handle the irregular first/last rows (they couple three unknowns) by
    // eliminating m2 / m_{n-3} first
    // row 0: m0 - 2 m1 + m2 = 0 ; row n-1: m_{n-3} - 2 m_{n-2} + m_{n-1} = 0
    // use full Gaussian elimination on the (small) tridiagonal-plus system
    std::vector<std::vector<double>> M(n, std::vector<double>(n + 1, 0.0));
    M[0][0] = 1.0;
    M[0][1] = -2.0;
    M[0][2] = 1.0;
    for (int i = 1; i < n - 1; ++i) {
        M[i][i - 1] = 1.0;
        M[i][i] = 4.0;
        M[i][i + 1] = 1.0;
        M[i][n] = d[i];
    }
    M[n - 1][n - 3] = 1.0;
    M[n - 1][n - 2] = -2.0;
    M[n - 1][n - 1] = 1.0;
    // banded elimination (bandwidth 2)
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col; r < std::min(n, col + 3); ++r)
            if (std::abs(M[r][col]) > std::abs(M[piv][col])) piv = r;
        std::swap(M[col], M[piv]);
        for (int r = col + 1; r < std::min(n, col + 3); ++r) {
            double f = M[r][col] / M[col][col];
            for (int cc = col; cc <= n; ++cc) M[r][cc] -= f * M[col][cc];
        }
    }
    for (int r = n - 1; r >= 0; --r) {
        double s = M[r][n];
        for (int cc = r + 1; cc < std::min(n, r + 4); ++cc) s -= M[r][cc] * m_[cc];
        m_[r] = s / M[r][r];
    }
}

double CubicSpline::value(double t) const {
    const int n = int(y_.size());
    if (n == 0) return 0.0;
    if (n == 1) return y_[0];
    double s = (t - t0_) / dt_;
    int i = std::clamp(int(std::floor(s)), 0, n - 2);
    double u = s - i;
    double h2 = dt_ * dt_;
    return y_[i] * (1 - u) + y_[i + 1] * u +
           h2 / 6.0 * ((1 - u) * ((1 - u) * (1 - u) - 1.0) * m_[i] + u * (u * u - 1.0) * m_[i + 1]);
}

double CubicSpline::derivative(double t) const {
    const int n = int(y_.size());
    if (n < 2) return 0.0;
    double s = (t - t0_) / dt_;
    int i = std::clamp(int(std::floor(s)), 0, n - 2);
    double u = s - i;
    return (y_[i + 1] - y_[i]) / dt_ +
           dt_ / 6.0 * ((3.0 * u * u - 1.0) * m_[i + 1] - (3.0 * (1 - u) * (1 - u) - 1.0) * m_[i]);
}

// ---------------------------------------------------------------------------
// RK45 Dormand-Prince
// ---------------------------------------------------------------------------

void rk45_integrate(const std::function<void(double, const double*, double*)>& rhs, int dim,
                    double t0, double t1, double* y, const OdeOptions& opts) {
    if (t0 == t1) return;
    static const double c2 = 1. / 5, c3 = 3. / 10, c4 = 4. / 5, c5 = 8. / 9;
    static const double a21 = 1. / 5;
    static const double a31 = 3. / 40, a32 = 9. / 40;
    static const double a41 = 44. / 45, a42 = -56. / 15, a43 = 32. / 9;
    static const double a51 = 19372. / 6561, a52 = -25360. / 2187, a53 = 64448. / 6561, a54 = -212. / 729;
    static const double a61 = 9017. / 3168, a62 = -355. / 33, a63 = 46732. / 5247, a64 = 49. / 176,
                        a65 = -5103. / 18656;
    static const double b1 = 35. / 384, b3 = 500. / 1113, b4 = 125. / 192, b5 = -2187. / 6784, b6 = 11. / 84;
    static const double e1 = 71. / 57600, e3 = -71. / 16695, e4 = 71. / 1920, e5 = -17253. / 339200,
                        e6 = 22. / 525, e7 = -1. / 40;

    std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim), tmp(dim), y5(dim);
    double dir = t1 > t0 ? 1.0 : -1.0;
    double span = std::abs(t1 - t0);
    double h = dir * std::min(span, opts.max_step > 0 ? opts.max_step : span / 16.0);
    double t = t0;
    int guard = 0;
    while (dir * (t1 - t) > 0.0) {
        if (++guard > 2000000) throw numerical_error("rk45: step limit exceeded");
        if (dir * (t + h - t1) > 0.0) h = t1 - t;
        rhs(t, y, k1.data());
        for (int i = 0; i < dim; ++i) tmp[i] = y[i] + h * a21 * k1[i];
        rhs(t + c2 * h, tmp.data(), k2.data());
        for (int i = 0; i < dim; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        rhs(t + c3 * h, tmp.data(), k3.data());
        for (int i = 0; i < dim; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(t + c4 * h, tmp.data(), k4.data());
        for (int i = 0; i < dim; ++i)
            tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(t + c5 * h, tmp.data(), k5.data());
        for (int i = 0; i < dim; ++i)
            tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        rhs(t + h, tmp.data(), k6.data());
        for (int i = 0; i < dim; ++i)
            y5[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        rhs(t + h, y5.data(), k7.data());
        double err = 0.0;
        for (int i = 0; i < dim; ++i) {
            double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            double sc = opts.abs_tol + opts.rel_tol * std::max(std::abs(y[i]), std::abs(y5[i]));
            err = std::max(err, std::abs(e) / sc);
        }
        if (err <= 1.0) {
            t += h;
            std::copy(y5.begin(), y5.end(), y);
        }
        double fac = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 4.0;
        fac = std::clamp(fac, 0.2, 4.0);
        h *= fac;
        if (opts.max_step > 0.0 && std::abs(h) > opts.max_step) h = dir * opts.max_step;
        if (std::abs(h) < 1e-15 * span) throw numerical_error("rk45: step underflow");
    }
}

// ---------------------------------------------------------------------------
// field lines
// ---------------------------------------------------------------------------

namespace {
// quintic Hermite basis and derivatives on [0,1]
struct Q5 {
    double h[6], d[6], c[6];
    explicit Q5(double u) {
        double u2 = u * u, u3 = u2 * u, u4 = u3 * u, u5 = u4 * u;
        h[0] = 1 - 10 * u3 + 15 * u4 - 6 * u5;
        h[1] = u - 6 * u3 + 8 * u4 - 3 * u5;
        h[2] = 0.5 * u2 - 1.5 * u3 + 1.5 * u4 - 0.5 * u5;
        h[3] = 10 * u3 - 15 * u4 + 6 * u5;
        h[4] = -4 * u3 + 7 * u4 - 3 * u5;
        h[5] = 0.5 * u3 - u4 + 0.5 * u5;
        d[0] = -30 * u2 + 60 * u3 - 30 * u4;
        d[1] = 1 - 18 * u2 + 32 * u3 - 15 * u4;
        d[2] = u - 4.5 * u2 + 6 * u3 - 2.5 * u4;
        d[3] = 30 * u2 - 60 * u3 + 30 * u4;
        d[4] = -12 * u2 + 28 * u3 - 15 * u4;
        d[5] = 1.5 * u2 - 4 * u3 + 2.5 * u4;
        c[0] = -60 * u + 180 * u2 - 120 * u3;
        c[1] = -36 * u + 96 * u2 - 60 * u3;
        c[2] = 1 - 9 * u + 18 * u2 - 10 * u3;
        c[3] = 60 * u - 180 * u2 + 120 * u3;
        c[4] = -24 * u + 84 * u2 - 60 * u3;
        c[5] = 3 * u - 12 * u2 + 10 * u3;
    }
};
}  // namespace

Vec3 FieldLine::at(double tau) const {
    int n = int(points.size());
    double s = (tau - tau0) / dtau;
    int i = std::clamp(int(std::floor(s)), 0, n - 2);
    Q5 q(s - i);
    return points[i] * q.h[0] + tangents[i] * (q.h[1] * dtau) + seconds[i] * (q.h[2] * dtau * dtau) +
           points[i + 1] * q.h[3] + tangents[i + 1] * (q.h[4] * dtau) +
           seconds[i + 1] * (q.h[5] * dtau * dtau);
}

Vec3 FieldLine::tangent(double tau) const {
    int n = int(points.size());
    double s = (tau - tau0) / dtau;
    int i = std::clamp(int(std::floor(s)), 0, n - 2);
    Q5 q(s - i);
    return points[i] * (q.d[0] / dtau) + tangents[i] * q.d[1] + seconds[i] * (q.d[2] * dtau) +
           points[i + 1] * (q.d[3] / dtau) + tangents[i + 1] * q.d[4] + seconds[i + 1] * (q.d[5] * dtau);
}

Vec3 FieldLine::second_derivative(double tau) const {
    int n = int(points.size());
    double s = (tau - tau0) / dtau;
    int i = std::clamp(int(std::floor(s)), 0, n - 2);
    Q5 q(s - i);
    return points[i] * (q.c[0] / (dtau * dtau)) + tangents[i] * (q.c[1] / dtau) + seconds[i] * q.c[2] +
           points[i + 1] * (q.c[3] / (dtau * dtau)) + tangents[i + 1] * (q.c[4] / dtau) +
           seconds[i + 1] * q.c[5];
}

FieldLine trace_field_line(const MagneticFieldModel& field, const Vec3& z, double tau_lo,
                           double tau_hi, double dtau_sample, const OdeOptions& opts) {
    if (!(tau_lo < 0.0 && tau_hi > 0.0)) throw config_error("trace_field_line: range must straddle 0");
    auto rhs = [&](double, const double* y, double* dy) {
        Vec3 n = field.unit_direction({y[0], y[1], y[2]});
        dy[0] = n.x;
        dy[1] = n.y;
        dy[2] = n.z;
    };
    int n_up = int(std::ceil(tau_hi / dtau_sample));
    int n_dn = int(std::ceil(-tau_lo / dtau_sample));
    FieldLine fl;
    fl.tau0 = -n_dn * dtau_sample;
    fl.dtau = dtau_sample;
    fl.points.resize(n_up + n_dn + 1);
    fl.tangents.resize(n_up + n_dn + 1);
    fl.seconds.resize(n_up + n_dn + 1);
    fl.points[n_dn] = z;
    fl.tangents[n_dn] = field.unit_direction(z);
    double y[3] = {z.x, z.y, z.z};
    for (int k = 1; k <= n_up; ++k) {
        rk45_integrate(rhs, 3, (k - 1) * dtau_sample, k * dtau_sample, y, opts);
        fl.points[n_dn + k] = {y[0], y[1], y[2]};
        fl.tangents[n_dn + k] = field.unit_direction(fl.points[n_dn + k]);
    }
    y[0] = z.x;
    y[1] = z.y;
    y[2] = z.z;
    for (int k = 1; k <= n_dn; ++k) {
        rk45_integrate(rhs, 3, -(k - 1) * dtau_sample, -k * dtau_sample, y, opts);
        fl.points[n_dn - k] = {y[0], y[1], y[2]};
        fl.tangents[n_dn - k] = field.unit_direction(fl.points[n_dn - k]);
    }
    // nodal curvature vectors phidd = d n(phi)/dtau keep the interpolant C^2
    double hfd = 1e-3 * field.reference_length();
    for (size_t i = 0; i < fl.points.size(); ++i) {
        auto dir = [&](const Vec3& p) {
            Vec3 b = field(p);
            double nb = norm(b);
            return nb > 0.0 ? b / nb : Vec3{};
        };
        fl.seconds[i] = directional_derivatives(dir, fl.points[i], fl.tangents[i], hfd)[0];
    }
    return fl;
}

Vec3 project_to_plane(const MagneticFieldModel& field, const Vec3& x, const Vec3& plane_origin,
                      const Vec3& n, const OdeOptions& opts) {
    double s0 = dot(x - plane_origin, n);
    if (s0 == 0.0) return x;
    auto rhs = [&](double, const double* y, double* dy) {
        Vec3 d = field.unit_direction({y[0], y[1], y[2]});
        dy[0] = d.x;
        dy[1] = d.y;
        dy[2] = d.z;
    };
    // the signed distance to the plane decreases monotonically when moving
    // against the field direction (n . field_dir >= 1/2 for regular tubes)
    double y[3] = {x.x, x.y, x.z};
    double step = -s0;  // first guess: plane roughly orthogonal to the line
    double tau = 0.0;
    for (int it = 0; it < 80; ++it) {
        double yy[3] = {y[0], y[1], y[2]};
        rk45_integrate(rhs, 3, tau, tau + step, yy, opts);
        double s = dot(Vec3{yy[0], yy[1], yy[2]} - plane_origin, n);
        if (std::abs(s) < 1e-13 * (1.0 + std::abs(s0))) return {yy[0], yy[1], yy[2]};
        // Newton step along the line: ds/dtau = n . dir ~ 1
        Vec3 dirv = field.unit_direction({yy[0], yy[1], yy[2]});
        double dsdt = dot(dirv, n);
        y[0] = yy[0];
        y[1] = yy[1];
        y[2] = yy[2];
        tau += step;
        step = -s / dsdt;
    }
    throw numerical_error("project_to_plane: no convergence");
}

// ---------------------------------------------------------------------------
// frame
// ---------------------------------------------------------------------------

namespace {
void plane_basis(const Vec3& n, Vec3& p1, Vec3& p2) {
    Vec3 e = std::abs(n.x) <= std::abs(n.y) && std::abs(n.x) <= std::abs(n.z) ? Vec3{1, 0, 0}
             : std::abs(n.y) <= std::abs(n.z)                                 ? Vec3{0, 1, 0}
                                                                              : Vec3{0, 0, 1};
    p1 = normalized(cross(e, n));
    p2 = cross(n, p1);
}
}  // namespace

FieldLineFrame::FieldLineFrame(const MagneticFieldModel& field, Vec3 ball_center, double ell,
                               Vec3 b_infinity, double zhat1, double zhat2, const FrameOptions& opts)
    : field_(&field), z0_(ball_center), ell_(ell), b_vec_inf_(b_infinity), opts_(opts) {
    b_inf_ = norm(b_vec_inf_);
    if (b_inf_ <= 0.0) throw config_error("FieldLineFrame: exterior field must not vanish");
    n_inf_ = b_vec_inf_ / b_inf_;
    plane_basis(n_inf_, p1_, p2_);
    plane_origin_ = z0_ - ell_ * n_inf_;
    base_ = plane_origin_ + zhat1 * p1_ + zhat2 * p2_;

    double span = opts_.tau_span_factor * ell_;
    double dtau = opts_.sample_dtau_fraction * ell_;
    line_ = trace_field_line(*field_, base_, -span, span, dtau, opts_.ode);

    // kappa(tau) = -1/2 d/dtau log |B(phi(tau))| and log b(tau) samples
    int n = int(line_.points.size());
    std::vector<double> kap(n), logb(n);
    double hfd = opts_.fd_step_rel * ell_;
    for (int i = 0; i < n; ++i) {
        Vec3 p = line_.points[i];
        Vec3 dir = line_.tangents[i];
        auto g = [&](const Vec3& q) { return std::log(norm((*field_)(q))); };
        double d1 = directional_derivatives_scalar(g, p, dir, hfd)[0];
        kap[i] = -0.5 * d1;
        logb[i] = g(p);
    }
    kappa_ = CubicSpline(line_.tau0, dtau, kap);
    logb_line_ = CubicSpline(line_.tau0, dtau, logb);

    // xi3(t): d xi3/dt = (b(t)/b)^(1/2), xi3(0) = 0
    std::vector<double> xi3(n);
    int i0 = int(std::round(-line_.tau0 / dtau));
    xi3[i0] = 0.0;
    auto fval = [&](double t) { return std::sqrt(std::exp(logb_line_.value(t)) / b_inf_); };
    for (int i = i0 + 1; i < n; ++i) {
        double ta = line_.tau0 + (i - 1) * dtau, tb = ta + dtau;
        xi3[i] = xi3[i - 1] + dtau / 6.0 * (fval(ta) + 4.0 * fval(0.5 * (ta + tb)) + fval(tb));
    }
    for (int i = i0 - 1; i >= 0; --i) {
        double tb = line_.tau0 + (i + 1) * dtau, ta = tb - dtau;
        xi3[i] = xi3[i + 1] - dtau / 6.0 * (fval(ta) + 4.0 * fval(0.5 * (ta + tb)) + fval(tb));
    }
    xi3_of_t_ = CubicSpline(line_.tau0, dtau, xi3);

    // plane-label blend data: affine labels matching tau outside |tau| >= 3 ell
    double y_hi = dot(line_.at(3.0 * ell_) - plane_origin_, n_inf_);
    double y_lo = dot(line_.at(-3.0 * ell_) - plane_origin_, n_inf_);
    blend_ylo_ = y_lo;
    blend_yhi_ = y_hi;
    c_lo_ = y_lo + 3.0 * ell_;  // lambda(y) = y - c for tau = y - c
    c_hi_ = y_hi - 3.0 * ell_;

    // rigid-motion shortcut for a straight line with constant strength
    double max_kap = 0.0, max_dev = 0.0;
    for (int i = 0; i < n; ++i) {
        max_kap = std::max(max_kap, std::abs(kap[i]));
        max_dev = std::max(max_dev, norm(line_.tangents[i] - n_inf_));
    }
    trivial_ = !opts_.force_general && max_kap * ell_ < 1e-13 && max_dev < 1e-12;
}

double FieldLineFrame::f_of_xi3(double xi3) const {
    if (trivial_) return 1.0;
    // invert xi3(t) by bisection (monotone increasing)
    double lo = line_.tau_min(), hi = line_.tau_max();
    if (xi3 <= xi3_of_t_.value(lo) || xi3 >= xi3_of_t_.value(hi))
        throw chart_error("f_of_xi3: xi3 outside the chart");
    for (int i = 0; i < 80; ++i) {
        double mid = 0.5 * (lo + hi);
        (xi3_of_t_.value(mid) < xi3 ? lo : hi) = mid;
    }
    double t = 0.5 * (lo + hi);
    return std::sqrt(std::exp(logb_line_.value(t)) / b_inf_);
}

double FieldLineFrame::chi_blend(const Vec3& x) const {
    return RadialCutoff(5.0 * ell_, 6.0 * ell_, 1).value(norm(x - z0_));
}

double FieldLineFrame::cap_tau(const Vec3& x) const {
    // leaf condition F(tau) = phidot(tau).(x - phi(tau)) + kappa(tau)/2 |x-phi|^2 = 0
    auto F = [&](double tau) {
        Vec3 p = line_.at(tau);
        Vec3 d = x - p;
        return dot(line_.tangent(tau), d) + 0.5 * kappa_.value(tau) * norm2(d);
    };
    auto dF = [&](double tau) {
        Vec3 p = line_.at(tau);
        Vec3 tg = line_.tangent(tau);
        Vec3 d = x - p;
        return dot(line_.second_derivative(tau), d) - dot(tg, tg) +
               0.5 * kappa_.derivative(tau) * norm2(d) - kappa_.value(tau) * dot(tg, d);
    };
    // branch selection: the foliation may fold at large transverse distance,
    // leaving several roots in the full bracket. Track the branch nearest the
    // smooth plane estimate so the label stays single valued and continuous.
    double t_lo = line_.tau_min() + 2.0 * line_.dtau, t_hi = line_.tau_max() - 2.0 * line_.dtau;
    double t_est = std::clamp(plane_label(x), t_lo, t_hi);
    double lo = 0.0, hi = 0.0;
    bool found = false;
    double step = line_.dtau;
    double f_est = F(t_est);
    for (int k = 0; k < 4000 && !found; ++k) {
        if (f_est > 0.0) {
            double b = t_est + (k + 1) * step;
            if (b > t_hi) break;
            if (F(b) < 0.0) {
                lo = b - step;
                hi = b;
                found = true;
            }
        } else {
            double a = t_est - (k + 1) * step;
            if (a < t_lo) break;
            if (F(a) > 0.0) {
                lo = a;
                hi = a + step;
                found = true;
            }
        }
    }
    if (!found) throw chart_error("cap_tau: point outside the foliated tube");
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        double fm = F(mid);
        if (std::abs(hi - lo) < opts_.root_tol_rel * std::max(1.0, std::abs(mid))) break;
        (fm > 0.0 ? lo : hi) = mid;
    }
    double root = 0.5 * (lo + hi);
    for (int i = 0; i < 3; ++i) root -= F(root) / dF(root);
    // fold guard: when the tracked branch turns tangential the chart ends here
    if (dF(root) > -0.25) throw chart_error("cap_tau: leaf foliation folds at this point");
    return root;
}

double FieldLineFrame::plane_label(const Vec3& x) const {
    double y = dot(x - plane_origin_, n_inf_);
    if (y <= blend_ylo_) return y - c_lo_;
    if (y >= blend_yhi_) return y - c_hi_;
    double s = smoothstep9((y - blend_ylo_) / (blend_yhi_ - blend_ylo_));
    return y - (c_lo_ + (c_hi_ - c_lo_) * s);
}

double FieldLineFrame::leaf_label(const Vec3& x) const {
    if (trivial_) return dot(x - base_, n_inf_);
    double chi = chi_blend(x);
    if (chi <= 0.0) return plane_label(x);
    double tc = cap_tau(x);
    if (chi >= 1.0) return tc;
    return chi * tc + (1.0 - chi) * plane_label(x);
}

Vec3 FieldLineFrame::grad_t(const Vec3& x) const {
    double chi = chi_blend(x);
    Vec3 gplan;
    {
        double y = dot(x - plane_origin_, n_inf_);
        double lp = 1.0;
        if (y > blend_ylo_ && y < blend_yhi_) {
            double w = blend_yhi_ - blend_ylo_;
            lp = 1.0 - (c_hi_ - c_lo_) * smoothstep9_d1((y - blend_ylo_) / w) / w;
        }
        gplan = lp * n_inf_;
    }
    if (chi <= 0.0) return gplan;

    double tc = cap_tau(x);
    Vec3 p = line_.at(tc);
    Vec3 tg = line_.tangent(tc);
    Vec3 d = x - p;
    double kap = kappa_.value(tc), kapd = kappa_.derivative(tc);
    // implicit differentiation of F(tau,x) = tg.(x-p) + kap/2 |x-p|^2; the
    // second derivative must be the interpolant's own or the flow field stops
    // being the exact gradient of the label
    Vec3 dFdx = tg + kap * d;
    Vec3 phidd = line_.second_derivative(tc);
    double dFdtau = dot(phidd, d) - dot(tg, tg) + 0.5 * kapd * norm2(d) - kap * dot(tg, d);
    Vec3 gcap = dFdx * (-1.0 / dFdtau);
    if (chi >= 1.0) return gcap;

    double pl = plane_label(x);
    Vec3 gchi;
    {
        Vec3 dd = x - z0_;
        double r = norm(dd);
        double sl = RadialCutoff(5.0 * ell_, 6.0 * ell_, 1).slope(r);
        gchi = r > 0.0 ? (sl / r) * dd : Vec3{};
    }
    return gchi * (tc - pl) + chi * gcap + (1.0 - chi) * gplan;
}

FieldLineFrame::FlowResult FieldLineFrame::flow_to_plane(const Vec3& x, double t_start) const {
    // state: position (3) + accumulated integral of 2 sqrt(g_tt) kappa dt
    auto rhs = [&](double t, const double* y, double* dy) {
        Vec3 g = grad_t({y[0], y[1], y[2]});
        double g2 = norm2(g);
        dy[0] = g.x / g2;
        dy[1] = g.y / g2;
        dy[2] = g.z / g2;
        // g_tt = |grad t|^-2 along the flow; the leaf curvature kappa(t)
        double chi = chi_blend({y[0], y[1], y[2]});
        double kap = chi > 0.0 ? kappa_.value(std::clamp(t, line_.tau_min(), line_.tau_max())) * chi : 0.0;
        dy[3] = 2.0 * kap / std::sqrt(g2);
    };
    double y[4] = {x.x, x.y, x.z, 0.0};
    OdeOptions o = opts_.ode;
    o.max_step = std::max(0.25 * ell_, 1e-3 * std::abs(t_start));
    rk45_integrate(rhs, 4, t_start, 0.0, y, o);
    FlowResult r;
    r.plane_point = {y[0], y[1], y[2]};
    r.logG = -y[3];  // logG(t_start) - logG(0), integral taken downward
    r.gtt_at_start = 1.0 / norm2(grad_t(x));
    return r;
}

Vec3 FieldLineFrame::xi_of_x(const Vec3& x) const {
    if (trivial_) {
        Vec3 d = x - base_;
        return {dot(d, p1_), dot(d, p2_), dot(d, n_inf_)};
    }
    double t = leaf_label(x);
    if (std::abs(t) > line_.tau_max() - 3.0 * line_.dtau)
        throw chart_error("xi_of_x: longitudinal coordinate outside the chart");
    FlowResult fr = flow_to_plane(x, t);
    Vec3 d = fr.plane_point - base_;
    Vec3 xi{dot(d, p1_), dot(d, p2_), xi3_of_t_.value(t)};
    if (std::hypot(xi.x, xi.y) > chart_radius() * 1.5)
        throw chart_error("xi_of_x: transverse coordinate outside the chart");
    return xi;
}

Vec3 FieldLineFrame::x_of_xi(const Vec3& xi) const {
    if (trivial_) return base_ + xi.x * p1_ + xi.y * p2_ + xi.z * n_inf_;
    // invert xi3 -> t
    double lo = line_.tau_min(), hi = line_.tau_max();
    if (xi.z <= xi3_of_t_.value(lo) || xi.z >= xi3_of_t_.value(hi))
        throw chart_error("x_of_xi: xi3 outside the chart");
    for (int i = 0; i < 100; ++i) {
        double mid = 0.5 * (lo + hi);
        (xi3_of_t_.value(mid) < xi.z ? lo : hi) = mid;
    }
    double t_target = 0.5 * (lo + hi);
    Vec3 start = base_ + xi.x * p1_ + xi.y * p2_;
    if (t_target == 0.0) return start;
    auto rhs = [&](double, const double* y, double* dy) {
        Vec3 g = grad_t({y[0], y[1], y[2]});
        double g2 = norm2(g);
        dy[0] = g.x / g2;
        dy[1] = g.y / g2;
        dy[2] = g.z / g2;
    };
    double y[3] = {start.x, start.y, start.z};
    OdeOptions o = opts_.ode;
    o.max_step = std::max(0.25 * ell_, 1e-3 * std::abs(t_target));
    rk45_integrate(rhs, 3, 0.0, t_target, y, o);
    return {y[0], y[1], y[2]};
}

double FieldLineFrame::omega(const Vec3& x) const {
    if (trivial_) return 1.0;
    double t = leaf_label(x);
    FlowResult fr = flow_to_plane(x, t);
    // Omega = G^{-1/2}, G the transported transverse metric coefficient
    return std::exp(-0.5 * fr.logG);
}

double FieldLineFrame::h_factor(const Vec3& x) const {
    if (trivial_) return 1.0;
    double t = leaf_label(x);
    FlowResult fr = flow_to_plane(x, t);
    double om = std::exp(-0.5 * fr.logG);
    double f = std::sqrt(std::exp(logb_line_.value(t)) / b_inf_);
    return om * std::sqrt(fr.gtt_at_start) / f;
}

Mat2c FieldLineFrame::spin_up(const Vec3& x) const {
    if (trivial_) {
        Mat2c m = sigma_dot(n_inf_);
        Mat2c out = mat2_identity();
        for (int i = 0; i < 4; ++i) out.a[i] = 0.5 * (out.a[i] + m.a[i]);
        return out;
    }
    double t = leaf_label(x);
    Vec3 nl = field_->unit_direction(line_.at(std::clamp(t, line_.tau_min(), line_.tau_max())));
    Mat2c m = sigma_dot(nl);
    Mat2c out = mat2_identity();
    for (int i = 0; i < 4; ++i) out.a[i] = 0.5 * (out.a[i] + m.a[i]);
    return out;
}

// ---------------------------------------------------------------------------
// tube grid
// ---------------------------------------------------------------------------

TubeGrid::TubeGrid(const MagneticFieldModel& field, Vec3 ball_center, double ell, Vec3 b_infinity,
                   double eta, const FrameOptions& opts)
    : field_(&field), z0_(ball_center), ell_(ell), b_vec_inf_(b_infinity), eta_(eta), opts_(opts) {
    b_ = norm(b_infinity);
    if (!(eta_ > 0.0 && eta_ <= 0.25)) throw config_error("TubeGrid: need 0 < eta <= 1/4");
    if (b_ < 1.0) throw config_error("TubeGrid: need exterior strength b >= 1");
    spacing_ = 1.0 / std::sqrt(b_);
}

const FieldLineFrame& TubeGrid::frame(int j1, int j2) const {
    auto key = std::make_pair(j1, j2);
    auto it = cache_.find(key);
    if (it == cache_.end()) {
        auto f = std::make_unique<FieldLineFrame>(*field_, z0_, ell_, b_vec_inf_, j1 * spacing_,
                                                  j2 * spacing_, opts_);
        it = cache_.emplace(key, std::move(f)).first;
    }
    return *it->second;
}

double TubeGrid::xi_perp_sq(int j1, int j2, const Vec3& x) const {
    const FieldLineFrame& f0 = frame(0, 0);
    if (f0.trivial()) {
        // lattice frames are rigid translates of the base frame
        Vec3 xi = f0.xi_of_x(x);
        double d1 = xi.x - j1 * spacing_, d2 = xi.y - j2 * spacing_;
        return d1 * d1 + d2 * d2;
    }
    Vec3 xi = frame(j1, j2).xi_of_x(x);
    return xi.x * xi.x + xi.y * xi.y;
}

double TubeGrid::gaussian(int j1, int j2, const Vec3& x) const {
    return std::exp(-0.25 * eta_ * b_ * xi_perp_sq(j1, j2, x));
}

Mat2c TubeGrid::spin_up(int j1, int j2, const Vec3& x) const {
    const FieldLineFrame& f0 = frame(0, 0);
    if (f0.trivial()) return f0.spin_up(x);
    return frame(j1, j2).spin_up(x);
}

namespace {
// window half-width (in lattice units) so the Gaussian lattice tail, with the
// factor-2 comparability of |xi_perp^j| and the plane distance, stays below tol
int tube_window(double gamma_exp, double eta, double tol) {
    double need = std::log(1.0 / tol) + 12.0;
    return int(std::ceil(std::sqrt(16.0 * need / (gamma_exp * eta)))) + 2;
}
}  // namespace

double TubeGrid::moment_sum(const Vec3& x, int kappa, double gamma, double tail_tol) const {
    Vec3 n_inf = b_vec_inf_ / b_;
    Vec3 plane_origin = z0_ - ell_ * n_inf;
    Vec3 pix = project_to_plane(*field_, x, plane_origin, n_inf, opts_.ode);
    Vec3 p1, p2;
    {
        // must match the frame's plane basis
        const FieldLineFrame& f0 = frame(0, 0);
        p1 = f0.p1();
        p2 = f0.p2();
    }
    Vec3 d = pix - plane_origin;
    int c1 = int(std::round(dot(d, p1) / spacing_));
    int c2 = int(std::round(dot(d, p2) / spacing_));
    int J = tube_window(gamma, eta_, tail_tol);
    if (!frame(0, 0).trivial() && size_t(2 * J + 1) * (2 * J + 1) > 40000)
        throw budget_error("TubeGrid::moment_sum: lattice window exceeds the frame budget");
    double sum = 0.0;
    for (int j1 = c1 - J; j1 <= c1 + J; ++j1)
        for (int j2 = c2 - J; j2 <= c2 + J; ++j2) {
            double q = xi_perp_sq(j1, j2, x);
            double v = std::exp(-0.25 * eta_ * b_ * q);
            sum += std::pow(eta_ * b_ * q, kappa) * std::pow(v, gamma);
        }
    return sum;
}

double TubeGrid::spin_alloc_min_eig(const Vec3& x, double lambda, double C0) const {
    const FieldLineFrame& f0 = frame(0, 0);
    Vec3 n_inf = b_vec_inf_ / b_;
    Vec3 plane_origin = z0_ - ell_ * n_inf;
    Vec3 pix = project_to_plane(*field_, x, plane_origin, n_inf, opts_.ode);
    Vec3 d = pix - plane_origin;
    int c1 = int(std::round(dot(d, f0.p1()) / spacing_));
    int c2 = int(std::round(dot(d, f0.p2()) / spacing_));
    int J = tube_window(4.0, eta_, 1e-8);
    if (!f0.trivial() && size_t(2 * J + 1) * (2 * J + 1) > 40000)
        throw budget_error("TubeGrid::spin_alloc_min_eig: lattice window exceeds the frame budget");
    Mat2c acc{};
    for (int j1 = c1 - J; j1 <= c1 + J; ++j1)
        for (int j2 = c2 - J; j2 <= c2 + J; ++j2) {
            double q = xi_perp_sq(j1, j2, x);
            double v4 = std::exp(-eta_ * b_ * q);
            Mat2c P = spin_up(j1, j2, x);
            double coef = b_ * (lambda - eta_ * eta_ * b_ * q);
            for (int t = 0; t < 4; ++t) acc.a[t] += v4 * coef * P.a[t];
            double diag = v4 * C0 / (ell_ * ell_);
            acc.a[0] += diag;
            acc.a[3] += diag;
        }
    return mat2_herm_eigs(acc)[0];
}

// ---------------------------------------------------------------------------
// magnetic localization identity
// ---------------------------------------------------------------------------

namespace {

struct Spinor {
    cplx up, dn;
};

}  // namespace

double magnetic_localization_residual(double b, double eta, bool stencil_mode, double stencil_h,
                                      unsigned seed) {
    // psi(xi) = (poly1 * gauss, poly2 * gauss), analytic derivatives
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::array<double, 8> c;
    for (auto& v : c) v = U(rng);
    double w = 0.6;  // Gaussian width of the test spinor

    auto psi = [&](const Vec3& q) -> Spinor {
        double g = std::exp(-norm2(q) / (2 * w * w));
        cplx up = cplx(c[0] + c[1] * q.x + c[2] * q.y, c[3] * q.z) * g;
        cplx dn = cplx(c[4] + c[5] * q.z, c[6] * q.x + c[7] * q.y) * g;
        return {up, dn};
    };
    auto dpsi = [&](const Vec3& q, int ax) -> Spinor {
        double g = std::exp(-norm2(q) / (2 * w * w));
        double fac = -q[ax] / (w * w);
        cplx pu = cplx(c[0] + c[1] * q.x + c[2] * q.y, c[3] * q.z);
        cplx pd = cplx(c[4] + c[5] * q.z, c[6] * q.x + c[7] * q.y);
        cplx du = ax == 0 ? cplx(c[1], 0) : ax == 1 ? cplx(c[2], 0) : cplx(0, c[3]);
        cplx dd = ax == 0 ? cplx(0, c[6]) : ax == 1 ? cplx(0, c[7]) : cplx(c[5], 0);
        return {(du + fac * pu) * g, (dd + fac * pd) * g};
    };

    auto v2 = [&](const Vec3& q) { return std::exp(-0.5 * eta * b * (q.x * q.x + q.y * q.y)); };
    auto dv2 = [&](const Vec3& q, int ax) {
        return ax == 2 ? 0.0 : -eta * b * q[ax] * v2(q);
    };

    // alpha_c(d/dxi_k): (-b/2 xi2, b/2 xi1, 0); D_eta uses (1 + 2 eta) alpha_c
    auto apply_dirac = [&](const Vec3& q, const Spinor& val, const std::array<Spinor, 3>& grad,
                           double gauge_factor) -> Spinor {
        double a1 = -0.5 * b * q.y * gauge_factor;
        double a2 = 0.5 * b * q.x * gauge_factor;
        cplx i(0, 1);
        // sigma^1 (-i d1 + a1) + sigma^2 (-i d2 + a2) + sigma^3 (-i d3)
        cplx up = (-i * grad[0].dn + a1 * val.dn) + (-i * (-i) * grad[1].dn - i * a2 * val.dn) * cplx(0, 1);
        // write it out plainly instead:
        cplx P1u = -i * grad[0].up + a1 * val.up;
        cplx P1d = -i * grad[0].dn + a1 * val.dn;
        cplx P2u = -i * grad[1].up + a2 * val.up;
        cplx P2d = -i * grad[1].dn + a2 * val.dn;
        cplx P3u = -i * grad[2].up;
        cplx P3d = -i * grad[2].dn;
        Spinor out;
        out.up = P1d + cplx(0, -1) * P2d + P3u;
        out.dn = P1u + cplx(0, 1) * P2u - P3d;
        (void)up;
        return out;
    };

    std::vector<Vec3> samples;
    for (int i = 0; i < 64; ++i) {
        samples.push_back({1.6 * U(rng), 1.6 * U(rng), 1.6 * U(rng)});
    }

    double num = 0.0, den = 0.0;
    for (const Vec3& q : samples) {
        Spinor p = psi(q);
        std::array<Spinor, 3> gp;
        std::array<Spinor, 3> g_v2p;  // grad of v^2 psi
        Spinor v2p{v2(q) * p.up, v2(q) * p.dn};
        if (!stencil_mode) {
            for (int ax = 0; ax < 3; ++ax) {
                gp[ax] = dpsi(q, ax);
                double vv = v2(q), dvv = dv2(q, ax);
                g_v2p[ax] = {vv * gp[ax].up + dvv * p.up, vv * gp[ax].dn + dvv * p.dn};
            }
        } else {
            for (int ax = 0; ax < 3; ++ax) {
                Vec3 qp = q, qm = q;
                qp[ax] += stencil_h;
                qm[ax] -= stencil_h;
                Spinor pp = psi(qp), pm = psi(qm);
                gp[ax] = {(pp.up - pm.up) / (2 * stencil_h), (pp.dn - pm.dn) / (2 * stencil_h)};
                Spinor vp{v2(qp) * pp.up, v2(qp) * pp.dn}, vm{v2(qm) * pm.up, v2(qm) * pm.dn};
                g_v2p[ax] = {(vp.up - vm.up) / (2 * stencil_h), (vp.dn - vm.dn) / (2 * stencil_h)};
            }
        }
        Spinor lhs = apply_dirac(q, v2p, g_v2p, 1.0 + 2.0 * eta);
        Spinor dt = apply_dirac(q, p, gp, 1.0);
        // rhs = v^2 Dtilde psi + 2 i eta b v^2 (s1 xi1 + s2 xi2) s_up psi
        cplx i(0, 1);
        double vv = v2(q);
        Spinor rhs{vv * dt.up, vv * dt.dn};
        // s_up psi = (psi_up, 0); (s1 xi1 + s2 xi2) acting on (u, 0) = (0, (xi1 + i xi2) u)
        cplx su = p.up;
        rhs.dn += 2.0 * i * eta * b * vv * cplx(q.x, q.y) * su;
        num += std::norm(lhs.up - rhs.up) + std::norm(lhs.dn - rhs.dn);
        den += std::norm(p.up) + std::norm(p.dn);
    }
    return std::sqrt(num / den);
}

}  // namespace mag
