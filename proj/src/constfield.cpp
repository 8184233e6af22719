#include "mag/constfield.hpp"

#include <cmath>

#include "mag/errors.hpp"
#include "mag/quadrature.hpp"

namespace mag {

namespace {
// log(sinh u) and coth u, stable for u >> 1
double log_sinh(double u) { return u + std::log1p(-std::exp(-2.0 * u)) - std::log(2.0); }
double coth(double u) {
    if (u > 350.0) return 1.0;
    double e = std::exp(-2.0 * u);
    return 1.0 + 2.0 * e / (1.0 - e);
}
}  // namespace

MehlerKernel::MehlerKernel(double b) : b_(b) {
    if (b <= 0.0) throw config_error("MehlerKernel: b must be positive");
}

double MehlerKernel::magnitude(double t, double dperp_sq) const {
    double u = b_ * t;
    double lg = std::log(b_ / (4.0 * M_PI)) - log_sinh(u) - 0.25 * b_ * coth(u) * dperp_sq;
    return std::exp(lg);
}

cplx MehlerKernel::evaluate(double t, const Vec3& xi, const Vec3& zeta) const {
    if (t <= 0.0) throw config_error("MehlerKernel: t must be positive");
    double dperp_sq = (xi.x - zeta.x) * (xi.x - zeta.x) + (xi.y - zeta.y) * (xi.y - zeta.y);
    double phase = -0.5 * b_ * (xi.y * zeta.x - xi.x * zeta.y);
    return std::polar(magnitude(t, dperp_sq), phase);
}

ConstResolvent::ConstResolvent(double b, double P, double rel_tol) : b_(b), P_(P), tol_(rel_tol) {
    if (b <= 0.0) throw config_error("ConstResolvent: b must be positive");
    if (P <= 0.0) throw config_error("ConstResolvent: P must be positive");
}

double ConstResolvent::aniso_norm(const Vec3& xi) const {
    return std::sqrt(b_ * (xi.x * xi.x + xi.y * xi.y) + P_ * xi.z * xi.z);
}

double ConstResolvent::time_integral(double dperp_sq, double dz_sq, int spin) const {
    // integrand g(t) = e^{-t(P + spin b)} Mehler(t, dperp) (4 pi t)^{-1/2} e^{-dz^2/4t};
    // spin-down decay e^{-tP} survives from the lowest-Landau-level cancellation.
    double d2 = dperp_sq + dz_sq;
    if (d2 <= 0.0) throw numerical_error("ConstResolvent: diagonal kernel is divergent");
    auto logg = [&](double t) {
        double u = b_ * t;
        double lg = -t * (P_ + spin * b_);
        lg += std::log(b_ / (4.0 * M_PI)) - log_sinh(u) - 0.25 * b_ * coth(u) * dperp_sq;
        lg += -0.5 * std::log(4.0 * M_PI * t) - 0.25 * dz_sq / t;
        return lg;
    };
    // integration bounds from exponent cutoffs
    double decay = spin > 0 ? P_ + 2.0 * b_ : P_;
    double t_lo = std::max(d2 / 4.0 / 800.0, 1e-300);
    double t_hi = 800.0 / decay + 10.0 / b_;
    double split = std::clamp(1.0 / b_, t_lo * 1.0000001, t_hi * 0.9999999);
    auto f = [&](double u) {
        double t = std::exp(u);
        double lg = logg(t);
        return lg < -745.0 ? 0.0 : std::exp(lg) * t;  // du-measure
    };
    QuadResult q1 = adaptive_integrate(f, std::log(t_lo), std::log(split), tol_, 0.0, 36);
    QuadResult q2 = adaptive_integrate(f, std::log(split), std::log(t_hi), tol_, 0.0, 36);
    return q1.value + q2.value;
}

double ConstResolvent::kernel_magnitude(double dperp_sq, double dz, int spin) const {
    return time_integral(dperp_sq, dz * dz, spin);
}

cplx ConstResolvent::kernel(const Vec3& xi, const Vec3& zeta, int spin) const {
    double dperp_sq = (xi.x - zeta.x) * (xi.x - zeta.x) + (xi.y - zeta.y) * (xi.y - zeta.y);
    double mag = time_integral(dperp_sq, (xi.z - zeta.z) * (xi.z - zeta.z), spin);
    double phase = -0.5 * b_ * (xi.y * zeta.x - xi.x * zeta.y);
    return std::polar(mag, phase);
}

Mat2c ConstResolvent::kernel_matrix(const Vec3& xi, const Vec3& zeta) const {
    Mat2c m{};
    m(0, 0) = kernel(xi, zeta, +1);
    m(1, 1) = kernel(xi, zeta, -1);
    return m;
}

DiagTraceReport diag_trace_checks(double b, double P, double rel_tol) {
    if (!(P >= 1.0)) throw config_error("diag_trace_checks: need P >= 1");
    ConstResolvent R(b, P, rel_tol * 1e-2);
    DiagTraceReport rep;
    // tr R^2(u,u) = sum_spin int |K(0,xi)|^2 dxi; scaled spherical coordinates
    // xihat_perp = sqrt(b) xi_perp, xihat_3 = sqrt(P) xi_3, dxi = dxihat / (b sqrt(P))
    const auto& gl = gauss_legendre(48);
    for (int spin = -1; spin <= 1; spin += 2) {
        double total = 0.0;
        for (int iphi = 0; iphi < 48; ++iphi) {
            double phi = 0.5 * (gl.nodes[iphi] + 1.0) * M_PI;
            double wphi = 0.5 * M_PI * gl.weights[iphi];
            double sphi = std::sin(phi), cphi = std::cos(phi);
            auto fr = [&](double r) {
                double dperp_sq = (r * sphi) * (r * sphi) / b;
                double dz = r * cphi / std::sqrt(P);
                double k = R.kernel_magnitude(dperp_sq, dz, spin);
                return k * k * r * r * sphi;
            };
            QuadResult q = adaptive_integrate_decaying(fr, 1e-8, 0.5, rel_tol * 0.1, 60);
            total += wphi * q.value;
        }
        total *= 2.0 * M_PI / (b * std::sqrt(P));
        rep.per_spin[(spin + 1) / 2] = total;
        rep.trace_sq_diag += total;
    }
    rep.ratio_vs_bound = rep.trace_sq_diag / (b * std::pow(P, -1.5) + std::pow(P, -0.5));
    // Gaussian transverse decay: compare |K| at |xi_perp| = 3 b^{-1/2} and 0.3 b^{-1/2}
    double dz = 0.5 / std::sqrt(P);
    double near = R.kernel_magnitude(0.09 / b, dz, -1);
    double far = R.kernel_magnitude(9.0 / b, dz, -1);
    rep.gaussian_decay_ratio = near / far;
    return rep;
}

DecayFit resolvent_decay_fit(const ConstResolvent& R, int spin, double nlo, double nhi, int samples) {
    // sample along a skew direction in the scaled norm
    DecayFit fit;
    std::vector<double> xs, ys;
    for (int i = 0; i < samples; ++i) {
        double nn = nlo + (nhi - nlo) * i / (samples - 1.0);
        // direction with equal transverse/longitudinal share of the norm
        double dperp_sq = 0.5 * nn * nn / R.b();
        double dz = std::sqrt(0.5) * nn / std::sqrt(R.P());
        double k = R.kernel_magnitude(dperp_sq, dz, spin);
        double y = std::log(k * nn / (R.b() / std::sqrt(R.P())));
        xs.push_back(nn);
        ys.push_back(y);
    }
    // least squares y = log A - c x
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = int(xs.size());
    for (int i = 0; i < n; ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    double inter = (sy - slope * sx) / n;
    fit.rate = -slope;
    fit.amplitude = std::exp(inter);
    for (int i = 0; i < n; ++i)
        fit.max_residual = std::max(fit.max_residual, std::abs(ys[i] - (inter + slope * xs[i])));
    return fit;
}

double mehler_semigroup_residual(double b, double t, double s, const Vec3& xi, const Vec3& zeta,
                                 int order) {
    MehlerKernel K(b);
    // window: both Gaussians have width ~ sqrt(4 max(t,s) / (b coth)) <= 2 sqrt(max(t,s))
    double w = 6.0 * std::sqrt(std::max(t, s) + 1.0 / b) + 2.0 * (norm(xi) + norm(zeta)) + 2.0;
    const auto& gl = gauss_legendre(order);
    cplx acc(0.0, 0.0);
    for (int i = 0; i < order; ++i) {
        double e1 = w * gl.nodes[i];
        for (int j = 0; j < order; ++j) {
            double e2 = w * gl.nodes[j];
            Vec3 eta{e1, e2, 0.0};
            acc += gl.weights[i] * gl.weights[j] * K.evaluate(t, xi, eta) * K.evaluate(s, eta, zeta);
        }
    }
    acc *= w * w;
    cplx ref = K.evaluate(t + s, xi, zeta);
    return std::abs(acc - ref);
}

}  // namespace mag
