#pragma once

#include <array>

#include "mag/vec.hpp"

namespace mag {

/// Heat kernel of the 2-D magnetic Laplacian at field strength b > 0 in the
/// symmetric gauge (transverse positions are 2-vectors packed into Vec3.xy).
class MehlerKernel {
public:
    explicit MehlerKernel(double b);
    cplx evaluate(double t, const Vec3& xi_perp, const Vec3& zeta_perp) const;
    double magnitude(double t, double dperp_sq) const;  // |kernel|
    double b() const { return b_; }

private:
    double b_;
};

/// Resolvent kernel (D-tilde^2 + P)^{-1} of the constant-field Dirac square via
/// Laplace-time quadrature of Mehler x 1-D heat kernels; spin-diagonal.
class ConstResolvent {
public:
    ConstResolvent(double b, double P, double rel_tol = 1e-10);

    // scalar kernel in the spin sector s = +1 (up) or -1 (down)
    cplx kernel(const Vec3& xi, const Vec3& zeta, int spin) const;
    double kernel_magnitude(double dperp_sq, double dz, int spin) const;
    Mat2c kernel_matrix(const Vec3& xi, const Vec3& zeta) const;  // diag(up, down)

    // anisotropic norm ||| xi ||| = (b xi_perp^2 + P xi_3^2)^(1/2)
    double aniso_norm(const Vec3& xi) const;

    double b() const { return b_; }
    double P() const { return P_; }

private:
    double time_integral(double dperp_sq, double dz_sq, int spin) const;
    double b_, P_, tol_;
};

/// Diagonal of the squared resolvent: tr R^2(u,u) = sum_spin int |K(u,xi)|^2 dxi,
/// computed by spherical quadrature in scaled coordinates.
struct DiagTraceReport {
    double trace_sq_diag = 0.0;                    // tr R^2(u,u)
    double ratio_vs_bound = 0.0;                   // against b P^{-3/2} + P^{-1/2}
    double gaussian_decay_ratio = 0.0;             // off-diag at 3 b^{-1/2} vs near 0
    std::array<double, 2> per_spin{};              // spin-resolved contributions
};
DiagTraceReport diag_trace_checks(double b, double P, double rel_tol = 1e-7);

/// Least-squares fit of the decay rate c in |K| ~ A exp(-c |||xi|||)/|||xi|||
/// over ||| xi ||| in [lo, hi]; returns {c, A, max relative fit residual}.
struct DecayFit {
    double rate = 0.0;
    double amplitude = 0.0;
    double max_residual = 0.0;
};
DecayFit resolvent_decay_fit(const ConstResolvent& R, int spin, double nlo = 0.5, double nhi = 5.0,
                             int samples = 24);

/// | int K(t, xi, .) K(s, ., zeta) - K(t+s, xi, zeta) | via fixed tensor GL.
double mehler_semigroup_residual(double b, double t, double s, const Vec3& xi_perp,
                                 const Vec3& zeta_perp, int order = 64);

}  // namespace mag
