#include "mag/spectral.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <random>

#include "mag/deriv.hpp"
#include "mag/errors.hpp"
#include "mag/quadrature.hpp"

#if defined(MAG_HAVE_LAPACKE)
#include <lapacke.h>
#endif

namespace mag {

// ---------------------------------------------------------------------------
// assembly
// ---------------------------------------------------------------------------

DiscretePauli assemble(const MagneticFieldModel& field, const std::function<double(const Vec3&)>& V,
                       const Box& box, double h_grid, const VectorPotential& gauge, double hbar,
                       const AssembleOptions& opts) {
    if (h_grid <= 0.0) throw config_error("assemble: h_grid must be positive");
    DiscretePauli op;
    op.hbar_ = hbar;
    GridSpec& g = op.grid_;
    g.box = box;
    for (int a = 0; a < 3; ++a) {
        double side = box.side()[a];
        if (side <= 2.0 * h_grid) throw config_error("assemble: box too small for the grid spacing");
        g.n[a] = std::max(1, int(std::round(side / h_grid)) - 1);
        g.h[a] = side / (g.n[a] + 1);
    }
    if (g.dim() > opts.max_dim) throw budget_error("assemble: dimension exceeds the desk-scale budget");

    if (opts.check_resolution) {
        // sampled max field strength sets the magnetic length resolution bar
        double bmax = 0.0;
        for (int i = 0; i < 64; ++i) {
            Vec3 u = halton3(i);
            Vec3 p = box.lo + Vec3{u.x * box.side().x, u.y * box.side().y, u.z * box.side().z};
            bmax = std::max(bmax, norm(field(p)));
        }
        double hmax = std::min(opts.feature_scale > 0 ? 0.5 * opts.feature_scale : kScaleInfinity,
                               bmax > 0 ? 0.5 / std::sqrt(bmax / hbar) : kScaleInfinity);
        double hcur = std::max({g.h[0], g.h[1], g.h[2]});
        if (hcur > hmax)
            throw budget_error("assemble: grid under-resolves the magnetic length (h = " +
                               std::to_string(hcur) + " > " + std::to_string(hmax) + ")");
    }

    const size_t ns = g.sites();
    op.diag_up_.assign(ns, 0.0);
    op.diag_dn_.assign(ns, 0.0);
    op.diag_od_.assign(ns, cplx(0, 0));
    for (int a = 0; a < 3; ++a) op.link_[a].assign(ns, cplx(0, 0));

    const double kin = hbar * hbar * 2.0 * (1.0 / (g.h[0] * g.h[0]) + 1.0 / (g.h[1] * g.h[1]) +
                                            1.0 / (g.h[2] * g.h[2]));
    const auto& gl = gauss_legendre(opts.edge_gl_order);
    bool any_od = false;
    for (int i = 0; i < g.n[0]; ++i)
        for (int j = 0; j < g.n[1]; ++j)
            for (int k = 0; k < g.n[2]; ++k) {
                size_t s = g.site_index(i, j, k);
                Vec3 p = g.site(i, j, k);
                Vec3 B = field(p);
                double v = V(p);
                op.diag_up_[s] = kin + v + hbar * B.z;
                op.diag_dn_[s] = kin + v - hbar * B.z;
                op.diag_od_[s] = hbar * cplx(B.x, -B.y);
                if (B.x != 0.0 || B.y != 0.0) any_od = true;
                int nb[3] = {i + 1 < g.n[0], j + 1 < g.n[1], k + 1 < g.n[2]};
                for (int a = 0; a < 3; ++a) {
                    if (!nb[a]) continue;
                    double theta = 0.0;
                    for (int q = 0; q < opts.edge_gl_order; ++q) {
                        double t = 0.5 * (gl.nodes[q] + 1.0);
                        Vec3 pe = p;
                        pe[a] += t * g.h[a];
                        theta += 0.5 * gl.weights[q] * gauge(pe)[a];
                    }
                    theta *= g.h[a] / hbar;
                    // forward hop of (-i hbar grad + A)^2: -hbar^2/h^2 exp(+i theta)
                    op.link_[a][s] = std::polar(hbar * hbar / (g.h[a] * g.h[a]), theta);
                }
            }
    op.spin_diag_ = !any_od;
    return op;
}

void DiscretePauli::apply(const cplx* x, cplx* y) const {
    const GridSpec& g = grid_;
    const int n0 = g.n[0], n1 = g.n[1], n2 = g.n[2];
    const size_t str0 = size_t(n1) * n2, str1 = n2;
    for (int i = 0; i < n0; ++i)
        for (int j = 0; j < n1; ++j)
            for (int k = 0; k < n2; ++k) {
                size_t s = (size_t(i) * n1 + j) * n2 + k;
                cplx xu = x[2 * s], xd = x[2 * s + 1];
                cplx yu = diag_up_[s] * xu + diag_od_[s] * xd;
                cplx yd = std::conj(diag_od_[s]) * xu + diag_dn_[s] * xd;
                // forward neighbors
                if (i + 1 < n0) {
                    cplx U = link_[0][s];
                    yu -= U * x[2 * (s + str0)];
                    yd -= U * x[2 * (s + str0) + 1];
                }
                if (j + 1 < n1) {
                    cplx U = link_[1][s];
                    yu -= U * x[2 * (s + str1)];
                    yd -= U * x[2 * (s + str1) + 1];
                }
                if (k + 1 < n2) {
                    cplx U = link_[2][s];
                    yu -= U * x[2 * (s + 1)];
                    yd -= U * x[2 * (s + 1) + 1];
                }
                // backward neighbors (conjugated links)
                if (i > 0) {
                    cplx U = std::conj(link_[0][s - str0]);
                    yu -= U * x[2 * (s - str0)];
                    yd -= U * x[2 * (s - str0) + 1];
                }
                if (j > 0) {
                    cplx U = std::conj(link_[1][s - str1]);
                    yu -= U * x[2 * (s - str1)];
                    yd -= U * x[2 * (s - str1) + 1];
                }
                if (k > 0) {
                    cplx U = std::conj(link_[2][s - 1]);
                    yu -= U * x[2 * (s - 1)];
                    yd -= U * x[2 * (s - 1) + 1];
                }
                y[2 * s] = yu;
                y[2 * s + 1] = yd;
            }
}

void DiscretePauli::apply_block(const CMat& X, CMat& Y) const {
    Y.resize(X.rows(), X.cols());
    for (Eigen::Index c = 0; c < X.cols(); ++c) apply(X.col(c).data(), Y.col(c).data());
}

SpMat DiscretePauli::to_sparse() const {
    const GridSpec& g = grid_;
    std::vector<Eigen::Triplet<cplx>> trip;
    trip.reserve(g.dim() * 8);
    const int n0 = g.n[0], n1 = g.n[1], n2 = g.n[2];
    const size_t str0 = size_t(n1) * n2, str1 = n2;
    for (size_t s = 0; s < g.sites(); ++s) {
        trip.emplace_back(2 * s, 2 * s, cplx(diag_up_[s], 0));
        trip.emplace_back(2 * s + 1, 2 * s + 1, cplx(diag_dn_[s], 0));
        if (diag_od_[s] != cplx(0, 0)) {
            trip.emplace_back(2 * s, 2 * s + 1, diag_od_[s]);
            trip.emplace_back(2 * s + 1, 2 * s, std::conj(diag_od_[s]));
        }
        int i = int(s / str0), j = int((s / str1) % n1), k = int(s % n2);
        size_t nbr[3] = {s + str0, s + str1, s + 1};
        int has[3] = {i + 1 < n0, j + 1 < n1, k + 1 < n2};
        for (int a = 0; a < 3; ++a) {
            if (!has[a]) continue;
            cplx U = -link_[a][s];
            for (int c = 0; c < 2; ++c) {
                trip.emplace_back(2 * s + c, 2 * nbr[a] + c, U);
                trip.emplace_back(2 * nbr[a] + c, 2 * s + c, std::conj(U));
            }
        }
    }
    SpMat H(g.dim(), g.dim());
    H.setFromTriplets(trip.begin(), trip.end());
    return H;
}

CMat DiscretePauli::to_dense() const {
    SpMat H = to_sparse();
    return CMat(H);
}

std::vector<double> DiscretePauli::real_diagonal() const {
    std::vector<double> d(dim());
    for (size_t s = 0; s < grid_.sites(); ++s) {
        d[2 * s] = diag_up_[s];
        d[2 * s + 1] = diag_dn_[s];
    }
    return d;
}

void DiscretePauli::apply_dirac_squared(const cplx* x, cplx* y) const {
    // central-difference covariant derivative D_a psi(x) =
    //   [U_a(x) psi(x+e_a) - conj(U_a(x-e_a)) psi(x-e_a)] / (2 h_a),
    // Dirac = hbar sum sigma^a (-i D_a) + sigma.(A-part folded into links);
    // applied twice. Used as a consistency probe only.
    const GridSpec& g = grid_;
    const int n0 = g.n[0], n1 = g.n[1], n2 = g.n[2];
    const size_t str[3] = {size_t(n1) * n2, size_t(n2), 1};
    auto dirac = [&](const cplx* in, cplx* out) {
        for (int i = 0; i < n0; ++i)
            for (int j = 0; j < n1; ++j)
                for (int k = 0; k < n2; ++k) {
                    size_t s = (size_t(i) * n1 + j) * n2 + k;
                    int idx[3] = {i, j, k};
                    int nn[3] = {n0, n1, n2};
                    cplx pu[3] = {0, 0, 0}, pd[3] = {0, 0, 0};  // (-i D_a psi) components
                    for (int a = 0; a < 3; ++a) {
                        cplx fwd_u = 0, fwd_d = 0, bwd_u = 0, bwd_d = 0;
                        if (idx[a] + 1 < nn[a]) {
                            // link_ stores hbar^2/h^2 * phase; strip the magnitude
                            cplx U = link_[a][s] * (g.h[a] * g.h[a] / (hbar_ * hbar_));
                            fwd_u = U * in[2 * (s + str[a])];
                            fwd_d = U * in[2 * (s + str[a]) + 1];
                        }
                        if (idx[a] > 0) {
                            cplx U = std::conj(link_[a][s - str[a]]) * (g.h[a] * g.h[a] / (hbar_ * hbar_));
                            bwd_u = U * in[2 * (s - str[a])];
                            bwd_d = U * in[2 * (s - str[a]) + 1];
                        }
                        cplx mi(0, -1);
                        pu[a] = mi * hbar_ * (fwd_u - bwd_u) / (2.0 * g.h[a]);
                        pd[a] = mi * hbar_ * (fwd_d - bwd_d) / (2.0 * g.h[a]);
                    }
                    out[2 * s] = pu[2] + pd[0] + cplx(0, -1) * pd[1];
                    out[2 * s + 1] = pu[0] + cplx(0, 1) * pu[1] - pd[2];
                }
    };
    std::vector<cplx> tmp(dim());
    dirac(x, tmp.data());
    dirac(tmp.data(), y);
}

// ---------------------------------------------------------------------------
// dense eigensolvers
// ---------------------------------------------------------------------------

std::vector<double> dense_eigenvalues(const CMat& H) {
    const int n = int(H.rows());
#if defined(MAG_HAVE_LAPACKE)
    CMat A = H;
    std::vector<double> w(n);
    int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'N', 'L', n,
                              reinterpret_cast<lapack_complex_double*>(A.data()), n, w.data());
    if (info != 0) throw numerical_error("zheevd failed, info=" + std::to_string(info));
    return w;
#else
    Eigen::SelfAdjointEigenSolver<CMat> es(H, Eigen::EigenvaluesOnly);
    std::vector<double> w(es.eigenvalues().data(), es.eigenvalues().data() + n);
    return w;
#endif
}

void dense_eigensystem(CMat& H, std::vector<double>& values) {
    const int n = int(H.rows());
    values.resize(n);
#if defined(MAG_HAVE_LAPACKE)
    int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n,
                              reinterpret_cast<lapack_complex_double*>(H.data()), n, values.data());
    if (info != 0) throw numerical_error("zheevd failed, info=" + std::to_string(info));
#else
    Eigen::SelfAdjointEigenSolver<CMat> es(H);
    for (int i = 0; i < n; ++i) values[i] = es.eigenvalues()[i];
    H = es.eigenvectors();
#endif
}

int ldlt_negative_count(const SpMat& H, double shift) {
    SpMat A = H;
    for (int attempt = 0; attempt < 4; ++attempt) {
        SpMat M = A;
        if (shift != 0.0) {
            SpMat I(A.rows(), A.cols());
            I.setIdentity();
            M = A - shift * I;
        }
        Eigen::SimplicialLDLT<SpMat, Eigen::Lower> ldlt;
        ldlt.compute(M);
        if (ldlt.info() == Eigen::Success) {
            auto D = ldlt.vectorD();
            bool finite = true;
            int neg = 0;
            for (Eigen::Index i = 0; i < D.size(); ++i) {
                double dr = std::real(D[i]);
                if (!std::isfinite(dr)) {
                    finite = false;
                    break;
                }
                if (dr < 0.0) ++neg;
            }
            if (finite) return neg;
        }
        shift *= (1.0 + 1e-7);
        shift += (attempt + 1) * 1e-9;
    }
    throw numerical_error("ldlt_negative_count: factorization breakdown");
}

// ---------------------------------------------------------------------------
// LOBPCG
// ---------------------------------------------------------------------------

namespace {

// B-orthonormalize columns of S in place (drop near-dependent directions);
// returns the retained column count.
int orthonormalize(CMat& S) {
    CMat G = S.adjoint() * S;
    Eigen::SelfAdjointEigenSolver<CMat> es(G);
    double gmax = es.eigenvalues().maxCoeff();
    std::vector<int> keep;
    for (int i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()[i] > 1e-12 * gmax) keep.push_back(i);
    CMat T(G.rows(), keep.size());
    for (size_t c = 0; c < keep.size(); ++c)
        T.col(c) = es.eigenvectors().col(keep[c]) / std::sqrt(es.eigenvalues()[keep[c]]);
    S = S * T;
    return int(keep.size());
}

}  // namespace

EigenResult lobpcg_lowest(const DiscretePauli& op, int k, const LobpcgOptions& opts, bool want_vectors) {
    const size_t N = op.dim();
    const int m = std::min<int>(k + opts.block_extra, int(N));
    EigenResult out;

    std::vector<double> diag = op.real_diagonal();
    double diag_max = *std::max_element(diag.begin(), diag.end());
    double diag_min = *std::min_element(diag.begin(), diag.end());
    out.residual_scale = std::abs(diag_max) + std::abs(diag_min);

    if (N <= size_t(8 * m) || N < 600) {
        CMat H = op.to_dense();
        std::vector<double> w;
        dense_eigensystem(H, w);
        out.values.assign(w.begin(), w.begin() + k);
        if (want_vectors) out.vectors = H.leftCols(k);
        return out;
    }

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> G(0.0, 1.0);
    CMat X(N, m);
    for (int c = 0; c < m; ++c)
        for (size_t r = 0; r < N; ++r) {
            bool keep = opts.spin_sector == 0 || (opts.spin_sector > 0 ? (r % 2 == 0) : (r % 2 == 1));
            double re = G(rng), im = G(rng);
            X(r, c) = keep ? cplx(re, im) : cplx(0, 0);
        }
    orthonormalize(X);

    auto precond = [&](const CMat& R, double theta0) {
        CMat W = R;
        double floor_val = 0.01 * (std::abs(diag_max) + 1.0);
        for (int c = 0; c < W.cols(); ++c)
            for (size_t r = 0; r < N; ++r) {
                double d = diag[r] - theta0;
                W(r, c) /= std::max(d, floor_val);
            }
        return W;
    };

    CMat HX;
    op.apply_block(X, HX);
    CMat P, HP;
    std::vector<double> theta(m, 0.0);
    double tol_abs = opts.tol * out.residual_scale;

    for (int it = 0; it < opts.max_iters; ++it) {
        out.iterations = it + 1;
        CMat XtHX = X.adjoint() * HX;
        for (int c = 0; c < m; ++c) theta[c] = XtHX(c, c).real();
        CMat R = HX;
        for (int c = 0; c < m; ++c) R.col(c) -= theta[c] * X.col(c);
        // convergence of the requested k
        int conv = 0;
        for (int c = 0; c < k; ++c)
            if (R.col(c).norm() <= tol_abs) ++conv;
        if (conv == k) {
            out.converged = true;
            break;
        }
        if (it == opts.max_iters - 1) out.converged = false;

        CMat W = precond(R, theta[0]);
        CMat S(N, X.cols() + W.cols() + (P.cols() > 0 ? P.cols() : 0));
        S.leftCols(m) = X;
        S.middleCols(m, W.cols()) = W;
        if (P.cols() > 0) S.rightCols(P.cols()) = P;
        int kept = orthonormalize(S);
        S.conservativeResize(Eigen::NoChange, kept);

        CMat HS;
        op.apply_block(S, HS);
        CMat T = S.adjoint() * HS;
        T = cplx(0.5, 0) * (T + T.adjoint()).eval();
        Eigen::SelfAdjointEigenSolver<CMat> es(T);
        CMat C = es.eigenvectors().leftCols(m);
        CMat Xn = S * C;
        CMat HXn = HS * C;
        // implicit P: component of the new X outside the old X span
        CMat XtXn = X.adjoint() * Xn;
        P = Xn - X * XtXn;
        HP = HXn - HX * XtXn;
        if (P.cols() > 0) {
            CMat Pg = P.adjoint() * P;
            // keep P only if well-conditioned
            if (Pg.norm() < 1e-24) P.resize(N, 0);
        }
        X = Xn;
        HX = HXn;
    }

    out.values.assign(theta.begin(), theta.begin() + k);
    if (want_vectors) out.vectors = X.leftCols(k);
    return out;
}

// ---------------------------------------------------------------------------
// operations
// ---------------------------------------------------------------------------

SpectralReport sum_negative_eigenvalues(const DiscretePauli& op, const SumNegativeOptions& opts) {
    SpectralReport rep;
    if (op.dim() <= opts.dense_limit) {
        std::vector<double> w = dense_eigenvalues(op.to_dense());
        for (double e : w)
            if (e < opts.tol) rep.negative_eigenvalues.push_back(e);
        rep.used_dense = true;
        rep.certified_count = int(rep.negative_eigenvalues.size());
    } else {
        int certified = -1;
        if (opts.certify) certified = ldlt_negative_count(op.to_sparse(), -opts.tol);
        int want = certified >= 0 ? certified : 16;
        if (want == 0) {
            rep.certified_count = 0;
            return rep;
        }
        LobpcgOptions lo = opts.lobpcg;
        EigenResult er = lobpcg_lowest(op, want + 2, lo, false);
        rep.iterations = er.iterations;
        rep.converged = er.converged;
        for (double e : er.values)
            if (e < opts.tol) rep.negative_eigenvalues.push_back(e);
        rep.certified_count = certified;
        if (certified >= 0 && int(rep.negative_eigenvalues.size()) != certified)
            throw numerical_error("sum_negative_eigenvalues: solver count disagrees with inertia (" +
                                  std::to_string(rep.negative_eigenvalues.size()) + " vs " +
                                  std::to_string(certified) + ")");
    }
    std::sort(rep.negative_eigenvalues.begin(), rep.negative_eigenvalues.end());
    for (double e : rep.negative_eigenvalues) rep.trace_sum += -e;
    return rep;
}

int birman_schwinger_count(const DiscretePauli& kinetic, const std::vector<double>& W_sites,
                           double E, double threshold) {
    const GridSpec& g = kinetic.grid();
    std::vector<size_t> supp;
    for (size_t s = 0; s < g.sites(); ++s)
        if (W_sites[s] > 0.0) {
            supp.push_back(2 * s);
            supp.push_back(2 * s + 1);
        }
    if (supp.empty()) return 0;
    SpMat H = kinetic.to_sparse();
    SpMat I(H.rows(), H.cols());
    I.setIdentity();
    SpMat M = H + E * I;
    Eigen::SimplicialLDLT<SpMat, Eigen::Lower> ldlt;
    ldlt.compute(M);
    if (ldlt.info() != Eigen::Success) throw numerical_error("birman_schwinger_count: LDLT failed");
    CMat rhs = CMat::Zero(H.rows(), supp.size());
    for (size_t c = 0; c < supp.size(); ++c) rhs(supp[c], c) = std::sqrt(W_sites[supp[c] / 2]);
    CMat sol = ldlt.solve(rhs);
    CMat K(supp.size(), supp.size());
    for (size_t r = 0; r < supp.size(); ++r)
        for (size_t c = 0; c < supp.size(); ++c) K(r, c) = std::sqrt(W_sites[supp[r] / 2]) * sol(supp[r], c);
    K = cplx(0.5, 0) * (K + K.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<CMat> es(K, Eigen::EigenvaluesOnly);
    int cnt = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()[i] >= threshold) ++cnt;
    return cnt;
}

BSReport birman_schwinger_check(const DiscretePauli& kinetic,
                                const std::function<double(const Vec3&)>& V, double count_threshold) {
    const GridSpec& g = kinetic.grid();
    std::vector<double> W(g.sites(), 0.0);
    for (int i = 0; i < g.n[0]; ++i)
        for (int j = 0; j < g.n[1]; ++j)
            for (int k = 0; k < g.n[2]; ++k) {
                double v = V(g.site(i, j, k));
                if (v > 1e-14) throw config_error("birman_schwinger_check: V must be <= 0");
                W[g.site_index(i, j, k)] = -v;
            }
    // eigensolve route: H = D^2 - W (dense; the check runs on small grids)
    if (kinetic.dim() > 6000) throw budget_error("birman_schwinger_check: grid too large for the dense route");
    CMat H = kinetic.to_dense();
    for (size_t s = 0; s < g.sites(); ++s) {
        H(2 * s, 2 * s) -= W[s];
        H(2 * s + 1, 2 * s + 1) -= W[s];
    }
    BSReport rep;
    std::vector<double> evals = dense_eigenvalues(H);
    std::vector<double> neg;
    for (double e : evals)
        if (e < 0.0) neg.push_back(e);
    rep.n_negative = int(neg.size());
    for (double e : neg) rep.trace_sum += -e;

    // counting route: integrate the step function n(K(E), 1) by jump bisection
    int evals_used = 0;
    auto count = [&](double E) {
        ++evals_used;
        return birman_schwinger_count(kinetic, W, E, count_threshold);
    };
    double E0 = 1e-9 * (1.0 + rep.trace_sum);
    double Emax = neg.empty() ? 1.0 : -neg.front() * 1.25 + 1e-6;
    int n_lo = count(E0), n_hi = count(Emax);
    double integral = 0.0;
    struct Seg {
        double a, b;
        int na, nb;
    };
    std::vector<Seg> stack{{E0, Emax, n_lo, n_hi}};
    double tol = 1e-6 * std::max(1.0, Emax);
    while (!stack.empty()) {
        Seg sg = stack.back();
        stack.pop_back();
        if (sg.na == sg.nb) {
            integral += sg.na * (sg.b - sg.a);
            continue;
        }
        if (sg.b - sg.a < tol) {
            // jumps inside located to tolerance: midpoint attribution
            integral += 0.5 * (sg.na + sg.nb) * (sg.b - sg.a);
            continue;
        }
        double mid = 0.5 * (sg.a + sg.b);
        int nm = count(mid);
        stack.push_back({sg.a, mid, sg.na, nm});
        stack.push_back({mid, sg.b, nm, sg.nb});
    }
    integral += n_lo * E0;  // the sliver below the first sample (count is flat there)
    rep.bs_integral = integral;
    rep.counting_evals = evals_used;
    rep.rel_diff = std::abs(rep.bs_integral - rep.trace_sum) / std::max(rep.trace_sum, 1e-300);
    return rep;
}

ZeroModeResult zero_modes(const DiscretePauli& op, int k, double tol_factor, double b_ref,
                          const LobpcgOptions& opts) {
    ZeroModeResult zr;
    EigenResult er = lobpcg_lowest(op, k, opts, true);
    zr.values = er.values;
    zr.vectors = er.vectors;
    zr.tol_abs = tol_factor * b_ref;
    for (int i = 0; i < int(er.values.size()); ++i)
        if (er.values[i] <= zr.tol_abs) zr.accepted.push_back(i);
    return zr;
}

double ZeroModeResult::density_at(const GridSpec& g, int i, int j, int k) const {
    double cell = g.h[0] * g.h[1] * g.h[2];
    size_t s = g.site_index(i, j, k);
    double n = 0.0;
    for (int idx : accepted) {
        cplx u = vectors(2 * s, idx), d = vectors(2 * s + 1, idx);
        double nrm2 = vectors.col(idx).squaredNorm();
        n += (std::norm(u) + std::norm(d)) / (nrm2 * cell);
    }
    return n;
}

LtSweepEntry verify_lt_at(const MagneticFieldModel& field, const VectorPotential& gauge,
                          const std::function<double(const Vec3&)>& V, const Box& box, double h_grid,
                          const ScaleProfile* scales, const Box& v_support,
                          const SumNegativeOptions& opts) {
    DiscretePauli op = assemble(field, V, box, h_grid, gauge, 1.0);
    SpectralReport rep = sum_negative_eigenvalues(op, opts);
    LtSweepEntry e;
    e.b = norm(field(box.center()));
    e.trace_sum = rep.trace_sum;
    e.n_negative = int(rep.negative_eigenvalues.size());
    e.certified = rep.certified_count == e.n_negative && rep.certified_count >= 0;
    bool constant = field.descriptor().name == "constant";
    if (scales)
        e.rhs = lt_rhs(field, V, *scales, v_support, 1e-6, constant);
    else {
        ScaleProfile dummy(builtin_field("constant", {{"bz", 1.0}}));
        e.rhs = lt_rhs(field, V, dummy, v_support, 1e-6, true);
    }
    e.ratio = e.rhs.total() > 0.0 ? e.trace_sum / e.rhs.total() : 0.0;
    return e;
}

}  // namespace mag
