#include "mag/opineq.hpp"

#include <Eigen/Eigenvalues>
#include <random>

#include "mag/errors.hpp"

namespace mag {

namespace {

double min_herm_eig(const OMat& M) {
    OMat H = cplx(0.5, 0) * (M + M.adjoint());
    Eigen::SelfAdjointEigenSolver<OMat> es(H, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

OMat herm_inverse(const OMat& M) {
    Eigen::LDLT<OMat> f(M);
    if (f.info() != Eigen::Success) throw numerical_error("opineq: singular matrix in inverse");
    return f.solve(OMat::Identity(M.rows(), M.cols()));
}

}  // namespace

double pullup_gap(const BlockInstance& inst) {
    const int n = inst.dim(), k = inst.blocks();
    if (k == 0) throw config_error("pullup_gap: empty instance");
    RVec gsq = RVec::Zero(n);
    OMat mid = OMat::Zero(n, n), lhs = OMat::Zero(n, n);
    for (int b = 0; b < k; ++b) {
        const RVec& g = inst.weights[b];
        const OMat& A = inst.matrices[b];
        gsq += g.cwiseProduct(g);
        mid += g.asDiagonal() * A * g.asDiagonal();
        lhs += g.asDiagonal() * herm_inverse(A) * g.asDiagonal();
    }
    OMat mid_inv = herm_inverse(mid);
    OMat rhs = gsq.asDiagonal() * mid_inv * gsq.asDiagonal();
    return min_herm_eig(lhs - rhs);
}

double phi_difference_min_eig(const std::vector<double>& g, const std::vector<OMat>& A, int phi_power) {
    const int n = int(A[0].rows());
    double gsq = 0.0;
    OMat mid = OMat::Zero(n, n), lhs = OMat::Zero(n, n);
    auto phi = [&](const OMat& M) {
        OMat inv = herm_inverse(M);
        return phi_power == 2 ? OMat(inv * inv) : inv;
    };
    for (size_t b = 0; b < A.size(); ++b) {
        gsq += g[b] * g[b];
        mid += g[b] * A[b] * g[b];
        lhs += g[b] * phi(A[b]) * g[b];
    }
    OMat rhs = gsq * phi(mid) * gsq;
    return min_herm_eig(lhs - rhs);
}

PullinReport pullin_counterexample() {
    OMat A1(2, 2), A2(2, 2);
    A1 << 1, 1, 1, 2;
    A2 << 2, 1, 1, 2;
    std::vector<double> g{1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)};
    std::vector<OMat> As{A1, A2};
    PullinReport rep;
    rep.min_eig_phi_sq = phi_difference_min_eig(g, As, 2);
    rep.min_eig_phi_inv = phi_difference_min_eig(g, As, 1);
    // normalization: against the spectral norm of the difference matrix itself
    {
        OMat mid = 0.5 * (A1 + A2);
        OMat inv1 = herm_inverse(A1), inv2 = herm_inverse(A2), invm = herm_inverse(mid);
        OMat diff = 0.5 * (inv1 * inv1 + inv2 * inv2) - invm * invm;
        Eigen::SelfAdjointEigenSolver<OMat> es(cplx(0.5, 0) * (diff + diff.adjoint()),
                                               Eigen::EigenvaluesOnly);
        double nrm = std::max(std::abs(es.eigenvalues().minCoeff()), std::abs(es.eigenvalues().maxCoeff()));
        rep.normalized_min = rep.min_eig_phi_sq / nrm;
    }
    return rep;
}

XYGaps lemma_xy_gap(const OMat& X, const OMat& Y, double M) {
    const int n = int(X.rows());
    if (min_herm_eig(X) < -1e-12) throw config_error("lemma_xy_gap: X must be PSD");
    if (min_herm_eig(X + Y) < -1e-12) throw config_error("lemma_xy_gap: X + Y must be PSD");
    Eigen::SelfAdjointEigenSolver<OMat> esy(cplx(0.5, 0) * (Y + Y.adjoint()), Eigen::EigenvaluesOnly);
    double ynorm = std::max(std::abs(esy.eigenvalues().minCoeff()), std::abs(esy.eigenvalues().maxCoeff()));
    if (ynorm > M * (1.0 + 1e-12)) throw config_error("lemma_xy_gap: ||Y|| exceeds M");
    OMat I = OMat::Identity(n, n);
    OMat r1 = herm_inverse(X + Y + 2.0 * M * I);
    OMat r2 = herm_inverse(X + M * I);
    OMat r3 = herm_inverse(X * X + M * M * I);
    XYGaps gaps;
    gaps.gap1 = min_herm_eig(4.0 * (r2 * r2) - r1 * r1);
    gaps.gap2 = min_herm_eig(4.0 * r3 - 4.0 * (r2 * r2));
    return gaps;
}

ReweightReport reweight_kernels(const OMat& A, const RVec& F) {
    const int n = int(A.rows());
    for (int i = 0; i < n; ++i)
        if (!(F[i] > 0.0)) throw config_error("reweight_kernels: weights must be positive");
    ReweightReport rep;
    double fmax = F.maxCoeff(), fmin = F.minCoeff();
    double CF = fmax / fmin;
    // uniform base measure; nu = F mu. A_F(x,y) = A(x,y) / F(y)
    OMat AF = A * F.cwiseInverse().asDiagonal();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            rep.max_kernel_identity_error =
                std::max(rep.max_kernel_identity_error, std::abs(A(i, j) - AF(i, j) * F[j]));

    // diagonal kernels of A^*A on L2(mu) and A_F^*A_F on L2(nu):
    // (A^*A)(x,x) = sum_y |A(y,x)|^2 , (A_F^*A_F)(x,x) = F(x)^-2 sum_y |A(y,x)|^2 F(y)
    rep.diag_lower_slack = 1e300;
    rep.diag_upper_slack = 1e300;
    for (int x = 0; x < n; ++x) {
        double base = 0.0, wgt = 0.0;
        for (int y = 0; y < n; ++y) {
            base += std::norm(A(y, x));
            wgt += std::norm(A(y, x)) * F[y];
        }
        double diagF = wgt / (F[x] * F[x]);
        rep.diag_upper_slack = std::min(rep.diag_upper_slack, CF / fmin * base - diagF);
        rep.diag_lower_slack = std::min(rep.diag_lower_slack, diagF - base / (CF * fmax));
    }

    // spectral sandwich: eigenvalues of A_F^* A_F on L2(nu) = eigenvalues of
    // the similar matrix  F^{1/2} A_F^(nu-adjoint chain) ... computed via the
    // weighted Gram form G = D_F^{1/2} A_F^* D_F A_F D_F^{-1/2} ... reduced:
    // <u, A_F^*A_F u>_nu / <u,u>_nu with A_F u summed against F.
    // Use the similarity K = D^{1/2} M D^{-1/2} with M = (D^{-1} A^* D) (A) in nu-algebra:
    // action of A_F on L2(nu): (A_F u)(x) = sum_y A(x,y) u(y)  [F cancels], adjoint wrt nu:
    // (A_F^# v)(x) = F(x)^{-1} sum_y conj(A(y,x)) F(y) v(y)
    OMat D = F.asDiagonal();
    OMat Dinv = F.cwiseInverse().asDiagonal();
    OMat act = A;                          // A_F action on nu-space coords
    OMat adj = Dinv * A.adjoint() * D;     // nu-adjoint
    OMat Mnu = adj * act;
    // similar Hermitian matrix: D^{1/2} Mnu D^{-1/2}
    OMat Dh = F.cwiseSqrt().asDiagonal();
    OMat Dhi = F.cwiseSqrt().cwiseInverse().asDiagonal();
    OMat K = Dh * Mnu * Dhi;
    Eigen::SelfAdjointEigenSolver<OMat> esK(cplx(0.5, 0) * (K + K.adjoint()), Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<OMat> esA(OMat(A.adjoint() * A), Eigen::EigenvaluesOnly);
    double alpha = esA.eigenvalues().minCoeff(), beta = esA.eigenvalues().maxCoeff();
    rep.sandwich_lower_slack = esK.eigenvalues().minCoeff() - alpha / CF;
    rep.sandwich_upper_slack = CF * beta - esK.eigenvalues().maxCoeff();
    return rep;
}

BlockInstance random_block_instance(unsigned seed, int max_blocks, int max_dim) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> KB(1, max_blocks), ND(2, max_dim);
    int k = KB(rng), n = ND(rng);
    BlockInstance inst;
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int b = 0; b < k; ++b) {
        RVec g(n);
        for (int i = 0; i < n; ++i) g[i] = U(rng);
        inst.weights.push_back(g);
        inst.matrices.push_back(random_psd(unsigned(rng()), n));
    }
    // ensure sum g^2 > 0 everywhere
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (auto& g : inst.weights) s += g[i] * g[i];
        if (s == 0.0) inst.weights[0][i] = 0.5;
    }
    return inst;
}

OMat random_psd(unsigned seed, int dim, double cond_lo, double cond_hi) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> G(0.0, 1.0);
    OMat Z(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) Z(i, j) = cplx(G(rng), G(rng));
    Eigen::HouseholderQR<OMat> qr(Z);
    OMat Q = qr.householderQ();
    std::uniform_real_distribution<double> U(std::log(cond_lo), std::log(cond_hi));
    RVec lam(dim);
    for (int i = 0; i < dim; ++i) lam[i] = std::exp(U(rng));
    return Q * lam.asDiagonal() * Q.adjoint();
}

OMat random_hermitian(unsigned seed, int dim) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> G(0.0, 1.0);
    OMat Z(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) Z(i, j) = cplx(G(rng), G(rng));
    return cplx(0.5, 0) * (Z + Z.adjoint());
}

}  // namespace mag
