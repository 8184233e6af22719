#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mag/vec.hpp"

namespace mag {

using RVec = Eigen::VectorXd;
using OMat = Eigen::MatrixXcd;

/// One instance of the weighted block inequality: k nonnegative weight vectors
/// g_i (acting as diagonal multiplications) and k Hermitian positive definite
/// matrices A_i of the same dimension.
struct BlockInstance {
    std::vector<RVec> weights;
    std::vector<OMat> matrices;
    int dim() const { return weights.empty() ? 0 : int(weights[0].size()); }
    int blocks() const { return int(weights.size()); }
};

/// min eigenvalue of  sum_i g_i A_i^{-1} g_i  -  (sum g_i^2) (sum g_i A_i g_i)^{-1} (sum g_i^2).
/// Nonnegative up to round-off for positive definite A_i.
double pullup_gap(const BlockInstance& inst);

/// Same difference with Phi(t) = t^{-2} in place of the inverse; the fixed
/// 2 x 2 two-block instance has a strictly negative eigenvalue.
struct PullinReport {
    double min_eig_phi_sq = 0.0;   // Phi(t) = t^-2 : strictly negative
    double min_eig_phi_inv = 0.0;  // Phi(t) = t^-1 : nonnegative (pull-up case)
    double normalized_min = 0.0;   // min_eig_phi_sq / ||difference matrix||
};
PullinReport pullin_counterexample();

/// General Phi-difference gap for scalar weights g_i (matrices arbitrary):
/// min eig of sum g_i Phi(A_i) g_i - (sum g_i^2) Phi(sum g_i A_i g_i) (sum g_i^2).
double phi_difference_min_eig(const std::vector<double>& g, const std::vector<OMat>& A, int phi_power);

/// Gaps of the operator bounds 4 (X+M)^{-2} - (X+Y+2M)^{-2} and
/// 4 (X^2+M^2)^{-1} - 4 (X+M)^{-2} for X >= 0, ||Y|| <= M, X + Y >= 0.
struct XYGaps {
    double gap1 = 0.0;
    double gap2 = 0.0;
};
XYGaps lemma_xy_gap(const OMat& X, const OMat& Y, double M);

/// Kernel reweighting on a finite weighted measure space: A_F(x,y) = A(x,y)/F(y),
/// diagonal comparison of A^*A vs A_F^*A_F and the spectral sandwich
/// C_F^{-1} alpha <= spec(A_F^* A_F) <= C_F beta.
struct ReweightReport {
    double max_kernel_identity_error = 0.0;  // A(x,y) = A_F(x,y) F(y)
    double diag_lower_slack = 0.0;           // min over x of lhs-chain slack
    double diag_upper_slack = 0.0;
    double sandwich_lower_slack = 0.0;
    double sandwich_upper_slack = 0.0;
    bool pass(double tol = 1e-10) const {
        return max_kernel_identity_error < tol && diag_lower_slack > -tol && diag_upper_slack > -tol &&
               sandwich_lower_slack > -tol && sandwich_upper_slack > -tol;
    }
};
ReweightReport reweight_kernels(const OMat& A, const RVec& F);

/// Deterministic random instances for the property suites.
BlockInstance random_block_instance(unsigned seed, int max_blocks = 5, int max_dim = 6);
OMat random_psd(unsigned seed, int dim, double cond_lo = 1e-2, double cond_hi = 1e2);
OMat random_hermitian(unsigned seed, int dim);

}  // namespace mag
