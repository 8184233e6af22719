#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <optional>
#include <vector>

#include "mag/analytic.hpp"
#include "mag/field.hpp"
#include "mag/scales.hpp"
#include "mag/vec.hpp"

namespace mag {

using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using SpMat = Eigen::SparseMatrix<cplx>;

struct GridSpec {
    Box box;
    int n[3] = {0, 0, 0};   // interior points per axis
    double h[3] = {0, 0, 0};
    size_t sites() const { return size_t(n[0]) * n[1] * n[2]; }
    size_t dim() const { return 2 * sites(); }
    size_t site_index(int i, int j, int k) const { return (size_t(i) * n[1] + j) * n[2] + k; }
    Vec3 site(int i, int j, int k) const {
        return {box.lo.x + h[0] * (i + 1), box.lo.y + h[1] * (j + 1), box.lo.z + h[2] * (k + 1)};
    }
    // 1-D Dirichlet Laplacian ground energy along an axis (exact discrete value)
    double axis_ground(int axis) const {
        double s = std::sin(M_PI / (2.0 * (n[axis] + 1)));
        return 4.0 * s * s / (h[axis] * h[axis]);
    }
};

struct AssembleOptions {
    int edge_gl_order = 8;       // per-edge Gauss-Legendre order for link phases
    double feature_scale = 0.0;  // potential feature scale for the resolution check (0: skip)
    bool check_resolution = true;
    size_t max_dim = 4'000'000;
};

/// Discretized Pauli operator (-i hbar grad + A)^2 + V + hbar sigma.B on a
/// Dirichlet box with Peierls link phases. Interleaved spinor layout
/// [site*2 + component].
class DiscretePauli {
public:
    const GridSpec& grid() const { return grid_; }
    double hbar() const { return hbar_; }
    size_t dim() const { return grid_.dim(); }

    void apply(const cplx* x, cplx* y) const;
    void apply_block(const CMat& X, CMat& Y) const;
    SpMat to_sparse() const;
    CMat to_dense() const;

    std::vector<double> real_diagonal() const;  // for Jacobi preconditioning
    bool spin_diagonal() const { return spin_diag_; }

    // first-order central-difference Dirac stencil applied twice (consistency probe)
    void apply_dirac_squared(const cplx* x, cplx* y) const;

    friend DiscretePauli assemble(const MagneticFieldModel& field,
                                  const std::function<double(const Vec3&)>& V, const Box& box,
                                  double h_grid, const VectorPotential& gauge, double hbar,
                                  const AssembleOptions& opts);

private:
    GridSpec grid_;
    double hbar_ = 1.0;
    std::vector<double> diag_up_, diag_dn_;
    std::vector<cplx> diag_od_;              // (up,dn) entry: hbar (Bx - i By)
    std::vector<cplx> link_[3];              // forward hop factor U = exp(+i theta / hbar)
    bool spin_diag_ = true;
};

DiscretePauli assemble(const MagneticFieldModel& field, const std::function<double(const Vec3&)>& V,
                       const Box& box, double h_grid, const VectorPotential& gauge, double hbar = 1.0,
                       const AssembleOptions& opts = {});

// ---------------------------------------------------------------------------
// eigensolvers
// ---------------------------------------------------------------------------

struct LobpcgOptions {
    double tol = 1e-7;        // residual tolerance relative to the operator scale
    int max_iters = 1500;
    unsigned seed = 2718;
    int block_extra = 4;      // extra vectors beyond the requested count
    int spin_sector = 0;      // +1 / -1: restrict start vectors to a spin sector
};

struct EigenResult {
    std::vector<double> values;
    CMat vectors;             // one column per value (may be empty)
    int iterations = 0;
    bool converged = true;
    double residual_scale = 0.0;
};

EigenResult lobpcg_lowest(const DiscretePauli& op, int k, const LobpcgOptions& opts = {},
                          bool want_vectors = true);

/// Dense Hermitian eigenvalues (ascending); LAPACK zheevd when available.
std::vector<double> dense_eigenvalues(const CMat& H);
void dense_eigensystem(CMat& H_inout, std::vector<double>& values);  // vectors in columns

/// Inertia (negative count) of the Hermitian matrix H - shift via sparse LDLT.
/// Throws numerical_error on factorization breakdown after retries.
int ldlt_negative_count(const SpMat& H, double shift);

// ---------------------------------------------------------------------------
// operations
// ---------------------------------------------------------------------------

struct SpectralReport {
    std::vector<double> negative_eigenvalues;  // ascending
    double trace_sum = 0.0;                    // |Tr H_-|
    int certified_count = -1;                  // inertia count (-1: not certified)
    int iterations = 0;
    bool used_dense = false;
    bool converged = true;
};

struct SumNegativeOptions {
    double tol = -1e-10;        // eigenvalues below this count as negative
    size_t dense_limit = 4000;  // dense fallback threshold per the design budget
    LobpcgOptions lobpcg;
    bool certify = true;
};

SpectralReport sum_negative_eigenvalues(const DiscretePauli& op, const SumNegativeOptions& opts = {});

struct BSReport {
    double trace_sum = 0.0;      // |Tr H_-| from the eigensolve route
    double bs_integral = 0.0;    // int_0^inf n(W^{1/2} R_E W^{1/2}, 1) dE
    double rel_diff = 0.0;
    int counting_evals = 0;
    int n_negative = 0;
};

/// Birman-Schwinger consistency: kinetic is the V = 0 operator; V <= 0 sampled
/// per site (sign convention of the reduction: W = -V >= 0).
BSReport birman_schwinger_check(const DiscretePauli& kinetic,
                                const std::function<double(const Vec3&)>& V,
                                double count_threshold = 1.0);

/// Eigenvalue count n(K(E), threshold) of the compressed kernel at energy E.
int birman_schwinger_count(const DiscretePauli& kinetic, const std::vector<double>& W_sites,
                           double E, double threshold = 1.0);

struct ZeroModeResult {
    std::vector<double> values;
    CMat vectors;
    std::vector<int> accepted;  // indices classified as numerical zero modes
    double tol_abs = 0.0;
    // pointwise density of the accepted modes
    double density_at(const GridSpec& g, int i, int j, int k) const;
};

ZeroModeResult zero_modes(const DiscretePauli& op, int k, double tol_factor, double b_ref,
                          const LobpcgOptions& opts = {});

struct LtSweepEntry {
    double b = 0.0;
    double trace_sum = 0.0;
    BoundBreakdown rhs;
    double ratio = 0.0;
    int n_negative = 0;
    bool certified = false;
};

LtSweepEntry verify_lt_at(const MagneticFieldModel& field, const VectorPotential& gauge,
                          const std::function<double(const Vec3&)>& V, const Box& box, double h_grid,
                          const ScaleProfile* scales, const Box& v_support,
                          const SumNegativeOptions& opts = {});

}  // namespace mag
