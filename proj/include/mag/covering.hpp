#pragma once

#include <functional>
#include <vector>

#include "mag/profiles.hpp"
#include "mag/vec.hpp"

namespace mag {

using EllSampler = std::function<double(const Vec3&)>;

/// Greedy ball selection: centers x_i with radii ell_i = ell(x_i), coverage by
/// the small balls B(x_i, ell_i/10), disjoint cores B(x_i, ell_i/40), and the
/// conflict-free color classes used to split sums of local operators.
struct BallCover {
    std::vector<Vec3> centers;
    std::vector<double> radii;           // ell_i
    std::vector<uint8_t> strong_flags;   // filled by classify_cover
    std::vector<int> color;              // class index per ball
    int n_colors = 0;
    int measured_overlap = 0;            // max count of D-tilde balls covering a probe
    Box region;                          // user work region
    Box seeded_region;                   // candidate seeding box (padded)

    size_t size() const { return centers.size(); }
    // ball families of the construction
    double r_hat(size_t i) const { return radii[i] / 10.0; }    // D-hat
    double r_ball(size_t i) const { return radii[i]; }          // D
    double r_tilde(size_t i) const { return 10.0 * radii[i]; }  // D-tilde
    double r_star(size_t i) const { return 40.0 * radii[i]; }   // D-star
    double r_core(size_t i) const { return radii[i] / 40.0; }   // disjoint cores
};

struct CoverOptions {
    size_t max_candidates = 3'000'000;
    size_t max_balls = 400'000;
    bool check_tempered_input = true;
    double pad_fraction = 0.2;  // candidate seeding pad, in units of max ell
};

BallCover build_cover(const EllSampler& ell, const Box& region, double eps,
                      const CoverOptions& opts = {});

/// Greedy conflict coloring in selection order: two balls conflict when their
/// D-tilde balls intersect. Returns the number of classes.
int color_classes(BallCover& cover);

/// Measures the max number of D-tilde balls containing any of the probes and
/// stores it in the cover.
int measure_overlap(BallCover& cover, const std::vector<Vec3>& probes);

/// Coverage check: every probe must lie in some D-hat ball. Returns indices of
/// uncovered probes (empty on success).
std::vector<size_t> uncovered_probes(const BallCover& cover, const std::vector<Vec3>& probes);

/// Pairwise disjointness of the cores B(x_i, ell_i/40).
bool cores_disjoint(const BallCover& cover, double slack = 1e-12);

/// Strong/weak classification of the balls D_i against a field strength sampler:
/// strong iff |B(x_i)| >= eps^-2 ell_i^-2.
void classify_cover(BallCover& cover, const std::function<double(const Vec3&)>& field_strength,
                    double eps);

/// Cutoff family of the localization scheme. theta_i form a smooth partition of
/// unity squared subordinate to the balls D_i; chi-hat/chi/chi-tilde/phi are the
/// nested plateaus with support radii 4, 5, 7 and [2,5] times ell_i.
class CutoffFamily {
public:
    CutoffFamily(const BallCover& cover, int smoothness_order = 4);

    double theta(size_t i, const Vec3& x) const;
    double chi_hat(size_t i, const Vec3& x) const;   // 1 on 3l, supp 4l
    double chi(size_t i, const Vec3& x) const;       // 1 on 4l, supp 5l
    double chi_tilde(size_t i, const Vec3& x) const; // 1 on 6l, supp 7l
    double phi(size_t i, const Vec3& x) const;       // 1 on [3l,4l], supp [2l,5l]

    // raw bump and the normalization sum used by theta
    double bump(size_t i, const Vec3& x) const;
    double bump_sq_sum(const Vec3& x) const;

    Vec3 grad_chi_tilde(size_t i, const Vec3& x) const;  // analytic radial slope

    double theta_sq_sum(const Vec3& x) const;  // must be 1 on the work region

    const BallCover& cover() const { return *cover_; }

private:
    const BallCover* cover_;
    // neighbor index: coarse grid cells -> ball indices whose D_i meets the cell
    void build_index();
    std::vector<size_t> near(const Vec3& x) const;
    double cell_ = 0.0;
    Vec3 grid_lo_;
    int nx_ = 0, ny_ = 0, nz_ = 0;
    std::vector<std::vector<uint32_t>> cells_;
};

}  // namespace mag
