#include "mag/covering.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mag/deriv.hpp"
#include "mag/errors.hpp"
#include "mag/scales.hpp"

namespace mag {

namespace {

struct Candidate {
    Vec3 p;
    double ell;
};

// selection order: biggest ell first, lexicographic tie-break on the center
bool candidate_before(const Candidate& a, const Candidate& b) {
    if (a.ell != b.ell) return a.ell > b.ell;
    if (a.p.x != b.p.x) return a.p.x < b.p.x;
    if (a.p.y != b.p.y) return a.p.y < b.p.y;
    return a.p.z < b.p.z;
}

// uniform hash grid over chosen centers for core-containment queries
class CoreIndex {
public:
    CoreIndex(const Box& box, double cell) : lo_(box.lo), cell_(cell) {
        Vec3 s = box.side();
        nx_ = std::max(1, int(s.x / cell) + 1);
        ny_ = std::max(1, int(s.y / cell) + 1);
        nz_ = std::max(1, int(s.z / cell) + 1);
        cells_.resize(size_t(nx_) * ny_ * nz_);
    }
    void insert(const Vec3& p, double radius, uint32_t id) {
        int i0, j0, k0, i1, j1, k1;
        cell_range(p, radius, i0, j0, k0, i1, j1, k1);
        for (int i = i0; i <= i1; ++i)
            for (int j = j0; j <= j1; ++j)
                for (int k = k0; k <= k1; ++k) cells_[idx(i, j, k)].push_back(id);
    }
    template <class F>
    bool any_near(const Vec3& p, F&& pred) const {
        int i, j, k;
        locate(p, i, j, k);
        for (uint32_t id : cells_[idx(i, j, k)])
            if (pred(id)) return true;
        return false;
    }

private:
    void locate(const Vec3& p, int& i, int& j, int& k) const {
        i = std::clamp(int((p.x - lo_.x) / cell_), 0, nx_ - 1);
        j = std::clamp(int((p.y - lo_.y) / cell_), 0, ny_ - 1);
        k = std::clamp(int((p.z - lo_.z) / cell_), 0, nz_ - 1);
    }
    void cell_range(const Vec3& p, double r, int& i0, int& j0, int& k0, int& i1, int& j1, int& k1) const {
        locate({p.x - r, p.y - r, p.z - r}, i0, j0, k0);
        locate({p.x + r, p.y + r, p.z + r}, i1, j1, k1);
    }
    size_t idx(int i, int j, int k) const { return (size_t(i) * ny_ + j) * nz_ + k; }
    Vec3 lo_;
    double cell_;
    int nx_, ny_, nz_;
    std::vector<std::vector<uint32_t>> cells_;
};

}  // namespace

BallCover build_cover(const EllSampler& ell, const Box& region, double eps, const CoverOptions& opts) {
    if (region.side().x <= 0 || region.side().y <= 0 || region.side().z <= 0)
        throw config_error("build_cover: empty region");

    // probe ell over the region to size the candidate grid
    double ell_min = kScaleInfinity, ell_max = 0.0;
    for (int i = 0; i < 64; ++i) {
        Vec3 u = halton3(i);
        Vec3 p = region.lo + Vec3{u.x * region.side().x, u.y * region.side().y, u.z * region.side().z};
        double l = ell(p);
        if (!(l > 0.0) || std::isinf(l))
            throw config_error("build_cover: ell sampler must be finite positive on the region");
        ell_min = std::min(ell_min, l);
        ell_max = std::max(ell_max, l);
    }

    if (opts.check_tempered_input) {
        auto pairs = tempered_test_pairs(ell, eps, region, 16, 8, 2024);
        TemperReport rep = check_tempered(ell, eps, pairs);
        if (!rep.ok) throw numerical_error("build_cover: ell sampler is not eps-tempered on the region");
    }

    // hierarchical seeding: refine the pitch until B(x, ell(x)/20) balls centered
    // on the lattice certainly cover (pitch <= ell_min/20 / sqrt(3) covers cubes).
    // Candidates stay inside the user region; the padded work box only hosts
    // the cutoff supports.
    Box seeded = region;
    double pitch = ell_min / 20.0 / std::sqrt(3.0) * 2.0;
    size_t ncand;
    auto count_at = [&](double h) {
        Vec3 s = seeded.side();
        return (size_t(s.x / h) + 2) * (size_t(s.y / h) + 2) * (size_t(s.z / h) + 2);
    };
    while ((ncand = count_at(pitch)) > opts.max_candidates) pitch *= 1.26;
    for (int pass = 0;; ++pass) {
        // shrink until the covering condition holds for the sampled minimum
        if (pitch * std::sqrt(3.0) / 2.0 <= ell_min / 20.0) break;
        pitch *= 0.5;
        if (count_at(pitch) > opts.max_candidates)
            throw budget_error("build_cover: candidate grid exceeds the candidate budget");
    }

    std::vector<Candidate> cand;
    cand.reserve(count_at(pitch));
    Vec3 s = seeded.side();
    int mx = int(s.x / pitch) + 1, my = int(s.y / pitch) + 1, mz = int(s.z / pitch) + 1;
    for (int i = 0; i <= mx; ++i)
        for (int j = 0; j <= my; ++j)
            for (int k = 0; k <= mz; ++k) {
                Vec3 p = seeded.lo + Vec3{i * pitch, j * pitch, k * pitch};
                p.x = std::min(p.x, seeded.hi.x);
                p.y = std::min(p.y, seeded.hi.y);
                p.z = std::min(p.z, seeded.hi.z);
                cand.push_back({p, ell(p)});
            }
    std::sort(cand.begin(), cand.end(), candidate_before);

    BallCover cover;
    cover.region = region;
    cover.seeded_region = seeded;
    CoreIndex chosen(seeded.padded(ell_max), std::max(ell_max / 10.0, pitch));

    for (const Candidate& c : cand) {
        bool covered = chosen.any_near(c.p, [&](uint32_t id) {
            return norm(c.p - cover.centers[id]) <= cover.radii[id] / 20.0;
        });
        if (covered) continue;
        uint32_t id = uint32_t(cover.centers.size());
        cover.centers.push_back(c.p);
        cover.radii.push_back(c.ell);
        chosen.insert(c.p, c.ell / 20.0 + pitch, id);
        if (cover.size() > opts.max_balls) throw budget_error("build_cover: ball count exceeds budget");
    }
    cover.strong_flags.assign(cover.size(), 0);
    cover.color.assign(cover.size(), -1);
    return cover;
}

int color_classes(BallCover& cover) {
    const size_t n = cover.size();
    cover.color.assign(n, -1);
    int n_colors = 0;
    // greedy in selection order; conflict = intersecting D-tilde balls
    for (size_t i = 0; i < n; ++i) {
        std::vector<char> used(n_colors + 1, 0);
        for (size_t j = 0; j < i; ++j) {
            if (cover.color[j] < 0) continue;
            double d = norm(cover.centers[i] - cover.centers[j]);
            if (d <= cover.r_tilde(i) + cover.r_tilde(j)) used[cover.color[j]] = 1;
        }
        int c = 0;
        while (c < n_colors && used[c]) ++c;
        cover.color[i] = c;
        n_colors = std::max(n_colors, c + 1);
    }
    cover.n_colors = n_colors;
    return n_colors;
}

int measure_overlap(BallCover& cover, const std::vector<Vec3>& probes) {
    int worst = 0;
    for (const Vec3& p : probes) {
        int c = 0;
        for (size_t i = 0; i < cover.size(); ++i)
            if (norm(p - cover.centers[i]) <= cover.r_tilde(i)) ++c;
        worst = std::max(worst, c);
    }
    cover.measured_overlap = worst;
    return worst;
}

std::vector<size_t> uncovered_probes(const BallCover& cover, const std::vector<Vec3>& probes) {
    std::vector<size_t> un;
    for (size_t k = 0; k < probes.size(); ++k) {
        bool cov = false;
        for (size_t i = 0; i < cover.size() && !cov; ++i)
            cov = norm(probes[k] - cover.centers[i]) <= cover.r_hat(i);
        if (!cov) un.push_back(k);
    }
    return un;
}

bool cores_disjoint(const BallCover& cover, double slack) {
    for (size_t i = 0; i < cover.size(); ++i)
        for (size_t j = i + 1; j < cover.size(); ++j) {
            double d = norm(cover.centers[i] - cover.centers[j]);
            if (d < cover.r_core(i) + cover.r_core(j) - slack * (cover.radii[i] + cover.radii[j]))
                return false;
        }
    return true;
}

void classify_cover(BallCover& cover, const std::function<double(const Vec3&)>& field_strength,
                    double eps) {
    cover.strong_flags.assign(cover.size(), 0);
    for (size_t i = 0; i < cover.size(); ++i) {
        double thr = 1.0 / (eps * eps * cover.radii[i] * cover.radii[i]);
        cover.strong_flags[i] = field_strength(cover.centers[i]) >= thr ? 1 : 0;
    }
}

// ---------------------------------------------------------------------------
// cutoff family
// ---------------------------------------------------------------------------

CutoffFamily::CutoffFamily(const BallCover& cover, int smoothness_order) : cover_(&cover) {
    (void)smoothness_order;  // profiles are C^4 (or smoother) by construction
    build_index();
}

void CutoffFamily::build_index() {
    const BallCover& c = *cover_;
    if (c.size() == 0) throw config_error("CutoffFamily: empty cover");
    double rmax = *std::max_element(c.radii.begin(), c.radii.end());
    Box b = c.seeded_region.padded(rmax);
    cell_ = rmax;
    grid_lo_ = b.lo;
    Vec3 s = b.side();
    nx_ = int(s.x / cell_) + 1;
    ny_ = int(s.y / cell_) + 1;
    nz_ = int(s.z / cell_) + 1;
    cells_.assign(size_t(nx_) * ny_ * nz_, {});
    for (size_t i = 0; i < c.size(); ++i) {
        double r = c.radii[i];
        Vec3 p = c.centers[i];
        int i0 = std::clamp(int((p.x - r - grid_lo_.x) / cell_), 0, nx_ - 1);
        int j0 = std::clamp(int((p.y - r - grid_lo_.y) / cell_), 0, ny_ - 1);
        int k0 = std::clamp(int((p.z - r - grid_lo_.z) / cell_), 0, nz_ - 1);
        int i1 = std::clamp(int((p.x + r - grid_lo_.x) / cell_), 0, nx_ - 1);
        int j1 = std::clamp(int((p.y + r - grid_lo_.y) / cell_), 0, ny_ - 1);
        int k1 = std::clamp(int((p.z + r - grid_lo_.z) / cell_), 0, nz_ - 1);
        for (int a = i0; a <= i1; ++a)
            for (int bb = j0; bb <= j1; ++bb)
                for (int cc = k0; cc <= k1; ++cc)
                    cells_[(size_t(a) * ny_ + bb) * nz_ + cc].push_back(uint32_t(i));
    }
}

std::vector<size_t> CutoffFamily::near(const Vec3& x) const {
    int i = std::clamp(int((x.x - grid_lo_.x) / cell_), 0, nx_ - 1);
    int j = std::clamp(int((x.y - grid_lo_.y) / cell_), 0, ny_ - 1);
    int k = std::clamp(int((x.z - grid_lo_.z) / cell_), 0, nz_ - 1);
    const auto& v = cells_[(size_t(i) * ny_ + j) * nz_ + k];
    return std::vector<size_t>(v.begin(), v.end());
}

double CutoffFamily::bump(size_t i, const Vec3& x) const {
    const BallCover& c = *cover_;
    double r = norm(x - c.centers[i]);
    // C^infinity plateau: 1 on D-hat, 0 outside D_i
    RadialCutoff prof(c.r_hat(i), c.radii[i], 2);
    return prof.value(r);
}

double CutoffFamily::bump_sq_sum(const Vec3& x) const {
    double s = 0.0;
    for (size_t i : near(x)) {
        double u = bump(i, x);
        s += u * u;
    }
    return s;
}

double CutoffFamily::theta(size_t i, const Vec3& x) const {
    double u = bump(i, x);
    if (u == 0.0) return 0.0;
    double s = bump_sq_sum(x);
    if (s <= 0.0) throw numerical_error("CutoffFamily: normalization underflow (coverage hole)");
    return u / std::sqrt(s);
}

double CutoffFamily::theta_sq_sum(const Vec3& x) const {
    double s = bump_sq_sum(x);
    if (s <= 0.0) throw numerical_error("CutoffFamily: normalization underflow (coverage hole)");
    double acc = 0.0;
    for (size_t i : near(x)) {
        double u = bump(i, x);
        acc += u * u / s;
    }
    return acc;
}

double CutoffFamily::chi_hat(size_t i, const Vec3& x) const {
    const BallCover& c = *cover_;
    return RadialCutoff(3.0 * c.radii[i], 4.0 * c.radii[i], 0).value(norm(x - c.centers[i]));
}

double CutoffFamily::chi(size_t i, const Vec3& x) const {
    const BallCover& c = *cover_;
    return RadialCutoff(4.0 * c.radii[i], 5.0 * c.radii[i], 0).value(norm(x - c.centers[i]));
}

double CutoffFamily::chi_tilde(size_t i, const Vec3& x) const {
    const BallCover& c = *cover_;
    return RadialCutoff(6.0 * c.radii[i], 7.0 * c.radii[i], 1).value(norm(x - c.centers[i]));
}

Vec3 CutoffFamily::grad_chi_tilde(size_t i, const Vec3& x) const {
    const BallCover& c = *cover_;
    Vec3 d = x - c.centers[i];
    double r = norm(d);
    if (r == 0.0) return {};
    double sl = RadialCutoff(6.0 * c.radii[i], 7.0 * c.radii[i], 1).slope(r);
    return (sl / r) * d;
}

double CutoffFamily::phi(size_t i, const Vec3& x) const {
    const BallCover& c = *cover_;
    double l = c.radii[i];
    double r = norm(x - c.centers[i]);
    if (r <= 2.0 * l || r >= 5.0 * l) return 0.0;
    if (r < 3.0 * l) return smoothstep5((r - 2.0 * l) / l);
    if (r <= 4.0 * l) return 1.0;
    return smoothstep5((5.0 * l - r) / l);
}

}  // namespace mag
