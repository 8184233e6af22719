#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mag/deriv.hpp"
#include "mag/field.hpp"
#include "mag/local_gauge.hpp"
#include "mag/scales.hpp"

using namespace mag;

namespace {

constexpr double kEps = 1.0 / 1024.0;

BallCover one_ball(const Vec3& center, double ell, bool strong) {
    BallCover c;
    c.centers = {center};
    c.radii = {ell};
    c.strong_flags = {uint8_t(strong ? 1 : 0)};
    c.region = {center - Vec3{ell, ell, ell}, center + Vec3{ell, ell, ell}};
    c.seeded_region = c.region;
    return c;
}

double tube_ell() {
    FieldPtr f = builtin_field("tube-regular");
    ScaleOptions o;
    o.sup_seeds = 32;
    o.deriv_seeds = 16;
    o.sup_refine = 30;
    return ScaleProfile(f, kEps, o).ell({0, 0, 0});
}

}  // namespace

TEST_CASE("strong local field on a constant field: identity everywhere, A# = 0") {
    double ell = 0.25;
    double b = 4.0 / (kEps * kEps * ell * ell);
    FieldPtr f = builtin_field("constant", {{"bz", b}});
    BallCover c = one_ball({0, 0, 0}, ell, true);
    LocalField lf = strong_local_field(f, c, 0, kEps);
    for (int i = 0; i < 40; ++i) {
        Vec3 p = halton3(i) * 6.0 * ell - Vec3{3, 3, 3} * ell;
        CHECK(norm(lf(p) - (*f)(p)) <= 1e-12 * b);
    }
    // gauge reduces to the linear constant gauge (A# = 0 contributes nothing)
    Vec3 p{0.1, -0.2, 0.05};
    Vec3 lin = 0.5 * cross((*f)(p), p);
    CHECK(norm(lf.gauge(p) - lin) <= 1e-9 * norm(lin));
}

TEST_CASE("strong local field on tube-regular: identity region, freeze region, global bound") {
    FieldPtr f = builtin_field("tube-regular");
    double ell = tube_ell();
    Vec3 x0{0, 0, 0};
    BallCover c = one_ball(x0, ell, true);
    LocalField lf = strong_local_field(f, c, 0, kEps);
    Vec3 b0 = (*f)(x0);
    double bmag = norm(b0);

    // identity on B(x_i, 6 ell)
    double worst_id = 0.0;
    for (int i = 0; i < 300; ++i) {
        Vec3 p = x0 + ball_lowdisc_points(300)[i] * (6.0 * ell);
        worst_id = std::max(worst_id, norm(lf(p) - (*f)(p)));
    }
    CHECK(worst_id <= 1e-8 * bmag);

    // frozen to B(x_i) outside 7 ell
    for (int i = 0; i < 100; ++i) {
        Vec3 dir = normalized(ball_lowdisc_points(100)[i] + Vec3{1e-3, 0, 0});
        Vec3 p = x0 + dir * (7.0 * ell * (1.01 + i * 0.05));
        CHECK(norm(lf(p) - b0) == 0.0);
    }

    // global bound |B_i - B(x_i)| <= 100 eps |B(x_i)| (Lemma 5.6 shape)
    int nsamp = std::getenv("MAG_HEAVY") ? 10000 : 2000;
    double worst = 0.0;
    for (int i = 0; i < nsamp; ++i) {
        Vec3 p = x0 + ball_lowdisc_points(nsamp)[i] * (9.0 * ell);
        worst = std::max(worst, norm(lf(p) - b0));
    }
    CAPTURE(worst / (kEps * bmag));
    CHECK(worst <= 100.0 * kEps * bmag);

    // gauge generates B_i (curl oracle at a few points, in and out of the shell)
    for (double r : {2.0, 6.5, 7.5}) {
        Vec3 p = x0 + Vec3{0.57, 0.57, 0.59} * (r * ell / std::sqrt(3.0));
        Vec3 curl = curl_fd([&](const Vec3& q) { return lf.gauge(q); }, p, 1e-4 * ell);
        CHECK(norm(curl - lf(p)) <= 1e-5 * bmag);
    }
}

TEST_CASE("strong local field: first-order extended regularity with K = 100") {
    FieldPtr f = builtin_field("tube-regular");
    double ell = tube_ell();
    BallCover c = one_ball({0, 0, 0}, ell, true);
    LocalField lf = strong_local_field(f, c, 0, kEps);
    RegularityOptions opts;
    opts.seeds = 12;
    opts.refine_iters = 16;
    opts.grading_ell = ell;  // the construction grades derivatives by ell_i
    RegularityReport rep = assess_regularity(lf, {0, 0, 0}, 10.0 * ell, 100.0, kEps, opts);
    CHECK(rep.is_strong);
    // gamma = 1 bounds hold with the stated constant; the eps^gamma grading of
    // the higher orders is not attainable for a field frozen over an ell-wide
    // shell (the cutoff supplies ell^-gamma per order, not (eps/ell)^gamma),
    // so orders >= 2 are reported, not asserted.
    CHECK(rep.pass_absB[0]);
    CHECK(rep.pass_dir[0]);
    CAPTURE(rep.sup_dnorm_absB[1]);
    CAPTURE(rep.sup_dnorm_dir[1]);
}

TEST_CASE("weak local field vanishes when the field vanishes on the big ball") {
    FieldPtr f = builtin_field("compact-bump", {{"delta", 1.0}, {"amplitude", 2.0}});
    double ell = 0.03;  // 10 ell well inside the zero core
    BallCover c = one_ball({0, 0, 0}, ell, false);
    GaugePtr A = builtin_gauge(f);
    LocalField lf = weak_local_field(f, A, c, 0);
    for (int i = 0; i < 60; ++i) {
        Vec3 p = ball_lowdisc_points(60)[i] * (12.0 * ell);
        CHECK(norm(lf(p)) <= 1e-14);
    }
}

TEST_CASE("weak local field of a bump: support and sup bound") {
    FieldPtr f = builtin_field("compact-bump", {{"delta", 0.05}, {"amplitude", 3.0}});
    double eps = kEps;
    ScaleOptions so;
    so.sup_seeds = 32;
    so.deriv_seeds = 16;
    ScaleProfile prof(f, eps, so);
    Vec3 x0{0.05, 0.02, 0.0};
    double ell = prof.ell(x0);
    REQUIRE(std::isfinite(ell));
    REQUIRE(norm((*f)(x0)) < 1.0 / (eps * eps * ell * ell));  // weak index
    BallCover c = one_ball(x0, ell, false);
    LocalField lf = weak_local_field(f, builtin_gauge(f), c, 0);

    // support inside B(x_i, 7 ell) (a fortiori inside D-tilde)
    for (int i = 0; i < 80; ++i) {
        Vec3 dir = normalized(ball_lowdisc_points(80)[i] + Vec3{0, 1e-3, 0});
        Vec3 p = x0 + dir * (7.0 * ell * 1.02 + 0.01 * i * ell);
        CHECK(norm(lf(p)) == 0.0);
    }
    // measured sup against the weak-ball budget eps^-2 ell^-2
    double sup = 0.0;
    for (int i = 0; i < 2000; ++i) {
        Vec3 p = x0 + ball_lowdisc_points(2000)[i] * (10.0 * ell);
        sup = std::max(sup, norm(lf(p)));
    }
    double budget = 1.0 / (eps * eps * ell * ell);
    CAPTURE(sup / budget);
    CHECK(sup <= 10.0 * budget);
    // identity region: A_i = A and B_i = B on B(x_i, 6 ell)
    for (int i = 0; i < 40; ++i) {
        Vec3 p = x0 + ball_lowdisc_points(40)[i] * (5.9 * ell);
        CHECK(norm(lf(p) - (*f)(p)) <= 1e-12);
        CHECK(norm(lf.gauge(p) - (*builtin_gauge(f))(p)) <= 1e-12);
    }
}

TEST_CASE("transverse gauge: constant field reproduces the linear gauge exactly") {
    double b = 3.0;
    TransverseGauge tg([b](const Vec3&) { return Vec3{0, 0, b}; });
    for (int i = 0; i < 30; ++i) {
        Vec3 xi = halton3(i) * 4.0 - Vec3{2, 2, 2};
        Vec3 a = tg.alpha(xi);
        CHECK(a.x == doctest::Approx(-0.5 * b * xi.y).epsilon(1e-13));
        CHECK(a.y == doctest::Approx(0.5 * b * xi.x).epsilon(1e-13));
        CHECK(a.z == doctest::Approx(0.0));
        CHECK(tg.exactness_residual(xi, 1e-5) < 1e-9);
    }
    TransverseGauge zero([](const Vec3&) { return Vec3{}; });
    CHECK(norm(zero.alpha({1.0, -2.0, 0.5})) == 0.0);
}

TEST_CASE("transverse gauge is exact for a curved closed form and obeys the moment bound") {
    // closed beta with full xi3 dependence: dual vector = curl of a potential
    auto beta = [](const Vec3& p) {
        auto P = [](const Vec3& q) {
            return Vec3{q.x * q.y + q.z * q.y * q.y, q.x * q.x * q.z, q.y * q.y * q.y + q.z * q.x * q.x};
        };
        return curl_fd(P, p, 1e-5);
    };
    TransverseGauge tg(beta);
    double worst = 0.0;
    for (int i = 0; i < 40; ++i) {
        Vec3 xi = halton3(i) * 2.0 - Vec3{1, 1, 1};
        worst = std::max(worst, tg.exactness_residual(xi, 1e-4));
    }
    CHECK(worst < 1e-6);

    // Lemma-8.2-shape bound: ||alpha(xi)|| <= c [b00 + b11], measured c <= 10
    Box sup_box{{-1.5, -1.5, -1.5}, {1.5, 1.5, 1.5}};
    double worst_ratio = 0.0;
    for (int i = 0; i < 25; ++i) {
        Vec3 xi = halton3(i) * 2.0 - Vec3{1, 1, 1};
        double m = tg.moment(0, 0, xi, sup_box) + tg.moment(1, 1, xi, sup_box);
        if (m <= 0.0) continue;
        worst_ratio = std::max(worst_ratio, norm(tg.alpha(xi)) / m);
    }
    CAPTURE(worst_ratio);
    CHECK(worst_ratio <= 10.0);
}
