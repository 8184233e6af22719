#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mag/analytic.hpp"
#include "mag/field.hpp"

using namespace mag;

TEST_CASE("landau pressure: trivial and closed-form values") {
    CHECK(landau_pressure(1.0, 0.0) == 0.0);
    CHECK(landau_pressure(7.3, 0.0) == 0.0);
    // 2B >= W leaves only the nu = 0 term
    CHECK(landau_pressure(1.0, 1.0) == doctest::Approx(1.0 / (3.0 * M_PI * M_PI)).epsilon(1e-12));
    // Weyl limit
    double weyl = 2.0 / (15.0 * M_PI * M_PI);
    CHECK(std::abs(landau_pressure(1e-3, 1.0) - weyl) <= 0.01 * weyl);
}

TEST_CASE("both algebraic forms of the pressure agree to 1e-12") {
    std::mt19937_64 rng(314);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    int n = std::getenv("MAG_HEAVY") ? 10000 : 10000;
    for (int i = 0; i < n; ++i) {
        double B = 1e-2 + 10.0 * U(rng);
        double W = 10.0 * U(rng);
        double p0 = landau_pressure(B, W, 0), p1 = landau_pressure(B, W, 1);
        CHECK(std::abs(p0 - p1) <= 1e-12 * std::max(1.0, p0));
    }
}

TEST_CASE("pressure is monotone in W and continuous in B") {
    std::mt19937_64 rng(59);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 300; ++i) {
        double B = 0.05 + 5.0 * U(rng);
        double W = 5.0 * U(rng);
        double dW = 1e-3 + U(rng);
        CHECK(landau_pressure(B, W + dW) >= landau_pressure(B, W) - 1e-14);
        // continuity in B on a shrinking sequence
        double p = landau_pressure(B, W);
        for (double d : {1e-4, 1e-6, 1e-8})
            CHECK(std::abs(landau_pressure(B + d, W) - p) <= 50.0 * std::sqrt(d) + 1e-9);
    }
}

TEST_CASE("semiclassical energy: nonnegative potential gives zero") {
    FieldPtr f = builtin_field("constant", {{"bz", 2.0}});
    auto V = [](const Vec3& x) { return 0.3 + x.x * x.x; };
    SemiclassicalResult r = semiclassical_energy(*f, V, 1.0, {{-1, -1, -1}, {1, 1, 1}});
    CHECK(r.energy == 0.0);
}

TEST_CASE("semiclassical energy: Weyl reduction on the unit cube") {
    FieldPtr f = builtin_field("constant", {{"bz", 0.0}, {"by", 0.0}, {"bx", 0.0}});
    auto V = [](const Vec3&) { return -1.0; };
    Box cube{{0, 0, 0}, {1, 1, 1}};
    SemiclassicalResult r = semiclassical_energy(*f, V, 1.0, cube);
    double weyl = -2.0 / (15.0 * M_PI * M_PI);
    CHECK(std::abs(r.energy - weyl) <= 0.01 * std::abs(weyl));
}

TEST_CASE("semiclassical energy at constant B = 5 matches the midpoint nu-sum oracle") {
    FieldPtr f = builtin_field("constant", {{"bz", 5.0}});
    auto V = [](const Vec3&) { return -1.0; };
    Box cube{{0, 0, 0}, {1, 1, 1}};
    SemiclassicalResult r = semiclassical_energy(*f, V, 1.0, cube, 1e-10);
    // independent midpoint-rule oracle with the second algebraic form
    double acc = 0.0;
    int n = 6;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) acc += landau_pressure(5.0, 1.0, 1);
    acc /= double(n) * n * n;
    CHECK(std::abs(r.energy + acc) <= 1e-8 * std::abs(acc));
}

TEST_CASE("semiclassical scaling identity E(h,B,V) = h^-3 E(1, hB, V)") {
    auto V = [](const Vec3& x) {
        double t = 0.8 - norm2(x);
        return t > 0.0 ? -2.5 * t : 0.0;
    };
    Box box{{-1, -1, -1}, {1, 1, 1}};
    for (double h : {0.5, 1.0, 2.0}) {
        FieldPtr f = builtin_field("constant", {{"bz", 3.0}});
        FieldPtr fh = builtin_field("constant", {{"bz", 3.0 * h}});
        double lhs = semiclassical_energy(*f, V, h, box, 1e-5).energy;
        double rhs = semiclassical_energy(*fh, V, 1.0, box, 1e-5).energy / (h * h * h);
        CHECK(lhs == doctest::Approx(rhs).epsilon(5e-5));
    }
}

TEST_CASE("lt_rhs: nonnegative potential zeroes every term; constant field kills term3") {
    FieldPtr f = builtin_field("constant", {{"bz", 2.0}});
    ScaleProfile prof(f);
    Box box{{-1, -1, -1}, {1, 1, 1}};
    BoundBreakdown zero = lt_rhs(*f, [](const Vec3&) { return 1.0; }, prof, box);
    CHECK(zero.term1 == 0.0);
    CHECK(zero.term2 == 0.0);
    CHECK(zero.term3 == 0.0);

    auto V = [](const Vec3& x) { return norm2(x) < 0.5 ? -1.0 : 0.0; };
    BoundBreakdown bb = lt_rhs(*f, V, prof, box);
    CHECK(bb.term1 > 0.0);
    CHECK(bb.term2 == doctest::Approx(2.0 * bb.term1).epsilon(1e-6));  // |B| [V]^{3/2} with V in {0,-1}
    CHECK(bb.term3 == 0.0);
}

TEST_CASE("term2 is linear in the field amplitude for the tube-regular family") {
    auto V = [](const Vec3& x) {
        double t = 1.0 - norm2(x) / 0.16;
        return t > 0.0 ? -t * t * t : 0.0;
    };
    Box support{{-0.4, -0.4, -0.4}, {0.4, 0.4, 0.4}};
    ScaleOptions so;
    so.sup_seeds = 16;
    so.deriv_seeds = 8;
    so.sup_refine = 20;
    std::vector<double> term2;
    for (double b0 : {1e13, 2e13, 4e13}) {
        FieldPtr f = builtin_field("tube-regular", {{"b0", b0}});
        ScaleProfile prof(f, 1.0 / 1024.0, so);
        BoundBreakdown bb = lt_rhs(*f, V, prof, support, 1e-7, false, 2, 3);
        term2.push_back(bb.term2);
    }
    CHECK(term2[1] == doctest::Approx(2.0 * term2[0]).epsilon(1e-5));
    CHECK(term2[2] == doctest::Approx(4.0 * term2[0]).epsilon(1e-5));
}

TEST_CASE("zero-mode density bound: constant field gives zero, compact bump scales as delta^-3") {
    FieldPtr c = builtin_field("constant", {{"bz", 4.0}});
    ScaleProfile pc(c);
    CHECK(zero_mode_density_bound(*c, {0, 0, 0}, pc) == 0.0);

    ScaleOptions so;
    so.sup_seeds = 32;
    so.deriv_seeds = 16;
    so.sup_refine = 30;
    std::vector<double> scaled;
    for (double delta : {0.5, 1.0, 2.0}) {
        FieldPtr f = builtin_field("compact-bump", {{"delta", delta}, {"amplitude", 50.0}});
        ScaleProfile prof(f, 1.0 / 1024.0, so);
        double bound = zero_mode_density_bound(*f, {0, 0, 0}, prof);
        scaled.push_back(bound * delta * delta * delta);
    }
    CAPTURE(scaled[0]);
    CAPTURE(scaled[1]);
    CAPTURE(scaled[2]);
    double lo = std::min({scaled[0], scaled[1], scaled[2]});
    double hi = std::max({scaled[0], scaled[1], scaled[2]});
    CHECK(hi / lo <= 1.25);  // delta^-3 scaling up to the bump-onset correction
}

TEST_CASE("zero-mode density bound grows linearly in the amplitude for strong fields") {
    ScaleOptions so;
    so.sup_seeds = 16;
    so.deriv_seeds = 8;
    so.sup_refine = 20;
    Vec3 x{0.1, 0.05, -0.08};
    std::vector<double> bs{1e13, 2e13, 4e13, 8e13}, bounds;
    for (double b0 : bs) {
        FieldPtr f = builtin_field("tube-regular", {{"b0", b0}});
        ScaleProfile prof(f, 1.0 / 1024.0, so);
        bounds.push_back(zero_mode_density_bound(*f, x, prof));
    }
    // linear fit through the origin: residuals below 2%
    for (size_t i = 1; i < bs.size(); ++i) {
        double pred = bounds[0] * bs[i] / bs[0];
        CHECK(std::abs(bounds[i] - pred) <= 0.02 * pred);
    }
}
