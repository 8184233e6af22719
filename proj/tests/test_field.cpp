#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mag/deriv.hpp"
#include "mag/errors.hpp"
#include "mag/field.hpp"

using namespace mag;

namespace {

double max_div_ratio(const MagneticFieldModel& f, const Box& box, int n, double h_fd) {
    double max_div = 0.0, max_b = 0.0;
    Vec3 s = box.side();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                Vec3 p = box.lo + Vec3{s.x * (i + 0.5) / n, s.y * (j + 0.5) / n, s.z * (k + 0.5) / n};
                max_div = std::max(max_div, std::abs(divergence_fd([&](const Vec3& q) { return f(q); }, p, h_fd)));
                max_b = std::max(max_b, norm(f(p)));
            }
    return max_div / (1.0 + max_b);
}

double curl_error(const MagneticFieldModel& f, const VectorPotential& A, const Box& box, int n,
                  double h_fd) {
    double worst = 0.0;
    Vec3 s = box.side();
    for (int i = 0; i < n; ++i) {
        Vec3 u = halton3(i);
        Vec3 p = box.lo + Vec3{s.x * u.x, s.y * u.y, s.z * u.z};
        Vec3 c = curl_fd([&](const Vec3& q) { return A(q); }, p, h_fd);
        worst = std::max(worst, norm(c - f(p)));
    }
    return worst;
}

}  // namespace

TEST_CASE("builtin fields are numerically divergence-free on a 17^3 grid") {
    struct Probe {
        const char* name;
        std::map<std::string, double> params;
        Box box;
    };
    std::vector<Probe> probes = {
        {"constant", {{"bz", 1.0}}, {{-1, -1, -1}, {1, 1, 1}}},
        {"constant-direction", {}, {{-3, -3, -3}, {3, 3, 3}}},
        {"tube-regular", {}, {{-1, -1, -1}, {1, 1, 1}}},
        {"loss-yau", {}, {{-2, -2, -2}, {2, 2, 2}}},
        {"compact-bump", {}, {{-2.2, -2.2, -2.2}, {2.2, 2.2, 2.2}}},
    };
    for (const auto& pr : probes) {
        CAPTURE(pr.name);
        FieldPtr f = builtin_field(pr.name, pr.params);
        CHECK(max_div_ratio(*f, pr.box, 17, 1e-4 * f->reference_length()) <= 1e-6);
    }
}

TEST_CASE("constant builtin returns the requested vector everywhere") {
    FieldPtr f = builtin_field("constant", {{"bx", 0.0}, {"by", 0.0}, {"bz", 1.0}});
    for (int i = 0; i < 10; ++i) {
        Vec3 p = halton3(i) * 7.0 - Vec3{3, 3, 3};
        Vec3 b = (*f)(p);
        CHECK(b.x == 0.0);
        CHECK(b.y == 0.0);
        CHECK(b.z == 1.0);
    }
}

TEST_CASE("unknown builtin and bad parameters are rejected") {
    CHECK_THROWS_AS(builtin_field("vortex"), config_error);
    CHECK_THROWS_AS(builtin_field("tube-regular", {{"b0", -1.0}}), config_error);
    CHECK_THROWS_AS(builtin_field("compact-bump", {{"delta", 0.0}}), config_error);
}

TEST_CASE("loss-yau closed-form spinor is annihilated by the gauged Dirac operator") {
    FieldPtr f = builtin_field("loss-yau");
    GaugePtr A = builtin_gauge(f);
    REQUIRE(A);
    // residual of sigma.(-i grad + A) psi with 4th-order FD derivatives
    double h = 1e-3;
    double num = 0.0, den = 0.0;
    for (int i = 0; i < 200; ++i) {
        Vec3 p = halton3(i) * 4.0 - Vec3{2, 2, 2};
        std::array<cplx, 2> psi = loss_yau_spinor(p);
        std::array<cplx, 2> grad[3];
        for (int a = 0; a < 3; ++a) {
            auto comp = [&](double t) {
                Vec3 q = p;
                q[a] += t;
                return loss_yau_spinor(q);
            };
            for (int c = 0; c < 2; ++c) {
                grad[a][c] = (comp(-2 * h)[c] - 8.0 * comp(-h)[c] + 8.0 * comp(h)[c] - comp(2 * h)[c]) /
                             (12.0 * h);
            }
        }
        Vec3 a = (*A)(p);
        cplx i_(0, 1);
        cplx P[3][2];
        for (int ax = 0; ax < 3; ++ax)
            for (int c = 0; c < 2; ++c) P[ax][c] = -i_ * grad[ax][c] + a[ax] * psi[c];
        cplx up = P[0][1] - i_ * P[1][1] + P[2][0];
        cplx dn = P[0][0] + i_ * P[1][0] - P[2][1];
        num += std::norm(up) + std::norm(dn);
        den += std::norm(psi[0]) + std::norm(psi[1]);
    }
    CHECK(std::sqrt(num / den) < 1e-8);
}

TEST_CASE("loss-yau strength is 12/(1+r^2)^2 and the gauge generates it") {
    FieldPtr f = builtin_field("loss-yau");
    GaugePtr A = builtin_gauge(f);
    for (int i = 0; i < 40; ++i) {
        Vec3 p = halton3(i) * 5.0 - Vec3{2.5, 2.5, 2.5};
        double expect = 12.0 / std::pow(1.0 + norm2(p), 2.0);
        CHECK(norm((*f)(p)) == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK(curl_error(*f, *A, {{-2, -2, -2}, {2, 2, 2}}, 60, 1e-4) < 1e-7);
}

TEST_CASE("compact-bump vanishes inside delta and outside 2 delta, potential is compact") {
    FieldPtr f = builtin_field("compact-bump", {{"delta", 1.0}, {"amplitude", 2.0}});
    GaugePtr A = builtin_gauge(f);
    auto pts = ball_lowdisc_points(30);
    for (int i = 0; i < 30; ++i) {
        Vec3 inside = pts[i] * 0.99;
        CHECK(norm((*f)(inside)) == 0.0);
        CHECK(norm((*A)(inside)) == 0.0);
        Vec3 outside = normalized(inside + Vec3{0.01, 0, 0}) * (2.0 + 0.2 * i);
        CHECK(norm((*f)(outside)) == 0.0);
        CHECK(norm((*A)(outside)) == 0.0);
    }
    // the shell actually carries field
    CHECK(norm((*f)({1.4, 0.2, 0.1})) > 0.0);
    CHECK(curl_error(*f, *A, {{-2.2, -2.2, -2.2}, {2.2, 2.2, 2.2}}, 80, 1e-4) < 1e-7);
}

TEST_CASE("poincare gauge: constant field closed form and base point zero") {
    Vec3 b{0, 0, 3.0};
    FieldPtr f = builtin_field("constant", {{"bz", 3.0}});
    GaugePtr A = poincare_gauge(f, {0, 0, 0});
    for (int i = 0; i < 25; ++i) {
        Vec3 p = halton3(i) * 4.0 - Vec3{2, 2, 2};
        Vec3 expect = 0.5 * cross(b, p);
        CHECK(norm((*A)(p) - expect) < 1e-12 * (1.0 + norm(expect)));
    }
    CHECK(norm((*A)({0, 0, 0})) == 0.0);
}

TEST_CASE("poincare gauge reproduces tube-regular field through the curl oracle") {
    FieldPtr f = builtin_field("tube-regular");
    GaugePtr A = poincare_gauge(f, {0.1, -0.2, 0.05});
    Box box{{-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}};
    double maxb = 0.0;
    for (int i = 0; i < 100; ++i) {
        Vec3 u = halton3(i);
        maxb = std::max(maxb, norm((*f)(box.lo + Vec3{u.x, u.y, u.z})));
    }
    double e1 = curl_error(*f, *A, box, 100, 2e-4);
    CHECK(e1 <= 1e-6 * maxb);
    // central-difference order: halving the step cuts the error by >= 3.5x
    // (larger steps, where truncation dominates the gauge quadrature noise)
    double ec = curl_error(*f, *A, box, 100, 2e-3);
    double ef = curl_error(*f, *A, box, 100, 1e-3);
    CHECK(ec / ef >= 3.5);
}

TEST_CASE("assess_regularity on a constant field: derivative bounds identically zero") {
    FieldPtr f = builtin_field("constant", {{"bz", 2.0}});
    RegularityReport rep = assess_regularity(*f, {0, 0, 0}, 0.5, 1.0, 1.0 / 1024.0);
    for (int g = 0; g < 4; ++g) {
        CHECK(rep.sup_dnorm_absB[g] == 0.0);
        CHECK(rep.sup_dnorm_dir[g] == 0.0);
        CHECK(rep.pass_absB[g]);
        CHECK(rep.pass_dir[g]);
    }
}

TEST_CASE("strong threshold: |B| = 2 eps^-2 ell^-2 is strong, half of it is weak") {
    double eps = 1.0 / 1024.0, ell = 0.25;
    double thr = 1.0 / (eps * eps * ell * ell);
    FieldPtr strong = builtin_field("constant", {{"bz", 2.0 * thr}});
    FieldPtr weak = builtin_field("constant", {{"bz", 0.5 * thr}});
    CHECK(assess_regularity(*strong, {0, 0, 0}, ell, 1.0, eps).is_strong);
    CHECK_FALSE(assess_regularity(*weak, {0, 0, 0}, ell, 1.0, eps).is_strong);
}

TEST_CASE("tube-regular(K=1) passes all gamma conditions on its design ball") {
    FieldPtr f = builtin_field("tube-regular");
    double eps = 1.0 / 1024.0;
    double q = f->descriptor().params.at("q");
    double ell_design = eps / q;
    RegularityOptions opts;
    opts.seeds = 48;
    RegularityReport rep = assess_regularity(*f, {0, 0, 0}, ell_design, 1.0, eps, opts);
    CAPTURE(rep.sup_dnorm_absB[0]);
    CAPTURE(rep.sup_dnorm_dir[0]);
    CHECK(rep.is_strong);
    CHECK(rep.all_pass());
}

TEST_CASE("analytic directional derivatives of tube-regular match finite differences") {
    // unit-strength instance: the comparison is then far from FD round-off
    FieldPtr f = builtin_field("tube-regular", {{"b0", 2.0}});
    Vec3 x{0.3, -0.1, 0.7};
    for (const Vec3& d : probe_directions()) {
        auto an = f->dir_derivatives(x, d);
        auto fd = directional_derivatives([&](const Vec3& p) { return (*f)(p); }, x, d,
                                          1e-3 * f->reference_length());
        for (int g = 0; g < 4; ++g) {
            double h = 1e-3 * f->reference_length();
            double noise = 50.0 * 1e-16 * 2.6 / std::pow(h, g + 1);
            CHECK(norm(an[g] - fd[g]) <= 1e-6 * norm(an[g]) + noise);
        }
    }
}
