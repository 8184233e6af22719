#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mag/deriv.hpp"
#include "mag/errors.hpp"
#include "mag/field.hpp"
#include "mag/geometry.hpp"
#include "mag/local_gauge.hpp"
#include "mag/scales.hpp"

using namespace mag;

namespace {

constexpr double kEps = 1.0 / 1024.0;

struct TubeFrameFixture {
    FieldPtr base;
    std::shared_ptr<LocalField> lf;
    std::unique_ptr<FieldLineFrame> frame;
    double ell_i = 0.0;   // covering-ball radius
    double ell_D = 0.0;   // frame ball radius (field frozen outside)
    TubeFrameFixture() {
        base = builtin_field("tube-regular");
        ScaleOptions so;
        so.sup_seeds = 32;
        so.deriv_seeds = 16;
        so.sup_refine = 30;
        ell_i = ScaleProfile(base, kEps, so).ell({0, 0, 0});
        BallCover c;
        c.centers = {{0, 0, 0}};
        c.radii = {ell_i};
        c.strong_flags = {1};
        c.region = {{-ell_i, -ell_i, -ell_i}, {ell_i, ell_i, ell_i}};
        c.seeded_region = c.region;
        lf = std::make_shared<LocalField>(strong_local_field(base, c, 0, kEps));
        ell_D = 8.0 * ell_i;  // contains the 7 ell_i support of the local field
        FrameOptions fo;
        fo.ode.rel_tol = 1e-12;
        fo.ode.abs_tol = 1e-15;
        frame = std::make_unique<FieldLineFrame>(*lf, lf->center(), ell_D, lf->exterior_value(), 0.0,
                                                 0.0, fo);
    }
};

}  // namespace

TEST_CASE("field line through a constant field is the straight line z + tau n") {
    FieldPtr f = builtin_field("constant", {{"bx", 1.0}, {"by", 2.0}, {"bz", 2.0}});
    Vec3 n = normalized(Vec3{1, 2, 2});
    Vec3 z{0.3, -0.1, 0.2};
    FieldLine fl = trace_field_line(*f, z, -2.0, 2.0, 0.05);
    CHECK(norm(fl.at(0.0) - z) == 0.0);  // initial condition is exact
    for (double tau : {-1.7, -0.4, 0.9, 1.99}) {
        CHECK(norm(fl.at(tau) - (z + tau * n)) <= 1e-9);
        CHECK(norm(fl.tangent(tau) - n) <= 1e-9);
    }
}

TEST_CASE("tube-regular field line: unit speed, re-integration agreement, exterior direction") {
    TubeFrameFixture fx;
    const FieldLine& fl = fx.frame->line();
    // |phidot| = 1 and phidot = n(phi): exact at the sample nodes, interpolation
    // noise only in between
    for (size_t i = 0; i < fl.points.size(); i += 16) {
        CHECK(std::abs(norm(fl.tangents[i]) - 1.0) <= 1e-12);
        CHECK(norm(fl.tangents[i] - fx.lf->unit_direction(fl.points[i])) <= 1e-10);
    }
    for (double tau = fl.tau_min() * 0.9; tau <= fl.tau_max() * 0.9; tau += fx.ell_D / 7.0) {
        Vec3 td = fl.tangent(tau);
        CHECK(std::abs(norm(td) - 1.0) <= 1e-5);
        CHECK(norm(td - fx.lf->unit_direction(fl.at(tau))) <= 1e-5);
    }
    // direction constant outside the bending region |tau| >= 4 ell_D
    Vec3 n_inf = normalized(fx.lf->exterior_value());
    for (double tau : {4.0 * fx.ell_D, 5.5 * fx.ell_D, -4.5 * fx.ell_D}) {
        CHECK(norm(fl.tangent(tau) - n_inf) <= 1e-6);
    }
    // half-step re-integration: arc-length defect of the dense samples
    FieldLine fl2 = trace_field_line(*fx.lf, fx.frame->base(), -fx.ell_D, fx.ell_D, fx.ell_D / 192.0);
    for (double tau : {-0.7 * fx.ell_D, 0.3 * fx.ell_D, 0.9 * fx.ell_D}) {
        CHECK(norm(fl.at(tau) - fl2.at(tau)) <= 1e-9 * fx.ell_D);
    }
}

TEST_CASE("constant-field frame is the rigid motion, on both code paths") {
    FieldPtr f = builtin_field("constant", {{"bz", 3.0}});
    Vec3 z0{0.1, 0.2, 0.3};
    double ell = 0.5;
    for (bool force_general : {false, true}) {
        FrameOptions fo;
        fo.force_general = force_general;
        fo.ode.rel_tol = 1e-12;
        fo.ode.abs_tol = 1e-15;
        FieldLineFrame fr(*f, z0, ell, {0, 0, 3.0}, 0.15, -0.2, fo);
        CHECK(fr.trivial() == !force_general);
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        for (int i = 0; i < 20; ++i) {
            Vec3 xi{0.8 * U(rng), 0.8 * U(rng), 2.0 * U(rng)};
            Vec3 x = fr.x_of_xi(xi);
            Vec3 back = fr.xi_of_x(x);
            CHECK(norm(back - xi) <= 1e-9);
            // rigid: distances are preserved exactly
            Vec3 xi2{0.3, -0.4, 0.9};
            CHECK(std::abs(norm(fr.x_of_xi(xi2) - x) - norm(xi2 - xi)) <= 1e-8);
            CHECK(fr.omega(x) == doctest::Approx(1.0).epsilon(1e-10));
            CHECK(fr.h_factor(x) == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("tube frame: Omega equals f(xi3) on the central line to 1e-6") {
    TubeFrameFixture fx;
    double worst = 0.0, spread = 0.0;
    for (int i = -12; i <= 12; ++i) {
        double tau = 0.35 * fx.ell_D * i;
        Vec3 p = fx.frame->line().at(tau);
        double om = fx.frame->omega(p);
        double xi3 = fx.frame->xi_of_x(p).z;
        double f = fx.frame->f_of_xi3(xi3);
        worst = std::max(worst, std::abs(om - f));
        spread = std::max(spread, std::abs(f - 1.0));
    }
    CAPTURE(spread);
    CHECK(worst <= 1e-6);
    CHECK(spread > 1e-7);  // the check is nontrivial: f genuinely varies
}

TEST_CASE("tube frame: exterior flatness and global closeness of Omega, h") {
    TubeFrameFixture fx;
    // |xi3| >= 3 ell_D: Omega = h = 1 (frozen field, flat leaves)
    for (double s : {3.3, 4.0}) {
        Vec3 p = fx.frame->line().at(s * fx.ell_D) + fx.frame->p1() * (0.4 * fx.ell_D);
        CHECK(std::abs(fx.frame->omega(p) - 1.0) <= 1e-8);
        CHECK(std::abs(fx.frame->h_factor(p) - 1.0) <= 1e-7);
    }
    // global bounds: ||Omega - 1||, ||h - 1|| = O(eps) on the chart
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    double wo = 0.0, wh = 0.0;
    for (int i = 0; i < 60; ++i) {
        Vec3 xi{2.0 * fx.ell_D * U(rng), 2.0 * fx.ell_D * U(rng), 3.5 * fx.ell_D * U(rng)};
        Vec3 x = fx.frame->x_of_xi(xi);
        wo = std::max(wo, std::abs(fx.frame->omega(x) - 1.0));
        wh = std::max(wh, std::abs(fx.frame->h_factor(x) - 1.0));
    }
    CAPTURE(wo);
    CAPTURE(wh);
    CHECK(wo <= 100.0 * kEps);
    CHECK(wh <= 100.0 * kEps);
}

TEST_CASE("tube frame: round trip and metric cross terms via the FD Jacobian oracle") {
    TubeFrameFixture fx;
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    int npts = std::getenv("MAG_HEAVY") ? 1000 : 250;
    double worst_rt = 0.0, worst_cross = 0.0, worst_jac = 0.0;
    double fd = 3e-4 * fx.ell_D;
    // the frozen shell of the local field limits the fold-free tube radius to a
    // few ell_D; stay inside it (the guard in the chart enforces the boundary)
    for (int i = 0; i < npts; ++i) {
        Vec3 xi{1.7 * fx.ell_D * U(rng), 1.7 * fx.ell_D * U(rng), 3.0 * fx.ell_D * U(rng)};
        Vec3 x = fx.frame->x_of_xi(xi);
        worst_rt = std::max(worst_rt, norm(fx.frame->xi_of_x(x) - xi));
        // Jacobian dx/dxi by central differences
        Vec3 J[3];
        for (int a = 0; a < 3; ++a) {
            Vec3 xp = xi, xm = xi;
            xp[a] += fd;
            xm[a] -= fd;
            J[a] = (fx.frame->x_of_xi(xp) - fx.frame->x_of_xi(xm)) / (2.0 * fd);
        }
        double g11 = dot(J[0], J[0]), g22 = dot(J[1], J[1]), g33 = dot(J[2], J[2]);
        double g13 = dot(J[0], J[2]), g23 = dot(J[1], J[2]);
        double gmag = std::max({g11, g22, g33});
        worst_cross = std::max(worst_cross, std::max(std::abs(g13), std::abs(g23)) / (1.0 + gmag));
        // Jacobian stays near the rigid rotation: ||J_a| - Omega-ish| small
        worst_jac = std::max(worst_jac, std::abs(std::sqrt(g11) - std::sqrt(g22)));
    }
    CAPTURE(worst_rt / fx.ell_D);
    CAPTURE(worst_cross);
    CHECK(worst_rt <= 1e-7 * fx.ell_D);
    CHECK(worst_cross <= 1e-6);
    CHECK(worst_jac <= 1e-4);
}

TEST_CASE("transverse-coordinate comparability and spin-projection continuity across bases") {
    TubeFrameFixture fx;
    FrameOptions fo;
    fo.ode.rel_tol = 1e-12;
    fo.ode.abs_tol = 1e-15;
    // second frame based at y on the supporting plane
    double off = 0.8 * fx.ell_D;
    FieldLineFrame fy(*fx.lf, fx.lf->center(), fx.ell_D, fx.lf->exterior_value(), off, 0.0, fo);
    Vec3 n_inf = fx.frame->n_infinity();
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int i = 0; i < 25; ++i) {
        Vec3 z = fx.frame->x_of_xi(
            {1.0 * fx.ell_D * U(rng), 1.0 * fx.ell_D * U(rng), 2.0 * fx.ell_D * U(rng)});
        Vec3 piz = project_to_plane(*fx.lf, z, fx.frame->base() - Vec3{0, 0, 0}, n_inf);
        // note: the plane through the frame base with normal n_inf is the supporting plane
        double dplane = norm(fy.base() - piz);
        if (dplane < 0.05 * fx.ell_D) continue;
        double r = std::hypot(fy.xi_of_x(z).x, fy.xi_of_x(z).y) / dplane;
        CHECK(r >= 0.5);
        CHECK(r <= 2.0);
        // spin projections of the two bases differ by at most C eps/ell * distance
        Mat2c Py = fy.spin_up(z);
        FieldLineFrame fpi(*fx.lf, fx.lf->center(), fx.ell_D, fx.lf->exterior_value(),
                           dot(piz - (fx.frame->base()), fx.frame->p1()),
                           dot(piz - (fx.frame->base()), fx.frame->p2()), fo);
        Mat2c Ppi = fpi.spin_up(z);
        double diff = mat2_norm(Py - Ppi);
        CHECK(diff <= 200.0 * kEps / fx.ell_D * dplane + 1e-12);
    }
}

TEST_CASE("spin projection: closed forms, idempotence, trace") {
    FieldPtr fz = builtin_field("constant", {{"bz", 2.0}});
    FieldLineFrame fr(*fz, {0, 0, 0}, 0.5, {0, 0, 2.0});
    Mat2c P = fr.spin_up({0.1, 0.2, 0.3});
    CHECK(std::abs(P(0, 0) - cplx(1, 0)) <= 1e-14);
    CHECK(std::abs(P(1, 1)) <= 1e-14);

    FieldPtr fxd = builtin_field("constant", {{"bx", 1.0}, {"by", 0.0}, {"bz", 0.0}});
    FieldLineFrame fr2(*fxd, {0, 0, 0}, 0.5, {1.0, 0, 0});
    Mat2c Q = fr2.spin_up({0.2, -0.1, 0.4});
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(std::abs(Q(i, j) - cplx(0.5, 0)) <= 1e-14);

    TubeFrameFixture fx;
    for (int i = 0; i < 10; ++i) {
        Vec3 x = fx.frame->x_of_xi({0.5 * fx.ell_D * (i - 5) / 5.0, 0.2 * fx.ell_D,
                                    2.0 * fx.ell_D * (i - 5) / 5.0});
        Mat2c S = fx.frame->spin_up(x);
        CHECK(mat2_norm(S * S - S) <= 1e-10);
        CHECK(std::abs(S.trace() - cplx(1, 0)) <= 1e-12);
        CHECK(mat2_norm(S - S.adjoint()) <= 1e-12);
    }
}

TEST_CASE("tube grid on a constant field: lattice value, moment sums, spin allocation") {
    FieldPtr f = builtin_field("constant", {{"bz", 9.0}});
    double eta = 1.0 / 16.0;
    TubeGrid grid(*f, {0, 0, 0}, 0.5, {0, 0, 9.0}, eta);
    CHECK(grid.spacing() == doctest::Approx(1.0 / 3.0));

    // v_j = 1 exactly on its own lattice line
    const Vec3 probe_on_lattice = Vec3{0, 0, -0.5} + Vec3{1, 0, 0} * (2.0 * grid.spacing());
    // lattice coordinates are set by the frame's plane basis; probe via xi_perp
    bool found_one = false;
    for (int j1 = -3; j1 <= 3 && !found_one; ++j1)
        for (int j2 = -3; j2 <= 3 && !found_one; ++j2)
            if (grid.xi_perp_sq(j1, j2, probe_on_lattice) < 1e-20) {
                CHECK(grid.gaussian(j1, j2, probe_on_lattice) == 1.0);
                found_one = true;
            }
    CHECK(found_one);

    // kappa = 0, gamma = 2: c1/eta <= sum v^2 <= c2/eta with c in [0.1, 10]
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> U(-0.8, 0.8);
    for (int i = 0; i < 12; ++i) {
        Vec3 x{U(rng), U(rng), U(rng)};
        double m = grid.moment_sum(x, 0, 2.0);
        CHECK(m >= 0.1 / eta);
        CHECK(m <= 10.0 / eta);
        // kappa = 1 moment bound: the constant is 4 pi in the continuum limit
        double m1 = grid.moment_sum(x, 1, 2.0);
        CHECK(m1 <= 20.0 / eta);
        // translation invariance up to the tail
        Vec3 xs = x + Vec3{grid.spacing(), 0, 0};
        // lattice translation maps the sum to itself when shifted along p1
        double ms = grid.moment_sum(xs, 0, 2.0);
        CHECK(std::abs(ms - m) <= 1e-6 * m + 1e-8);
    }

    // spin allocation (lambda = 2^-7): calibrate C0 and confirm nonnegativity
    double lambda = std::pow(2.0, -7.0);
    double eta_small = 1.0 / 256.0;
    TubeGrid grid2(*f, {0, 0, 0}, 0.5, {0, 0, 9.0}, eta_small);
    double c0_needed = 0.0;
    std::vector<Vec3> probes;
    for (int i = 0; i < 40; ++i) probes.push_back({U(rng), U(rng), U(rng)});
    for (const Vec3& x : probes) {
        double m0 = grid2.spin_alloc_min_eig(x, lambda, 0.0);
        if (m0 < 0.0) {
            double v4 = grid2.moment_sum(x, 0, 4.0);
            c0_needed = std::max(c0_needed, -m0 * 0.25 / v4);  // ell^2/sum v^4 scaling, ell = 0.5
        }
    }
    CAPTURE(c0_needed);
    CHECK(c0_needed <= 10.0);  // a modest universal constant suffices
    for (const Vec3& x : probes) CHECK(grid2.spin_alloc_min_eig(x, lambda, c0_needed + 0.01) >= 0.0);
}

TEST_CASE("magnetic localization identity: exact derivatives and stencil convergence order") {
    // algebraic identity: machine-level residual with exact derivatives
    CHECK(magnetic_localization_residual(4.0, 0.125, false) <= 1e-10);
    CHECK(magnetic_localization_residual(9.0, 0.25, false) <= 1e-10);
    // eta = 0: the identity degenerates to plain commutation
    CHECK(magnetic_localization_residual(4.0, 0.0, false) <= 1e-12);
    // stencil mode: O(h^2), halving the step divides the residual by ~4
    double r1 = magnetic_localization_residual(4.0, 0.125, true, 0.08);
    double r2 = magnetic_localization_residual(4.0, 0.125, true, 0.04);
    CAPTURE(r1);
    CAPTURE(r2);
    CHECK(r1 / r2 >= 3.4);
    CHECK(r1 / r2 <= 4.6);
}

TEST_CASE("pullback of the local field 2-form: smallness of delta-beta and the gauge difference") {
    TubeFrameFixture fx;
    double b = fx.frame->b_exterior();
    double ld = fx.ell_D;
    // delta beta (xi) = pullback dual - (0,0,b); FD Jacobian of x(xi)
    auto pullback_dual = [&](const Vec3& xi) {
        double fd = 3e-4 * ld;
        Vec3 J[3];
        for (int a = 0; a < 3; ++a) {
            Vec3 xp = xi, xm = xi;
            xp[a] += fd;
            xm[a] -= fd;
            J[a] = (fx.frame->x_of_xi(xp) - fx.frame->x_of_xi(xm)) / (2.0 * fd);
        }
        Vec3 Bx = (*fx.lf)(fx.frame->x_of_xi(xi));
        // dual of the pulled-back flux form: components B.(J_b x J_c)
        return Vec3{dot(Bx, cross(J[1], J[2])), dot(Bx, cross(J[2], J[0])), dot(Bx, cross(J[0], J[1]))};
    };
    double worst_C = 0.0;
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int i = 0; i < 40; ++i) {
        Vec3 xi{1.5 * ld * U(rng), 1.5 * ld * U(rng), 2.0 * ld * U(rng)};
        Vec3 db = pullback_dual(xi) - Vec3{0, 0, b};
        double xperp = std::hypot(xi.x, xi.y);
        double envelope = kEps * b * std::min(xperp / ld, 1.0) + 1e-7 * b;
        worst_C = std::max(worst_C, norm(db) / envelope);
    }
    CAPTURE(worst_C);
    CHECK(worst_C <= 50.0);

    // gauge difference via the transverse homotopy gauge of delta-beta:
    // |alpha - alpha_c| <= C eps b ld min(|xi_perp|/ld, 1)^2 near the axis
    TransverseGauge tg([&](const Vec3& xi) { return pullback_dual(xi) - Vec3{0, 0, b}; }, 12);
    double worst_gauge_C = 0.0;
    for (int i = 0; i < 10; ++i) {
        Vec3 xi{0.8 * ld * U(rng), 0.8 * ld * U(rng), 1.0 * ld * U(rng)};
        double xperp2 = (xi.x * xi.x + xi.y * xi.y) / (ld * ld);
        double envelope = kEps * b * ld * std::max(xperp2, 1e-4);
        worst_gauge_C = std::max(worst_gauge_C, norm(tg.alpha(xi)) / envelope);
    }
    CAPTURE(worst_gauge_C);
    CHECK(worst_gauge_C <= 50.0);
}
