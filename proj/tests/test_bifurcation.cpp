#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cocycle/bifurcation.hpp"
#include "oracles.hpp"

using namespace cocycle;
namespace nb = std::numbers;

namespace {

ModelConfig model(double lambda, int sign = -1, bool constant_h = false) {
    ModelConfig cfg;
    cfg.L = nb::pi;
    cfg.N = 8;
    cfg.alpha = 0.5;
    cfg.lambda = lambda;
    if (constant_h) {
        cfg.forcing = Forcing::constant(2.0);
    } else {
        cfg.forcing = Forcing::two_plus_sin();
    }
    cfg.forcing.sign = sign;
    return cfg;
}

LpSolverParams lp_params() {
    LpSolverParams prm;
    prm.horizon = 16.0;
    prm.dt = 0.01;
    prm.tol = 1e-9;
    return prm;
}

ReducedFlow make_reduced(const ModelConfig& cfg, double lambda0, double extend = 0.5,
                         std::size_t fibers = 2) {
    const DiagonalSystem sys = make_galerkin_system(cfg);
    const SpectralSplit sp = split_spectrum(sys.mu, cfg.lambda, lambda0);
    const TruncationConfig tc = make_truncation_config(0.06, cfg);
    GraphFamily fam = build_graph_family(sys, sp, tc, fibers, 0.02, 9, lp_params(), extend);
    return make_galerkin_reduced_flow(cfg, std::move(fam), sp, 1.2, cfg.forcing.sign > 0);
}

SweepParams fast_sweep(std::vector<double> grid) {
    SweepParams prm;
    prm.lambda_grid = std::move(grid);
    prm.n_fibers = 2;
    prm.rho = 0.06;
    prm.graph_radius = 0.02;
    prm.n_grid = 9;
    prm.lp = lp_params();
    prm.extend_radius = 0.5;
    prm.rho_wide = 1.2;
    prm.ball_radius = 0.42;
    prm.cloud_size = 16;
    prm.reduced_dt = 0.02;
    prm.pullback.tol = 1e-4;
    prm.pullback.stages = 22;
    prm.pullback.collapse_tol = 5e-4;
    prm.r_in = 1e-3;
    prm.r_out = 1e-2;
    prm.deadline = 400.0;
    prm.workers = 2;
    return prm;
}

}  // namespace

TEST_CASE("reduced rhs: equilibrium at zero and the single-mode form") {
    const ModelConfig cfg = model(1.05, -1, /*constant_h=*/true);
    const ReducedFlow rf = make_reduced(cfg, 1.0);
    const HullPoint p0 = rf.sys.base_point();
    CHECK(reduced_rhs(rf, 0.0, p0, 0.0) == doctest::Approx(0.0));

    // h = c constant: rhs ~ (lambda - 1) y - c (3/(2 pi)) y^3 up to the
    // xi-coupling correction
    const double c = 2.0;
    for (double y : {0.05, 0.1, -0.15, 0.2}) {
        const double expect = (cfg.lambda - 1.0) * y - c * 3.0 / (2.0 * nb::pi) * y * y * y;
        CHECK(reduced_rhs(rf, 0.3, p0, y) == doctest::Approx(expect).epsilon(1e-2));
    }
    CHECK_THROWS_AS(reduced_rhs(rf, 0.0, p0, 0.7), graph_domain_error);
}

TEST_CASE("reduced rhs at lambda = lambda0 is the nonlinear part alone") {
    const ModelConfig cfg = model(1.0, -1, true);
    const ReducedFlow rf = make_reduced(cfg, 1.0);
    const HullPoint p0 = rf.sys.base_point();
    CHECK(rf.linear_rate() == doctest::Approx(0.0));
    const double y = 0.1;
    CHECK(reduced_rhs(rf, 0.0, p0, y) == doctest::Approx(rf.nonlinear_part(0.0, p0, y)));
    CHECK(reduced_rhs(rf, 0.0, p0, y) < 0.0);  // dissipative side
}

TEST_CASE("evolve_reduced: monotone decay at the critical parameter") {
    const ModelConfig cfg = model(1.0);
    const ReducedFlow rf = make_reduced(cfg, 1.0);
    const HullPoint p0 = rf.sys.base_point();
    double y = 0.2;
    double prev = y;
    for (int i = 0; i < 20; ++i) {
        y = evolve_reduced(rf, translate(p0, rf.sys.omega, i * 0.5), y, 0.5, 0.01);
        CHECK(std::abs(y) < std::abs(prev));
        prev = y;
    }
}

TEST_CASE("evolve_reduced: subcritical decay rate matches lambda0 - lambda") {
    const ModelConfig cfg = model(0.95);
    const ReducedFlow rf = make_reduced(cfg, 1.0);
    const HullPoint p0 = rf.sys.base_point();
    const double y0 = 1e-3;  // small enough that the cubic is negligible
    const double T = 20.0;
    const double yT = evolve_reduced(rf, p0, y0, T, 0.01);
    const double rate = std::log(y0 / yT) / T;
    CHECK(rate == doctest::Approx(0.05).epsilon(0.02));
}

TEST_CASE("evolve_reduced: distance to the critical flow scales linearly in the offset") {
    const double T = 5.0;
    auto run = [&](double lambda) {
        const ModelConfig cfg = model(lambda);
        const ReducedFlow rf = make_reduced(cfg, 1.0);
        return evolve_reduced(rf, rf.sys.base_point(), 0.1, T, 0.01);
    };
    const double base = run(1.0);
    const double d1 = std::abs(run(1.0 + 0.02) - base);
    const double d2 = std::abs(run(1.0 + 0.01) - base);
    CHECK(d1 / d2 == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("evolve_reduced leaves-domain error") {
    const ModelConfig cfg = model(1.05);
    const ReducedFlow rf = make_reduced(cfg, 1.0, /*extend=*/0.1);
    CHECK_THROWS_AS(evolve_reduced(rf, rf.sys.base_point(), 0.35, 1.0, 0.01),
                    graph_domain_error);
}

TEST_CASE("repeller check across the bifurcation") {
    SUBCASE("supercritical: the origin repels the annulus") {
        const ModelConfig cfg = model(1.1);
        const ReducedFlow rf = make_reduced(cfg, 1.0);
        CHECK(repeller_check(rf, rf.sys.base_point(), 1e-3, 1e-2, 400.0, 0.02));
    }
    SUBCASE("subcritical: trajectories contract, answer false") {
        const ModelConfig cfg = model(0.95);
        const ReducedFlow rf = make_reduced(cfg, 1.0);
        CHECK(!repeller_check(rf, rf.sys.base_point(), 1e-3, 1e-2, 400.0, 0.02));
    }
    SUBCASE("deadline too short is inconclusive, not false") {
        const ModelConfig cfg = model(1.02);
        const ReducedFlow rf = make_reduced(cfg, 1.0);
        CHECK_THROWS_AS(repeller_check(rf, rf.sys.base_point(), 1e-3, 1e-2, 5.0, 0.02),
                        inconclusive_error);
    }
    SUBCASE("opposite sign, subcritical side: the origin attracts from inside") {
        const ModelConfig cfg = model(0.95, +1);
        const DiagonalSystem sys = make_galerkin_system(cfg);
        const SpectralSplit sp = split_spectrum(sys.mu, cfg.lambda, 1.0);
        const TruncationConfig tc = make_truncation_config(0.06, cfg);
        GraphFamily fam = build_graph_family(sys, sp, tc, 2, 0.02, 9, lp_params(), 0.5);
        const ReducedFlow forward = make_galerkin_reduced_flow(cfg, std::move(fam), sp, 1.2, false);
        CHECK(!repeller_check(forward, sys.base_point(), 1e-3, 1e-2, 400.0, 0.02));
    }
}

TEST_CASE("lift through the graph") {
    const ModelConfig cfg = model(1.05, -1, true);
    const ReducedFlow rf = make_reduced(cfg, 1.0);
    const HullPoint p0 = rf.sys.base_point();

    const Cloud zero{Vec{0.0}};
    const Cloud lifted0 = lift(zero, rf.family, p0);
    CHECK(rf.sys.state_norm(lifted0[0]) < 1e-9);

    // lifted cloud keeps cardinality and satisfies the Lipschitz budget
    Cloud a{Vec{0.01}, Vec{-0.015}, Vec{0.19}};
    const Cloud lifted = lift(a, rf.family, p0);
    REQUIRE(lifted.size() == a.size());
    const StateMetric full{rf.sys.mu, rf.sys.alpha};
    const StateMetric center{Vec{rf.sys.mu[rf.family.center()]}, rf.sys.alpha};
    const double hA = hausdorff_semidist(a, Cloud{Vec{0.0}}, center);
    const double hB = hausdorff_semidist(lifted, Cloud{Vec(cfg.N, 0.0)}, full);
    const double l1 = rf.family.graphs[0].l1_cert;
    CHECK(hB <= (1.0 + l1) * hA * (1.0 + 1e-9));
    CHECK(hB >= hA * (1.0 - 1e-9));

    // zero forcing: the lift is the center embedding
    ModelConfig lin = cfg;
    lin.forcing = Forcing::zero();
    const ReducedFlow rl = make_reduced(lin, 1.0);
    const Cloud le = lift(a, rl.family, p0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(le[i][rl.family.center()] == doctest::Approx(a[i][0]));
        for (std::size_t k = 0; k < le[i].size(); ++k)
            if (k != rl.family.center()) CHECK(std::abs(le[i][k]) < 1e-14);
    }
}

TEST_CASE("mini sweep: dichotomy, amplitudes, semicontinuity, coherence") {
    ModelConfig base = model(1.0, -1, /*constant_h=*/true);
    const SweepParams prm = fast_sweep({0.95, 1.02, 1.05});
    const BifurcationDiagram diag = sweep(base, 1.0, prm);
    REQUIRE(diag.rows.size() == 6);

    for (const auto& row : diag.rows) {
        INFO("lambda = ", row.lambda, " fiber = ", row.fiber_index, " err = ", row.error);
        CHECK(row.error.empty());
        CHECK(row.converged);
        if (row.lambda <= 1.0) {
            CHECK(row.h_alpha < 1e-3);
        } else {
            const double expect = std::sqrt((row.lambda - 1.0) * 2.0 * nb::pi / 6.0);
            CHECK(row.h_alpha == doctest::Approx(expect).epsilon(0.05));
            CHECK(row.dist0 > 1e-3);
            CHECK(row.repeller == 1);
        }
    }

    const SemicontinuityReport sc = upper_semicontinuity_check(diag, 1.0, 0.2);
    CHECK(sc.pass);
    CHECK(sc.monotone);
    CHECK(sc.fitted_exponent == doctest::Approx(0.5).epsilon(0.1));

    // L2 chain recorded for aligned consecutive grids
    CHECK(diag.l2_chain.size() >= 1);
    for (double l2 : diag.l2_chain) {
        CHECK(std::isfinite(l2));
        CHECK(l2 >= 0.0);
    }
}

TEST_CASE("mirrored sweep with sign +1 bifurcates below lambda0") {
    ModelConfig base = model(1.0, +1, /*constant_h=*/true);
    const SweepParams prm = fast_sweep({0.95, 0.98, 1.02});
    const BifurcationDiagram diag = sweep(base, 1.0, prm);
    for (const auto& row : diag.rows) {
        INFO("lambda = ", row.lambda, " err = ", row.error);
        CHECK(row.error.empty());
        if (row.lambda >= 1.0) {
            CHECK(row.h_alpha < 1e-3);
        } else {
            const double expect = std::sqrt((1.0 - row.lambda) * 2.0 * nb::pi / 6.0);
            CHECK(row.h_alpha == doctest::Approx(expect).epsilon(0.05));
            CHECK(row.dist0 > 1e-3);
        }
    }
    const SemicontinuityReport sc = upper_semicontinuity_check(diag, 1.0, 0.2);
    CHECK(sc.pass);
}

TEST_CASE("hull coherence: the flow carries one fiber section onto the next") {
    ModelConfig base = model(1.0, -1, false);  // h = 2 + sin t: fibers genuinely differ
    const SweepParams prm = fast_sweep({1.05});
    const BifurcationDiagram diag = sweep(base, 1.0, prm);
    REQUIRE(diag.rows.size() == 2);
    REQUIRE(diag.rows[0].error.empty());
    REQUIRE(diag.rows[1].error.empty());

    ModelConfig cfg = base;
    cfg.lambda = 1.05;
    const DiagonalSystem sys = make_galerkin_system(cfg);
    IntegratorConfig ic;
    ic.dt = 0.005;
    const StateMetric full{sys.mu, sys.alpha};
    // fibers are phases {0, pi}; theta_t carries fiber 0 to fiber 1 at t = pi
    Cloud carried;
    for (const Vec& u : diag.rows[0].lifted)
        carried.push_back(evolve(sys, diag.rows[0].fiber, u, nb::pi, ic));
    const double h = hausdorff_symmetric(carried, diag.rows[1].lifted, full);
    CHECK(h < 1e-2);
}

TEST_CASE("power-law fit helper") {
    std::vector<double> x{0.02, 0.05, 0.1};
    std::vector<double> y;
    for (double v : x) y.push_back(1.3 * std::sqrt(v));
    const auto [e, c] = fit_power_law(x, y);
    CHECK(e == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(c == doctest::Approx(1.3).epsilon(1e-10));
}
