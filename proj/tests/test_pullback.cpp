#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cocycle/pullback.hpp"
#include "oracles.hpp"

using namespace cocycle;
namespace nb = std::numbers;

namespace {

DiagonalSystem scalar_example() {
    Forcing f = Forcing::two_plus_sin();
    f.sign = +1;
    return make_scalar_cubic_system(3.0, 0.0, f);  // x' = -3x + (2+sin t) x^3
}

StateMetric scalar_metric() { return StateMetric{Vec{3.0}, 0.0}; }

}  // namespace

TEST_CASE("Hausdorff semidistance basics") {
    const StateMetric m = scalar_metric();
    const Cloud a{Vec{1.0}};
    const Cloud b{Vec{0.0}};
    CHECK(hausdorff_semidist(a, a, m) == doctest::Approx(0.0));
    CHECK(hausdorff_semidist(a, b, m) == doctest::Approx(1.0));

    const Cloud c{Vec{0.0}, Vec{2.0}};
    CHECK(hausdorff_semidist(c, b, m) == doctest::Approx(2.0));
    CHECK(hausdorff_semidist(b, c, m) == doctest::Approx(0.0));  // asymmetric

    CHECK_THROWS_AS(hausdorff_semidist(Cloud{}, b, m), empty_cloud_error);
    CHECK_THROWS_AS(hausdorff_semidist(a, Cloud{}, m), empty_cloud_error);
}

TEST_CASE("Hausdorff triangle-type inequality on random triples") {
    const StateMetric m{Vec{1.0, 4.0, 9.0}, 0.5};
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto make_cloud = [&](std::size_t n) {
        Cloud c;
        for (std::size_t i = 0; i < n; ++i) c.push_back(Vec{u(rng), u(rng), u(rng)});
        return c;
    };
    for (int rep = 0; rep < 30; ++rep) {
        const Cloud A = make_cloud(6), B = make_cloud(5), C = make_cloud(7);
        const double lhs = hausdorff_semidist(A, C, m);
        const double rhs = hausdorff_semidist(A, B, m) + hausdorff_symmetric(B, C, m);
        CHECK(lhs <= rhs + 1e-12);
    }
}

TEST_CASE("pullback omega-limit of the scalar example is {0}") {
    const DiagonalSystem sys = scalar_example();
    IntegratorConfig ic;
    ic.dt = 0.01;
    const CocycleFlow flow = make_flow(sys, ic);
    Cloud u0;
    for (int i = 0; i < 50; ++i) u0.push_back(Vec{-0.5 + (i + 0.5) / 50.0});
    PullbackOptions opt;
    opt.tol = 1e-4;
    const PullbackResult res = pullback_omega_limit(flow, u0, sys.base_point(), opt);
    CHECK(res.converged);
    for (const Vec& x : res.attractor) CHECK(std::abs(x[0]) < 1e-4);
    REQUIRE(res.trace.size() >= 1);
    CHECK(res.trace.back().second < 1e-4);
}

TEST_CASE("pullback images of a forward-invariant set are nested up to tol") {
    const DiagonalSystem sys = scalar_example();
    IntegratorConfig ic;
    ic.dt = 0.01;
    const CocycleFlow flow = make_flow(sys, ic);
    Cloud u0;
    for (int i = 0; i < 40; ++i) u0.push_back(Vec{-0.5 + (i + 0.5) / 40.0});
    const HullPoint p = sys.base_point();
    Cloud prev;
    for (double t : {1.0, 2.0, 4.0, 8.0}) {
        Cloud image;
        for (const Vec& x : u0)
            image.push_back(flow.run(translate(p, flow.omega, -t), x, t));
        if (!prev.empty())
            CHECK(hausdorff_semidist(image, prev, flow.metric) <= 1e-3);
        prev = image;
    }
}

TEST_CASE("exhausted schedule returns a non-convergence report with its trace") {
    // critical-parameter decay is algebraic: two stages cannot converge
    const double c3 = 3.0 / (2.0 * nb::pi);
    DiagonalSystem sys;
    sys.mu = {0.0};
    sys.lambda = 0.0;
    sys.alpha = 0.0;
    sys.omega = {1.0};
    sys.g = [c3](double, const HullPoint&, const Vec& u) {
        return Vec{-2.0 * c3 * u[0] * u[0] * u[0]};
    };
    IntegratorConfig ic;
    ic.dt = 0.02;
    const CocycleFlow flow = make_flow(sys, ic);
    Cloud u0;
    for (int i = 0; i < 8; ++i) u0.push_back(Vec{-0.4 + 0.8 * (i + 0.5) / 8.0});
    PullbackOptions opt;
    opt.stages = 3;
    opt.tol = 1e-8;
    const PullbackResult res = pullback_omega_limit(flow, u0, sys.base_point(), opt);
    CHECK(!res.converged);
    CHECK(res.stages_run == 3);
    CHECK(!res.trace.empty());
    CHECK(!res.attractor.empty());
}

TEST_CASE("forward-invariance precheck rejects an expanding cluster") {
    // pure growth: x' = +x
    DiagonalSystem sys;
    sys.mu = {-1.0};
    sys.lambda = 0.0;
    sys.alpha = 0.0;
    sys.omega = {1.0};
    sys.g = [](double, const HullPoint&, const Vec& u) { return Vec{0.0 * u[0]}; };
    IntegratorConfig ic;
    ic.dt = 0.5;
    const CocycleFlow flow = make_flow(sys, ic);
    Cloud u0;
    for (int i = 0; i < 5; ++i) u0.push_back(Vec{1.0 + 0.001 * i});  // tight cluster far from 0
    PullbackOptions opt;
    CHECK_THROWS_AS(pullback_omega_limit(flow, u0, sys.base_point(), opt), config_error);
}

TEST_CASE("linear decaying system pulls back to {0}") {
    DiagonalSystem sys;
    sys.mu = {2.0, 5.0};
    sys.lambda = 0.0;
    sys.alpha = 0.0;
    sys.omega = {1.0};
    sys.g = [](double, const HullPoint&, const Vec& u) { return Vec(u.size(), 0.0); };
    IntegratorConfig ic;
    ic.dt = 0.05;
    const CocycleFlow flow = make_flow(sys, ic);
    Cloud u0{Vec{0.4, -0.2}, Vec{-0.3, 0.1}, Vec{0.05, 0.33}};
    PullbackOptions opt;
    opt.tol = 1e-6;
    const PullbackResult res = pullback_omega_limit(flow, u0, sys.base_point(), opt);
    CHECK(res.converged);
    for (const Vec& x : res.attractor) CHECK(flow.metric.norm(x) < 1e-6);
}

TEST_CASE("attraction check: fixed point of a decaying system") {
    DiagonalSystem sys;
    sys.mu = {2.0};
    sys.lambda = 0.0;
    sys.alpha = 0.0;
    sys.omega = {1.0};
    sys.g = [](double, const HullPoint&, const Vec&) { return Vec{0.0}; };
    IntegratorConfig ic;
    ic.dt = 0.05;
    const CocycleFlow flow = make_flow(sys, ic);
    const auto fibers = sample_hull(1, 8);
    const NonautCloud K = NonautCloud::constant(fibers, Cloud{Vec{0.0}});
    const auto rep = pullback_attraction_check(K, K, flow, {1, 2, 4, 8}, 1e-9);
    CHECK(rep.attracts);
    for (const auto& tr : rep.traces)
        for (const auto& [t, d] : tr.distances) CHECK(d < 1e-12);
}

TEST_CASE("scalar example: basin data attracts, |x| >= 2 data does not") {
    const DiagonalSystem sys = scalar_example();
    IntegratorConfig ic;
    ic.dt = 0.01;
    const CocycleFlow flow = make_flow(sys, ic);
    const auto fibers = sample_hull(1, 8);
    const NonautCloud K = NonautCloud::constant(fibers, Cloud{Vec{0.0}});

    Cloud inside;
    for (int i = 0; i < 11; ++i) inside.push_back(Vec{-0.5 + 0.1 * i});
    const auto ok = pullback_attraction_check(K, NonautCloud::constant(fibers, inside), flow,
                                              {1, 2, 4, 8, 16}, 1e-3);
    CHECK(ok.attracts);

    const Cloud outside{Vec{2.0}, Vec{2.5}, Vec{-2.2}};
    const auto bad = pullback_attraction_check(K, NonautCloud::constant(fibers, outside), flow,
                                               {1, 2, 4, 8, 16}, 1e-3);
    CHECK(!bad.attracts);
}

TEST_CASE("skew-product equivalence agrees on attracting and escaping data") {
    const DiagonalSystem sys = scalar_example();
    IntegratorConfig ic;
    ic.dt = 0.01;
    const CocycleFlow flow = make_flow(sys, ic);
    const auto fibers = sample_hull(1, 32);
    const NonautCloud K = NonautCloud::constant(fibers, Cloud{Vec{0.0}});

    Cloud inside;
    for (int i = 0; i < 9; ++i) inside.push_back(Vec{-0.4 + 0.1 * i});
    const auto eq_in = skew_equivalence_check(K, NonautCloud::constant(fibers, inside), flow,
                                              {1, 2, 4, 8, 16}, 1e-3);
    CHECK(eq_in.pullback.attracts);
    CHECK(eq_in.skew_attracts);
    CHECK(eq_in.agree);

    const Cloud outside{Vec{2.2}, Vec{-2.4}};
    const auto eq_out = skew_equivalence_check(K, NonautCloud::constant(fibers, outside), flow,
                                               {1, 2, 4, 8, 16}, 1e-3);
    CHECK(!eq_out.pullback.attracts);
    CHECK(!eq_out.skew_attracts);
    CHECK(eq_out.agree);

    // trivial agreement: K = B = {0} under linear decay
    DiagonalSystem lin;
    lin.mu = {1.0};
    lin.lambda = 0.0;
    lin.alpha = 0.0;
    lin.omega = {1.0};
    lin.g = [](double, const HullPoint&, const Vec&) { return Vec{0.0}; };
    const CocycleFlow lflow = make_flow(lin, ic);
    const auto eq_triv = skew_equivalence_check(K, K, lflow, {1, 2, 4}, 1e-6);
    CHECK(eq_triv.agree);
    CHECK(eq_triv.skew_attracts);
}

TEST_CASE("pullback amplitude of the supercritical reduced equation (oracle cross-check)") {
    // y' = eps y - (2 + sin t) c3 y^3 pulled back to phase 0
    const double eps = 0.1, c3 = 3.0 / (2.0 * nb::pi);
    DiagonalSystem sys;
    sys.mu = {-eps};  // linear rate +eps
    sys.lambda = 0.0;
    sys.alpha = 0.0;
    sys.omega = {1.0};
    Forcing f = Forcing::two_plus_sin();
    sys.g = [f, c3](double t, const HullPoint& p, const Vec& u) {
        return Vec{-evaluate_forcing(f, p, t) * c3 * u[0] * u[0] * u[0]};
    };
    IntegratorConfig ic;
    ic.dt = 0.005;
    const CocycleFlow flow = make_flow(sys, ic);
    Cloud u0;
    for (int i = 0; i < 16; ++i) u0.push_back(Vec{-0.55 + 1.1 * (i + 0.5) / 16.0});
    PullbackOptions opt;
    opt.tol = 1e-6;
    opt.stages = 14;
    const PullbackResult res = pullback_omega_limit(flow, u0, sys.base_point(), opt);
    REQUIRE(res.converged);
    double amp = 0.0;
    for (const Vec& x : res.attractor) amp = std::max(amp, std::abs(x[0]));
    const double oracle_amp = oracle::pullback_amplitude(
        eps, [](double t) { return 2.0 + std::sin(t); }, c3);
    CHECK(amp == doctest::Approx(oracle_amp).epsilon(5e-4));
    // straddles zero: both signs present
    double lo = 1e9, hi = -1e9;
    for (const Vec& x : res.attractor) {
        lo = std::min(lo, x[0]);
        hi = std::max(hi, x[0]);
    }
    CHECK(lo < -0.1);
    CHECK(hi > 0.1);
}
