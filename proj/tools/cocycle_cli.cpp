// Batch front end: parse an experiment config, run one pipeline, emit CSV
// artifacts. Subcommands: simulate, manifold, attractor, bifurcate, verify.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>

#include <CLI11.hpp>

#include "cocycle/config.hpp"
#include "cocycle/io.hpp"

namespace fs = std::filesystem;
using namespace cocycle;

namespace {

int g_log_level = 1;  // 0 quiet, 1 info, 2 debug

void info(const std::string& msg) {
    if (g_log_level >= 1) std::cout << msg << "\n";
}

std::ofstream open_out(const fs::path& dir, const std::string& name) {
    fs::create_directories(dir);
    std::ofstream os(dir / name);
    if (!os) throw error("cannot open output file: " + (dir / name).string());
    return os;
}

std::string config_line(const ExperimentConfig& c) { return c.resolved.dump(); }

int run_simulate(const ExperimentConfig& c) {
    const DiagonalSystem sys = make_galerkin_system(c.model);
    const HullPoint p0 = sys.base_point();
    Vec u(c.model.N, 0.0);
    u[0] = c.sim_amplitude;

    std::vector<double> times, norms;
    std::vector<HullPoint> phases;
    std::vector<Vec> states;
    const double dt = c.integrator.dt;
    const std::size_t steps = std::size_t(std::llround(c.sim_duration / dt));
    double t = 0.0;
    const EtdTableau tab(sys, dt);
    for (std::size_t i = 0; i <= steps; ++i) {
        if (i % c.sim_stride == 0) {
            times.push_back(t);
            phases.push_back(translate(p0, sys.omega, t));
            states.push_back(u);
            norms.push_back(sys.state_norm(u));
        }
        if (i == steps) break;
        etd_step(sys, p0, t, tab, u, c.integrator.scheme);
        t += dt;
        if (!all_finite(u) || sys.state_norm(u) > c.integrator.blowup_threshold)
            throw divergence_error("simulate: blow-up", t);
    }
    auto os = open_out(c.out_dir, "trajectory.csv");
    write_trajectory_csv(os, config_line(c), times, phases, states, norms);
    info("wrote " + (fs::path(c.out_dir) / "trajectory.csv").string());
    return 0;
}

int run_manifold(const ExperimentConfig& c) {
    const DiagonalSystem sys = make_galerkin_system(c.model);
    const double l0 = c.lambda0();
    const SpectralSplit sp = split(c.model, l0);
    const TruncationConfig tc = make_truncation_config(c.rho, c.model);
    // the contraction gate; throws with the M_rho >= 1 message when violated
    const double m_rho = contraction_constant(c.rho, c.model.alpha, sp.eta, c.model);

    GraphFamily fam = build_graph_family(sys, sp, tc, c.n_fibers, c.grid_radius, c.n_grid, c.lp,
                                         c.extend_radius);

    // companion solve at a nearby lambda for the empirical lambda-Lipschitz
    ModelConfig cfg2 = c.model;
    cfg2.lambda = c.model.lambda + std::min(sp.eta / 200.0, 0.45 * (sp.eta / 8.0));
    const DiagonalSystem sys2 = make_galerkin_system(cfg2);
    const SpectralSplit sp2 = split(cfg2, l0);
    GraphFamily fam2 = build_graph_family(sys2, sp2, tc, c.n_fibers, fam.graphs[0].radius, c.n_grid,
                                          c.lp, c.extend_radius);
    double l2 = 0.0, l1 = 0.0;
    for (std::size_t f = 0; f < fam.graphs.size(); ++f) {
        l2 = std::max(l2, lambda_lipschitz_emp(fam.graphs[f], fam2.graphs[f], sys));
        l1 = std::max(l1, fam.graphs[f].l1_emp);
    }
    for (auto& g : fam.graphs) g.l2_emp = l2;

    auto os = open_out(c.out_dir, "manifold.csv");
    write_graph_family_csv(os, config_line(c), fam);
    auto rep = open_out(c.out_dir, "manifold_report.txt");
    rep << "manifold certification\n"
        << "lambda        " << fmt(c.model.lambda) << "\n"
        << "lambda0       " << fmt(l0) << "\n"
        << "eta           " << fmt(sp.eta) << "\n"
        << "rho           " << fmt(c.rho) << "\n"
        << "k_rho         " << fmt(tc.k_rho) << "\n"
        << "M_rho         " << fmt(m_rho) << "\n"
        << "L1_certified  " << fmt(1.0 / (1.0 - m_rho) + 1.0) << "\n"
        << "L1_empirical  " << fmt(l1) << "\n"
        << "L2_empirical  " << fmt(l2) << "\n"
        << "radius        " << fmt(fam.graphs[0].radius) << "\n"
        << "fibers        " << fam.graphs.size() << "\n";
    info("wrote " + (fs::path(c.out_dir) / "manifold.csv").string());
    return 0;
}

Cloud sample_state_ball(const DiagonalSystem& sys, double radius, std::size_t count,
                        std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> mag(0.05, 1.0);
    Cloud c;
    c.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Vec g(sys.dim());
        for (double& v : g) v = gauss(rng);
        const double n = sys.state_norm(g);
        c.push_back(scaled(g, radius * mag(rng) / (n > 0 ? n : 1.0)));
    }
    return c;
}

int run_attractor(const ExperimentConfig& c) {
    const DiagonalSystem sys = make_galerkin_system(c.model);
    const CocycleFlow flow = make_flow(sys, c.integrator);
    const auto fibers = sample_hull(sys.omega.size(), c.n_fibers);
    std::vector<Cloud> clouds(fibers.size());
    std::vector<AttractionTrace> traces(fibers.size());
    bool all_converged = true;
    PullbackOptions opt = c.pullback;
    for (std::size_t f = 0; f < fibers.size(); ++f) {
        const Cloud u0 =
            sample_state_ball(sys, c.ball_radius, c.cloud_size, c.seed + 1000003ULL * f);
        const PullbackResult res = pullback_omega_limit(flow, u0, fibers[f], opt);
        clouds[f] = res.attractor;
        traces[f].fiber = fibers[f];
        traces[f].distances = res.trace;
        traces[f].attracts = res.converged;
        if (!res.converged) all_converged = false;
    }
    auto os = open_out(c.out_dir, "attractor.csv");
    write_cloud_csv(os, config_line(c), fibers, clouds);
    auto tr = open_out(c.out_dir, "attractor_trace.txt");
    write_trace_report(tr, "pullback omega-limit traces (t, consecutive-image distance)", traces);
    info("wrote " + (fs::path(c.out_dir) / "attractor.csv").string());
    if (!all_converged) {
        std::cerr << "attractor: schedule exhausted without convergence on some fibers "
                     "(partial artifacts written)\n";
        return 3;
    }
    return 0;
}

int run_bifurcate(const ExperimentConfig& c) {
    const BifurcationDiagram diag = sweep(c.model, c.lambda0(), c.sweep_params());
    auto os = open_out(c.out_dir, "bifurcation.csv");
    write_diagram_csv(os, config_line(c), diag);
    for (std::size_t f = 0; f < diag.fibers.size(); ++f) {
        auto pf = open_out(c.out_dir, "plot_fiber" + std::to_string(f) + ".dat");
        write_plot_data(pf, diag, f);
    }
    const SemicontinuityReport sc = upper_semicontinuity_check(diag, diag.lambda0, 0.2);
    info("upper semicontinuity: " + std::string(sc.pass ? "ok" : "violated") +
         " (fitted exponent " + fmt(sc.fitted_exponent) + ", extrapolated H " +
         fmt(sc.extrapolated_h) + ")");
    bool any_error = false;
    for (const auto& r : diag.rows)
        if (!r.error.empty()) any_error = true;
    info("wrote " + (fs::path(c.out_dir) / "bifurcation.csv").string());
    if (any_error) {
        std::cerr << "bifurcate: some rows recorded errors (see the error column)\n";
        return 3;
    }
    return 0;
}

struct CheckPrinter {
    bool all_pass = true;
    void line(const std::string& name, bool pass, const std::string& detail = "") {
        std::cout << (pass ? "[PASS] " : "[FAIL] ") << name;
        if (!detail.empty()) std::cout << " — " << detail;
        std::cout << "\n";
        all_pass = all_pass && pass;
    }
};

int run_verify(const ExperimentConfig& c) {
    CheckPrinter out;

    {  // cocycle law on the scalar cubic example, convergence order of the residual
        const DiagonalSystem scalar = make_scalar_cubic_system(3.0, 0.0, [] {
            Forcing f = Forcing::two_plus_sin();
            f.sign = +1;
            return f;
        }());
        const HullPoint p0 = scalar.base_point();
        IntegratorConfig ic;
        ic.dt = 0.04;
        const double r1 = cocycle_residual_vs_reference(scalar, 1.0, 1.0 / 3.0, p0, Vec{0.4}, ic);
        ic.dt = 0.02;
        const double r2 = cocycle_residual_vs_reference(scalar, 1.0, 1.0 / 3.0, p0, Vec{0.4}, ic);
        ic.dt = 0.01;
        const double r3 = cocycle_residual_vs_reference(scalar, 1.0, 1.0 / 3.0, p0, Vec{0.4}, ic);
        const double q = 0.5 * (std::log2(r1 / r2) + std::log2(r2 / r3));
        out.line("cocycle law residual order", std::abs(q - 2.0) <= 0.3,
                 "fitted order " + fmt(q));
    }

    {  // dissipativity margins
        ModelConfig m = c.model;
        m.forcing.sign = -1;
        std::vector<ModalState> states;
        std::mt19937_64 rng(c.seed);
        std::normal_distribution<double> gauss(0.0, 0.2);
        for (int i = 0; i < 12; ++i) {
            ModalState u(m.N, 0.0);
            for (double& v : u) v = gauss(rng);
            states.push_back(u);
        }
        states.push_back(ModalState(m.N, 0.0));
        const auto phases = sample_hull(m.forcing.omega.size(), 8);
        const F1Report rep = check_F1(m, states, phases);
        out.line("dissipativity inequality (sign -1)", rep.pass,
                 "worst margin " + fmt(rep.worst_margin));
        m.forcing.sign = +1;
        const F1Report rep2 = check_F1(m, states, phases);
        out.line("reversed inequality (sign +1)", rep2.pass,
                 "worst margin " + fmt(rep2.worst_margin));
    }

    {  // semigroup bounds
        ModelConfig m = c.model;
        m.lambda = 1.1;
        const SpectralSplit sp = split(m, 1.0);
        const auto rep = semigroup_bound_check(sp, m.alpha, {-10.0, -5.0, -1.0, 0.1, 1.0, 10.0});
        out.line("semigroup bounds (center eigenvalue)", rep.pass,
                 "worst slack " + fmt(rep.worst_slack) + " at " + rep.worst_case);
        ModelConfig m2 = c.model;
        m2.lambda = 4.1;
        const SpectralSplit sp2 = split(m2, 4.0);
        const auto rep2 = semigroup_bound_check(sp2, m2.alpha, {-10.0, -5.0, -1.0, 0.1, 1.0, 10.0});
        out.line("semigroup bounds (second eigenvalue)", rep2.pass,
                 "worst slack " + fmt(rep2.worst_slack) + " at " + rep2.worst_case);
    }

    {  // pullback vs skew-product equivalence, attracting and escaping data
        Forcing f = Forcing::two_plus_sin();
        f.sign = +1;
        const DiagonalSystem scalar = make_scalar_cubic_system(3.0, 0.0, f);
        IntegratorConfig ic;
        ic.dt = 0.01;
        const CocycleFlow flow = make_flow(scalar, ic);
        const auto fibers = sample_hull(1, 32);
        const NonautCloud K = NonautCloud::constant(fibers, Cloud{Vec{0.0}});
        Cloud inside;
        for (int i = 0; i < 10; ++i) inside.push_back(Vec{-0.45 + 0.1 * i});
        const NonautCloud B_in = NonautCloud::constant(fibers, inside);
        const auto eq_in = skew_equivalence_check(K, B_in, flow, {1, 2, 4, 8, 16}, 1e-3);
        out.line("equivalence, basin data", eq_in.agree && eq_in.pullback.attracts,
                 "both sides attract");
        const NonautCloud B_out =
            NonautCloud::constant(fibers, Cloud{Vec{2.2}, Vec{-2.4}, Vec{2.8}});
        const auto eq_out = skew_equivalence_check(K, B_out, flow, {1, 2, 4, 8, 16}, 1e-3);
        out.line("equivalence, escaping data", eq_out.agree && !eq_out.pullback.attracts,
                 "both sides fail");
    }

    {  // quadratic benchmark manifold
        const DiagonalSystem bench = make_quadratic_benchmark_system();
        const SpectralSplit sp = split_spectrum(bench.mu, 0.0, 0.0);
        TruncationConfig tc;
        tc.rho = 0.007;
        tc.k_rho = (1.0 + cutoff_max_slope) * 2.0 * tc.rho;
        LpSolverParams prm;
        prm.horizon = 30.0;
        prm.dt = 0.01;
        prm.tol = 1e-12;
        const ManifoldGraph g =
            build_manifold(bench, sp, tc, bench.base_point(), 0.003, 9, prm, false);
        double worst = 0.0;
        for (std::size_t j = 0; j < g.grid.size(); ++j)
            worst = std::max(worst, std::abs(g.xi[j][1] - g.grid[j] * g.grid[j]));
        out.line("benchmark manifold xi(y) = y^2", worst <= 1e-6, "sup error " + fmt(worst));
    }

    std::cout << (out.all_pass ? "verify: all checks passed\n" : "verify: FAILURES present\n");
    return out.all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nonautonomous bifurcation toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir_override;
    std::string log_level = "info";
    std::uint64_t seed_override = 0;
    bool seed_set = false;
    std::size_t workers_override = 0;

    app.add_option("--config", config_path, "experiment config (JSON)")->required();
    app.add_option("--out", out_dir_override, "output directory override");
    app.add_option("--workers", workers_override, "worker pool size override");
    app.add_option("--seed", seed_override, "RNG seed override")->each([&](const std::string&) {
        seed_set = true;
    });
    app.add_option("--log-level", log_level, "quiet|info|debug");

    auto* sim = app.add_subcommand("simulate", "single trajectory CSV");
    auto* man = app.add_subcommand("manifold", "manifold graph CSV + certification report");
    auto* att = app.add_subcommand("attractor", "pullback omega-limit CSV + traces");
    auto* bif = app.add_subcommand("bifurcate", "lambda sweep: diagram CSV + plot data");
    auto* ver = app.add_subcommand("verify", "run the property suite");
    for (auto* sub : {sim, man, att, bif, ver}) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    g_log_level = log_level == "quiet" ? 0 : log_level == "debug" ? 2 : 1;

    try {
        ExperimentConfig cfg = load_config(config_path);
        if (!out_dir_override.empty()) cfg.out_dir = out_dir_override;
        if (seed_set) cfg.seed = seed_override;
        if (workers_override > 0) cfg.workers = workers_override;

        if (sim->parsed()) return run_simulate(cfg);
        if (man->parsed()) return run_manifold(cfg);
        if (att->parsed()) return run_attractor(cfg);
        if (bif->parsed()) return run_bifurcate(cfg);
        if (ver->parsed()) return run_verify(cfg);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const gate_error& e) {
        std::cerr << "gate error: " << e.what() << "\n";
        return 2;
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
