#pragma once

// Experiment configuration: JSON file -> validated config struct, with
// environment overrides (COCYCLE_<block>__<key>=<json value>).

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cocycle/bifurcation.hpp"
#include "cocycle/errors.hpp"

extern "C" char** environ;

namespace cocycle {

using json = nlohmann::json;

struct ExperimentConfig {
    ModelConfig model;
    std::size_t lambda0_mode = 1;  // lambda0 = mu_k for this k (1-based)

    // lp block
    double rho = 0.06;
    LpSolverParams lp;
    double grid_radius = 0.025;
    std::size_t n_grid = 9;
    std::size_t n_fibers = 8;

    // pullback block
    PullbackOptions pullback;
    std::size_t cloud_size = 64;
    double ball_radius = 0.55;

    // sweep block
    std::vector<double> lambda_grid{0.95, 1.0, 1.02, 1.05, 1.1};
    double extend_radius = 0.6;
    double rho_wide = 1.5;
    double reduced_dt = 0.02;
    double repeller_r_in = 1e-3;
    double repeller_r_out = 1e-2;
    double repeller_deadline = 400.0;
    std::size_t sweep_stages = 22;

    // simulate block
    double sim_amplitude = 0.3;
    double sim_duration = 50.0;
    std::size_t sim_stride = 10;

    IntegratorConfig integrator;
    std::string out_dir = "out";
    std::uint64_t seed = 12345;
    std::size_t workers = 1;

    json resolved;  // the fully resolved config (for artifact headers)

    double lambda0() const {
        const Vec mu = spectrum(model);
        if (lambda0_mode < 1 || lambda0_mode > mu.size())
            throw config_error("spectral: lambda0 mode selector out of range");
        return mu[lambda0_mode - 1];
    }

    SweepParams sweep_params() const {
        SweepParams sp;
        sp.lambda_grid = lambda_grid;
        sp.n_fibers = n_fibers;
        sp.rho = rho;
        sp.graph_radius = grid_radius;
        sp.n_grid = n_grid;
        sp.lp = lp;
        sp.extend_radius = extend_radius;
        sp.rho_wide = rho_wide;
        sp.ball_radius = ball_radius;
        sp.cloud_size = cloud_size;
        sp.reduced_dt = reduced_dt;
        sp.pullback = pullback;
        sp.pullback.stages = sweep_stages;
        sp.pullback.collapse_tol = 5e-4;
        sp.r_in = repeller_r_in;
        sp.r_out = repeller_r_out;
        sp.deadline = repeller_deadline;
        sp.workers = workers;
        sp.seed = seed;
        return sp;
    }

    void validate() const {
        model.validate();
        integrator.validate();
        if (rho <= 0.0) throw config_error("lp: rho must be positive");
        if (lp.dt <= 0.0 || lp.horizon <= 0.0 || lp.tol <= 0.0)
            throw config_error("lp: horizon, dt and tol must be positive");
        if (n_grid < 2) throw config_error("lp: n_grid must be at least 2");
        if (grid_radius <= 0.0) throw config_error("lp: grid_radius must be positive");
        if (n_fibers < 1) throw config_error("lp: n_fibers must be at least 1");
        if (cloud_size < 2) throw config_error("pullback: cloud_size must be at least 2");
        if (pullback.tol <= 0.0 || pullback.t0 <= 0.0 || pullback.stages < 2)
            throw config_error("pullback: t0, tol, stages out of range");
        if (ball_radius <= 0.0) throw config_error("pullback: ball_radius must be positive");
        if (repeller_r_in >= repeller_r_out)
            throw config_error("sweep: repeller radii need r_in < r_out");
        // window preconditions against the spectrum
        const double l0 = lambda0();
        const SpectralSplit sp = split(model, l0);  // throws if outside eta/4
        if (std::abs(model.lambda - l0) >= sp.eta / 8.0)
            throw out_of_window_error("model: |lambda - lambda0| >= eta/8");
        for (double l : lambda_grid)
            if (std::abs(l - l0) >= sp.eta / 8.0)
                throw out_of_window_error("sweep: lambda grid leaves I(lambda0, eta/8)");
    }
};

namespace detail {

inline Forcing forcing_from_json(const json& j) {
    Forcing f;
    const std::string sym = j.value("symbol", std::string("two_plus_sin"));
    if (sym == "two_plus_sin") f.symbol = Forcing::Symbol::two_plus_sin;
    else if (sym == "quasi_two_freq") f.symbol = Forcing::Symbol::quasi_two_freq;
    else if (sym == "constant") f.symbol = Forcing::Symbol::constant;
    else if (sym == "zero") f.symbol = Forcing::Symbol::zero;
    else throw config_error("forcing: unknown symbol '" + sym + "'");
    if (j.contains("omega")) f.omega = j.at("omega").get<std::vector<double>>();
    if (j.contains("coeffs")) f.coeffs = j.at("coeffs").get<std::vector<double>>();
    else if (f.symbol == Forcing::Symbol::constant) f.coeffs = {2.0};
    else if (f.symbol == Forcing::Symbol::quasi_two_freq) f.coeffs = {2.0, 0.6, 0.4};
    if (f.symbol == Forcing::Symbol::quasi_two_freq && f.omega.size() == 1)
        f.omega = {1.0, std::numbers::sqrt2};
    f.delta = j.value("delta", f.symbol == Forcing::Symbol::zero ? 0.0 : 1.0);
    f.sign = j.value("sign", -1);
    if (f.omega.empty()) throw config_error("forcing: need at least one frequency");
    for (double w : f.omega)
        if (w <= 0.0) throw config_error("forcing: frequencies must be positive");
    const std::size_t want = f.symbol == Forcing::Symbol::quasi_two_freq ? 2 : f.omega.size();
    if (f.omega.size() != want) throw config_error("forcing: frequency count mismatch");
    return f;
}

}  // namespace detail

inline ExperimentConfig config_from_json(json j) {
    ExperimentConfig c;
    if (j.contains("model")) {
        const json& m = j["model"];
        c.model.L = m.value("L", c.model.L);
        c.model.N = m.value("N", c.model.N);
        c.model.alpha = m.value("alpha", c.model.alpha);
        c.model.lambda = m.value("lambda", c.model.lambda);
    }
    if (j.contains("forcing")) c.model.forcing = detail::forcing_from_json(j["forcing"]);
    if (j.contains("spectral")) c.lambda0_mode = j["spectral"].value("lambda0_mode", c.lambda0_mode);
    if (j.contains("lp")) {
        const json& l = j["lp"];
        c.rho = l.value("rho", c.rho);
        c.lp.horizon = l.value("horizon", c.lp.horizon);
        c.lp.dt = l.value("dt", c.lp.dt);
        c.lp.tol = l.value("tol", c.lp.tol);
        c.grid_radius = l.value("grid_radius", c.grid_radius);
        c.n_grid = l.value("n_grid", c.n_grid);
        c.n_fibers = l.value("n_fibers", c.n_fibers);
    }
    if (j.contains("pullback")) {
        const json& p = j["pullback"];
        c.cloud_size = p.value("cloud_size", c.cloud_size);
        c.ball_radius = p.value("ball_radius", c.ball_radius);
        c.pullback.t0 = p.value("t0", c.pullback.t0);
        c.pullback.stages = p.value("stages", c.pullback.stages);
        c.pullback.tol = p.value("tol", c.pullback.tol);
        c.pullback.dt_cap = p.value("dt_cap", c.pullback.dt_cap);
    }
    if (j.contains("sweep")) {
        const json& s = j["sweep"];
        if (s.contains("lambda_grid")) c.lambda_grid = s["lambda_grid"].get<std::vector<double>>();
        c.extend_radius = s.value("extend_radius", c.extend_radius);
        c.rho_wide = s.value("rho_wide", c.rho_wide);
        c.reduced_dt = s.value("reduced_dt", c.reduced_dt);
        c.repeller_r_in = s.value("repeller_r_in", c.repeller_r_in);
        c.repeller_r_out = s.value("repeller_r_out", c.repeller_r_out);
        c.repeller_deadline = s.value("repeller_deadline", c.repeller_deadline);
        c.sweep_stages = s.value("stages", c.sweep_stages);
    }
    if (j.contains("simulate")) {
        const json& s = j["simulate"];
        c.sim_amplitude = s.value("amplitude", c.sim_amplitude);
        c.sim_duration = s.value("duration", c.sim_duration);
        c.sim_stride = s.value("stride", c.sim_stride);
    }
    if (j.contains("integrator")) {
        const json& i = j["integrator"];
        c.integrator.dt = i.value("dt", c.integrator.dt);
        c.integrator.blowup_threshold = i.value("blowup_threshold", c.integrator.blowup_threshold);
        const std::string sch = i.value("scheme", std::string("etd2"));
        if (sch == "etd1") c.integrator.scheme = IntegratorConfig::Scheme::etd1;
        else if (sch == "etd2") c.integrator.scheme = IntegratorConfig::Scheme::etd2;
        else throw config_error("integrator: unknown scheme '" + sch + "'");
    }
    if (j.contains("output")) c.out_dir = j["output"].value("dir", c.out_dir);
    c.seed = j.value("seed", c.seed);
    c.workers = j.value("workers", c.workers);
    c.resolved = std::move(j);
    return c;
}

// COCYCLE_<block>__<key>=<value>; value parsed as JSON, else taken as string.
inline void apply_env_overrides(json& j, const std::string& prefix = "COCYCLE_") {
    for (char** e = environ; e && *e; ++e) {
        const std::string entry(*e);
        if (entry.rfind(prefix, 0) != 0) continue;
        const auto eq = entry.find('=');
        if (eq == std::string::npos) continue;
        std::string path = entry.substr(prefix.size(), eq - prefix.size());
        const std::string raw = entry.substr(eq + 1);
        json* node = &j;
        std::size_t pos = 0;
        while (true) {
            const auto sep = path.find("__", pos);
            const std::string key = path.substr(pos, sep == std::string::npos ? sep : sep - pos);
            if (sep == std::string::npos) {
                json val;
                try {
                    val = json::parse(raw);
                } catch (...) {
                    val = raw;
                }
                (*node)[key] = val;
                break;
            }
            node = &(*node)[key];
            pos = sep + 2;
        }
    }
}

inline ExperimentConfig load_config(const std::string& path, bool env_overrides = true) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw config_error(std::string("config parse failure: ") + e.what());
    }
    if (env_overrides) apply_env_overrides(j);
    ExperimentConfig c = config_from_json(std::move(j));
    c.validate();
    return c;
}

}  // namespace cocycle
