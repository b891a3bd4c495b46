#pragma once

// The reduced flow on the center direction,
//
//   y' = (lambda - lambda0) y + Pi_c g(t, y + xi_{theta_t p}(y)),
//
// its time reversal (used for the opposite-sign branch), the annulus-exit
// repeller test, the lift y -> y + xi_p(y), the lambda sweep assembling the
// bifurcation diagram, and the upper-semicontinuity check on the diagram.
//
// The reduced nonlinearity carries a wide cutoff radius of its own; on the
// working ball the cutoff is inactive, so the flow coincides with the raw
// reduced equation there, while stray cloud points stay globally Lipschitz.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cocycle/errors.hpp"
#include "cocycle/lyapunov_perron.hpp"
#include "cocycle/parallel.hpp"
#include "cocycle/pullback.hpp"

namespace cocycle {

struct ReducedFlow {
    GraphFamily family;
    DiagonalSystem sys;   // full system with the raw nonlinearity
    SpectralSplit split;
    double rho_wide = 1.5;   // cutoff radius of the reduced nonlinearity
    bool reversed = false;   // integrate the time-reversed reduced equation
    // fast path for the Galerkin model on a one-frequency hull: evaluates
    // only the center projection, with no temporaries
    bool fast = false;
    ModelConfig model;
    CollocationPlan plan;

    double linear_rate() const {
        const double r = sys.lambda - split.lambda0;
        return reversed ? -r : r;
    }

    // Pi_c of the (wide-cutoff) nonlinearity evaluated on the manifold.
    double nonlinear_part(double t, const HullPoint& p, double y) const {
        const std::size_t c = family.center();
        const double ts = reversed ? -t : t;
        if (fast && p.phases.size() == 1) {
            const double h = evaluate_forcing(model.forcing, p, ts);
            if (h == 0.0) return 0.0;
            thread_local Vec u, phys;
            family.xi_into(p.phases[0] + ts * sys.omega[0], y, u);
            u[c] = y;
            const double chi = cutoff_value(sys.state_norm(u) / rho_wide);
            if (chi == 0.0) return 0.0;
            plan.synthesize(u, phys);
            for (double& v : phys) v = v * v * v;
            const double gc =
                double(model.forcing.sign) * h * chi * plan.project_row(phys, c);
            return (reversed ? -1.0 : 1.0) * gc;
        }
        Vec u = family.xi(translate(p, sys.omega, ts), y);
        u[c] = y;
        const double chi = cutoff_value(sys.state_norm(u) / rho_wide);
        if (chi == 0.0) return 0.0;
        const double gc = sys.g(ts, p, u)[c];
        return (reversed ? -1.0 : 1.0) * chi * gc;
    }

    double rhs(double t, const HullPoint& p, double y) const {
        return linear_rate() * y + nonlinear_part(t, p, y);
    }
};

inline ReducedFlow make_galerkin_reduced_flow(const ModelConfig& cfg, GraphFamily family,
                                              const SpectralSplit& sp, double rho_wide,
                                              bool reversed) {
    ReducedFlow rf{std::move(family), make_galerkin_system(cfg), sp, rho_wide, reversed,
                   /*fast=*/true, cfg, default_plan(cfg)};
    return rf;
}

inline double reduced_rhs(const ReducedFlow& rf, double t, const HullPoint& p, double y) {
    if (std::abs(y) > rf.family.domain_radius() + 1e-12)
        throw graph_domain_error("reduced_rhs: center value outside the graph domain");
    return rf.rhs(t, p, y);
}

// Scalar ETD2 on the reduced equation; domain-checked every step.
inline double evolve_reduced(const ReducedFlow& rf, const HullPoint& p, double y0, double t,
                             double dt) {
    if (t < 0.0) throw config_error("evolve_reduced: duration must be nonnegative");
    const double dom = rf.family.domain_radius() + 1e-12;
    const double l = rf.linear_rate();
    double y = y0;
    double done = 0.0;
    const auto n_full = std::size_t(std::floor(t / dt + 1e-12));
    const double ez = std::exp(l * dt);
    const double p1 = dt * detail::phi1(l * dt);
    const double p2 = dt * detail::phi2(l * dt);
    auto step = [&](double h, double eh, double f1, double f2, double tl) {
        const double n0 = rf.nonlinear_part(tl, p, y);
        const double a = eh * y + f1 * n0;
        const double n1 = rf.nonlinear_part(tl + h, p, a);
        y = a + f2 * (n1 - n0);
        if (!std::isfinite(y)) throw divergence_error("evolve_reduced: state became non-finite", tl + h);
        if (std::abs(y) > dom)
            throw graph_domain_error("evolve_reduced: trajectory left the graph domain");
    };
    for (std::size_t i = 0; i < n_full; ++i, done += dt) step(dt, ez, p1, p2, done);
    const double rem = t - done;
    if (rem > 1e-12 * std::max(1.0, t))
        step(rem, std::exp(l * rem), rem * detail::phi1(l * rem), rem * detail::phi2(l * rem), done);
    return y;
}

// Reduced flow as a generic cocycle flow over 1-d states. The reversed flow
// is driven by the reversed base flow, hence the negated frequencies.
inline CocycleFlow make_reduced_flow(const ReducedFlow& rf, double dt0) {
    CocycleFlow f;
    f.omega = rf.sys.omega;
    if (rf.reversed)
        for (double& w : f.omega) w = -w;
    f.metric = StateMetric{Vec{rf.sys.mu[rf.family.center()]}, rf.sys.alpha};
    f.dt0 = dt0;
    f.phi = [rf](const HullPoint& p, const Vec& y, double t, double dt) {
        return Vec{evolve_reduced(rf, p, y[0], t, dt)};
    };
    return f;
}

// True iff every reduced trajectory started on the r_in sphere leaves the
// r_out ball before the deadline; false iff some trajectory has contracted
// back inside r_in by then; inconclusive otherwise. Meaningful on either
// side of lambda0 (below it the flow contracts and the answer is false).
inline bool repeller_check(const ReducedFlow& rf, const HullPoint& p, double r_in, double r_out,
                           double deadline, double dt) {
    if (r_in >= r_out) throw config_error("repeller_check: need r_in < r_out");
    if (r_out > rf.family.domain_radius())
        throw config_error("repeller_check: annulus must sit inside the graph domain");
    bool any_unresolved = false;
    for (double y0 : {r_in, -r_in}) {
        double y = y0;
        bool exited = false;
        for (double t = 0.0; t < deadline; t += dt) {
            y = evolve_reduced(rf, translate(p, rf.sys.omega, t), y, dt, dt);
            if (std::abs(y) >= r_out) {
                exited = true;
                break;
            }
        }
        if (!exited) {
            if (std::abs(y) <= r_in) return false;  // contracted: 0 attracts here
            any_unresolved = true;
        }
    }
    if (any_unresolved)
        throw inconclusive_error("repeller_check: deadline too short to classify the annulus exit");
    return true;
}

// B(p) = { y + xi_p(y) : y in A }, center cloud to full-state cloud.
inline Cloud lift(const Cloud& center_cloud, const GraphFamily& fam, const HullPoint& p) {
    Cloud out;
    out.reserve(center_cloud.size());
    const std::size_t c = fam.center();
    for (const Vec& yv : center_cloud) {
        Vec u = fam.xi(p, yv.at(0));
        u[c] = yv[0];
        out.push_back(std::move(u));
    }
    return out;
}

struct DiagramRow {
    double lambda = 0.0;
    std::size_t fiber_index = 0;
    HullPoint fiber;
    Cloud attractor_center;  // A_lambda(p), center coordinates
    Cloud lifted;            // B_lambda(p)
    double h_alpha = std::numeric_limits<double>::quiet_NaN();  // H(B_lambda(p), {0})
    double dist0 = std::numeric_limits<double>::quiet_NaN();    // dist(0, A_lambda(p))
    int repeller = -1;  // 1 yes, 0 no, -1 not checked, -2 inconclusive
    bool converged = false;
    bool collapsed = false;
    std::size_t stages = 0;
    double wallclock_ms = 0.0;
    std::string error;
};

struct BifurcationDiagram {
    double lambda0 = 0.0;
    int sign = -1;
    std::vector<double> lambda_grid;
    std::vector<HullPoint> fibers;
    std::vector<DiagramRow> rows;  // ordered by (lambda, fiber)
    std::vector<double> l2_chain;  // empirical lambda-Lipschitz between adjacent grids
};

struct SweepParams {
    std::vector<double> lambda_grid{0.95, 1.0, 1.02, 1.05, 1.1};
    std::size_t n_fibers = 4;
    // manifold stage
    double rho = 0.06;
    double graph_radius = 0.025;
    std::size_t n_grid = 9;
    LpSolverParams lp;
    double extend_radius = 0.6;
    double rho_wide = 1.5;
    // pullback stage
    double ball_radius = 0.55;
    std::size_t cloud_size = 64;
    double reduced_dt = 0.02;
    PullbackOptions pullback;
    // repeller stage
    double r_in = 1e-3;
    double r_out = 1e-2;
    double deadline = 400.0;
    std::size_t workers = 1;
    std::uint64_t seed = 12345;
};

// Seeded symmetric cloud in [-R, R] (never exactly 0).
inline Cloud sample_center_ball(double radius, std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> mag(1e-3, 1.0);
    Cloud c;
    c.reserve(count);
    for (std::size_t i = 0; i < count; i += 2) {
        const double y = radius * mag(rng);
        c.push_back(Vec{y});
        if (c.size() < count) c.push_back(Vec{-y});
    }
    return c;
}

// The full sweep: per lambda, build the manifold family, run the reduced
// pullback omega-limit over the center ball, lift through xi, measure
// H(B_lambda(p), {0}), and run the repeller test on the lambda > lambda0
// side. Stage errors are recorded per row; the sweep continues.
inline BifurcationDiagram sweep(const ModelConfig& base, double lambda0, const SweepParams& prm) {
    BifurcationDiagram diag;
    diag.lambda0 = lambda0;
    diag.sign = base.forcing.sign;
    diag.lambda_grid = prm.lambda_grid;
    diag.fibers = sample_hull(base.forcing.omega.size(), prm.n_fibers);

    {  // window precondition for the whole grid
        const SpectralSplit sp0 = split_spectrum(spectrum(base), base.lambda, lambda0);
        for (double l : prm.lambda_grid)
            if (std::abs(l - lambda0) >= sp0.eta / 8.0)
                throw out_of_window_error("sweep: lambda grid must sit inside I(lambda0, eta/8)");
    }

    const bool reversed = base.forcing.sign > 0;
    GraphFamily prev_family;
    bool have_prev = false;

    for (std::size_t li = 0; li < prm.lambda_grid.size(); ++li) {
        const double lam = prm.lambda_grid[li];
        ModelConfig cfg = base;
        cfg.lambda = lam;
        const DiagonalSystem sys = make_galerkin_system(cfg);
        const SpectralSplit sp = split_spectrum(sys.mu, lam, lambda0);
        const TruncationConfig tc = make_truncation_config(prm.rho, cfg);

        GraphFamily family;
        std::string family_error;
        try {
            family = build_graph_family(sys, sp, tc, prm.n_fibers, prm.graph_radius, prm.n_grid,
                                        prm.lp, prm.extend_radius);
            if (have_prev && prev_family.graphs.size() == family.graphs.size() &&
                prev_family.graphs[0].grid.size() == family.graphs[0].grid.size() &&
                prev_family.graphs[0].radius == family.graphs[0].radius) {
                double l2 = 0.0;
                for (std::size_t f = 0; f < family.graphs.size(); ++f)
                    l2 = std::max(l2, lambda_lipschitz_emp(prev_family.graphs[f], family.graphs[f], sys));
                diag.l2_chain.push_back(l2);
                for (std::size_t f = 0; f < family.graphs.size(); ++f) family.graphs[f].l2_emp = l2;
            }
            prev_family = family;
            have_prev = true;
        } catch (const error& e) {
            family_error = e.what();
        }

        std::vector<DiagramRow> rows(diag.fibers.size());
        parallel_for(diag.fibers.size(), prm.workers, [&](std::size_t fi) {
            DiagramRow& row = rows[fi];
            row.lambda = lam;
            row.fiber_index = fi;
            row.fiber = diag.fibers[fi];
            const auto t_start = std::chrono::steady_clock::now();
            try {
                if (!family_error.empty()) throw error(family_error);
                const ReducedFlow rf =
                    make_galerkin_reduced_flow(cfg, family, sp, prm.rho_wide, reversed);
                const CocycleFlow flow = make_reduced_flow(rf, prm.reduced_dt);
                const Cloud u0 = sample_center_ball(
                    prm.ball_radius, prm.cloud_size,
                    prm.seed + 1000003ULL * fi + 7919ULL * li);
                const PullbackResult pb = pullback_omega_limit(flow, u0, row.fiber, prm.pullback);
                row.converged = pb.converged;
                row.collapsed = pb.collapsed;
                row.stages = pb.stages_run;
                row.attractor_center = pb.attractor;
                row.lifted = lift(pb.attractor, family, row.fiber);
                const StateMetric full_metric{sys.mu, sys.alpha};
                row.h_alpha = hausdorff_semidist(row.lifted, Cloud{Vec(sys.dim(), 0.0)}, full_metric);
                double d0 = std::numeric_limits<double>::infinity();
                for (const Vec& yv : pb.attractor) d0 = std::min(d0, flow.metric.norm(yv));
                row.dist0 = d0;
                if (lam > lambda0) {
                    ReducedFlow forward = rf;
                    forward.reversed = false;
                    try {
                        row.repeller = repeller_check(forward, row.fiber, prm.r_in, prm.r_out,
                                                      prm.deadline, prm.reduced_dt)
                                           ? 1
                                           : 0;
                    } catch (const inconclusive_error&) {
                        row.repeller = -2;
                    }
                }
                if (!pb.converged) row.error = "pullback schedule exhausted without convergence";
            } catch (const divergence_error& e) {
                row.error = std::string("divergence at t = ") + std::to_string(e.time);
            } catch (const error& e) {
                row.error = e.what();
            }
            row.wallclock_ms = std::chrono::duration<double, std::milli>(
                                   std::chrono::steady_clock::now() - t_start)
                                   .count();
        });
        for (auto& r : rows) diag.rows.push_back(std::move(r));
    }
    return diag;
}

// Least-squares fit of log y = e log x + b; returns {exponent, coefficient}.
inline std::pair<double, double> fit_power_law(const std::vector<double>& x,
                                               const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw config_error("fit_power_law: need at least two points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = double(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double e = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double b = (sy - e * sx) / n;
    return {e, std::exp(b)};
}

struct SemicontinuityReport {
    bool pass = true;
    bool monotone = true;
    double fitted_exponent = 0.0;
    double extrapolated_h = 0.0;  // fitted H at the grid's smallest offset
    std::string note;
};

// H(A_lambda(p), A_lambda0(p)) must decrease along lambda -> lambda0 on the
// bifurcated side and extrapolate below tol_curve at the smallest offset.
// A_lambda0(p) = {0} here, so the check reduces to the diagram's H column.
inline SemicontinuityReport upper_semicontinuity_check(const BifurcationDiagram& diag,
                                                       double lambda0, double tol_curve) {
    SemicontinuityReport rep;
    std::vector<double> offsets, hs;
    for (std::size_t fi = 0;; ++fi) {
        std::vector<std::pair<double, double>> seq;  // (offset, H), bifurcated side
        bool saw = false;
        for (const auto& row : diag.rows) {
            if (row.fiber_index != fi || !row.error.empty()) continue;
            saw = true;
            const double off = diag.sign < 0 ? row.lambda - lambda0 : lambda0 - row.lambda;
            if (off > 0.0 && std::isfinite(row.h_alpha)) seq.emplace_back(off, row.h_alpha);
        }
        if (!saw) break;
        std::sort(seq.begin(), seq.end());
        for (std::size_t i = 1; i < seq.size(); ++i)
            if (seq[i].second < seq[i - 1].second * 0.999) rep.monotone = false;
        for (const auto& [o, h] : seq) {
            offsets.push_back(o);
            hs.push_back(h);
        }
    }
    std::size_t distinct = 0;
    {
        std::vector<double> u = offsets;
        std::sort(u.begin(), u.end());
        distinct = std::unique(u.begin(), u.end()) - u.begin();
    }
    if (distinct >= 2) {
        const auto [e, c] = fit_power_law(offsets, hs);
        rep.fitted_exponent = e;
        const double omin = *std::min_element(offsets.begin(), offsets.end());
        rep.extrapolated_h = c * std::pow(omin, e);
        rep.pass = rep.monotone && rep.extrapolated_h < tol_curve;
    } else {
        rep.note = "fewer than two bifurcated-side offsets; only monotonicity checked";
        rep.pass = rep.monotone;
    }
    return rep;
}

}  // namespace cocycle
