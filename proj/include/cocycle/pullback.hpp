#pragma once

// Pullback omega-limits on point clouds, Hausdorff semidistance, and the
// numeric equivalence between pullback attraction of the cocycle and forward
// attraction of the skew product.
//
// Nonautonomous sets are finite per-fiber point clouds; set evolution is
// pointwise evolution. Pullback images at time t always evolve forward from
// the shifted fiber theta_{-t} p.

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "cocycle/errors.hpp"
#include "cocycle/flow.hpp"
#include "cocycle/system.hpp"

namespace cocycle {

using Cloud = std::vector<Vec>;

struct StateMetric {
    Vec mu;
    double alpha = 0.0;

    double norm(const Vec& x) const { return fractional_norm(x, alpha, mu); }
    double dist(const Vec& a, const Vec& b) const { return norm(sub(a, b)); }
};

// H(M, N) = max over x in M of the distance from x to N. Asymmetric.
inline double hausdorff_semidist(const Cloud& M, const Cloud& N, const StateMetric& metric) {
    if (M.empty() || N.empty()) throw empty_cloud_error("hausdorff_semidist: empty point cloud");
    double h = 0.0;
    for (const Vec& x : M) {
        double d = std::numeric_limits<double>::infinity();
        for (const Vec& y : N) d = std::min(d, metric.dist(x, y));
        h = std::max(h, d);
    }
    return h;
}

inline double hausdorff_symmetric(const Cloud& M, const Cloud& N, const StateMetric& metric) {
    return std::max(hausdorff_semidist(M, N, metric), hausdorff_semidist(N, M, metric));
}

// Covering radius of a cloud: max over points of the nearest-other-point
// distance (zero for singletons).
inline double cloud_resolution(const Cloud& M, const StateMetric& metric) {
    if (M.size() < 2) return 0.0;
    double r = 0.0;
    for (std::size_t i = 0; i < M.size(); ++i) {
        double d = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < M.size(); ++j)
            if (j != i) d = std::min(d, metric.dist(M[i], M[j]));
        r = std::max(r, d);
    }
    return r;
}

// A cocycle flow bundled with what the set operations need: base frequencies,
// a state metric, and phi(p, x, t) with a per-call step size.
struct CocycleFlow {
    std::vector<double> omega;
    StateMetric metric;
    std::function<Vec(const HullPoint&, const Vec&, double, double)> phi;  // (p, x, t, dt)
    double dt0 = 0.01;

    Vec run(const HullPoint& p, const Vec& x, double t) const { return phi(p, x, t, dt0); }
};

inline CocycleFlow make_flow(const DiagonalSystem& sys, const IntegratorConfig& base) {
    CocycleFlow f;
    f.omega = sys.omega;
    f.metric = StateMetric{sys.mu, sys.alpha};
    f.dt0 = base.dt;
    f.phi = [sys, base](const HullPoint& p, const Vec& x, double t, double dt) {
        IntegratorConfig c = base;
        c.dt = dt;
        return evolve(sys, p, x, t, c);
    };
    return f;
}

// Per-fiber sections of a nonautonomous set over a sampled hull lattice.
// Lookups at unsampled fibers snap to the nearest sampled one.
struct NonautCloud {
    std::vector<HullPoint> fibers;
    std::vector<Cloud> sections;
    double horizon = 0.0;  // generation time horizon (metadata)

    void validate() const {
        if (fibers.empty() || fibers.size() != sections.size())
            throw empty_cloud_error("nonautonomous cloud: fiber/section mismatch");
        for (const Cloud& c : sections)
            if (c.empty()) throw empty_cloud_error("nonautonomous cloud: empty fiber section");
    }

    const Cloud& section(const HullPoint& p) const {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < fibers.size(); ++i) {
            const double d = torus_distance(p, fibers[i]);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        return sections[best];
    }

    static NonautCloud constant(std::vector<HullPoint> fibers, Cloud section) {
        NonautCloud c;
        c.fibers = std::move(fibers);
        c.sections.assign(c.fibers.size(), section);
        return c;
    }
};

struct PullbackOptions {
    double t0 = 1.0;
    double factor = 2.0;
    std::size_t stages = 12;
    double tol = 1e-4;           // symmetric Hausdorff between consecutive images
    double collapse_tol = 0.0;   // > 0: also stop once the cloud sits inside this ball
    double dt_ramp_after = 64.0; // stages beyond this time grow the step linearly
    double dt_cap = 0.25;
    bool check_forward_invariance = true;
};

struct PullbackResult {
    Cloud attractor;
    bool converged = false;
    bool collapsed = false;
    std::size_t stages_run = 0;
    std::vector<std::pair<double, double>> trace;  // (t_i, distance between consecutive images)
};

// One forward step must keep the cloud within its own resolution, inflated
// by (1 + tol); cheap surrogate for forward invariance of U0.
inline bool forward_invariance_precheck(const CocycleFlow& flow, const Cloud& U0,
                                        const HullPoint& p, double tol) {
    const double res = cloud_resolution(U0, flow.metric);
    const double slack = (1.0 + tol) * res + tol;
    for (const Vec& x : U0) {
        const Vec y = flow.phi(p, x, flow.dt0, flow.dt0);
        double d = std::numeric_limits<double>::infinity();
        for (const Vec& u : U0) d = std::min(d, flow.metric.dist(y, u));
        if (d > slack) return false;
    }
    return true;
}

// omega(U)(p): evolve the cloud from ever-earlier fibers theta_{-t} p forward
// by t, along the geometric schedule, until consecutive images agree.
inline PullbackResult pullback_omega_limit(const CocycleFlow& flow, const Cloud& U0,
                                           const HullPoint& p, const PullbackOptions& opt) {
    if (U0.empty()) throw empty_cloud_error("pullback_omega_limit: empty initial cloud");
    if (opt.check_forward_invariance && !forward_invariance_precheck(flow, U0, p, opt.tol))
        throw config_error("pullback_omega_limit: U0 failed the forward-invariance precheck");

    PullbackResult res;
    Cloud prev;
    double t = opt.t0;
    for (std::size_t stage = 0; stage < opt.stages; ++stage, t *= opt.factor) {
        const double dt = std::min(opt.dt_cap, flow.dt0 * std::max(1.0, t / opt.dt_ramp_after));
        const HullPoint from = translate(p, flow.omega, -t);
        Cloud image;
        if (opt.collapse_tol > 0.0) {
            // evolve in dt-aligned chunks so a collapse onto the zero section
            // can stop the stage early: once the whole cloud sits inside the
            // collapse ball it stays there (the ball is forward invariant at
            // the scales this option is used for)
            image = U0;
            const double chunk = std::max(dt, std::ceil(t / 16.0 / dt) * dt);
            double tau = 0.0;
            while (tau < t) {
                const double step = std::min(chunk, t - tau);
                const HullPoint at = translate(p, flow.omega, -t + tau);
                for (Vec& x : image) x = flow.phi(at, x, step, dt);
                tau += step;
                double rmax = 0.0;
                for (const Vec& x : image) rmax = std::max(rmax, flow.metric.norm(x));
                if (rmax <= opt.collapse_tol) {
                    res.stages_run = stage + 1;
                    res.attractor = std::move(image);
                    res.converged = true;
                    res.collapsed = true;
                    return res;
                }
            }
        } else {
            image.reserve(U0.size());
            for (const Vec& x : U0) image.push_back(flow.phi(from, x, t, dt));
        }
        res.stages_run = stage + 1;
        if (!prev.empty()) {
            const double d = hausdorff_symmetric(image, prev, flow.metric);
            res.trace.emplace_back(t, d);
            if (d < opt.tol) {
                res.attractor = std::move(image);
                res.converged = true;
                return res;
            }
        }
        prev = std::move(image);
    }
    res.attractor = std::move(prev);  // best effort; converged stays false
    return res;
}

struct AttractionTrace {
    HullPoint fiber;
    std::vector<std::pair<double, double>> distances;  // (t, H)
    bool attracts = false;
    std::string note;
};

struct AttractionReport {
    bool attracts = true;
    std::vector<AttractionTrace> traces;
};

namespace detail {

// Eventually below tol, and non-increasing (with 10% slack) after the peak.
inline bool attracting_profile(const std::vector<std::pair<double, double>>& d, double tol) {
    if (d.empty()) return false;
    if (!(d.back().second < tol)) return false;
    std::size_t peak = 0;
    for (std::size_t i = 1; i < d.size(); ++i)
        if (d[i].second > d[peak].second) peak = i;
    for (std::size_t i = peak + 1; i < d.size(); ++i)
        if (d[i].second > 1.1 * d[i - 1].second + tol) return false;
    return true;
}

}  // namespace detail

// Does K(.) pullback attract B(.)?  For each sampled fiber p and t in T_grid,
// H( phi(t, theta_{-t} p) B(theta_{-t} p), K(p) ) must settle below tol.
// Divergence along the way marks the fiber as non-attracting.
inline AttractionReport pullback_attraction_check(const NonautCloud& K, const NonautCloud& B,
                                                  const CocycleFlow& flow,
                                                  const std::vector<double>& T_grid, double tol) {
    K.validate();
    B.validate();
    AttractionReport rep;
    for (std::size_t fi = 0; fi < K.fibers.size(); ++fi) {
        AttractionTrace tr;
        tr.fiber = K.fibers[fi];
        bool diverged = false;
        for (double t : T_grid) {
            const HullPoint from = translate(K.fibers[fi], flow.omega, -t);
            Cloud image;
            try {
                for (const Vec& x : B.section(from)) image.push_back(flow.run(from, x, t));
                tr.distances.emplace_back(t, hausdorff_semidist(image, K.sections[fi], flow.metric));
            } catch (const divergence_error& e) {
                tr.distances.emplace_back(t, std::numeric_limits<double>::infinity());
                tr.note = std::string("divergence at t = ") + std::to_string(e.time);
                diverged = true;
                break;
            }
        }
        tr.attracts = !diverged && detail::attracting_profile(tr.distances, tol);
        rep.attracts = rep.attracts && tr.attracts;
        rep.traces.push_back(std::move(tr));
    }
    return rep;
}

struct EquivalenceReport {
    AttractionReport pullback;
    AttractionTrace skew;      // forward attraction of the skew product
    bool skew_attracts = false;
    bool agree = false;
    double lattice_margin = 0.0;
};

// Numeric check of the equivalence: K pullback attracts B through phi iff
// the bundle K attracts the bundle B through the skew product Phi. The skew
// side works on the product metric ||x - x'||_alpha + d_torus(p, p'); since
// K is sampled on a finite fiber lattice, the evolved base point sits up to
// half a lattice cell away from the nearest sampled fiber. That floor (the
// lattice covering radius, pi / per-axis count in the max metric) is
// subtracted from the skew distances before the verdict so only the state
// convergence is judged; the raw distances stay in the trace.
inline EquivalenceReport skew_equivalence_check(const NonautCloud& K, const NonautCloud& B,
                                                const CocycleFlow& flow,
                                                const std::vector<double>& T_grid, double tol) {
    K.validate();
    B.validate();
    EquivalenceReport rep;
    rep.pullback = pullback_attraction_check(K, B, flow, T_grid, tol);

    const std::size_t m = K.fibers[0].phases.size();
    std::size_t per_axis = 1;
    while (true) {
        std::size_t total = 1;
        for (std::size_t i = 0; i < m; ++i) total *= per_axis;
        if (total >= K.fibers.size()) break;
        ++per_axis;
    }
    rep.lattice_margin = std::numbers::pi / double(per_axis);

    bool diverged = false;
    std::vector<std::pair<double, double>> adjusted;
    for (double t : T_grid) {
        double h = 0.0;
        try {
            for (std::size_t fi = 0; fi < B.fibers.size(); ++fi) {
                for (const Vec& x : B.sections[fi]) {
                    const HullPoint pt = translate(B.fibers[fi], flow.omega, t);
                    const Vec xt = flow.run(B.fibers[fi], x, t);
                    double d = std::numeric_limits<double>::infinity();
                    for (std::size_t ki = 0; ki < K.fibers.size(); ++ki)
                        for (const Vec& yk : K.sections[ki])
                            d = std::min(d, flow.metric.dist(xt, yk) + torus_distance(pt, K.fibers[ki]));
                    h = std::max(h, d);
                }
            }
            rep.skew.distances.emplace_back(t, h);
            adjusted.emplace_back(t, std::max(h - rep.lattice_margin, 0.0));
        } catch (const divergence_error& e) {
            rep.skew.distances.emplace_back(t, std::numeric_limits<double>::infinity());
            rep.skew.note = std::string("divergence at t = ") + std::to_string(e.time);
            diverged = true;
            break;
        }
    }
    rep.skew_attracts = !diverged && detail::attracting_profile(adjusted, tol);
    rep.agree = (rep.skew_attracts == rep.pullback.attracts);
    return rep;
}

}  // namespace cocycle
