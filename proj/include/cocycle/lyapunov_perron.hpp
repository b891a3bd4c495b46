#pragma once

// Local invariant manifold graphs by Picard iteration of the Lyapunov-Perron
// integral equation for the truncated system
//
//   gamma(t) = e^{-A^l_c t} y
//            + int_0^t      e^{-A^l_c (t-s)} Pi_c p_rho(s, gamma(s)) ds
//            + int_{-inf}^t e^{-A^l_+ (t-s)} Pi_+ p_rho(s, gamma(s)) ds
//            - int_t^{inf}  e^{-A^l_- (t-s)} Pi_- p_rho(s, gamma(s)) ds,
//
// p_rho(t,u) = chi(||u||_a / rho) g(t,u). The infinite integrals are truncated
// to [-T, T]; the dropped tails carry e^{-(3 eta/4)|t-s|} kernels, so the
// horizon is chosen with e^{-eta T/4} below the solve tolerance. Quadrature is
// product-exponential trapezoid: on each cell the kernel e^{-a(t-s)} times the
// linear interpolant of the integrand is integrated in closed form, which is
// exact for the stiff linear part and unconditionally stable mode-wise.
//
// Convergence is measured in the weighted norm sup_t e^{-(eta/2)|t|} ||.||_a,
// the norm in which the fixed-point map is provably a contraction with ratio
// M_rho = k(rho) * (8/eta + Gamma(1-a) (4/eta)^{1-a});  M_rho < 1 is a hard
// gate checked before any solve.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "cocycle/errors.hpp"
#include "cocycle/flow.hpp"
#include "cocycle/spectral_split.hpp"
#include "cocycle/system.hpp"

namespace cocycle {

// Smooth bump: 1 on [0, 1/2], 0 on [1, inf), quintic smoothstep between.
inline double cutoff_value(double z) {
    z = std::abs(z);
    if (z <= 0.5) return 1.0;
    if (z >= 1.0) return 0.0;
    const double s = 2.0 * z - 1.0;
    return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

// max |chi'| over the transition (attained at s = 1/2): 60 * (1/16) = 15/4.
inline constexpr double cutoff_max_slope = 15.0 / 4.0;

struct TruncationConfig {
    double rho = 0.06;    // cutoff radius in ||.||_alpha
    double k_rho = 0.0;   // certified Lipschitz constant of the truncated nonlinearity
    double m_cap = 1.0;   // bound M of the weighted trajectory space
};

// p_rho(t, u) = chi(||u||_a / rho) * g(t, u).
inline Vec cutoff_nonlinearity(double t, const HullPoint& p, const Vec& u,
                               const TruncationConfig& tc, const DiagonalSystem& sys) {
    const double chi = cutoff_value(sys.state_norm(u) / tc.rho);
    if (chi == 0.0) return Vec(u.size(), 0.0);
    Vec g = sys.g(t, p, u);
    if (chi != 1.0)
        for (double& v : g) v *= chi;
    return g;
}

inline DiagonalSystem make_truncated_system(const DiagonalSystem& sys, const TruncationConfig& tc) {
    DiagonalSystem out = sys;
    out.g = [sys, tc](double t, const HullPoint& p, const Vec& u) {
        return cutoff_nonlinearity(t, p, u, tc, sys);
    };
    return out;
}

// Sup-embedding constant for N-mode sine states: ||u||_inf <= c_emb ||u||_a,
// c_emb = sqrt(2/L) * (sum_{k<=N} mu_k^{-2a})^{1/2}.
inline double sine_embedding_constant(const ModelConfig& cfg) {
    const Vec mu = spectrum(cfg);
    double s = 0.0;
    for (double m : mu) s += std::pow(m, -2.0 * cfg.alpha);
    return std::sqrt(2.0 / cfg.L) * std::sqrt(s);
}

// Certified Lipschitz bound of the truncated cubic on the alpha-ball of
// radius rho:  k(rho) = C_cut * h_max * 3 (c_emb rho)^2 * c_emb,
// with C_cut = 1 + max|chi'| accounting for the cutoff factor. Monotone in
// rho and O(rho^2) near zero, matching the tangency of the cubic at u = 0.
inline double lipschitz_constant(double rho, const ModelConfig& cfg) {
    if (rho <= 0.0) throw config_error("lipschitz_constant: rho must be positive");
    const double c_emb = sine_embedding_constant(cfg);
    const double mu1 = spectrum(cfg)[0];
    const double l2_factor = std::max(c_emb, std::pow(mu1, -cfg.alpha));
    return (1.0 + cutoff_max_slope) * cfg.forcing.max_amplitude() * 3.0 * (c_emb * rho) *
           (c_emb * rho) * l2_factor;
}

// int_0^inf (2 + s^{-a}) e^{-(eta/4) s} ds = 8/eta + Gamma(1-a) (4/eta)^{1-a}.
inline double contraction_kernel_integral(double alpha, double eta) {
    if (alpha < 0.0 || alpha >= 1.0) throw config_error("contraction: alpha must lie in [0, 1)");
    if (eta <= 0.0) throw config_error("contraction: eta must be positive");
    return 8.0 / eta + std::tgamma(1.0 - alpha) * std::pow(4.0 / eta, 1.0 - alpha);
}

inline double contraction_constant_from_k(double k_rho, double alpha, double eta) {
    return k_rho * contraction_kernel_integral(alpha, eta);
}

// M_rho for the Galerkin model. Throws the gate error when M_rho >= 1 unless
// the caller only wants the value for inspection.
inline double contraction_constant(double rho, double alpha, double eta, const ModelConfig& cfg,
                                   bool enforce_gate = true) {
    const double m = contraction_constant_from_k(lipschitz_constant(rho, cfg), alpha, eta);
    if (enforce_gate && m >= 1.0)
        throw gate_error("contraction gate: M_rho = " + std::to_string(m) + " >= 1; shrink rho", m);
    return m;
}

// Galerkin TruncationConfig with the certified k(rho) filled in.
inline TruncationConfig make_truncation_config(double rho, const ModelConfig& cfg) {
    TruncationConfig tc;
    tc.rho = rho;
    tc.k_rho = lipschitz_constant(rho, cfg);
    return tc;
}

struct LpSolverParams {
    double horizon = 24.0;  // integrals truncated to [-T, T]
    double dt = 0.01;
    double tol = 1e-9;      // weighted-norm stopping tolerance
    int iter_margin = 30;   // added to the certified iteration count
};

struct GraphPointResult {
    double y = 0.0;
    Vec xi;                           // Pi_{+-} gamma(0); zero on the center mode
    std::size_t iterations = 0;
    std::vector<double> increments;   // weighted-norm Picard increments
    std::vector<Vec> trajectory;      // gamma on the time grid (for warm starts)
};

namespace detail {

// psi1(z) = (1 - e^{-z})/z,  psi2(z) = (1 - e^{-z}(1+z))/z^2.
inline double psi1(double z) {
    if (std::abs(z) < 1e-4) return 1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0;
    return -std::expm1(-z) / z;
}

inline double psi2(double z) {
    if (std::abs(z) < 1e-4) return 0.5 - z / 3.0 + z * z / 8.0 - z * z * z / 30.0;
    return (1.0 - std::exp(-z) * (1.0 + z)) / (z * z);
}

// int_0^h e^{-a(h-s)} f(s) ds, f linear with f(0)=fl, f(h)=fr (weight at the
// right endpoint).
inline double cell_back(double a, double fl, double fr, double h) {
    const double z = a * h;
    const double p2 = psi2(z);
    return h * (fl * p2 + fr * (psi1(z) - p2));
}

// int_0^h e^{-b s} f(s) ds (weight at the left endpoint).
inline double cell_front(double b, double fl, double fr, double h) {
    const double z = b * h;
    const double p2 = psi2(z);
    return h * (fl * (psi1(z) - p2) + fr * p2);
}

}  // namespace detail

// Picard-solve the graph point over y in the center direction. The center
// space is one-dimensional here (simple spectrum), so y is a scalar
// coefficient of the center mode.
inline GraphPointResult solve_graph_point(const DiagonalSystem& sys, const SpectralSplit& sp,
                                          const TruncationConfig& tc, const HullPoint& p, double y,
                                          const LpSolverParams& prm,
                                          const std::vector<Vec>* warm_start = nullptr) {
    if (sp.center_idx.size() != 1)
        throw config_error("solve_graph_point: expected a one-dimensional center space");
    if (std::abs(sys.lambda - sp.lambda0) >= sp.eta / 8.0)
        throw out_of_window_error("solve_graph_point: |lambda - lambda0| >= eta/8");
    const double m_rho = contraction_constant_from_k(tc.k_rho, sys.alpha, sp.eta);
    if (m_rho >= 1.0)
        throw gate_error("solve_graph_point: M_rho = " + std::to_string(m_rho) + " >= 1; shrink rho",
                         m_rho);

    const std::size_t c = sp.center_mode();
    const std::size_t n_side = std::size_t(std::llround(prm.horizon / prm.dt));
    const std::size_t n_nodes = 2 * n_side + 1;
    const std::size_t dim = sys.dim();
    const double dt = prm.dt;
    const double a_c = sp.mu[c] - sys.lambda;

    std::vector<double> t_grid(n_nodes), weight(n_nodes), hom(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) {
        t_grid[i] = (double(i) - double(n_side)) * dt;
        weight[i] = std::exp(-0.5 * sp.eta * std::abs(t_grid[i]));
        hom[i] = std::exp(-a_c * t_grid[i]) * y;
    }

    std::vector<Vec> gamma(n_nodes, Vec(dim, 0.0));
    if (warm_start && warm_start->size() == n_nodes) gamma = *warm_start;

    // certified iteration budget (Banach rate), plus margin
    std::size_t max_iter = std::size_t(prm.iter_margin);
    if (m_rho > 0.0 && prm.tol > 0.0 && prm.tol < 1.0)
        max_iter += std::size_t(std::ceil(std::log(prm.tol) / std::log(std::max(m_rho, 1e-6))));

    GraphPointResult res;
    res.y = y;

    std::vector<Vec> pval(n_nodes);
    std::vector<Vec> next(n_nodes, Vec(dim, 0.0));
    for (std::size_t iter = 1;; ++iter) {
        if (iter > max_iter)
            throw non_contraction_error(
                "solve_graph_point: iteration budget exceeded (quadrature too coarse?)");
        for (std::size_t i = 0; i < n_nodes; ++i)
            pval[i] = cutoff_nonlinearity(t_grid[i], p, gamma[i], tc, sys);

        for (std::size_t i = 0; i < n_nodes; ++i) std::fill(next[i].begin(), next[i].end(), 0.0);

        // center: e^{-a_c t} y + int_0^t, split at t = 0
        {
            double acc = 0.0;
            next[n_side][c] = hom[n_side];
            for (std::size_t i = n_side + 1; i < n_nodes; ++i) {
                acc = std::exp(-a_c * dt) * acc +
                      detail::cell_back(a_c, pval[i - 1][c], pval[i][c], dt);
                next[i][c] = hom[i] + acc;
            }
            acc = 0.0;
            for (std::size_t i = n_side; i-- > 0;) {
                // J(i) = int_{t_i}^0 e^{-a_c (t_i - s)} P ds; gamma_c = hom - J
                acc = std::exp(a_c * dt) * acc +
                      detail::cell_front(-a_c, pval[i][c], pval[i + 1][c], dt);
                next[i][c] = hom[i] - acc;
            }
        }

        // stable sector: S(i) = e^{-a dt} S(i-1) + cell, from t = -T
        for (std::size_t k : sp.stable_idx) {
            const double a = sp.mu[k] - sys.lambda;
            const double decay = std::exp(-a * dt);
            double acc = 0.0;
            for (std::size_t i = 1; i < n_nodes; ++i) {
                acc = decay * acc + detail::cell_back(a, pval[i - 1][k], pval[i][k], dt);
                next[i][k] = acc;
            }
        }

        // unstable sector: V(i) = e^{a dt} V(i+1) + cell, from t = +T; gamma = -V
        for (std::size_t k : sp.unstable_idx) {
            const double a = sp.mu[k] - sys.lambda;  // negative
            const double decay = std::exp(a * dt);
            double acc = 0.0;
            for (std::size_t i = n_nodes - 1; i-- > 0;) {
                acc = decay * acc + detail::cell_front(-a, pval[i][k], pval[i + 1][k], dt);
                next[i][k] = -acc;
            }
        }

        double inc = 0.0;
        for (std::size_t i = 0; i < n_nodes; ++i)
            inc = std::max(inc, weight[i] * sys.state_norm(sub(next[i], gamma[i])));
        gamma.swap(next);
        res.increments.push_back(inc);
        res.iterations = iter;
        if (inc < prm.tol) break;
    }

    res.xi = gamma[n_side];
    res.xi[c] = 0.0;  // gamma(0) = y + xi(y); the center part is y by construction
    res.trajectory = std::move(gamma);
    return res;
}

// Sampled graph of xi over a ball in the center direction, with certification
// metadata. Grid values are piecewise-linearly interpolated.
struct ManifoldGraph {
    double lambda = 0.0;
    double lambda0 = 0.0;
    HullPoint p;
    double radius = 0.0;          // graph domain radius in ||.||_alpha of the center mode
    std::vector<double> grid;     // center coefficients y
    std::vector<Vec> xi;          // xi(y) per node; zero on the center mode
    std::size_t center = 0;
    double rho = 0.0;
    double k_rho = 0.0;
    double m_rho = 0.0;
    double l1_cert = 0.0;         // 1/(1 - M_rho) + 1
    double l1_emp = 0.0;
    double l2_emp = 0.0;          // filled by lambda_lipschitz_emp
    double horizon = 0.0, dt = 0.0, tol = 0.0;

    void eval_into(double y, Vec& out) const {
        if (grid.empty()) throw graph_domain_error("manifold graph: empty grid");
        const double lo = grid.front(), hi = grid.back();
        if (y < lo - 1e-12 || y > hi + 1e-12)
            throw graph_domain_error("manifold graph: center value outside the graph domain");
        y = std::clamp(y, lo, hi);
        if (grid.size() == 1) {
            out = xi.front();
            return;
        }
        const double step = (hi - lo) / double(grid.size() - 1);
        std::size_t j = std::min(std::size_t((y - lo) / step), grid.size() - 2);
        const double w = (y - grid[j]) / step;
        out.resize(xi[j].size());
        for (std::size_t k = 0; k < out.size(); ++k)
            out[k] = (1.0 - w) * xi[j][k] + w * xi[j + 1][k];
    }

    Vec eval(double y) const {
        Vec out;
        eval_into(y, out);
        return out;
    }
};

// Empirical Lipschitz constant of the graph in the alpha norm.
inline double graph_lipschitz_emp(const ManifoldGraph& g, const DiagonalSystem& sys) {
    double l1 = 0.0;
    const double wc = std::pow(sys.mu[g.center], sys.alpha);
    for (std::size_t i = 0; i < g.grid.size(); ++i)
        for (std::size_t j = i + 1; j < g.grid.size(); ++j) {
            const double dy = wc * std::abs(g.grid[i] - g.grid[j]);
            if (dy == 0.0) continue;
            l1 = std::max(l1, sys.state_norm(sub(g.xi[i], g.xi[j])) / dy);
        }
    return l1;
}

// Solves the graph over a uniform center grid. If a grid point lands outside
// the region where the cutoff is provably inactive (||y + xi(y)||_a > rho/2),
// the radius is shrunk and the solve repeated; with auto_shrink off this is
// the cutoff-active error instead.
inline ManifoldGraph build_manifold(const DiagonalSystem& sys, const SpectralSplit& sp,
                                    const TruncationConfig& tc, const HullPoint& p, double radius,
                                    std::size_t n_grid, const LpSolverParams& prm,
                                    bool auto_shrink = true) {
    if (n_grid < 2) throw config_error("build_manifold: need at least two grid points");
    const std::size_t c = sp.center_mode();
    for (int attempt = 0; attempt < 12; ++attempt) {
        ManifoldGraph g;
        g.lambda = sys.lambda;
        g.lambda0 = sp.lambda0;
        g.p = p;
        g.radius = radius;
        g.center = c;
        g.rho = tc.rho;
        g.k_rho = tc.k_rho;
        g.m_rho = contraction_constant_from_k(tc.k_rho, sys.alpha, sp.eta);
        g.l1_cert = 1.0 / (1.0 - g.m_rho) + 1.0;
        g.horizon = prm.horizon;
        g.dt = prm.dt;
        g.tol = prm.tol;
        g.grid.resize(n_grid);
        g.xi.resize(n_grid);

        bool cutoff_ok = true;
        const GraphPointResult* prev = nullptr;
        GraphPointResult cur;
        for (std::size_t j = 0; j < n_grid; ++j) {
            g.grid[j] = -radius + 2.0 * radius * double(j) / double(n_grid - 1);
            cur = solve_graph_point(sys, sp, tc, p, g.grid[j], prm,
                                    prev ? &prev->trajectory : nullptr);
            g.xi[j] = cur.xi;
            Vec point = cur.xi;
            point[c] = g.grid[j];
            if (sys.state_norm(point) > tc.rho / 2.0) cutoff_ok = false;
            prev = &cur;
        }
        if (cutoff_ok) {
            g.l1_emp = graph_lipschitz_emp(g, sys);
            return g;
        }
        if (!auto_shrink)
            throw cutoff_active_error(
                "build_manifold: ||y + xi(y)||_a > rho/2 on the grid; shrink the radius");
        radius *= 0.7;
    }
    throw cutoff_active_error("build_manifold: radius shrink failed to deactivate the cutoff");
}

// Empirical lambda-Lipschitz constant from two graphs on identical grids.
inline double lambda_lipschitz_emp(const ManifoldGraph& a, const ManifoldGraph& b,
                                   const DiagonalSystem& sys) {
    if (a.grid.size() != b.grid.size() || a.lambda == b.lambda)
        throw config_error("lambda_lipschitz_emp: graphs must share a grid and differ in lambda");
    double worst = 0.0;
    for (std::size_t j = 0; j < a.grid.size(); ++j)
        worst = std::max(worst, sys.state_norm(sub(a.xi[j], b.xi[j])));
    return worst / std::abs(a.lambda - b.lambda);
}

// Graphs solved on a lattice of hull fibers. Evaluation interpolates
// periodically in the leading phase (piecewise linear) for one-frequency
// hulls and snaps to the nearest fiber otherwise. Beyond each graph's
// certified radius, xi is continued by its leading odd-cubic behavior
// xi(y) ~ xi(+-r) (|y|/r)^3 up to extended_radius (0 disables extension);
// the continuation serves the reduced flow on the working ball, where xi is
// a sub-percent correction.
struct GraphFamily {
    std::vector<ManifoldGraph> graphs;  // fiber f at phase 2 pi f / F
    double extended_radius = 0.0;

    std::size_t fibers() const { return graphs.size(); }
    std::size_t center() const { return graphs.at(0).center; }
    double radius() const { return graphs.at(0).radius; }
    double domain_radius() const { return std::max(radius(), extended_radius); }

    void eval_graph_into(const ManifoldGraph& g, double y, Vec& out) const {
        if (std::abs(y) <= g.radius + 1e-12) {
            g.eval_into(y, out);
            return;
        }
        if (std::abs(y) > domain_radius() + 1e-12)
            throw graph_domain_error("graph family: center value outside the extended domain");
        const double edge = y > 0.0 ? g.radius : -g.radius;
        const double f = std::abs(y) / g.radius;
        g.eval_into(edge, out);
        const double s = f * f * f;
        for (double& v : out) v *= s;
    }

    Vec eval_graph(const ManifoldGraph& g, double y) const {
        Vec out;
        eval_graph_into(g, y, out);
        return out;
    }

    // 1-d hull evaluation at a raw leading phase (periodic linear interp)
    void xi_into(double phase0, double y, Vec& out) const {
        const std::size_t F = graphs.size();
        if (F == 1) {
            eval_graph_into(graphs[0], y, out);
            return;
        }
        const double s = wrap_phase(phase0) / two_pi * double(F);
        const std::size_t f0 = std::size_t(s) % F;
        const std::size_t f1 = (f0 + 1) % F;
        const double w = s - std::floor(s);
        eval_graph_into(graphs[f0], y, out);
        thread_local Vec tmp;
        eval_graph_into(graphs[f1], y, tmp);
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = (1.0 - w) * out[k] + w * tmp[k];
    }

    Vec xi(const HullPoint& p, double y) const {
        Vec out;
        if (p.phases.size() == 1 || graphs.size() == 1) {
            xi_into(p.phases.empty() ? 0.0 : p.phases[0], y, out);
            return out;
        }
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t f = 0; f < graphs.size(); ++f) {
            const double d = torus_distance(p, graphs[f].p);
            if (d < best_d) {
                best_d = d;
                best = f;
            }
        }
        eval_graph_into(graphs[best], y, out);
        return out;
    }
};

inline GraphFamily build_graph_family(const DiagonalSystem& sys, const SpectralSplit& sp,
                                      const TruncationConfig& tc, std::size_t n_fibers,
                                      double radius, std::size_t n_grid, const LpSolverParams& prm,
                                      double extended_radius = 0.0) {
    GraphFamily fam;
    fam.extended_radius = extended_radius;
    const auto fibers = sample_hull(sys.omega.size(), n_fibers);
    fam.graphs.reserve(fibers.size());
    for (const auto& p : fibers)
        fam.graphs.push_back(build_manifold(sys, sp, tc, p, radius, n_grid, prm));
    // auto-shrink must not desync fibers; align all graphs on the smallest radius
    double rmin = std::numeric_limits<double>::infinity();
    for (const auto& g : fam.graphs) rmin = std::min(rmin, g.radius);
    for (auto& g : fam.graphs)
        if (g.radius > rmin)
            g = build_manifold(sys, sp, tc, g.p, rmin, n_grid, prm, /*auto_shrink=*/false);
    return fam;
}

// || Pi_{+-} u(t) - xi_{theta_t p}(Pi_c u(t)) ||_alpha for u(0) = y + xi_p(y)
// evolved by the truncated full flow. Zero up to solve/interpolation error
// when the graph family is invariant.
inline double manifold_invariance_residual(const GraphFamily& fam, const DiagonalSystem& sys,
                                           const TruncationConfig& tc, const HullPoint& p, double y,
                                           double t, const IntegratorConfig& icfg) {
    const std::size_t c = fam.center();
    Vec u0 = fam.xi(p, y);
    u0[c] = y;
    const DiagonalSystem trunc = make_truncated_system(sys, tc);
    const Vec ut = evolve(trunc, p, u0, t, icfg);
    const double yt = ut[c];
    if (std::abs(yt) > fam.domain_radius() + 1e-12)
        throw graph_domain_error("manifold_invariance_residual: evolved point left the graph domain");
    Vec xi_t = fam.xi(translate(p, sys.omega, t), yt);
    Vec tail = ut;
    tail[c] = 0.0;
    return sys.state_norm(sub(tail, xi_t));
}

}  // namespace cocycle
