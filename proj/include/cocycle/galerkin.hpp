#pragma once

// Spectral Galerkin model of  u_t - u_xx = lambda*u +/- h(t) u^3  on (0, L)
// with Dirichlet boundary conditions, expanded in the normalized eigenbasis
// e_k(x) = sqrt(2/L) sin(k pi x / L),  mu_k = (k pi / L)^2.
//
// States are coefficient vectors in that basis (ModalState = Vec). The cubic
// is evaluated by collocation on a uniform interior grid of 4N points, which
// de-aliases it exactly: the cube of an N-mode sine polynomial has sine modes
// up to 3N < 4N, and the discrete sine transform on 4N points is an exact
// quadrature for those.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "cocycle/errors.hpp"
#include "cocycle/hull.hpp"
#include "cocycle/vec.hpp"

namespace cocycle {

using ModalState = Vec;

struct ModelConfig {
    double L = std::numbers::pi;  // domain length
    std::size_t N = 8;            // number of Galerkin modes
    double lambda = 1.0;          // bifurcation parameter
    double alpha = 0.5;           // fractional power for the state norm
    Forcing forcing;

    void validate() const {
        if (L <= 0.0) throw config_error("model: domain length L must be positive");
        if (N < 2) throw config_error("model: need N >= 2 (one center and one non-center mode)");
        if (alpha < 0.0 || alpha >= 1.0) throw config_error("model: alpha must lie in [0, 1)");
        if (forcing.sign != 1 && forcing.sign != -1) throw config_error("forcing: sign must be +1 or -1");
        if (forcing.symbol != Forcing::Symbol::zero && forcing.delta <= 0.0)
            throw config_error("forcing: delta must be positive");
    }
};

// Dirichlet Laplacian eigenvalues mu_k = (k pi / L)^2, k = 1..N.
inline Vec spectrum(const ModelConfig& cfg) {
    Vec mu(cfg.N);
    for (std::size_t k = 1; k <= cfg.N; ++k) {
        double w = double(k) * std::numbers::pi / cfg.L;
        mu[k - 1] = w * w;
    }
    return mu;
}

// ||u||_alpha = sqrt( sum_k mu_k^(2 alpha) a_k^2 ).  alpha = 0 is the L2 norm.
inline double fractional_norm(const ModalState& u, double alpha, const Vec& mu) {
    double s = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) s += std::pow(mu[k], 2.0 * alpha) * u[k] * u[k];
    return std::sqrt(s);
}

inline double fractional_norm(const ModalState& u, double alpha, const ModelConfig& cfg) {
    return fractional_norm(u, alpha, spectrum(cfg));
}

// Precomputed sine tables for collocation on a given interior grid.
class CollocationPlan {
public:
    CollocationPlan() = default;
    CollocationPlan(double L, std::size_t n_modes, std::size_t n_points)
        : L_(L), N_(n_modes), M_(n_points), sine_(n_modes * n_points) {
        // grid x_j = j L / (M+1), j = 1..M; basis value e_k(x_j)
        const double scale = std::sqrt(2.0 / L);
        for (std::size_t k = 1; k <= N_; ++k)
            for (std::size_t j = 1; j <= M_; ++j)
                sine_[(k - 1) * M_ + (j - 1)] =
                    scale * std::sin(double(k) * double(j) * std::numbers::pi / double(M_ + 1));
    }

    std::size_t points() const { return M_; }

    // u(x_j) for all grid points.
    void synthesize(const ModalState& a, Vec& phys) const {
        phys.assign(M_, 0.0);
        for (std::size_t k = 0; k < N_; ++k) {
            const double ak = a[k];
            if (ak == 0.0) continue;
            const double* row = &sine_[k * M_];
            for (std::size_t j = 0; j < M_; ++j) phys[j] += ak * row[j];
        }
    }

    // Galerkin projection of a physical-grid function onto modes 1..N via the
    // discrete sine quadrature  int f e_k ~ (L/(M+1)) sum_j f(x_j) e_k(x_j).
    void project(const Vec& phys, ModalState& a) const {
        a.assign(N_, 0.0);
        for (std::size_t k = 0; k < N_; ++k) a[k] = project_row(phys, k);
    }

    // single-mode projection
    double project_row(const Vec& phys, std::size_t k) const {
        const double* row = &sine_[k * M_];
        double s = 0.0;
        for (std::size_t j = 0; j < M_; ++j) s += phys[j] * row[j];
        return s * L_ / double(M_ + 1);
    }

private:
    double L_ = 0.0;
    std::size_t N_ = 0;
    std::size_t M_ = 0;
    Vec sine_;
};

inline CollocationPlan default_plan(const ModelConfig& cfg, std::size_t oversample = 4) {
    return CollocationPlan(cfg.L, cfg.N, oversample * cfg.N);
}

// Modal coefficients of sign * h_p(t) * u^3, projected back onto modes 1..N.
inline ModalState nonlinearity_modal(double t, const HullPoint& p, const ModalState& u,
                                     const ModelConfig& cfg, const CollocationPlan& plan) {
    const double h = evaluate_forcing(cfg.forcing, p, t);
    ModalState out(cfg.N, 0.0);
    if (h == 0.0) return out;
    Vec phys;
    plan.synthesize(u, phys);
    for (double& v : phys) v = v * v * v;
    plan.project(phys, out);
    const double s = double(cfg.forcing.sign) * h;
    for (double& v : out) v *= s;
    return out;
}

inline ModalState nonlinearity_modal(double t, const HullPoint& p, const ModalState& u,
                                     const ModelConfig& cfg) {
    return nonlinearity_modal(t, p, u, cfg, default_plan(cfg));
}

// int_0^L u(x)^4 dx by a uniform trapezoid rule. u^4 is a cosine polynomial
// with modes m <= 4N, and the P-panel trapezoid sum of cos(m pi x / L) is
// exact unless m is a multiple of 2P, so P = 8N+2 panels makes this exact up
// to rounding.
inline double integral_u4(const ModalState& a, const ModelConfig& cfg) {
    const std::size_t panels = 8 * cfg.N + 2;
    const double hx = cfg.L / double(panels);
    const double scale = std::sqrt(2.0 / cfg.L);
    double s = 0.0;
    for (std::size_t j = 1; j < panels; ++j) {  // endpoints vanish (Dirichlet)
        const double x = hx * double(j);
        double u = 0.0;
        for (std::size_t k = 0; k < cfg.N; ++k)
            u += a[k] * scale * std::sin(double(k + 1) * std::numbers::pi * x / cfg.L);
        const double u2 = u * u;
        s += u2 * u2;
    }
    return s * hx;
}

struct F1Report {
    bool pass = true;
    double worst_margin = 0.0;   // min over samples; negative means violated
    std::size_t worst_state = 0;
    std::size_t worst_phase = 0;
    std::size_t violations = 0;
};

// Dissipativity check: with kappa(u) = int u^4 and beta = delta, verify
//   sign = -1:  (f(t,u), u) <= -beta kappa(u)
//   sign = +1:  (f(t,u), u) >= +beta kappa(u)
// on every (state, hull point) pair. The inner product is evaluated modally
// (Parseval), kappa by quadrature.
inline F1Report check_F1(const ModelConfig& cfg, const std::vector<ModalState>& sample_states,
                         const std::vector<HullPoint>& phase_grid) {
    if (cfg.forcing.delta <= 0.0) throw config_error("check_F1: requires delta > 0");
    F1Report rep;
    rep.worst_margin = std::numeric_limits<double>::infinity();
    const CollocationPlan plan = default_plan(cfg);
    for (std::size_t si = 0; si < sample_states.size(); ++si) {
        const ModalState& u = sample_states[si];
        const double kappa = integral_u4(u, cfg);
        for (std::size_t pi = 0; pi < phase_grid.size(); ++pi) {
            const ModalState f = nonlinearity_modal(0.0, phase_grid[pi], u, cfg, plan);
            const double fu = dot(f, u);
            const double margin =
                cfg.forcing.sign < 0 ? (-cfg.forcing.delta * kappa - fu) : (fu - cfg.forcing.delta * kappa);
            if (margin < rep.worst_margin) {
                rep.worst_margin = margin;
                rep.worst_state = si;
                rep.worst_phase = pi;
            }
            if (margin < -1e-12) {
                rep.pass = false;
                ++rep.violations;
            }
        }
    }
    if (sample_states.empty() || phase_grid.empty()) rep.worst_margin = 0.0;
    return rep;
}

}  // namespace cocycle
