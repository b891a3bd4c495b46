#pragma once

// A nonautonomous semilinear system in diagonal form,
//
//     u_k' = (lambda - mu_k) u_k + g_k(t, p, u),        p in the hull,
//
// covering the Galerkin model, the scalar cubic example, and the decoupled
// quadratic benchmark behind one interface. The linear part is always exact
// in the integrators and the Lyapunov-Perron kernels.

#include <functional>
#include <utility>

#include "cocycle/galerkin.hpp"
#include "cocycle/hull.hpp"
#include "cocycle/vec.hpp"

namespace cocycle {

struct DiagonalSystem {
    Vec mu;                 // eigenvalues of A (diagonal)
    double lambda = 0.0;    // spectral shift: A^lambda = A - lambda
    double alpha = 0.0;     // fractional exponent for state norms
    std::vector<double> omega{1.0};  // base-flow frequencies
    // g(t, p, u): the nonlinearity, evaluated on the fiber theta_t p.
    std::function<Vec(double, const HullPoint&, const Vec&)> g;
    Vec norm_w;             // cached mu_k^(2 alpha); fill via finalize()

    std::size_t dim() const { return mu.size(); }

    void finalize() {
        norm_w.resize(mu.size());
        for (std::size_t k = 0; k < mu.size(); ++k) norm_w[k] = std::pow(mu[k], 2.0 * alpha);
    }

    double state_norm(const Vec& u) const {
        if (norm_w.size() == u.size()) {
            double s = 0.0;
            for (std::size_t k = 0; k < u.size(); ++k) s += norm_w[k] * u[k] * u[k];
            return std::sqrt(s);
        }
        return fractional_norm(u, alpha, mu);
    }

    HullPoint base_point() const { return HullPoint(std::vector<double>(omega.size(), 0.0)); }
};

// The PDE model as a diagonal system in its eigenbasis.
inline DiagonalSystem make_galerkin_system(const ModelConfig& cfg) {
    DiagonalSystem sys;
    sys.mu = spectrum(cfg);
    sys.lambda = cfg.lambda;
    sys.alpha = cfg.alpha;
    sys.omega = cfg.forcing.omega;
    CollocationPlan plan = default_plan(cfg);
    sys.g = [cfg, plan](double t, const HullPoint& p, const Vec& u) {
        return nonlinearity_modal(t, p, u, cfg, plan);
    };
    sys.finalize();
    return sys;
}

// Scalar cubic example  x' = -a x + lambda x + sign * h(t) x^3  on R.
inline DiagonalSystem make_scalar_cubic_system(double a_linear, double lambda, Forcing forcing) {
    DiagonalSystem sys;
    sys.mu = {a_linear};
    sys.lambda = lambda;
    sys.alpha = 0.0;
    sys.omega = forcing.omega;
    sys.g = [forcing](double t, const HullPoint& p, const Vec& u) {
        const double h = evaluate_forcing(forcing, p, t);
        return Vec{double(forcing.sign) * h * u[0] * u[0] * u[0]};
    };
    sys.finalize();
    return sys;
}

// Decoupled benchmark: center mode with zero linear rate, one stable mode
//   y' = 0,   v' = -v + y^2,
// whose invariant graph is exactly v = y^2.
inline DiagonalSystem make_quadratic_benchmark_system() {
    DiagonalSystem sys;
    sys.mu = {0.0, 1.0};
    sys.lambda = 0.0;
    sys.alpha = 0.0;
    sys.omega = {1.0};
    sys.g = [](double, const HullPoint&, const Vec& u) { return Vec{0.0, u[0] * u[0]}; };
    sys.finalize();
    return sys;
}

}  // namespace cocycle
