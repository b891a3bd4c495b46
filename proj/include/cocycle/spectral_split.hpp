#pragma once

// Spectral decomposition X = X_c + X_+ + X_- relative to lambda near an
// isolated eigenvalue lambda0 of the diagonal operator A, with the gap
// condition sigma(A) in (lambda0 - eta, lambda0 + eta) = {lambda0}.
//
// Sectors are classified by the sign of mu_k - lambda for A^lambda = A - lambda:
//   center    mu_k = lambda0
//   stable    mu_k - lambda > 0   (semigroup decays forward in time)
//   unstable  mu_k - lambda < 0
// Within the admissible window |lambda - lambda0| < eta/4 the index sets
// depend only on lambda0 and the spectrum.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "cocycle/errors.hpp"
#include "cocycle/galerkin.hpp"
#include "cocycle/system.hpp"

namespace cocycle {

enum class Sector { center, stable, unstable, hyperbolic };  // hyperbolic = stable + unstable

struct SpectralSplit {
    double lambda0 = 0.0;
    double lambda = 0.0;
    double eta = 0.0;  // spectral gap, computed from the discrete spectrum
    Vec mu;
    std::vector<std::size_t> center_idx;
    std::vector<std::size_t> stable_idx;
    std::vector<std::size_t> unstable_idx;

    std::size_t center_mode() const { return center_idx.at(0); }

    bool in_sector(std::size_t k, Sector s) const {
        auto has = [k](const std::vector<std::size_t>& v) {
            return std::find(v.begin(), v.end(), k) != v.end();
        };
        switch (s) {
            case Sector::center: return has(center_idx);
            case Sector::stable: return has(stable_idx);
            case Sector::unstable: return has(unstable_idx);
            case Sector::hyperbolic: return has(stable_idx) || has(unstable_idx);
        }
        return false;
    }
};

inline SpectralSplit split_spectrum(const Vec& mu, double lambda, double lambda0) {
    constexpr double match_tol = 1e-9;
    SpectralSplit sp;
    sp.lambda0 = lambda0;
    sp.lambda = lambda;
    sp.mu = mu;
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < mu.size(); ++k) {
        if (std::abs(mu[k] - lambda0) <= match_tol * std::max(1.0, std::abs(lambda0)))
            sp.center_idx.push_back(k);
        else
            gap = std::min(gap, std::abs(mu[k] - lambda0));
    }
    if (sp.center_idx.empty())
        throw config_error("split: lambda0 is not an eigenvalue of the computed spectrum");
    if (!std::isfinite(gap))
        throw config_error("split: spectrum has no eigenvalue besides lambda0; gap undefined");
    sp.eta = gap;
    if (std::abs(lambda - lambda0) >= sp.eta / 4.0)
        throw out_of_window_error("split: |lambda - lambda0| >= eta/4; outside the admissible window");
    for (std::size_t k = 0; k < mu.size(); ++k) {
        if (sp.in_sector(k, Sector::center)) continue;
        (mu[k] - lambda > 0.0 ? sp.stable_idx : sp.unstable_idx).push_back(k);
    }
    return sp;
}

inline SpectralSplit split(const ModelConfig& cfg, double lambda0) {
    return split_spectrum(spectrum(cfg), cfg.lambda, lambda0);
}

// Zero every coefficient outside the sector's index set.
inline ModalState project(const ModalState& u, const SpectralSplit& sp, Sector s) {
    ModalState r(u.size(), 0.0);
    for (std::size_t k = 0; k < u.size(); ++k)
        if (sp.in_sector(k, s)) r[k] = u[k];
    return r;
}

struct SemigroupBoundReport {
    bool pass = true;
    double worst_slack = std::numeric_limits<double>::infinity();  // min of (bound - norm)
    std::string worst_case;
};

namespace detail {

inline void check_bound(SemigroupBoundReport& rep, double norm, double bound, const std::string& label) {
    const double slack = bound - norm;
    if (slack < rep.worst_slack) {
        rep.worst_slack = slack;
        rep.worst_case = label;
    }
    if (slack < -1e-12) rep.pass = false;
}

}  // namespace detail

// Verifies the three semigroup estimate families behind the Lyapunov-Perron
// kernels, with operator norms evaluated exactly mode-wise:
//
//   unstable, t <= 0:  ||e^{-A^l_- t}||           <= e^{(3 eta/4) t}
//   stable,   t  > 0:  ||e^{-A^l_+ t}||           <= e^{-(3 eta/4) t}
//   center,   t in R:  ||e^{-A^l_c t}||           <= e^{(eta/4)|t|}
//
// and the alpha-weighted companions, using the sector operator's own
// fractional power |mu_k - lambda|^alpha (the form in which the constant-1
// bounds hold exactly for the diagonal split):
//
//   unstable:  || (A^l_-)^a e^{-A^l_- t} ||       <= e^{(3 eta/4) t}
//   stable:    || (A^l_+)^a e^{-A^l_+ t} ||       <= t^{-a} e^{-(3 eta/4) t}
//   center:    || (A^l_c)^a e^{-A^l_c t} ||       <= e^{(eta/4)|t|}
//
// The caller supplies the t grid; signs select the family each point is
// tested against (t > 0 stable + center, t <= 0 unstable + center).
inline SemigroupBoundReport semigroup_bound_check(const SpectralSplit& sp, double alpha,
                                                  const std::vector<double>& t_grid) {
    if (std::abs(sp.lambda - sp.lambda0) >= sp.eta / 4.0)
        throw out_of_window_error("semigroup_bound_check: lambda outside the eta/4 window");
    SemigroupBoundReport rep;
    const double rate_h = 0.75 * sp.eta;  // hyperbolic sectors
    const double rate_c = 0.25 * sp.eta;  // center sector

    auto sector_norms = [&](const std::vector<std::size_t>& idx, double t, double& plain,
                            double& weighted) {
        plain = 0.0;
        weighted = 0.0;
        for (std::size_t k : idx) {
            const double a = sp.mu[k] - sp.lambda;
            const double e = std::exp(-a * t);
            plain = std::max(plain, e);
            weighted = std::max(weighted, std::pow(std::abs(a), alpha) * e);
        }
    };

    for (double t : t_grid) {
        double plain, weighted;
        // center family, all t
        sector_norms(sp.center_idx, t, plain, weighted);
        detail::check_bound(rep, plain, std::exp(rate_c * std::abs(t)), "center plain t=" + std::to_string(t));
        detail::check_bound(rep, weighted, std::exp(rate_c * std::abs(t)),
                            "center weighted t=" + std::to_string(t));
        if (t > 0.0 && !sp.stable_idx.empty()) {
            sector_norms(sp.stable_idx, t, plain, weighted);
            detail::check_bound(rep, plain, std::exp(-rate_h * t), "stable plain t=" + std::to_string(t));
            detail::check_bound(rep, weighted, std::pow(t, -alpha) * std::exp(-rate_h * t),
                                "stable weighted t=" + std::to_string(t));
        }
        if (t <= 0.0 && !sp.unstable_idx.empty()) {
            sector_norms(sp.unstable_idx, t, plain, weighted);
            detail::check_bound(rep, plain, std::exp(rate_h * t), "unstable plain t=" + std::to_string(t));
            detail::check_bound(rep, weighted, std::exp(rate_h * t),
                                "unstable weighted t=" + std::to_string(t));
        }
    }
    return rep;
}

}  // namespace cocycle
