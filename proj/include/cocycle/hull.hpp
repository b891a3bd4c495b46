#pragma once

// Compact hull of a (quasi)periodic forcing, represented by its torus of
// phases, and the translation flow on it. For periodic/quasiperiodic symbols
// this parameterization is exact and the hull is automatically compact.

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <vector>

#include "cocycle/errors.hpp"
#include "cocycle/vec.hpp"

namespace cocycle {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

inline double wrap_phase(double a) {
    double r = std::fmod(a, two_pi);
    if (r < 0.0) r += two_pi;
    // fmod can land exactly on two_pi after the correction
    if (r >= two_pi) r -= two_pi;
    return r;
}

// A point on the m-torus; phases always live in [0, 2*pi).
struct HullPoint {
    std::vector<double> phases;

    HullPoint() = default;
    explicit HullPoint(std::vector<double> ph) : phases(std::move(ph)) {
        for (double& a : phases) a = wrap_phase(a);
    }

    std::size_t dim() const { return phases.size(); }
};

// theta_t p: advance every phase by t*omega_i, wrapped to [0, 2*pi).
inline HullPoint translate(const HullPoint& p, const std::vector<double>& omega, double t) {
    HullPoint q;
    q.phases.resize(p.phases.size());
    for (std::size_t i = 0; i < p.phases.size(); ++i)
        q.phases[i] = wrap_phase(p.phases[i] + t * omega[i]);
    return q;
}

// Flat torus metric: max over coordinates of the angular distance.
inline double torus_distance(const HullPoint& a, const HullPoint& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.phases.size(); ++i) {
        double di = std::abs(a.phases[i] - b.phases[i]);
        di = std::min(di, two_pi - di);
        d = std::max(d, di);
    }
    return d;
}

// Forcing symbol h on the hull plus the sign of the cubic term.
// Builtins:
//   two_plus_sin   h(theta)      = c0 + c1*sin(theta)        (default 2 + sin)
//   quasi_two_freq h(th1,th2)    = c0 + c1*sin th1 + c2*sin th2
//   constant       h             = c0
//   zero           h             = 0 (linear test configurations only)
struct Forcing {
    enum class Symbol { two_plus_sin, quasi_two_freq, constant, zero };

    Symbol symbol = Symbol::two_plus_sin;
    std::vector<double> omega{1.0};   // rad / unit time, one per torus dimension
    std::vector<double> coeffs{2.0, 1.0};
    double delta = 1.0;               // lower bound: h >= delta
    int sign = -1;                    // the +/- in front of h(t) u^3

    std::size_t dim() const { return omega.size(); }

    double amplitude(const HullPoint& p) const {
        switch (symbol) {
            case Symbol::two_plus_sin:
                return coeffs.at(0) + coeffs.at(1) * std::sin(p.phases.at(0));
            case Symbol::quasi_two_freq:
                return coeffs.at(0) + coeffs.at(1) * std::sin(p.phases.at(0)) +
                       coeffs.at(2) * std::sin(p.phases.at(1));
            case Symbol::constant:
                return coeffs.at(0);
            case Symbol::zero:
                return 0.0;
        }
        return 0.0;
    }

    // sup of h over the hull; exact for the builtin families.
    double max_amplitude() const {
        switch (symbol) {
            case Symbol::two_plus_sin:
                return coeffs.at(0) + std::abs(coeffs.at(1));
            case Symbol::quasi_two_freq:
                return coeffs.at(0) + std::abs(coeffs.at(1)) + std::abs(coeffs.at(2));
            case Symbol::constant:
                return coeffs.at(0);
            case Symbol::zero:
                return 0.0;
        }
        return 0.0;
    }

    HullPoint translate(const HullPoint& p, double t) const {
        return cocycle::translate(p, omega, t);
    }

    static Forcing two_plus_sin() { return Forcing{}; }

    static Forcing constant(double c) {
        Forcing f;
        f.symbol = Symbol::constant;
        f.coeffs = {c};
        f.delta = c;
        return f;
    }

    static Forcing zero() {
        Forcing f;
        f.symbol = Symbol::zero;
        f.coeffs = {0.0};
        f.delta = 0.0;
        return f;
    }

    static Forcing quasi_two_freq(double c0 = 2.0, double c1 = 0.6, double c2 = 0.4) {
        Forcing f;
        f.symbol = Symbol::quasi_two_freq;
        f.omega = {1.0, std::numbers::sqrt2};
        f.coeffs = {c0, c1, c2};
        f.delta = c0 - std::abs(c1) - std::abs(c2);
        return f;
    }
};

// h evaluated along the translated fiber: h_p(t) = symbol(theta_t p).
// The builtin symbols are 2 pi periodic in each phase, so no wrap or
// temporary hull point is needed.
inline double evaluate_forcing(const Forcing& f, const HullPoint& p, double t) {
    switch (f.symbol) {
        case Forcing::Symbol::two_plus_sin:
            return f.coeffs[0] + f.coeffs[1] * std::sin(p.phases[0] + t * f.omega[0]);
        case Forcing::Symbol::quasi_two_freq:
            return f.coeffs[0] + f.coeffs[1] * std::sin(p.phases[0] + t * f.omega[0]) +
                   f.coeffs[2] * std::sin(p.phases[1] + t * f.omega[1]);
        case Forcing::Symbol::constant:
            return f.coeffs[0];
        case Forcing::Symbol::zero:
            return 0.0;
    }
    return 0.0;
}

// Uniform lattice of n points on the m-torus, deterministic in (m, n).
// Per-axis count is ceil(n^(1/m)); the first n lattice points in
// lexicographic order are returned.
inline std::vector<HullPoint> sample_hull(std::size_t m, std::size_t n) {
    if (n == 0) throw empty_sample_error("sample_hull: requested an empty sample (n = 0)");
    std::size_t q = 1;
    while (true) {
        std::size_t total = 1;
        for (std::size_t i = 0; i < m; ++i) total *= q;
        if (total >= n) break;
        ++q;
    }
    std::vector<HullPoint> pts;
    pts.reserve(n);
    std::vector<std::size_t> idx(m, 0);
    for (std::size_t count = 0; count < n; ++count) {
        HullPoint p;
        p.phases.resize(m);
        for (std::size_t i = 0; i < m; ++i) p.phases[i] = wrap_phase(idx[i] * two_pi / double(q));
        pts.push_back(std::move(p));
        for (std::size_t i = m; i-- > 0;) {
            if (++idx[i] < q) break;
            idx[i] = 0;
        }
    }
    return pts;
}

// Checks h >= delta on a dense phase grid (the compactness-side sanity check
// for the positivity hypothesis). Returns the worst observed margin.
inline double forcing_min_margin(const Forcing& f, std::size_t grid_points = 10000) {
    std::size_t m = f.dim();
    std::size_t per_axis = m == 1 ? grid_points : std::size_t(std::ceil(std::pow(double(grid_points), 1.0 / double(m))));
    std::vector<HullPoint> grid = sample_hull(m, m == 1 ? per_axis : per_axis * per_axis);
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& p : grid) worst = std::min(worst, f.amplitude(p) - f.delta);
    return worst;
}

}  // namespace cocycle
