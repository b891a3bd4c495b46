#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace cocycle {

using Vec = std::vector<double>;

inline Vec zeros(std::size_t n) { return Vec(n, 0.0); }

inline void axpy(double a, const Vec& x, Vec& y) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

inline Vec add(const Vec& x, const Vec& y) {
    Vec r(x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += y[i];
    return r;
}

inline Vec sub(const Vec& x, const Vec& y) {
    Vec r(x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= y[i];
    return r;
}

inline Vec scaled(const Vec& x, double a) {
    Vec r(x);
    for (double& v : r) v *= a;
    return r;
}

inline double dot(const Vec& x, const Vec& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double norm_l2(const Vec& x) { return std::sqrt(dot(x, x)); }

inline double norm_linf(const Vec& x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    return m;
}

inline bool all_finite(const Vec& x) {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace cocycle
