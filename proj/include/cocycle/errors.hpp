#pragma once

#include <stdexcept>
#include <string>

namespace cocycle {

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Configuration rejected before any computation ran.
struct config_error : error {
    using error::error;
};

// lambda fell outside the admissible window around lambda0.
struct out_of_window_error : config_error {
    using config_error::config_error;
};

struct empty_sample_error : config_error {
    using config_error::config_error;
};

struct empty_cloud_error : error {
    using error::error;
};

// Trajectory norm crossed the blow-up threshold; carries the crossing time.
struct divergence_error : error {
    double time;
    divergence_error(const std::string& what, double t) : error(what), time(t) {}
};

// Contraction gate M_rho >= 1: the fixed-point solve is not certified.
struct gate_error : error {
    double m_rho;
    gate_error(const std::string& what, double m) : error(what), m_rho(m) {}
};

// Picard iteration exceeded the certified iteration budget.
struct non_contraction_error : error {
    using error::error;
};

// A graph point left the region where the cutoff is provably inactive.
struct cutoff_active_error : error {
    using error::error;
};

// Requested evaluation outside the manifold graph's domain.
struct graph_domain_error : error {
    using error::error;
};

// A finite-time test ended before it could distinguish true from false.
struct inconclusive_error : error {
    using error::error;
};

}  // namespace cocycle
