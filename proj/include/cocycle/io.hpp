#pragma once

// CSV artifact writers (and the manifold reader used to reuse graphs).
// Every file starts with '#' header lines: a schema tag, the resolved config
// as one JSON line, and a timestamp line. Bodies are deterministic for fixed
// config and seed; doubles are printed with %.17g.

#include <cstdio>
#include <ctime>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cocycle/bifurcation.hpp"

namespace cocycle {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_header(std::ostream& os, const std::string& schema, const std::string& config_line) {
    os << "# schema=" << schema << "\n";
    if (!config_line.empty()) os << "# config=" << config_line << "\n";
    std::time_t now = std::time(nullptr);
    char buf[64];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    os << "# generated=" << buf << "\n";
}

inline std::string sanitize_field(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

inline void write_trajectory_csv(std::ostream& os, const std::string& config_line,
                                 const std::vector<double>& times,
                                 const std::vector<HullPoint>& phases, const std::vector<Vec>& states,
                                 const std::vector<double>& norms) {
    write_header(os, "cocycle.trajectory.v1", config_line);
    os << "t";
    for (std::size_t i = 0; i < phases.at(0).phases.size(); ++i) os << ",phase_" << i;
    for (std::size_t k = 0; k < states.at(0).size(); ++k) os << ",a_" << (k + 1);
    os << ",norm_alpha\n";
    for (std::size_t r = 0; r < times.size(); ++r) {
        os << fmt(times[r]);
        for (double ph : phases[r].phases) os << ',' << fmt(ph);
        for (double a : states[r]) os << ',' << fmt(a);
        os << ',' << fmt(norms[r]) << "\n";
    }
}

inline void write_graph_family_csv(std::ostream& os, const std::string& config_line,
                                   const GraphFamily& fam) {
    write_header(os, "cocycle.manifold.v1", config_line);
    const ManifoldGraph& g0 = fam.graphs.at(0);
    os << "# lambda=" << fmt(g0.lambda) << " lambda0=" << fmt(g0.lambda0) << " rho=" << fmt(g0.rho)
       << " k_rho=" << fmt(g0.k_rho) << " m_rho=" << fmt(g0.m_rho) << " l1_cert=" << fmt(g0.l1_cert)
       << " l2_emp=" << fmt(g0.l2_emp) << " center=" << g0.center << " radius=" << fmt(g0.radius)
       << " extended_radius=" << fmt(fam.extended_radius) << " horizon=" << fmt(g0.horizon)
       << " dt=" << fmt(g0.dt) << " tol=" << fmt(g0.tol) << " fibers=" << fam.graphs.size() << "\n";
    os << "fiber";
    for (std::size_t i = 0; i < g0.p.phases.size(); ++i) os << ",phase_" << i;
    os << ",y";
    for (std::size_t k = 0; k < g0.xi.at(0).size(); ++k) os << ",xi_" << (k + 1);
    os << "\n";
    for (std::size_t f = 0; f < fam.graphs.size(); ++f) {
        const ManifoldGraph& g = fam.graphs[f];
        for (std::size_t j = 0; j < g.grid.size(); ++j) {
            os << f;
            for (double ph : g.p.phases) os << ',' << fmt(ph);
            os << ',' << fmt(g.grid[j]);
            for (double v : g.xi[j]) os << ',' << fmt(v);
            os << "\n";
        }
    }
}

// Rebuilds a graph family from its CSV (metadata line + rows).
inline GraphFamily read_graph_family_csv(std::istream& is) {
    GraphFamily fam;
    std::string line;
    double lambda = 0, lambda0 = 0, rho = 0, k_rho = 0, m_rho = 0, l1_cert = 0, l2 = 0, radius = 0,
           ext = 0, horizon = 0, dt = 0, tol = 0;
    std::size_t center = 0, fibers = 0;
    bool have_meta = false, have_cols = false;
    std::size_t n_phase = 0, n_xi = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ss(line.substr(1));
            std::string tok;
            while (ss >> tok) {
                auto eq = tok.find('=');
                if (eq == std::string::npos) continue;
                const std::string key = tok.substr(0, eq);
                const std::string val = tok.substr(eq + 1);
                if (key == "lambda") lambda = std::stod(val);
                else if (key == "lambda0") lambda0 = std::stod(val);
                else if (key == "rho") rho = std::stod(val);
                else if (key == "k_rho") k_rho = std::stod(val);
                else if (key == "m_rho") m_rho = std::stod(val);
                else if (key == "l1_cert") l1_cert = std::stod(val);
                else if (key == "l2_emp") l2 = std::stod(val);
                else if (key == "center") center = std::stoul(val);
                else if (key == "radius") radius = std::stod(val);
                else if (key == "extended_radius") ext = std::stod(val);
                else if (key == "horizon") horizon = std::stod(val);
                else if (key == "dt") dt = std::stod(val);
                else if (key == "tol") tol = std::stod(val);
                else if (key == "fibers") {
                    fibers = std::stoul(val);
                    have_meta = true;
                }
            }
            continue;
        }
        if (!have_cols) {  // column header
            std::string col;
            std::istringstream ss(line);
            while (std::getline(ss, col, ',')) {
                if (col.rfind("phase_", 0) == 0) ++n_phase;
                if (col.rfind("xi_", 0) == 0) ++n_xi;
            }
            have_cols = true;
            continue;
        }
        std::istringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');
        const std::size_t f = std::stoul(cell);
        while (fam.graphs.size() <= f) {
            ManifoldGraph g;
            g.lambda = lambda;
            g.lambda0 = lambda0;
            g.rho = rho;
            g.k_rho = k_rho;
            g.m_rho = m_rho;
            g.l1_cert = l1_cert;
            g.l2_emp = l2;
            g.center = center;
            g.radius = radius;
            g.horizon = horizon;
            g.dt = dt;
            g.tol = tol;
            fam.graphs.push_back(std::move(g));
        }
        ManifoldGraph& g = fam.graphs[f];
        g.p.phases.resize(n_phase);
        for (std::size_t i = 0; i < n_phase; ++i) {
            std::getline(ss, cell, ',');
            g.p.phases[i] = std::stod(cell);
        }
        std::getline(ss, cell, ',');
        g.grid.push_back(std::stod(cell));
        Vec xi(n_xi, 0.0);
        for (std::size_t k = 0; k < n_xi; ++k) {
            std::getline(ss, cell, ',');
            xi[k] = std::stod(cell);
        }
        g.xi.push_back(std::move(xi));
    }
    if (!have_meta || fam.graphs.empty())
        throw config_error("read_graph_family_csv: malformed manifold CSV");
    fam.extended_radius = ext;
    if (fibers != fam.graphs.size())
        throw config_error("read_graph_family_csv: fiber count mismatch");
    return fam;
}

inline void write_cloud_csv(std::ostream& os, const std::string& config_line,
                            const std::vector<HullPoint>& fibers, const std::vector<Cloud>& clouds,
                            const std::string& schema = "cocycle.attractor.v1") {
    write_header(os, schema, config_line);
    os << "fiber";
    for (std::size_t i = 0; i < fibers.at(0).phases.size(); ++i) os << ",phase_" << i;
    os << ",point";
    for (std::size_t k = 0; k < clouds.at(0).at(0).size(); ++k) os << ",c_" << (k + 1);
    os << "\n";
    for (std::size_t f = 0; f < fibers.size(); ++f)
        for (std::size_t i = 0; i < clouds[f].size(); ++i) {
            os << f;
            for (double ph : fibers[f].phases) os << ',' << fmt(ph);
            os << ',' << i;
            for (double v : clouds[f][i]) os << ',' << fmt(v);
            os << "\n";
        }
}

inline void write_trace_report(std::ostream& os, const std::string& title,
                               const std::vector<AttractionTrace>& traces) {
    os << title << "\n";
    for (const auto& tr : traces) {
        os << "fiber (";
        for (std::size_t i = 0; i < tr.fiber.phases.size(); ++i)
            os << (i ? " " : "") << fmt(tr.fiber.phases[i]);
        os << ") " << (tr.attracts ? "attracts" : "does-not-attract");
        if (!tr.note.empty()) os << " [" << tr.note << "]";
        os << "\n";
        for (const auto& [t, d] : tr.distances) os << "  t=" << fmt(t) << " H=" << fmt(d) << "\n";
    }
}

// Diagram body columns; wallclock_ms is last so determinism comparisons can
// mask the single timing field.
inline void write_diagram_csv(std::ostream& os, const std::string& config_line,
                              const BifurcationDiagram& diag) {
    write_header(os, "cocycle.bifurcation.v1", config_line);
    os << "# lambda0=" << fmt(diag.lambda0) << " sign=" << diag.sign << "\n";
    const std::size_t m = diag.fibers.at(0).phases.size();
    os << "lambda,fiber";
    for (std::size_t i = 0; i < m; ++i) os << ",phase_" << i;
    os << ",H_alpha,dist0,repeller,converged,collapsed,stages,error,wallclock_ms\n";
    for (const auto& r : diag.rows) {
        os << fmt(r.lambda) << ',' << r.fiber_index;
        for (double ph : r.fiber.phases) os << ',' << fmt(ph);
        os << ',' << fmt(r.h_alpha) << ',' << fmt(r.dist0) << ',' << r.repeller << ','
           << (r.converged ? 1 : 0) << ',' << (r.collapsed ? 1 : 0) << ',' << r.stages << ','
           << sanitize_field(r.error) << ',' << fmt(r.wallclock_ms) << "\n";
    }
}

inline void write_plot_data(std::ostream& os, const BifurcationDiagram& diag, std::size_t fiber) {
    os << "# lambda H_alpha\n";
    for (const auto& r : diag.rows)
        if (r.fiber_index == fiber && r.error.empty())
            os << fmt(r.lambda) << ' ' << fmt(r.h_alpha) << "\n";
}

}  // namespace cocycle
