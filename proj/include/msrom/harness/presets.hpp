#pragma once

#include "msrom/harness/config.hpp"

#include <string>
#include <vector>

namespace msrom::harness {

inline std::vector<std::string> preset_names() {
    return {"desk",          "ex21",       "ex21-eps0.01", "ex22",     "ex22-eps0.1", "ex22-tol1e-2",
            "ex22-tol1e-4",  "ex33",       "ex33-epsilon", "ex33-ic",  "ex33-field",  "ex33-window"};
}

namespace detail {

inline ExperimentConfig desk_base() {
    ExperimentConfig c;
    c.name = "desk";
    c.mesh = {64, 64, 8, 8};
    c.field = {"generate", 1e4, 1, ""};
    c.problem = {"allen_cahn", 0.1, SourceSign::as_written, "saddle"};
    c.time.dt = 1e-3;
    c.time.t_final = 0.1;
    c.basis_per_neighborhood = 2;
    c.online.mode = EnrichmentMode::none;
    c.output.directory = "out/desk";
    c.output.metric_times = {0.1};
    return c;
}

// Full scale: H = 1/16, h = 1/256.
inline ExperimentConfig large_base(const std::string& name) {
    ExperimentConfig c = desk_base();
    c.name = name;
    c.mesh = {256, 256, 16, 16};
    c.output.directory = "out/" + name;
    return c;
}

// Implicit Euler with dt / eps^2 >= 1 needs Newton; Picard diverges there.
inline void set_epsilon(ExperimentConfig& c, double eps) {
    c.problem.epsilon = eps;
    c.time.solver = c.time.dt / (eps * eps) >= 0.5 ? NonlinearSolver::newton : NonlinearSolver::picard;
}

} // namespace detail

/// Documented experiment configurations.
inline ExperimentConfig preset(const std::string& name) {
    using detail::large_base;
    using detail::set_epsilon;
    if (name == "desk") return detail::desk_base();

    if (name == "ex21" || name == "ex21-eps0.01") {
        ExperimentConfig c = large_base(name);
        c.basis_per_neighborhood = 1;
        c.time.dt = 1e-3;
        set_epsilon(c, name == "ex21" ? 0.1 : 0.01);
        return c;
    }

    if (name == "ex22" || name == "ex22-eps0.1" || name == "ex22-tol1e-2" || name == "ex22-tol1e-4") {
        ExperimentConfig c = large_base(name);
        c.basis_per_neighborhood = 2;
        const bool eps_small = name != "ex22-eps0.1";
        c.time.dt = eps_small ? 1e-4 : 1e-3;
        c.time.t_final = eps_small ? 0.02 : 0.1;
        c.output.metric_times = {c.time.t_final};
        set_epsilon(c, eps_small ? 0.01 : 0.1);
        c.online.mode = EnrichmentMode::adaptive1;
        c.online.tol = name == "ex22-tol1e-2" ? 1e-2 : name == "ex22-tol1e-4" ? 1e-4 : 1e-3;
        c.online.max_levels = 3;
        return c;
    }

    if (name.rfind("ex33", 0) == 0) {
        ExperimentConfig c = large_base(name);
        c.basis_per_neighborhood = 2;
        c.deim.enabled = true;
        c.deim.compare_baseline = true;
        // Early snapshots dominate the raw energy; 1 - 1e-8 keeps too few modes.
        c.deim.energy = 1.0 - 1e-14;
        if (name == "ex33") {
            c.time.dt = 1e-4;
            c.time.t_final = 0.02;
            set_epsilon(c, 0.01);
            c.deim.source = SnapshotSource::same_equation;
        } else if (name == "ex33-epsilon") {
            set_epsilon(c, 0.1);
            c.deim.source = SnapshotSource::different_epsilon;
            c.deim.source_epsilon = 0.09;
        } else if (name == "ex33-ic") {
            set_epsilon(c, 0.1);
            c.deim.source = SnapshotSource::different_ic;
            c.deim.source_initial = "bump";
        } else if (name == "ex33-field") {
            set_epsilon(c, 0.1);
            c.deim.source = SnapshotSource::different_field;
            c.deim.source_seed = 2;
        } else if (name == "ex33-window") {
            set_epsilon(c, 0.1);
            c.time.t_final = 0.06;
            c.deim.source = SnapshotSource::earlier_time_window;
            c.deim.window_end = 0.05;
        } else {
            throw ConfigError("harness", "unknown preset '" + name + "'");
        }
        c.output.metric_times = {c.time.t_final};
        return c;
    }
    throw ConfigError("harness", "unknown preset '" + name + "'");
}

} // namespace msrom::harness
