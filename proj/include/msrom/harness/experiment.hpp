#pragma once

#include "msrom/deim.hpp"
#include "msrom/error.hpp"
#include "msrom/field.hpp"
#include "msrom/grid.hpp"
#include "msrom/harness/config.hpp"
#include "msrom/harness/report.hpp"
#include "msrom/harness/svg.hpp"
#include "msrom/msbasis.hpp"
#include "msrom/run.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace msrom::harness {

/// Fine problem, offline space and reaction built from a configuration.
struct Setup {
    CoarseMesh coarse;
    Problem problem;
    OfflineStage offline;
    Nonlinearity reaction;

    const FineMesh& fine() const { return problem.mesh; }
};

inline PermeabilityField make_field(const FieldSpec& spec, const FineMesh& fine) {
    if (spec.source == "file") {
        PermeabilityField k = load_field(spec.path);
        if (!k.matches(fine)) throw ConfigError("harness", "field file " + spec.path + " does not match the mesh");
        return k;
    }
    return generate_channelized(fine, spec.contrast, spec.seed);
}

inline Nonlinearity make_reaction(const ProblemSpec& p) {
    return p.reaction == "none" ? Nonlinearity::zero() : Nonlinearity::allen_cahn(p.epsilon, p.sign);
}

inline Setup build_setup(const ExperimentConfig& c) {
    c.validate();
    FineMesh fine = build_fine_mesh(c.mesh.nx, c.mesh.ny);
    Setup s;
    s.coarse = build_coarse_mesh(fine, c.mesh.coarse_nx, c.mesh.coarse_ny);
    PermeabilityField kappa = make_field(c.field, fine);
    s.offline = build_offline(fine, s.coarse, kappa, c.basis_per_neighborhood);
    s.problem = Problem::build(std::move(fine), std::move(kappa), initial_condition(c.problem.initial));
    s.reaction = make_reaction(c.problem);
    return s;
}

inline RunOptions make_run_options(const ExperimentConfig& c, const Setup& s) {
    RunOptions opt;
    opt.stepper = c.time;
    opt.policy = c.online;
    opt.nonlinearity = s.reaction;
    return opt;
}

struct SnapshotSet {
    std::vector<Vector> snapshots;
    std::string provenance;
};

/// The configuration whose run supplies DEIM snapshots.
inline ExperimentConfig source_config(const ExperimentConfig& c) {
    ExperimentConfig s = c;
    s.deim.enabled = false;
    switch (c.deim.source) {
    case SnapshotSource::same_equation: break;
    case SnapshotSource::different_epsilon: s.problem.epsilon = c.deim.source_epsilon; break;
    case SnapshotSource::different_ic: s.problem.initial = c.deim.source_initial; break;
    case SnapshotSource::different_field:
        s.field.source = "generate";
        s.field.seed = c.deim.source_seed;
        s.field.contrast = c.deim.source_contrast;
        break;
    case SnapshotSource::earlier_time_window: s.time.t_final = c.deim.window_end; break;
    }
    s.output.metric_times.clear();
    return s;
}

inline std::string provenance_of(const ExperimentConfig& c) {
    std::string p = to_string(c.deim.source) + " model=" + c.deim.snapshot_model;
    switch (c.deim.source) {
    case SnapshotSource::different_epsilon: p += " epsilon=" + detail::fmt(c.deim.source_epsilon); break;
    case SnapshotSource::different_ic: p += " initial=" + c.deim.source_initial; break;
    case SnapshotSource::different_field:
        p += " seed=" + std::to_string(c.deim.source_seed) + " contrast=" + detail::fmt(c.deim.source_contrast);
        break;
    case SnapshotSource::earlier_time_window: p += " t<=" + detail::fmt(c.deim.window_end); break;
    default: break;
    }
    return p;
}

/// Nonlinear vectors of every `cadence`-th step of the source run.
inline SnapshotSet collect_snapshots(const ExperimentConfig& c) {
    const ExperimentConfig sc = source_config(c);
    const Setup s = build_setup(sc);
    const bool fine = c.deim.snapshot_model == "fine";
    RunOptions opt = make_run_options(sc, s);
    opt.reference = fine;
    SnapshotSet set;
    set.provenance = provenance_of(c);
    opt.observer = [&](int step, double, const Vector&, const Vector& nl, const Vector&, const Vector& nlf) {
        if (step % c.deim.cadence == 0) set.snapshots.push_back(fine ? nlf : nl);
    };
    run(s.problem, s.offline.space.basis, s.offline.neighborhoods, opt);
    if (set.snapshots.empty()) throw ConfigError("harness", "empty source trajectory for DEIM snapshots");
    return set;
}

inline DeimModel build_deim(const ExperimentConfig& c) {
    SnapshotSet set = collect_snapshots(c);
    PodTruncation trunc;
    trunc.energy = c.deim.energy;
    trunc.fixed_m = c.deim.modes;
    return deim_indices(pod(set.snapshots, trunc), set.provenance);
}

struct ExperimentResult {
    ErrorReport report;
    Trajectory trajectory;
    std::optional<Trajectory> baseline;  // same run without DEIM
    std::optional<DeimModel> deim;
    std::filesystem::path directory;
};

struct ExperimentOptions {
    bool write = true;    // artifacts on disk
    bool verbose = false;
};

namespace detail {

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream os(p);
    if (!os) throw ConfigError("harness", "cannot write " + p.string());
    os << text;
}

template <class F>
void write_with(const std::filesystem::path& p, F&& f) {
    std::ofstream os(p);
    if (!os) throw ConfigError("harness", "cannot write " + p.string());
    f(os);
}

inline void save_nodal(const std::filesystem::path& p, const FineMesh& mesh, const Vector& dofs) {
    const Vector nodes = extend_to_nodes(mesh, dofs);
    write_with(p, [&](std::ostream& os) {
        write_grid_values(os, mesh.nx + 1, mesh.ny + 1, std::vector<double>(nodes.data(), nodes.data() + nodes.size()));
    });
}

inline std::string field_name(int step, const char* kind) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "step_%06d_%s.txt", step, kind);
    return buf;
}

} // namespace detail

/// Reads a nodal snapshot written by run_experiment back as interior dofs.
inline Vector load_nodal(const std::filesystem::path& p, const FineMesh& mesh) {
    std::ifstream is(p);
    if (!is) throw ConfigError("harness", "cannot open " + p.string());
    GridValues g = read_grid_values(is, false);
    if (g.nx != mesh.nx + 1 || g.ny != mesh.ny + 1) throw ConfigError("harness", p.string() + " does not match the mesh");
    return restrict_to_dofs(mesh, Eigen::Map<const Vector>(g.values.data(), static_cast<Index>(g.values.size())));
}

/// Reference and reduced trajectories for one configuration, with CSV, field
/// and SVG artifacts under the output directory.
inline ExperimentResult run_experiment(const ExperimentConfig& c, const ExperimentOptions& xo = {}) {
    namespace fs = std::filesystem;
    c.validate();
    ExperimentResult res;
    res.directory = c.output.directory;
    auto log = [&](const std::string& m) {
        if (xo.verbose) std::cerr << "[" << c.name << "] " << m << '\n';
    };

    log("offline stage");
    const Setup s = build_setup(c);
    const std::vector<int> metric_steps = c.metric_steps();
    RunOptions opt = make_run_options(c, s);
    if (c.output.save_fields) opt.save_steps = metric_steps;

    if (c.deim.enabled) {
        log("collecting DEIM snapshots: " + provenance_of(c));
        res.deim = build_deim(c);
        res.report.deim_provenance = res.deim->provenance();
        opt.deim = &*res.deim;
        if (c.deim.source == SnapshotSource::earlier_time_window) opt.deim_start_time = c.deim.window_end;
        log("DEIM m = " + std::to_string(res.deim->size()) + ", cond = " + detail::fmt(res.deim->condition()));
    }

    std::vector<double> wall(static_cast<std::size_t>(c.time.step_count()) + 1, 0.0);
    const auto t0 = std::chrono::steady_clock::now();
    opt.observer = [&](int step, double, const Vector&, const Vector&, const Vector&, const Vector&) {
        wall[static_cast<std::size_t>(step)] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    log("reduced and reference runs");
    res.trajectory = run(s.problem, s.offline.space.basis, s.offline.neighborhoods, opt);

    for (int step : metric_steps) {
        const StepRecord& r = res.trajectory.steps[static_cast<std::size_t>(step)];
        res.report.rows.push_back({r.step, r.time, r.e_a, r.e_2, r.dof, wall[static_cast<std::size_t>(step)]});
    }

    if (c.deim.enabled && c.deim.compare_baseline) {
        log("baseline run without DEIM");
        RunOptions base = make_run_options(c, s);
        res.baseline = run(s.problem, s.offline.space.basis, s.offline.neighborhoods, base);
    }
    if (res.trajectory.clamped_exponents > 0) {
        std::cerr << "stepper: " << res.trajectory.clamped_exponents << " ETD exponents were clamped\n";
    }
    if (!xo.write) return res;

    const fs::path dir = c.output.directory;
    fs::create_directories(dir);
    save_config(c, (dir / "config.ini").string());
    detail::write_with(dir / "errors.csv", [&](std::ostream& os) { write_errors_csv(os, res.trajectory.steps); });
    detail::write_with(dir / "trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, res.trajectory.steps); });
    detail::write_with(dir / "enrichment.csv",
                       [&](std::ostream& os) { write_enrichment_csv(os, res.trajectory.enrichment, c.time.dt); });

    if (c.output.save_fields) {
        fs::create_directories(dir / "fields");
        for (const auto& [step, f] : res.trajectory.fields) {
            detail::save_nodal(dir / "fields" / detail::field_name(step, "reduced"), s.fine(), f.reduced);
            detail::save_nodal(dir / "fields" / detail::field_name(step, "reference"), s.fine(), f.reference);
        }
    }

    if (res.deim) {
        save_deim(*res.deim, (dir / "deim.txt").string());
        if (res.baseline) {
            fs::create_directories(dir / "baseline");
            detail::write_with(dir / "baseline" / "errors.csv",
                               [&](std::ostream& os) { write_errors_csv(os, res.baseline->steps); });
            std::stringstream a, b;
            write_errors_csv(a, res.baseline->steps);
            write_errors_csv(b, res.trajectory.steps);
            const auto cmp = compare_runs(read_errors_csv(a), read_errors_csv(b));
            detail::write_with(dir / "deim_compare.csv", [&](std::ostream& os) { write_comparison_csv(os, cmp); });
        }
    }

    if (c.output.plots) {
        fs::create_directories(dir / "plots");
        Series ea{"e_a", {}, {}}, e2{"e_2", {}, {}}, dof{"DOF", {}, {}};
        for (const auto& r : res.trajectory.steps) {
            ea.x.push_back(r.time);
            ea.y.push_back(r.e_a);
            e2.x.push_back(r.time);
            e2.y.push_back(r.e_2);
            dof.x.push_back(r.time);
            dof.y.push_back(r.dof);
        }
        std::vector<Series> err{ea, e2};
        if (res.baseline) {
            Series b{"e_a without DEIM", {}, {}};
            for (const auto& r : res.baseline->steps) {
                b.x.push_back(r.time);
                b.y.push_back(r.e_a);
            }
            err.push_back(b);
        }
        detail::write_text(dir / "plots" / "errors.svg",
                           line_plot({c.name + ": relative errors", "t", "error", true}, err));
        detail::write_text(dir / "plots" / "dof.svg", line_plot({c.name + ": reduced dimension", "t", "DOF"}, {dof}));
    }

    std::ostringstream sum;
    sum << "name = " << c.name << "\nenergy_norm = " << res.report.energy_norm
        << "\nsource_sign = " << to_string(c.problem.sign) << "\ninitial_dof = " << s.offline.space.rank();
    if (res.deim) {
        sum << "\ndeim_provenance = " << res.deim->provenance() << "\ndeim_modes = " << res.deim->size()
            << "\ndeim_condition = " << detail::fmt(res.deim->condition());
    }
    sum << "\nclamped_exponents = " << res.trajectory.clamped_exponents << "\n\nn,t,e_a,e_2,dof,wall_time\n";
    for (const auto& r : res.report.rows)
        sum << r.step << ',' << detail::fmt(r.time) << ',' << detail::fmt(r.e_a) << ',' << detail::fmt(r.e_2) << ','
            << r.dof << ',' << detail::fmt(r.wall_time) << '\n';
    detail::write_text(dir / "summary.txt", sum.str());
    return res;
}

} // namespace msrom::harness
