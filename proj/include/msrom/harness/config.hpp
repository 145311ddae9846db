#pragma once

#include "msrom/error.hpp"
#include "msrom/nonlinearity.hpp"
#include "msrom/online.hpp"
#include "msrom/stepper.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace msrom::harness {

enum class SnapshotSource { same_equation, different_epsilon, different_ic, different_field, earlier_time_window };

inline std::string to_string(SnapshotSource s) {
    switch (s) {
    case SnapshotSource::different_epsilon: return "different_epsilon";
    case SnapshotSource::different_ic: return "different_ic";
    case SnapshotSource::different_field: return "different_field";
    case SnapshotSource::earlier_time_window: return "earlier_time_window";
    default: return "same_equation";
    }
}

inline SnapshotSource snapshot_source_from_string(const std::string& s) {
    for (auto v : {SnapshotSource::same_equation, SnapshotSource::different_epsilon, SnapshotSource::different_ic,
                   SnapshotSource::different_field, SnapshotSource::earlier_time_window})
        if (to_string(v) == s) return v;
    throw ConfigError("harness", "unknown snapshot source '" + s + "'");
}

/// Named initial conditions g(x, y).
inline std::function<double(double, double)> initial_condition(const std::string& name) {
    if (name == "saddle") return [](double x, double y) { return 4.0 * (0.5 - x) * (0.5 - y); };
    if (name == "bump") return [](double x, double y) { return 16.0 * x * (1.0 - x) * y * (1.0 - y); };
    if (name == "sine") return [](double x, double y) { return std::sin(M_PI * x) * std::sin(M_PI * y); };
    if (name == "zero") return [](double, double) { return 0.0; };
    throw ConfigError("harness", "unknown initial condition '" + name + "'");
}

struct MeshSpec {
    int nx = 64, ny = 64;
    int coarse_nx = 8, coarse_ny = 8;
    bool operator==(const MeshSpec&) const = default;
};

struct FieldSpec {
    std::string source = "generate";  // generate | file
    double contrast = 1e4;
    std::uint64_t seed = 1;
    std::string path;
    bool operator==(const FieldSpec&) const = default;
};

struct ProblemSpec {
    std::string reaction = "allen_cahn";  // allen_cahn | none
    double epsilon = 0.1;
    SourceSign sign = SourceSign::as_written;
    std::string initial = "saddle";
    bool operator==(const ProblemSpec&) const = default;
};

struct DeimSpec {
    bool enabled = false;
    SnapshotSource source = SnapshotSource::same_equation;
    std::string snapshot_model = "reduced";  // reduced | fine
    int cadence = 1;
    double energy = 1.0 - 1e-8;
    int modes = 0;                           // > 0 fixes m
    double source_epsilon = 0.09;
    std::string source_initial = "bump";
    std::uint64_t source_seed = 2;
    double source_contrast = 1e4;
    double window_end = 0.05;
    bool compare_baseline = true;
    bool operator==(const DeimSpec&) const = default;
};

struct OutputSpec {
    std::string directory = "out";
    std::vector<double> metric_times;  // empty: the final time
    bool save_fields = false;
    bool plots = true;
    bool operator==(const OutputSpec&) const = default;
};

struct ExperimentConfig {
    std::string name = "custom";
    MeshSpec mesh;
    FieldSpec field;
    ProblemSpec problem;
    StepperConfig time;
    int basis_per_neighborhood = 2;
    EnrichmentPolicy online;
    DeimSpec deim;
    OutputSpec output;

    int initial_dof() const { return basis_per_neighborhood * (mesh.coarse_nx - 1) * (mesh.coarse_ny - 1); }

    void validate() const;
    /// Step indices of the metric times.
    std::vector<int> metric_steps() const;
};

inline bool operator==(const StepperConfig& a, const StepperConfig& b) {
    return a.scheme == b.scheme && a.solver == b.solver && a.dt == b.dt && a.t_final == b.t_final &&
           a.picard_tol == b.picard_tol && a.picard_max == b.picard_max;
}

inline bool operator==(const EnrichmentPolicy& a, const EnrichmentPolicy& b) {
    return a.mode == b.mode && a.tol == b.tol && a.max_levels == b.max_levels && a.theta == b.theta &&
           a.max_dof == b.max_dof;
}

inline bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    return a.name == b.name && a.mesh == b.mesh && a.field == b.field && a.problem == b.problem &&
           a.time == b.time && a.basis_per_neighborhood == b.basis_per_neighborhood && a.online == b.online &&
           a.deim == b.deim && a.output == b.output;
}

namespace detail {

inline std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

inline double parse_double(const std::string& key, const std::string& s) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError("harness", key + ": not a number: '" + s + "'");
    return v;
}

inline long long parse_int(const std::string& key, const std::string& s) {
    long long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError("harness", key + ": not an integer: '" + s + "'");
    return v;
}

inline bool parse_bool(const std::string& key, const std::string& s) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError("harness", key + ": not a boolean: '" + s + "'");
}

// One table drives both directions so reader and writer cannot drift apart.
struct Binding {
    std::string key;  // section.name
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&)> set;
};

template <class T>
Binding num(std::string key, T ExperimentConfig::*outer, auto member) {
    return {key,
            [outer, member](const ExperimentConfig& c) {
                const auto v = (c.*outer).*member;
                if constexpr (std::is_floating_point_v<decltype(v)>) return fmt(v);
                else return std::to_string(v);
            },
            [outer, member, key](ExperimentConfig& c, const std::string& s) {
                auto& ref = (c.*outer).*member;
                using V = std::remove_reference_t<decltype(ref)>;
                if constexpr (std::is_floating_point_v<V>) ref = parse_double(key, s);
                else ref = static_cast<V>(parse_int(key, s));
            }};
}

template <class T>
Binding str(std::string key, T ExperimentConfig::*outer, std::string T::*member) {
    return {key, [outer, member](const ExperimentConfig& c) { return (c.*outer).*member; },
            [outer, member](ExperimentConfig& c, const std::string& s) { (c.*outer).*member = s; }};
}

template <class T>
Binding flag(std::string key, T ExperimentConfig::*outer, bool T::*member) {
    return {key, [outer, member](const ExperimentConfig& c) { return std::string((c.*outer).*member ? "true" : "false"); },
            [outer, member, key](ExperimentConfig& c, const std::string& s) { (c.*outer).*member = parse_bool(key, s); }};
}

inline std::string join_times(const std::vector<double>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + fmt(v[k]);
    return s;
}

inline std::vector<double> split_times(const std::string& key, const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const auto a = tok.find_first_not_of(" \t");
        if (a == std::string::npos) continue;
        const auto b = tok.find_last_not_of(" \t");
        out.push_back(parse_double(key, tok.substr(a, b - a + 1)));
    }
    return out;
}

inline const std::vector<Binding>& bindings() {
    using C = ExperimentConfig;
    static const std::vector<Binding> table = [] {
        std::vector<Binding> t;
        t.push_back({"experiment.name", [](const C& c) { return c.name; }, [](C& c, const std::string& s) { c.name = s; }});
        t.push_back(num("mesh.nx", &C::mesh, &MeshSpec::nx));
        t.push_back(num("mesh.ny", &C::mesh, &MeshSpec::ny));
        t.push_back(num("mesh.coarse_nx", &C::mesh, &MeshSpec::coarse_nx));
        t.push_back(num("mesh.coarse_ny", &C::mesh, &MeshSpec::coarse_ny));
        t.push_back(str("field.source", &C::field, &FieldSpec::source));
        t.push_back(num("field.contrast", &C::field, &FieldSpec::contrast));
        t.push_back(num("field.seed", &C::field, &FieldSpec::seed));
        t.push_back(str("field.path", &C::field, &FieldSpec::path));
        t.push_back(str("problem.reaction", &C::problem, &ProblemSpec::reaction));
        t.push_back(num("problem.epsilon", &C::problem, &ProblemSpec::epsilon));
        t.push_back({"problem.source_sign", [](const C& c) { return to_string(c.problem.sign); },
                     [](C& c, const std::string& s) { c.problem.sign = source_sign_from_string(s); }});
        t.push_back(str("problem.initial_condition", &C::problem, &ProblemSpec::initial));
        t.push_back({"time.scheme", [](const C& c) { return to_string(c.time.scheme); },
                     [](C& c, const std::string& s) { c.time.scheme = scheme_from_string(s); }});
        t.push_back({"time.solver", [](const C& c) { return to_string(c.time.solver); },
                     [](C& c, const std::string& s) { c.time.solver = nonlinear_solver_from_string(s); }});
        t.push_back(num("time.dt", &C::time, &StepperConfig::dt));
        t.push_back(num("time.t_final", &C::time, &StepperConfig::t_final));
        t.push_back(num("time.picard_tol", &C::time, &StepperConfig::picard_tol));
        t.push_back(num("time.picard_max", &C::time, &StepperConfig::picard_max));
        t.push_back({"offline.basis_per_neighborhood", [](const C& c) { return std::to_string(c.basis_per_neighborhood); },
                     [](C& c, const std::string& s) {
                         c.basis_per_neighborhood = static_cast<int>(parse_int("offline.basis_per_neighborhood", s));
                     }});
        t.push_back({"online.mode", [](const C& c) { return to_string(c.online.mode); },
                     [](C& c, const std::string& s) { c.online.mode = enrichment_mode_from_string(s); }});
        t.push_back(num("online.tol", &C::online, &EnrichmentPolicy::tol));
        t.push_back(num("online.max_levels", &C::online, &EnrichmentPolicy::max_levels));
        t.push_back(num("online.theta", &C::online, &EnrichmentPolicy::theta));
        t.push_back(num("online.max_dof", &C::online, &EnrichmentPolicy::max_dof));
        t.push_back(flag("deim.enabled", &C::deim, &DeimSpec::enabled));
        t.push_back({"deim.source", [](const C& c) { return to_string(c.deim.source); },
                     [](C& c, const std::string& s) { c.deim.source = snapshot_source_from_string(s); }});
        t.push_back(str("deim.snapshot_model", &C::deim, &DeimSpec::snapshot_model));
        t.push_back(num("deim.cadence", &C::deim, &DeimSpec::cadence));
        t.push_back(num("deim.energy", &C::deim, &DeimSpec::energy));
        t.push_back(num("deim.modes", &C::deim, &DeimSpec::modes));
        t.push_back(num("deim.source_epsilon", &C::deim, &DeimSpec::source_epsilon));
        t.push_back(str("deim.source_initial_condition", &C::deim, &DeimSpec::source_initial));
        t.push_back(num("deim.source_seed", &C::deim, &DeimSpec::source_seed));
        t.push_back(num("deim.source_contrast", &C::deim, &DeimSpec::source_contrast));
        t.push_back(num("deim.window_end", &C::deim, &DeimSpec::window_end));
        t.push_back(flag("deim.compare_baseline", &C::deim, &DeimSpec::compare_baseline));
        t.push_back(str("output.directory", &C::output, &OutputSpec::directory));
        t.push_back({"output.metric_times", [](const C& c) { return join_times(c.output.metric_times); },
                     [](C& c, const std::string& s) { c.output.metric_times = split_times("output.metric_times", s); }});
        t.push_back(flag("output.save_fields", &C::output, &OutputSpec::save_fields));
        t.push_back(flag("output.plots", &C::output, &OutputSpec::plots));
        return t;
    }();
    return table;
}

inline int time_to_step(double t, double dt, int n_steps) {
    const double s = t / dt;
    const double r = std::round(s);
    if (std::abs(s - r) > 1e-9 * std::max(1.0, r) || r < 0 || r > n_steps) {
        throw ConfigError("harness", "metric time " + fmt(t) + " is not a step time in [0, t_final]");
    }
    return static_cast<int>(r);
}

} // namespace detail

inline void ExperimentConfig::validate() const {
    auto fail = [](const std::string& m) { throw ConfigError("harness", m); };
    if (mesh.nx < 2 || mesh.ny < 2) fail("mesh.nx and mesh.ny must be >= 2");
    if (mesh.coarse_nx < 2 || mesh.coarse_ny < 2) fail("coarse grid needs at least one interior node");
    if (mesh.nx % mesh.coarse_nx || mesh.ny % mesh.coarse_ny) fail("coarse grid must divide the fine grid");
    if (field.source != "generate" && field.source != "file") fail("field.source must be generate or file");
    if (field.source == "file" && field.path.empty()) fail("field.path is required for field.source = file");
    if (!(field.contrast >= 1.0)) fail("field.contrast must be >= 1");
    if (problem.reaction != "allen_cahn" && problem.reaction != "none") fail("problem.reaction must be allen_cahn or none");
    if (!(problem.epsilon > 0.0)) fail("problem.epsilon must be positive");
    initial_condition(problem.initial);
    time.validate();
    if (basis_per_neighborhood < 1) fail("offline.basis_per_neighborhood must be >= 1");
    online.validate();
    if (deim.enabled) {
        if (deim.snapshot_model != "reduced" && deim.snapshot_model != "fine") fail("deim.snapshot_model must be reduced or fine");
        if (deim.cadence < 1) fail("deim.cadence must be >= 1");
        if (!(deim.energy > 0.0 && deim.energy <= 1.0)) fail("deim.energy must lie in (0, 1]");
        if (deim.modes < 0) fail("deim.modes must be >= 0");
        if (!(deim.source_epsilon > 0.0)) fail("deim.source_epsilon must be positive");
        if (!(deim.source_contrast >= 1.0)) fail("deim.source_contrast must be >= 1");
        initial_condition(deim.source_initial);
        if (deim.source == SnapshotSource::earlier_time_window &&
            !(deim.window_end > 0.0 && deim.window_end < time.t_final))
            fail("deim.window_end must lie in (0, t_final)");
    }
    if (output.directory.empty()) fail("output.directory must not be empty");
    metric_steps();
}

inline std::vector<int> ExperimentConfig::metric_steps() const {
    const int n = time.step_count();
    if (output.metric_times.empty()) return {n};
    std::vector<int> out;
    for (double t : output.metric_times) out.push_back(detail::time_to_step(t, time.dt, n));
    return out;
}

inline void write_config(const ExperimentConfig& c, std::ostream& os) {
    std::string section;
    for (const auto& b : detail::bindings()) {
        const auto dot = b.key.find('.');
        const std::string sec = b.key.substr(0, dot);
        if (sec != section) {
            os << (section.empty() ? "" : "\n") << '[' << sec << "]\n";
            section = sec;
        }
        os << b.key.substr(dot + 1) << " = " << b.get(c) << '\n';
    }
}

inline std::string to_ini(const ExperimentConfig& c) {
    std::ostringstream os;
    write_config(c, os);
    return os.str();
}

/// Keys absent from the input keep their defaults; unknown keys are errors.
inline ExperimentConfig read_config(std::istream& is) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::ini_parser::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("harness", "config line " + std::to_string(e.line()) + ": " + e.message());
    }
    std::map<std::string, const detail::Binding*> by_key;
    for (const auto& b : detail::bindings()) by_key[b.key] = &b;

    ExperimentConfig c;
    for (const auto& [sec, body] : tree) {
        if (body.empty() && !body.data().empty()) throw ConfigError("harness", "key '" + sec + "' outside a section");
        for (const auto& [key, val] : body) {
            const std::string full = sec + "." + key;
            const auto it = by_key.find(full);
            if (it == by_key.end()) throw ConfigError("harness", "unknown config key '" + full + "'");
            it->second->set(c, val.data());
        }
    }
    c.validate();
    return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
    std::istringstream is(text);
    return read_config(is);
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("harness", "cannot open config " + path);
    return read_config(is);
}

inline void save_config(const ExperimentConfig& c, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("harness", "cannot open " + path + " for writing");
    write_config(c, os);
}

} // namespace msrom::harness
