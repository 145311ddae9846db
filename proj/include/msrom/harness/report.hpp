#pragma once

#include "msrom/error.hpp"
#include "msrom/harness/config.hpp"
#include "msrom/run.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace msrom::harness {

/// One row of errors.csv.
struct ErrorRow {
    int step = 0;
    double time = 0.0;
    double e_a = 0.0;
    double e_2 = 0.0;
    int dof = 0;
    double wall_time = 0.0;  // seconds since the reduced run started; not written to CSV
};

struct ErrorReport {
    std::vector<ErrorRow> rows;  // at the metric times
    std::string energy_norm = "unweighted";
    std::string deim_provenance;

    const ErrorRow& at_step(int step) const {
        for (const auto& r : rows)
            if (r.step == step) return r;
        throw ConfigError("harness", "no report row for step " + std::to_string(step));
    }
};

inline const char* errors_header = "n,t,e_a,e_2,dof";

inline void write_errors_csv(std::ostream& os, const std::vector<StepRecord>& steps) {
    os << errors_header << '\n';
    for (const auto& s : steps)
        os << s.step << ',' << detail::fmt(s.time) << ',' << detail::fmt(s.e_a) << ',' << detail::fmt(s.e_2) << ','
           << s.dof << '\n';
}

inline void write_trajectory_csv(std::ostream& os, const std::vector<StepRecord>& steps) {
    os << "n,t,e_a,e_2,dof,iterations,levels,residual\n";
    for (const auto& s : steps)
        os << s.step << ',' << detail::fmt(s.time) << ',' << detail::fmt(s.e_a) << ',' << detail::fmt(s.e_2) << ','
           << s.dof << ',' << s.iterations << ',' << s.levels << ',' << detail::fmt(s.residual) << '\n';
}

inline void write_enrichment_csv(std::ostream& os, const std::vector<EnrichmentEvent>& events, double dt) {
    os << "n,t,level,neighborhood,residual_norm,added,dof_after\n";
    for (const auto& e : events)
        os << e.step << ',' << detail::fmt(e.step * dt) << ',' << e.level << ',' << e.neighborhood << ','
           << detail::fmt(e.residual_norm) << ',' << (e.added ? 1 : 0) << ',' << e.dof_after << '\n';
}

inline std::vector<ErrorRow> read_errors_csv(std::istream& is, const std::string& what = "errors.csv") {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("harness", what + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != errors_header) throw ConfigError("harness", what + ": expected header '" + std::string(errors_header) + "'");
    std::vector<ErrorRow> rows;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) f.push_back(tok);
        if (f.size() != 5) throw ConfigError("harness", what + " line " + std::to_string(lineno) + ": expected 5 fields");
        const std::string at = what + " line " + std::to_string(lineno);
        auto real = [&](const std::string& s) { return s == "nan" ? std::nan("") : detail::parse_double(at, s); };
        rows.push_back({static_cast<int>(detail::parse_int(at, f[0])), real(f[1]), real(f[2]), real(f[3]),
                        static_cast<int>(detail::parse_int(at, f[4])), 0.0});
    }
    return rows;
}

inline std::vector<ErrorRow> read_errors_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("harness", "cannot open " + path);
    return read_errors_csv(is, path);
}

struct ComparisonRow {
    double time = 0.0;
    double e_a_a = 0.0, e_a_b = 0.0;
    double e_2_a = 0.0, e_2_b = 0.0;
    int dof_a = 0, dof_b = 0;
};

/// Pairs two error tables row by row; their time stamps must agree.
inline std::vector<ComparisonRow> compare_runs(const std::vector<ErrorRow>& a, const std::vector<ErrorRow>& b) {
    if (a.size() != b.size()) {
        throw ConfigError("harness", "reports have " + std::to_string(a.size()) + " and " + std::to_string(b.size()) +
                                         " rows");
    }
    std::vector<ComparisonRow> out;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (std::abs(a[k].time - b[k].time) > 1e-12 * std::max(1.0, std::abs(a[k].time))) {
            throw ConfigError("harness", "time stamps differ at row " + std::to_string(k + 1) + ": " +
                                             detail::fmt(a[k].time) + " vs " + detail::fmt(b[k].time));
        }
        out.push_back({a[k].time, a[k].e_a, b[k].e_a, a[k].e_2, b[k].e_2, a[k].dof, b[k].dof});
    }
    return out;
}

inline void write_comparison_csv(std::ostream& os, const std::vector<ComparisonRow>& rows) {
    os << "t,e_a_a,e_a_b,e_a_diff,e_2_a,e_2_b,e_2_diff,dof_a,dof_b\n";
    for (const auto& r : rows)
        os << detail::fmt(r.time) << ',' << detail::fmt(r.e_a_a) << ',' << detail::fmt(r.e_a_b) << ','
           << detail::fmt(r.e_a_b - r.e_a_a) << ',' << detail::fmt(r.e_2_a) << ',' << detail::fmt(r.e_2_b) << ','
           << detail::fmt(r.e_2_b - r.e_2_a) << ',' << r.dof_a << ',' << r.dof_b << '\n';
}

} // namespace msrom::harness
