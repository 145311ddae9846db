// msrom: command-line front end for experiments, presets, fields and reports.

#include "msrom/msrom.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>

namespace {

using namespace msrom;
using namespace msrom::harness;

constexpr int exit_config = 2;
constexpr int exit_numerical = 3;

int cmd_run(const std::string& config_path, const std::string& out_dir, bool quiet) {
    ExperimentConfig c = load_config(config_path);
    if (!out_dir.empty()) c.output.directory = out_dir;
    const ExperimentResult r = run_experiment(c, {true, !quiet});
    if (!quiet) {
        std::cout << "n,t,e_a,e_2,dof\n";
        for (const auto& row : r.report.rows)
            std::cout << row.step << ',' << harness::detail::fmt(row.time) << ',' << harness::detail::fmt(row.e_a) << ','
                      << harness::detail::fmt(row.e_2) << ',' << row.dof << '\n';
        std::cout << "wrote " << r.directory.string() << '\n';
    }
    return 0;
}

int cmd_preset(const std::string& name, const std::string& out, bool list) {
    if (list) {
        for (const auto& n : preset_names()) std::cout << n << '\n';
        return 0;
    }
    if (name.empty()) throw ConfigError("harness", "preset name required (use --list to see them)");
    const ExperimentConfig c = preset(name);
    if (out.empty() || out == "-") {
        write_config(c, std::cout);
    } else {
        save_config(c, out);
    }
    return 0;
}

int cmd_field_gen(int nx, int ny, double contrast, std::uint64_t seed, const std::string& out) {
    const FineMesh mesh = build_fine_mesh(nx, ny);
    const PermeabilityField k = generate_channelized(mesh, contrast, seed);
    if (out.empty() || out == "-") {
        save_field(k, std::cout);
    } else {
        save_field(k, out);
    }
    return 0;
}

int cmd_compare(const std::string& a, const std::string& b, const std::string& out) {
    const auto rows = compare_runs(read_errors_csv(a), read_errors_csv(b));
    if (out.empty() || out == "-") {
        write_comparison_csv(std::cout, rows);
    } else {
        std::ofstream os(out);
        if (!os) throw ConfigError("harness", "cannot open " + out + " for writing");
        write_comparison_csv(os, rows);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multiscale reduced-order solver for Allen-Cahn on high-contrast media"};
    app.require_subcommand(1);

    std::string config_path, run_out;
    bool quiet = false;
    auto* run = app.add_subcommand("run", "Run an experiment from a config file");
    run->add_option("--config,-c", config_path, "Experiment config (.ini)")->required();
    run->add_option("--out,-o", run_out, "Override output.directory");
    run->add_flag("--quiet,-q", quiet, "No progress or summary output");

    std::string preset_name, preset_out;
    bool preset_list = false;
    auto* pre = app.add_subcommand("preset", "Write a named preset config");
    pre->add_option("name", preset_name, "Preset name");
    pre->add_option("--out,-o", preset_out, "Output file (default stdout)");
    pre->add_flag("--list", preset_list, "List preset names");

    auto* field = app.add_subcommand("field", "Permeability field utilities");
    field->require_subcommand(1);
    int nx = 64, ny = 64;
    double contrast = 1e4;
    std::uint64_t seed = 1;
    std::string field_out;
    auto* gen = field->add_subcommand("gen", "Generate a channelized high-contrast field");
    gen->add_option("--nx", nx, "Fine cells in x")->capture_default_str();
    gen->add_option("--ny", ny, "Fine cells in y")->capture_default_str();
    gen->add_option("--contrast", contrast, "Channel-to-background ratio")->capture_default_str();
    gen->add_option("--seed", seed, "Layout seed")->capture_default_str();
    gen->add_option("--out,-o", field_out, "Output file (default stdout)");

    std::string csv_a, csv_b, cmp_out;
    auto* cmp = app.add_subcommand("compare", "Pair two errors.csv files by time stamp");
    cmp->add_option("a", csv_a, "First errors.csv")->required()->check(CLI::ExistingFile);
    cmp->add_option("b", csv_b, "Second errors.csv")->required()->check(CLI::ExistingFile);
    cmp->add_option("--out,-o", cmp_out, "Output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }

    try {
        if (*run) return cmd_run(config_path, run_out, quiet);
        if (*pre) return cmd_preset(preset_name, preset_out, preset_list);
        if (*gen) return cmd_field_gen(nx, ny, contrast, seed, field_out);
        if (*cmp) return cmd_compare(csv_a, csv_b, cmp_out);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_config;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return exit_numerical;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_config;
    }
    return 0;
}
