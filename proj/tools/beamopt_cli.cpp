#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "beamopt/harness.hpp"

using namespace beamopt;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_spec = 1;
constexpr int exit_runtime = 2;

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> runs;
    std::optional<int> threads;
    std::optional<double> solver_tolerance;
    std::optional<double> ga_target;
    std::optional<double> ga_spread;
    std::optional<long> ga_max_calls;
    std::string out;

    void add_to(CLI::App* app)
    {
        app->add_option("--seed", seed, "Seed of the first run (run i uses seed + i)");
        app->add_option("--runs", runs, "Number of seeded runs");
        app->add_option("--threads", threads, "Worker threads (0: all cores)");
        app->add_option("--tol", solver_tolerance, "Newton relative residual tolerance");
        app->add_option("--ga-target", ga_target, "Stop a GA run at this fitness");
        app->add_option("--ga-spread", ga_spread, "Stop a GA run when the population fitness spread falls below");
        app->add_option("--ga-max-calls", ga_max_calls, "Fitness call budget per GA run");
        app->add_option("--out", out, "Output directory");
    }

    void apply(ExperimentSpec& spec) const
    {
        if (seed) {
            spec.seed = *seed;
        }
        if (runs) {
            spec.runs = *runs;
        }
        if (threads) {
            spec.threads = *threads;
        }
        if (solver_tolerance) {
            spec.solver.tolerance = *solver_tolerance;
        }
        if (ga_target) {
            spec.ga.target = *ga_target;
        }
        if (ga_spread) {
            spec.ga.spread_tolerance = *ga_spread;
        }
        if (ga_max_calls) {
            spec.ga.max_calls = *ga_max_calls;
        }
        if (!out.empty()) {
            spec.output_dir = out;
        }
        spec.validate();
    }
};

std::string read_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw SpecError("cannot read config " + path);
    }
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void print_table(const std::vector<StatRow>& rows)
{
    std::printf("%-10s %14s %14s %14s %14s\n", "quantity", "min", "max", "mean", "std");
    for (const auto& r : rows) {
        std::printf("%-10s %14.6g %14.6g %14.6g %14.6g\n", r.quantity.c_str(), r.min, r.max, r.mean, r.std);
    }
}

int run_and_report(const ExperimentSpec& spec)
{
    const RunReport report = run_experiment(spec);
    int failed = 0;
    for (const auto& r : report.rows) {
        failed += r.ok ? 0 : 1;
    }
    std::printf("%s / %s: %zu runs, %d failed\n", spec.preset.c_str(), to_string(spec.method).c_str(),
                report.rows.size(), failed);
    if (report.grid_evaluations > 0) {
        std::printf("grid evaluations: %ld\n", report.grid_evaluations);
    }
    print_table(report.aggregate);
    const RunRow& best = report.best();
    std::printf("best J = %.10g at", best.value);
    for (int i = 0; i < best.x.size(); ++i) {
        std::printf(" %s=%.6f", report.names[static_cast<std::size_t>(i)].c_str(), best.x[i]);
    }
    std::printf("\n");
    for (const auto& r : report.rows) {
        if (!r.ok) {
            std::fprintf(stderr, "seed %llu: %s\n", static_cast<unsigned long long>(r.seed), r.status.c_str());
        }
    }
    if (!spec.output_dir.empty()) {
        export_results(report, spec.output_dir);
        std::printf("results written to %s\n", spec.output_dir.c_str());
    }
    return failed == 0 ? exit_ok : exit_runtime;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Shape control and design of planar beams"};
    app.require_subcommand(1);

    Overrides o_forward, o_surface, o_optimize, o_preset;

    std::string forward_preset;
    std::vector<double> forward_values;
    auto* fwd = app.add_subcommand("forward", "Solve equilibrium for one control or design and report its cost");
    fwd->add_option("preset", forward_preset, "tletter, iletter, thickness-shear or thickness-disp")->required();
    fwd->add_option("values", forward_values, "Control or design values")->required();
    o_forward.add_to(fwd);

    std::string surface_config;
    auto* sur = app.add_subcommand("surface", "Surface-sequential optimization from a config or preset");
    sur->add_option("config", surface_config, "Config file or experiment name")->required();
    o_surface.add_to(sur);

    std::string optimize_config;
    auto* opt = app.add_subcommand("optimize", "Run the experiment described by a config file");
    opt->add_option("config", optimize_config, "Config file")->required();
    o_optimize.add_to(opt);

    std::string preset_name;
    bool print_only = false;
    auto* pre = app.add_subcommand("preset", "Run a named experiment");
    pre->add_option("name", preset_name, "Experiment name")->required();
    pre->add_flag("--print", print_only, "Print the experiment config and exit");
    o_preset.add_to(pre);

    std::string stats_path;
    auto* sta = app.add_subcommand("stats", "Aggregate statistics of a runs.csv");
    sta->add_option("runs_csv", stats_path, "runs.csv written by an experiment")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? exit_ok : exit_spec;
    }

    const auto load = [](const std::string& arg) {
        for (const auto& n : experiment_names()) {
            if (n == arg) {
                return named_experiment(arg);
            }
        }
        return parse_config(read_file(arg));
    };

    try {
        if (*fwd) {
            ExperimentSpec spec = named_experiment(forward_preset);
            o_forward.apply(spec);
            if (forward_values.size() != spec.variables.size()) {
                throw SpecError("forward: " + forward_preset + " takes " + std::to_string(spec.variables.size()) +
                                " values");
            }
            const Eigen::VectorXd x =
                Eigen::Map<const Eigen::VectorXd>(forward_values.data(), static_cast<Eigen::Index>(forward_values.size()));
            const RunReport report = forward_report(spec, x);
            const RunRow& r = report.rows.front();
            std::printf("J = %.12g\nNewton iterations: %d\n%s\n", r.value, r.iterations, r.status.c_str());
            if (!spec.output_dir.empty()) {
                export_results(report, spec.output_dir);
                std::printf("results written to %s\n", spec.output_dir.c_str());
            }
            return r.ok ? exit_ok : exit_runtime;
        }
        if (*sur) {
            ExperimentSpec spec = load(surface_config);
            spec.method = Method::surface_sequential;
            spec.runs = 1;
            o_surface.apply(spec);
            return run_and_report(spec);
        }
        if (*opt) {
            ExperimentSpec spec = parse_config(read_file(optimize_config));
            o_optimize.apply(spec);
            return run_and_report(spec);
        }
        if (*pre) {
            ExperimentSpec spec = named_experiment(preset_name);
            o_preset.apply(spec);
            if (print_only) {
                std::fputs(serialize_config(spec).c_str(), stdout);
                return exit_ok;
            }
            return run_and_report(spec);
        }
        if (*sta) {
            const auto [names, rows] = read_runs_csv(stats_path);
            if (rows.empty()) {
                throw SpecError(stats_path + ": no runs");
            }
            print_table(stats_report(names, rows));
            return exit_ok;
        }
    } catch (const SpecError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_spec;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_runtime;
    }
    return exit_ok;
}
