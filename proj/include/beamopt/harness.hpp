#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "beamopt/evolutionary.hpp"
#include "beamopt/presets.hpp"
#include "beamopt/surrogate.hpp"

namespace beamopt {

/// Thrown for malformed or inconsistent experiment descriptions.
struct SpecError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

enum class Method {
    surface_sequential,
    ga_sequential,
    ga_simultaneous_full,     // state, variables and multipliers as unknowns
    ga_simultaneous_reduced,  // multipliers eliminated through the adjoint
};

std::string to_string(Method m);
Method parse_method(const std::string& text);

struct VariableBox {
    std::string name;
    double lower = 0.0;
    double upper = 0.0;

    bool operator==(const VariableBox&) const = default;
};

/// Everything needed to reproduce one experiment.
struct ExperimentSpec {
    std::string preset;  // tletter, iletter, thickness-shear, thickness-disp
    Method method = Method::ga_sequential;
    int runs = 1;
    std::uint64_t seed = 1;  // run i uses seed + i
    int threads = 0;         // 0: hardware concurrency

    std::vector<VariableBox> variables;

    // cost
    double alpha = 0.0;
    PenaltyKind penalty = PenaltyKind::none;
    double mass_target = 0.0;
    double penalty_weight = 0.0;

    GaSettings ga;
    double bound_ratio = 1e-4;        // simultaneous methods: state bounds (1 -+ ratio) of the guess
    double failure_fitness = 1e30;    // assigned when the forward solve fails

    std::vector<int> grid{20, 20};
    SurfaceOptions surface;
    std::vector<double> start;  // empty: box centre

    SolverOptions solver;

    std::string output_dir;  // empty: nothing written
    bool write_history = true;
    bool write_shape = true;

    bool is_design() const;

    /// Throws SpecError naming the offending field.
    void validate() const;

    bool operator==(const ExperimentSpec&) const = default;
};

inline constexpr const char* config_header = "beamopt-experiment 1";

/// Default experiment for a scenario or a named variant
/// (tletter, tletter-surface, iletter, iletter-regularized,
/// thickness-shear, thickness-disp). Throws SpecError for unknown names.
ExperimentSpec named_experiment(const std::string& name);
std::vector<std::string> experiment_names();

/// Parse the key-value format: the header line, then [section] blocks of
/// `key = value` lines; '#' starts a comment. Unset keys take the
/// scenario's defaults.
ExperimentSpec parse_config(const std::string& text);

/// Canonical text listing every field; parse_config inverts it exactly.
std::string serialize_config(const ExperimentSpec& spec);

struct RunRow {
    std::uint64_t seed = 0;
    Eigen::VectorXd x;
    double value = 0.0;          // cost from a forward solve at x
    double approx_value = 0.0;   // surrogate or merit value reached by the optimizer
    long calls = 0;              // fitness or forward-solve evaluations
    int iterations = 0;          // generations or descent steps
    double seconds = 0.0;
    bool ok = false;             // forward solve at x converged
    std::string status;

    std::vector<GaHistoryRow> history;
    std::vector<Eigen::VectorXd> trail;
    Configuration config;  // equilibrium at x when ok
};

struct StatRow {
    std::string quantity;
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
};

struct RunReport {
    ExperimentSpec spec;
    std::vector<std::string> names;
    std::vector<RunRow> rows;
    std::vector<StatRow> aggregate;
    Configuration reference;
    Configuration desired;  // control scenarios only
    Mesh mesh;              // mesh of the best run
    long grid_evaluations = 0;

    bool all_ok() const;
    const RunRow& best() const;
};

/// One row per variable, then one for the call counts.
std::vector<StatRow> stats_report(const std::vector<std::string>& names, const std::vector<RunRow>& rows);

/// Executes spec.runs seeded repetitions, in parallel when threads allow.
/// Failures of individual runs are recorded in their rows.
RunReport run_experiment(const ExperimentSpec& spec);

/// One forward solve at x reported as a single run (calls = 1, iterations =
/// Newton iterations). x need not lie inside the variable boxes.
RunReport forward_report(const ExperimentSpec& spec, const Eigen::VectorXd& x);

/// Writes runs.csv, aggregate.csv, and when enabled shape.csv and
/// history_<seed>.csv into `dir`. Throws std::runtime_error naming the
/// path on I/O failure.
void export_results(const RunReport& report, const std::string& dir);

/// Polyline of a configuration in element order; s is the reference arc
/// length. A branch restarts at its junction node.
struct ShapePoint {
    double s = 0.0;
    Vec2 position = Vec2::Zero();
};
std::vector<ShapePoint> shape_polyline(const Mesh& mesh, const Configuration& config);

/// RFC-4180 field quoting.
std::string csv_field(const std::string& text);
std::vector<std::string> split_csv_line(const std::string& line);

/// Reads a runs.csv written by export_results back into names and rows.
std::pair<std::vector<std::string>, std::vector<RunRow>> read_runs_csv(const std::string& path);

}  // namespace beamopt
