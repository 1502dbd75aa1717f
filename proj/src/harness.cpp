#include "beamopt/harness.hpp"

#include "beamopt/quadrature.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <limits>
#include <sstream>
#include <thread>

namespace beamopt {

namespace {

const std::vector<std::string> scenario_names = {"tletter", "iletter", "thickness-shear", "thickness-disp"};

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> words(const std::string& s)
{
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string w; in >> w;) {
        out.push_back(w);
    }
    return out;
}

std::string format_double(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& text, const std::string& what)
{
    const std::string t = trim(text);
    double v = 0.0;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    if (!t.empty() && *first == '+') {
        ++first;
    }
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (t.empty() || ec != std::errc() || ptr != last || std::isnan(v)) {
        throw SpecError(what + ": malformed number '" + text + "'");
    }
    return v;
}

long parse_long(const std::string& text, const std::string& what)
{
    const std::string t = trim(text);
    long v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
        throw SpecError(what + ": malformed integer '" + text + "'");
    }
    return v;
}

int parse_int(const std::string& text, const std::string& what)
{
    const long v = parse_long(text, what);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
        throw SpecError(what + ": integer out of range '" + text + "'");
    }
    return static_cast<int>(v);
}

bool parse_bool(const std::string& text, const std::string& what)
{
    const std::string t = trim(text);
    if (t == "true") {
        return true;
    }
    if (t == "false") {
        return false;
    }
    throw SpecError(what + ": expected true or false, got '" + text + "'");
}

std::string to_string(PenaltyKind k)
{
    switch (k) {
    case PenaltyKind::none:
        return "none";
    case PenaltyKind::upper:
        return "upper";
    case PenaltyKind::lower:
        return "lower";
    case PenaltyKind::equality:
        return "equality";
    }
    return "none";
}

PenaltyKind parse_penalty(const std::string& t)
{
    if (t == "none") {
        return PenaltyKind::none;
    }
    if (t == "upper") {
        return PenaltyKind::upper;
    }
    if (t == "lower") {
        return PenaltyKind::lower;
    }
    if (t == "equality") {
        return PenaltyKind::equality;
    }
    throw SpecError("cost.penalty: unknown kind '" + t + "'");
}

Algorithm parse_algorithm(const std::string& t)
{
    if (t == "sade") {
        return Algorithm::sade;
    }
    if (t == "grade") {
        return Algorithm::grade;
    }
    throw SpecError("ga.algorithm: unknown algorithm '" + t + "'");
}

bool is_scenario(const std::string& name)
{
    return std::find(scenario_names.begin(), scenario_names.end(), name) != scenario_names.end();
}

// ---------------------------------------------------------------------------
// Problem setup shared by all runs of an experiment

struct Setup {
    bool design = false;
    ControlScenario control;
    DesignScenario structure;
    std::unique_ptr<ControlProblem> control_problem;
    std::unique_ptr<DesignProblem> design_problem;

    const Mesh& mesh() const { return design ? structure.mesh : control.mesh; }
    const LoadCase& loads() const { return design ? structure.loads : control.loads; }
    std::vector<std::string> names() const { return design ? structure.variables : control.variables; }

    Evaluation evaluate(const Eigen::VectorXd& x) const
    {
        const std::span<const double> v(x.data(), static_cast<std::size_t>(x.size()));
        return design ? design_problem->evaluate(v) : control_problem->evaluate(v);
    }

    Mesh mesh_at(const Eigen::VectorXd& x) const
    {
        if (!design) {
            return control.mesh;
        }
        return design_problem->designed_mesh(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
    }
};

DesignCostKind design_kind(const std::string& preset)
{
    return preset == "thickness-shear" ? DesignCostKind::shear_energy : DesignCostKind::displacement_norm;
}

std::unique_ptr<Setup> make_setup(const ExperimentSpec& spec)
{
    auto s = std::make_unique<Setup>();
    s->design = spec.is_design();
    const int n = static_cast<int>(spec.variables.size());
    if (s->design) {
        s->structure = thickness_scenario(design_kind(spec.preset), spec.solver);
        DesignScenario& d = s->structure;
        d.cost.penalty = spec.penalty;
        d.cost.mass_target = spec.mass_target;
        d.cost.penalty_weight = spec.penalty_weight;
        for (int i = 0; i < n; ++i) {
            d.design.lower[i] = spec.variables[i].lower;
            d.design.upper[i] = spec.variables[i].upper;
        }
        d.design.validate(d.mesh);
        s->design_problem = std::make_unique<DesignProblem>(d.mesh, d.loads, d.design, d.cost, spec.solver);
    } else {
        s->control = spec.preset == "tletter" ? tletter_scenario(spec.solver) : iletter_scenario(spec.alpha, spec.solver);
        ControlScenario& c = s->control;
        c.cost.alpha = spec.alpha;
        for (int i = 0; i < n; ++i) {
            c.lower[i] = spec.variables[i].lower;
            c.upper[i] = spec.variables[i].upper;
        }
        s->control_problem = std::make_unique<ControlProblem>(c.mesh, c.loads, c.cost, spec.solver);
    }
    return s;
}

Box variable_box(const ExperimentSpec& spec)
{
    const int n = static_cast<int>(spec.variables.size());
    Box box{Eigen::VectorXd(n), Eigen::VectorXd(n)};
    for (int i = 0; i < n; ++i) {
        box.lower[i] = spec.variables[i].lower;
        box.upper[i] = spec.variables[i].upper;
    }
    return box;
}

Eigen::VectorXd start_point(const ExperimentSpec& spec)
{
    if (!spec.start.empty()) {
        return Eigen::Map<const Eigen::VectorXd>(spec.start.data(), static_cast<Eigen::Index>(spec.start.size()));
    }
    const Box box = variable_box(spec);
    return 0.5 * (box.lower + box.upper);
}

std::string ga_status(const GaResult& r)
{
    if (r.reached_target) {
        return "target reached";
    }
    if (r.converged_spread) {
        return "population converged";
    }
    if (r.budget_exhausted) {
        return "call budget exhausted";
    }
    return "stopped";
}

std::string one_line(std::string s)
{
    std::replace(s.begin(), s.end(), '\n', ' ');
    std::replace(s.begin(), s.end(), '\r', ' ');
    return s;
}

// State and multiplier guesses for the simultaneous methods.
struct KktGuess {
    DofMap map;
    Eigen::VectorXd q_template;
    Eigen::VectorXd state;       // free dofs
    Eigen::VectorXd multiplier;  // free dofs
};

Eigen::VectorXd design_multipliers(const Setup& s, const Mesh& m, const Configuration& config,
                                   std::span<const double> d)
{
    const std::vector<double> none(s.loads().control_count(), 0.0);
    const DofMap map = make_dof_map(m);
    const CostValue c = design_cost(m, config, s.structure.design, d, s.structure.cost);
    return adjoint_multipliers(free_tangent(m, s.loads(), config, none), restrict_vector(c.d_state, map.free));
}

KktGuess kkt_guess(const Setup& s, const ExperimentSpec& spec)
{
    KktGuess g;
    g.map = make_dof_map(s.mesh());
    const Eigen::VectorXd x0 = start_point(spec);
    const std::span<const double> v(x0.data(), static_cast<std::size_t>(x0.size()));
    Configuration config;
    if (s.design) {
        // the state guess is the equilibrium of the starting design
        const Evaluation ev = s.evaluate(x0);
        if (!ev.converged) {
            throw std::runtime_error("guess equilibrium failed: " + ev.report.message());
        }
        config = ev.config;
        g.multiplier = design_multipliers(s, s.mesh_at(x0), config, v);
    } else {
        config = s.control.cost.desired;
        g.multiplier = eliminate_multipliers(s.mesh(), s.loads(), config, v, s.control.cost).lambda;
    }
    g.q_template = config.q;
    g.state = restrict_vector(config.q, g.map.free);
    return g;
}

double kkt_merit(const Setup& s, const KktGuess& g, const Eigen::VectorXd& z, int nvar, bool full)
{
    const int nf = g.map.free_count();
    Configuration config{g.q_template};
    for (int i = 0; i < nf; ++i) {
        config.q[g.map.free[i]] = z[i];
    }
    const Eigen::VectorXd x = z.segment(nf, nvar);
    const std::span<const double> v(x.data(), static_cast<std::size_t>(nvar));
    if (s.design) {
        const Mesh m = s.mesh_at(x);
        const Eigen::VectorXd lambda = full ? Eigen::VectorXd(z.tail(nf)) : design_multipliers(s, m, config, v);
        const KktResidual r = kkt_residual_design(m, s.loads(), config, s.structure.design, v, lambda, s.structure.cost);
        return full ? merit_least_squares(r) : r.r_lambda.squaredNorm() + r.r_variable.squaredNorm();
    }
    if (full) {
        return merit_least_squares(kkt_residual_control(s.mesh(), s.loads(), config, v, z.tail(nf), s.control.cost));
    }
    const ReducedResidual r = eliminate_multipliers(s.mesh(), s.loads(), config, v, s.control.cost);
    return r.r_lambda.squaredNorm() + r.r_control.squaredNorm();
}

void finish_row(const Setup& s, RunRow& row)
{
    const Evaluation ev = s.evaluate(row.x);
    row.ok = ev.converged;
    row.value = ev.value;
    row.config = ev.config;
    if (!ev.converged) {
        row.status = "forward solve at solution failed: " + one_line(ev.report.message());
    }
}

RunRow run_one(const Setup& s, const ExperimentSpec& spec, const SampleSet* samples, const KktGuess* guess,
               std::uint64_t seed)
{
    const auto t0 = std::chrono::steady_clock::now();
    RunRow row;
    row.seed = seed;
    const Box box = variable_box(spec);
    const int nvar = box.dimension();
    try {
        switch (spec.method) {
        case Method::surface_sequential: {
            const SurfaceResult r = surface_minimize(*samples, start_point(spec), spec.surface);
            row.x = r.x;
            row.approx_value = r.value;
            row.calls = samples->size();
            row.iterations = r.iterations;
            row.trail = r.trail;
            row.status = r.converged ? "converged" : "iteration limit";
            break;
        }
        case Method::ga_sequential: {
            GaSettings g = spec.ga;
            g.seed = seed;
            const GaResult r = evolve(
                [&](const Eigen::VectorXd& x) {
                    const Evaluation ev = s.evaluate(x);
                    return ev.converged ? ev.value : spec.failure_fitness;
                },
                box, g);
            row.x = r.best.x;
            row.approx_value = r.best.fitness;
            row.calls = r.calls;
            row.iterations = r.generations;
            row.history = r.history;
            row.status = ga_status(r);
            break;
        }
        case Method::ga_simultaneous_full:
        case Method::ga_simultaneous_reduced: {
            const bool full = spec.method == Method::ga_simultaneous_full;
            const int nf = guess->map.free_count();
            const auto [slo, shi] = bound_box_from_reference(guess->state, spec.bound_ratio);
            const int n = nf + nvar + (full ? nf : 0);
            Box z{Eigen::VectorXd(n), Eigen::VectorXd(n)};
            z.lower << slo, box.lower, Eigen::VectorXd(full ? nf : 0);
            z.upper << shi, box.upper, Eigen::VectorXd(full ? nf : 0);
            if (full) {
                const auto [llo, lhi] = bound_box_from_reference(guess->multiplier, spec.bound_ratio);
                z.lower.tail(nf) = llo;
                z.upper.tail(nf) = lhi;
            }
            GaSettings g = spec.ga;
            g.seed = seed;
            const GaResult r = evolve(
                [&](const Eigen::VectorXd& v) {
                    try {
                        const double m = kkt_merit(s, *guess, v, nvar, full);
                        return std::isfinite(m) ? m : spec.failure_fitness;
                    } catch (const std::runtime_error&) {
                        return spec.failure_fitness;
                    }
                },
                z, g);
            row.x = r.best.x.segment(nf, nvar);
            row.approx_value = r.best.fitness;
            row.calls = r.calls;
            row.iterations = r.generations;
            row.history = r.history;
            row.status = ga_status(r);
            break;
        }
        }
        finish_row(s, row);
    } catch (const std::exception& e) {
        row.ok = false;
        row.status = one_line(e.what());
        if (row.x.size() != nvar) {
            row.x = Eigen::VectorXd::Constant(nvar, std::numeric_limits<double>::quiet_NaN());
        }
        row.value = std::numeric_limits<double>::quiet_NaN();
    }
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

void write_atomic(const std::string& path, const std::string& content)
{
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) {
            throw std::runtime_error("cannot write " + path);
        }
        out << content;
        out.flush();
        if (!out) {
            throw std::runtime_error("write failed: " + path);
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw std::runtime_error("cannot write " + path + ": " + ec.message());
    }
}

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(Method m)
{
    switch (m) {
    case Method::surface_sequential:
        return "surface-sequential";
    case Method::ga_sequential:
        return "ga-sequential";
    case Method::ga_simultaneous_full:
        return "ga-simultaneous-full";
    case Method::ga_simultaneous_reduced:
        return "ga-simultaneous-reduced";
    }
    return "ga-sequential";
}

Method parse_method(const std::string& text)
{
    for (Method m : {Method::surface_sequential, Method::ga_sequential, Method::ga_simultaneous_full,
                     Method::ga_simultaneous_reduced}) {
        if (to_string(m) == text) {
            return m;
        }
    }
    throw SpecError("experiment.method: unknown method '" + text + "'");
}

bool ExperimentSpec::is_design() const
{
    return preset == "thickness-shear" || preset == "thickness-disp";
}

void ExperimentSpec::validate() const
{
    if (!is_scenario(preset)) {
        throw SpecError("experiment.preset: unknown preset '" + preset + "'");
    }
    if (runs < 1) {
        throw SpecError("experiment.runs: must be at least 1");
    }
    if (threads < 0) {
        throw SpecError("experiment.threads: must not be negative");
    }
    const std::size_t expected = is_design() ? 4 : 2;
    if (variables.size() != expected) {
        throw SpecError("variables: preset " + preset + " has " + std::to_string(expected) + " variables");
    }
    for (const auto& v : variables) {
        if (!std::isfinite(v.lower) || !std::isfinite(v.upper) || !(v.lower < v.upper)) {
            throw SpecError("variable " + v.name + ": empty box [" + format_double(v.lower) + ", " +
                            format_double(v.upper) + "]");
        }
        if (is_design() && !(v.lower > 0.0)) {
            throw SpecError("variable " + v.name + ": thickness bounds must be positive");
        }
    }
    if (!(alpha >= 0.0) || !(penalty_weight >= 0.0) || !(mass_target >= 0.0)) {
        throw SpecError("cost: alpha, mass_target and penalty_weight must be non-negative");
    }
    try {
        ga.validate();
    } catch (const std::invalid_argument& e) {
        throw SpecError(e.what());
    }
    if (!(bound_ratio > 0.0)) {
        throw SpecError("ga.bound_ratio: must be positive");
    }
    if (!std::isfinite(failure_fitness)) {
        throw SpecError("ga.failure_fitness: must be finite");
    }
    if (grid.size() != variables.size()) {
        throw SpecError("surface.grid: needs one size per variable");
    }
    for (int g : grid) {
        if (g < 2) {
            throw SpecError("surface.grid: at least 2 nodes per axis");
        }
    }
    if (!start.empty()) {
        if (start.size() != variables.size()) {
            throw SpecError("surface.start: needs one value per variable");
        }
        for (std::size_t i = 0; i < start.size(); ++i) {
            if (start[i] < variables[i].lower || start[i] > variables[i].upper) {
                throw SpecError("surface.start: " + variables[i].name + " outside its box");
            }
        }
    }
    if (surface.max_iterations < 1 || !(surface.step_tolerance > 0.0) || !(surface.gradient_step > 0.0)) {
        throw SpecError("surface: iteration limit and step sizes must be positive");
    }
    if (solver.load_steps < 0 || solver.max_iterations < 1 || !(solver.tolerance > 0.0) ||
        !(solver.absolute_floor >= 0.0) || solver.max_halvings < 0) {
        throw SpecError("solver: invalid Newton settings");
    }
}

std::vector<std::string> experiment_names()
{
    return {"tletter", "tletter-surface", "iletter", "iletter-regularized", "thickness-shear", "thickness-disp"};
}

ExperimentSpec named_experiment(const std::string& name)
{
    ExperimentSpec spec;
    const auto boxes = [](const std::vector<std::string>& names, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
        std::vector<VariableBox> out;
        for (std::size_t i = 0; i < names.size(); ++i) {
            out.push_back({names[i], lo[static_cast<Eigen::Index>(i)], hi[static_cast<Eigen::Index>(i)]});
        }
        return out;
    };
    if (name == "tletter" || name == "tletter-surface") {
        const ControlScenario sc = tletter_scenario();
        spec.preset = "tletter";
        spec.variables = boxes(sc.variables, sc.lower, sc.upper);
        spec.grid = {20, 20};
        if (name == "tletter") {
            spec.runs = 100;
            spec.ga.target = 1e-7;
        } else {
            spec.method = Method::surface_sequential;
        }
    } else if (name == "iletter" || name == "iletter-regularized") {
        const ControlScenario sc = iletter_scenario();
        spec.preset = "iletter";
        spec.variables = boxes(sc.variables, sc.lower, sc.upper);
        spec.grid = {20, 20};
        spec.runs = 20;
        if (name == "iletter") {
            spec.ga.target = 1e-7;
        } else {
            spec.alpha = 1e-9;
            spec.ga.spread_tolerance = 1e-12;
            spec.ga.pool_rate = 20;
        }
    } else if (name == "thickness-shear" || name == "thickness-disp") {
        const DesignScenario sc = thickness_scenario(design_kind(name));
        spec.preset = name;
        for (int i = 0; i < sc.design.size(); ++i) {
            spec.variables.push_back({sc.variables[i], sc.design.lower[i], sc.design.upper[i]});
        }
        spec.penalty = sc.cost.penalty;
        spec.mass_target = sc.cost.mass_target;
        spec.penalty_weight = sc.cost.penalty_weight;
        spec.grid = {5, 5, 5, 5};
        spec.runs = 100;
        spec.ga.spread_tolerance = name == "thickness-shear" ? 1e-6 : 1.0;
    } else {
        throw SpecError("unknown experiment '" + name + "'");
    }
    spec.ga.max_calls = 100000;
    return spec;
}

ExperimentSpec parse_config(const std::string& text)
{
    struct Entry {
        std::string key;
        std::string value;
        int line;
    };
    const std::vector<std::string> allowed = {"experiment", "variables", "cost", "ga", "surface", "solver", "output"};
    std::map<std::string, std::vector<Entry>> sections;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    bool header = false;
    std::string current;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        const std::string t = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (t.empty()) {
            continue;
        }
        if (!header) {
            if (t != config_header) {
                throw SpecError("line " + std::to_string(lineno) + ": expected header '" + config_header + "'");
            }
            header = true;
            continue;
        }
        if (t.front() == '[') {
            if (t.back() != ']') {
                throw SpecError("line " + std::to_string(lineno) + ": malformed section header");
            }
            current = trim(t.substr(1, t.size() - 2));
            if (std::find(allowed.begin(), allowed.end(), current) == allowed.end()) {
                throw SpecError("line " + std::to_string(lineno) + ": unknown section [" + current + "]");
            }
            if (sections.contains(current)) {
                throw SpecError("line " + std::to_string(lineno) + ": duplicate section [" + current + "]");
            }
            sections[current];
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos || current.empty()) {
            throw SpecError("line " + std::to_string(lineno) + ": expected key = value inside a section");
        }
        const std::string key = trim(t.substr(0, eq));
        for (const auto& e : sections[current]) {
            if (e.key == key) {
                throw SpecError("line " + std::to_string(lineno) + ": duplicate key " + current + "." + key);
            }
        }
        sections[current].push_back({key, trim(t.substr(eq + 1)), lineno});
    }
    if (!header) {
        throw SpecError(std::string("missing header '") + config_header + "'");
    }
    if (!sections.contains("experiment")) {
        throw SpecError("missing required section [experiment]");
    }
    std::string preset;
    for (const auto& e : sections["experiment"]) {
        if (e.key == "preset") {
            preset = e.value;
        }
    }
    if (preset.empty()) {
        throw SpecError("experiment.preset: missing");
    }
    if (!is_scenario(preset)) {
        throw SpecError("experiment.preset: unknown preset '" + preset + "'");
    }
    ExperimentSpec spec = named_experiment(preset);

    for (const auto& [section, entries] : sections) {
        for (const auto& e : entries) {
            const std::string what = section + "." + e.key;
            const auto unknown = [&] {
                throw SpecError("line " + std::to_string(e.line) + ": unknown key " + what);
            };
            const std::string& v = e.value;
            if (section == "experiment") {
                if (e.key == "preset") {
                } else if (e.key == "method") {
                    spec.method = parse_method(v);
                } else if (e.key == "runs") {
                    spec.runs = parse_int(v, what);
                } else if (e.key == "seed") {
                    const long s = parse_long(v, what);
                    if (s < 0) {
                        throw SpecError(what + ": must not be negative");
                    }
                    spec.seed = static_cast<std::uint64_t>(s);
                } else if (e.key == "threads") {
                    spec.threads = parse_int(v, what);
                } else {
                    unknown();
                }
            } else if (section == "variables") {
                auto it = std::find_if(spec.variables.begin(), spec.variables.end(),
                                       [&](const VariableBox& b) { return b.name == e.key; });
                if (it == spec.variables.end()) {
                    throw SpecError("line " + std::to_string(e.line) + ": unknown variable " + e.key);
                }
                const auto w = words(v);
                if (w.size() != 2) {
                    throw SpecError("variable " + e.key + ": expected 'lower upper'");
                }
                it->lower = parse_double(w[0], "variable " + e.key);
                it->upper = parse_double(w[1], "variable " + e.key);
                if (!(it->lower < it->upper)) {
                    throw SpecError("variable " + e.key + ": empty box [" + w[0] + ", " + w[1] + "]");
                }
            } else if (section == "cost") {
                if (e.key == "alpha") {
                    spec.alpha = parse_double(v, what);
                } else if (e.key == "penalty") {
                    spec.penalty = parse_penalty(v);
                } else if (e.key == "mass_target") {
                    spec.mass_target = parse_double(v, what);
                } else if (e.key == "penalty_weight") {
                    spec.penalty_weight = parse_double(v, what);
                } else {
                    unknown();
                }
            } else if (section == "ga") {
                if (e.key == "algorithm") {
                    spec.ga.algorithm = parse_algorithm(v);
                } else if (e.key == "pool_rate") {
                    spec.ga.pool_rate = parse_int(v, what);
                } else if (e.key == "mr") {
                    spec.ga.mr = parse_double(v, what);
                } else if (e.key == "cr") {
                    spec.ga.cr = parse_double(v, what);
                } else if (e.key == "cl") {
                    spec.ga.cl = parse_double(v, what);
                } else if (e.key == "radioactivity") {
                    spec.ga.radioactivity = parse_double(v, what);
                } else if (e.key == "local_range") {
                    spec.ga.local_range = parse_double(v, what);
                } else if (e.key == "target") {
                    spec.ga.target = parse_double(v, what);
                } else if (e.key == "max_calls") {
                    spec.ga.max_calls = parse_long(v, what);
                } else if (e.key == "spread_tolerance") {
                    spec.ga.spread_tolerance = parse_double(v, what);
                } else if (e.key == "bound_ratio") {
                    spec.bound_ratio = parse_double(v, what);
                } else if (e.key == "failure_fitness") {
                    spec.failure_fitness = parse_double(v, what);
                } else {
                    unknown();
                }
            } else if (section == "surface") {
                if (e.key == "grid") {
                    spec.grid.clear();
                    for (const auto& w : words(v)) {
                        spec.grid.push_back(parse_int(w, what));
                    }
                } else if (e.key == "start") {
                    spec.start.clear();
                    if (v != "centre") {
                        for (const auto& w : words(v)) {
                            spec.start.push_back(parse_double(w, what));
                        }
                    }
                } else if (e.key == "max_iterations") {
                    spec.surface.max_iterations = parse_int(v, what);
                } else if (e.key == "step_tolerance") {
                    spec.surface.step_tolerance = parse_double(v, what);
                } else if (e.key == "pure_gradient") {
                    spec.surface.pure_gradient = parse_bool(v, what);
                } else if (e.key == "gradient_step") {
                    spec.surface.gradient_step = parse_double(v, what);
                } else {
                    unknown();
                }
            } else if (section == "solver") {
                if (e.key == "load_steps") {
                    spec.solver.load_steps = parse_int(v, what);
                } else if (e.key == "max_iterations") {
                    spec.solver.max_iterations = parse_int(v, what);
                } else if (e.key == "tolerance") {
                    spec.solver.tolerance = parse_double(v, what);
                } else if (e.key == "absolute_floor") {
                    spec.solver.absolute_floor = parse_double(v, what);
                } else if (e.key == "max_halvings") {
                    spec.solver.max_halvings = parse_int(v, what);
                } else {
                    unknown();
                }
            } else if (section == "output") {
                if (e.key == "dir") {
                    spec.output_dir = v;
                } else if (e.key == "history") {
                    spec.write_history = parse_bool(v, what);
                } else if (e.key == "shape") {
                    spec.write_shape = parse_bool(v, what);
                } else {
                    unknown();
                }
            }
        }
    }
    spec.validate();
    return spec;
}

std::string serialize_config(const ExperimentSpec& spec)
{
    std::ostringstream out;
    const auto kv = [&](const std::string& k, const std::string& v) { out << k << " = " << v << '\n'; };
    const auto num = [&](const std::string& k, double v) { kv(k, format_double(v)); };
    out << config_header << "\n\n[experiment]\n";
    kv("preset", spec.preset);
    kv("method", to_string(spec.method));
    kv("runs", std::to_string(spec.runs));
    kv("seed", std::to_string(spec.seed));
    kv("threads", std::to_string(spec.threads));
    out << "\n[variables]\n";
    for (const auto& v : spec.variables) {
        kv(v.name, format_double(v.lower) + " " + format_double(v.upper));
    }
    out << "\n[cost]\n";
    num("alpha", spec.alpha);
    kv("penalty", to_string(spec.penalty));
    num("mass_target", spec.mass_target);
    num("penalty_weight", spec.penalty_weight);
    out << "\n[ga]\n";
    kv("algorithm", spec.ga.algorithm == Algorithm::sade ? "sade" : "grade");
    kv("pool_rate", std::to_string(spec.ga.pool_rate));
    num("mr", spec.ga.mr);
    num("cr", spec.ga.cr);
    num("cl", spec.ga.cl);
    num("radioactivity", spec.ga.radioactivity);
    num("local_range", spec.ga.local_range);
    num("target", spec.ga.target);
    kv("max_calls", std::to_string(spec.ga.max_calls));
    num("spread_tolerance", spec.ga.spread_tolerance);
    num("bound_ratio", spec.bound_ratio);
    num("failure_fitness", spec.failure_fitness);
    out << "\n[surface]\n";
    std::string grid;
    for (std::size_t i = 0; i < spec.grid.size(); ++i) {
        grid += (i ? " " : "") + std::to_string(spec.grid[i]);
    }
    kv("grid", grid);
    std::string start = spec.start.empty() ? "centre" : "";
    for (std::size_t i = 0; i < spec.start.size(); ++i) {
        start += (i ? " " : "") + format_double(spec.start[i]);
    }
    kv("start", start);
    kv("max_iterations", std::to_string(spec.surface.max_iterations));
    num("step_tolerance", spec.surface.step_tolerance);
    kv("pure_gradient", spec.surface.pure_gradient ? "true" : "false");
    num("gradient_step", spec.surface.gradient_step);
    out << "\n[solver]\n";
    kv("load_steps", std::to_string(spec.solver.load_steps));
    kv("max_iterations", std::to_string(spec.solver.max_iterations));
    num("tolerance", spec.solver.tolerance);
    num("absolute_floor", spec.solver.absolute_floor);
    kv("max_halvings", std::to_string(spec.solver.max_halvings));
    out << "\n[output]\n";
    kv("dir", spec.output_dir);
    kv("history", spec.write_history ? "true" : "false");
    kv("shape", spec.write_shape ? "true" : "false");
    return out.str();
}

// ---------------------------------------------------------------------------

bool RunReport::all_ok() const
{
    return std::all_of(rows.begin(), rows.end(), [](const RunRow& r) { return r.ok; });
}

const RunRow& RunReport::best() const
{
    if (rows.empty()) {
        throw std::logic_error("report has no runs");
    }
    const RunRow* best = &rows.front();
    for (const auto& r : rows) {
        if (r.ok && (!best->ok || r.value < best->value)) {
            best = &r;
        }
    }
    return *best;
}

std::vector<StatRow> stats_report(const std::vector<std::string>& names, const std::vector<RunRow>& rows)
{
    if (rows.empty()) {
        throw std::invalid_argument("stats: no runs");
    }
    const auto stat = [&](const std::string& label, auto&& get) {
        StatRow s;
        s.quantity = label;
        s.min = std::numeric_limits<double>::infinity();
        s.max = -std::numeric_limits<double>::infinity();
        double sum = 0.0;
        for (const auto& r : rows) {
            const double v = get(r);
            s.min = std::min(s.min, v);
            s.max = std::max(s.max, v);
            sum += v;
        }
        s.mean = sum / static_cast<double>(rows.size());
        double sq = 0.0;
        for (const auto& r : rows) {
            const double d = get(r) - s.mean;
            sq += d * d;
        }
        s.std = std::sqrt(sq / static_cast<double>(rows.size()));
        return s;
    };
    std::vector<StatRow> out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        out.push_back(stat(names[i], [i](const RunRow& r) { return r.x[static_cast<Eigen::Index>(i)]; }));
    }
    out.push_back(stat("calls", [](const RunRow& r) { return static_cast<double>(r.calls); }));
    return out;
}

RunReport run_experiment(const ExperimentSpec& spec)
{
    spec.validate();
    const std::unique_ptr<Setup> setup = make_setup(spec);
    RunReport report;
    report.spec = spec;
    report.names = setup->names();
    report.reference = Configuration::reference(setup->mesh());
    if (!setup->design) {
        report.desired = setup->control.cost.desired;
    }

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const int threads = spec.threads > 0 ? spec.threads : static_cast<int>(hw);

    SampleSet samples;
    if (spec.method == Method::surface_sequential) {
        const Box box = variable_box(spec);
        samples = build_grid(
            [&](const Eigen::VectorXd& x) {
                const Evaluation ev = setup->evaluate(x);
                return ev.converged ? ev.value : spec.failure_fitness;
            },
            box.lower, box.upper, spec.grid, threads);
        report.grid_evaluations = samples.size();
    }
    std::unique_ptr<KktGuess> guess;
    if (spec.method == Method::ga_simultaneous_full || spec.method == Method::ga_simultaneous_reduced) {
        guess = std::make_unique<KktGuess>(kkt_guess(*setup, spec));
    }

    report.rows.resize(static_cast<std::size_t>(spec.runs));
    std::atomic<int> next{0};
    const auto worker = [&] {
        for (int i = next++; i < spec.runs; i = next++) {
            report.rows[static_cast<std::size_t>(i)] =
                run_one(*setup, spec, &samples, guess.get(), spec.seed + static_cast<std::uint64_t>(i));
        }
    };
    {
        std::vector<std::jthread> pool;
        for (int t = 1; t < std::min(threads, spec.runs); ++t) {
            pool.emplace_back(worker);
        }
        worker();
    }
    report.aggregate = stats_report(report.names, report.rows);
    const RunRow& best = report.best();
    report.mesh = best.x.allFinite() ? setup->mesh_at(best.x) : setup->mesh();
    return report;
}

RunReport forward_report(const ExperimentSpec& spec, const Eigen::VectorXd& x)
{
    spec.validate();
    if (x.size() != static_cast<Eigen::Index>(spec.variables.size())) {
        throw SpecError("forward: expected " + std::to_string(spec.variables.size()) + " values");
    }
    const std::unique_ptr<Setup> setup = make_setup(spec);
    const auto t0 = std::chrono::steady_clock::now();
    RunReport report;
    report.spec = spec;
    report.names = setup->names();
    report.reference = Configuration::reference(setup->mesh());
    if (!setup->design) {
        report.desired = setup->control.cost.desired;
    }
    RunRow row;
    row.seed = spec.seed;
    row.x = x;
    const Evaluation ev = setup->evaluate(x);
    row.ok = ev.converged;
    row.value = ev.value;
    row.approx_value = ev.value;
    row.calls = 1;
    row.iterations = ev.report.total_iterations;
    row.config = ev.config;
    row.status = one_line(ev.report.message());
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.rows.push_back(std::move(row));
    report.aggregate = stats_report(report.names, report.rows);
    report.mesh = setup->mesh_at(x);
    return report;
}

// ---------------------------------------------------------------------------

std::vector<ShapePoint> shape_polyline(const Mesh& mesh, const Configuration& config)
{
    if (config.q.size() != mesh.dof_count()) {
        throw std::invalid_argument("shape: configuration does not match the mesh");
    }
    const std::vector<double> lengths = mesh.element_lengths();
    std::vector<double> s(mesh.node_count(), std::numeric_limits<double>::quiet_NaN());
    if (mesh.node_count() > 0) {
        s[0] = 0.0;
    }
    std::vector<ShapePoint> out;
    int last = -1;
    for (int e = 0; e < mesh.element_count(); ++e) {
        const Element& el = mesh.elements[e];
        const int n = el.node_count();
        const double s0 = std::isnan(s[el.nodes[0]]) ? 0.0 : s[el.nodes[0]];
        for (int a = 0; a < n; ++a) {
            const double xi = lagrange_node(n, a);
            const int node = el.nodes[a];
            if (std::isnan(s[node])) {
                s[node] = s0 + 0.5 * (xi + 1.0) * lengths[e];
            }
        }
        // nodes along the element in order of their natural coordinate
        std::vector<int> order(n);
        for (int a = 0; a < n; ++a) {
            order[a] = a;
        }
        std::sort(order.begin(), order.end(), [&](int a, int b) { return lagrange_node(n, a) < lagrange_node(n, b); });
        for (int a : order) {
            const int node = el.nodes[a];
            if (node == last) {
                continue;
            }
            out.push_back({s[node], config.position(node)});
            last = node;
        }
    }
    return out;
}

std::string csv_field(const std::string& text)
{
    if (text.find_first_of(",\"\n\r") == std::string::npos) {
        return text;
    }
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    out.push_back(field);
    return out;
}

void export_results(const RunReport& report, const std::string& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw std::runtime_error("cannot create " + dir + ": " + ec.message());
    }
    const auto path = [&](const std::string& name) { return (std::filesystem::path(dir) / name).string(); };

    write_atomic(path("experiment.cfg"), serialize_config(report.spec));

    std::ostringstream runs;
    runs << "run,seed";
    for (const auto& n : report.names) {
        runs << ',' << csv_field(n);
    }
    runs << ",J,approx,calls,iterations,seconds,ok,status\n";
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const RunRow& r = report.rows[i];
        runs << i << ',' << r.seed;
        for (int k = 0; k < r.x.size(); ++k) {
            runs << ',' << format_double(r.x[k]);
        }
        runs << ',' << format_double(r.value) << ',' << format_double(r.approx_value) << ',' << r.calls << ','
             << r.iterations << ',' << format_double(r.seconds) << ',' << (r.ok ? "true" : "false") << ','
             << csv_field(r.status) << '\n';
    }
    write_atomic(path("runs.csv"), runs.str());

    std::ostringstream agg;
    agg << "quantity,min,max,mean,std\n";
    for (const auto& s : report.aggregate) {
        agg << csv_field(s.quantity) << ',' << format_double(s.min) << ',' << format_double(s.max) << ','
            << format_double(s.mean) << ',' << format_double(s.std) << '\n';
    }
    write_atomic(path("aggregate.csv"), agg.str());

    if (report.spec.write_shape && !report.rows.empty()) {
        std::ostringstream shape;
        shape << "configuration,s,x,y\n";
        const auto emit = [&](const std::string& label, const Configuration& c) {
            for (const auto& p : shape_polyline(report.mesh, c)) {
                shape << label << ',' << format_double(p.s) << ',' << format_double(p.position.x()) << ','
                      << format_double(p.position.y()) << '\n';
            }
        };
        emit("reference", report.reference);
        if (report.desired.q.size() == report.reference.q.size()) {
            emit("desired", report.desired);
        }
        const RunRow& best = report.best();
        if (best.ok) {
            emit("solution", best.config);
        }
        write_atomic(path("shape.csv"), shape.str());
    }

    if (report.spec.write_history) {
        for (const auto& r : report.rows) {
            const std::string seed = std::to_string(r.seed);
            if (!r.history.empty()) {
                const std::string target = path("history_" + seed + ".csv");
                write_history_csv(r.history, target + ".tmp");
                std::filesystem::rename(target + ".tmp", target);
            }
            if (!r.trail.empty()) {
                std::ostringstream t;
                t << "iteration";
                for (const auto& n : report.names) {
                    t << ',' << csv_field(n);
                }
                t << '\n';
                for (std::size_t k = 0; k < r.trail.size(); ++k) {
                    t << k;
                    for (int i = 0; i < r.trail[k].size(); ++i) {
                        t << ',' << format_double(r.trail[k][i]);
                    }
                    t << '\n';
                }
                write_atomic(path("trail_" + seed + ".csv"), t.str());
            }
        }
    }
}

std::pair<std::vector<std::string>, std::vector<RunRow>> read_runs_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error(path + ": empty file");
    }
    const std::vector<std::string> head = split_csv_line(line);
    const auto j = std::find(head.begin(), head.end(), "J");
    if (head.size() < 10 || head[0] != "run" || head[1] != "seed" || j == head.end() ||
        head.end() - j != 7) {
        throw std::runtime_error(path + ": not a runs table");
    }
    const std::vector<std::string> names(head.begin() + 2, j);
    const std::size_t nvar = names.size();
    std::vector<RunRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        const auto f = split_csv_line(line);
        if (f.size() != head.size()) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": wrong field count");
        }
        try {
            RunRow r;
            r.seed = static_cast<std::uint64_t>(parse_long(f[1], "seed"));
            r.x.resize(static_cast<Eigen::Index>(nvar));
            for (std::size_t i = 0; i < nvar; ++i) {
                r.x[static_cast<Eigen::Index>(i)] = f[2 + i] == "nan" ? std::numeric_limits<double>::quiet_NaN()
                                                                       : parse_double(f[2 + i], names[i]);
            }
            const std::size_t b = 2 + nvar;
            r.value = f[b] == "nan" ? std::numeric_limits<double>::quiet_NaN() : parse_double(f[b], "J");
            r.approx_value = f[b + 1] == "nan" ? std::numeric_limits<double>::quiet_NaN() : parse_double(f[b + 1], "approx");
            r.calls = parse_long(f[b + 2], "calls");
            r.iterations = parse_int(f[b + 3], "iterations");
            r.seconds = parse_double(f[b + 4], "seconds");
            r.ok = parse_bool(f[b + 5], "ok");
            r.status = f[b + 6];
            rows.push_back(std::move(r));
        } catch (const SpecError& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return {names, rows};
}

}  // namespace beamopt
