#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <doctest.h>

#include "beamopt/fem.hpp"
#include "beamopt/harness.hpp"

using namespace beamopt;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines_of(const fs::path& p)
{
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);) {
        out.push_back(line);
    }
    return out;
}

fs::path scratch_dir(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("beamopt_" + name);
    fs::remove_all(dir);
    return dir;
}

RunRow row_with(double f, double m, long calls)
{
    RunRow r;
    r.x = Eigen::Vector2d(f, m);
    r.calls = calls;
    return r;
}

const std::string surface_config = R"(beamopt-experiment 1
# the T-letter on the surrogate surface
[experiment]
preset = tletter
method = surface-sequential
runs = 1

[surface]
grid = 20 20
)";

}  // namespace

TEST_CASE("parse a minimal configuration")
{
    const ExperimentSpec s = parse_config(surface_config);
    CHECK(s.preset == "tletter");
    CHECK(s.method == Method::surface_sequential);
    REQUIRE(s.variables.size() == 2);
    CHECK(s.variables[0] == VariableBox{"F", 10, 60});
    CHECK(s.variables[1] == VariableBox{"M", 175, 225});
    CHECK(s.grid == std::vector<int>{20, 20});
    CHECK(s.runs == 1);
    CHECK_NOTHROW(s.validate());
}

TEST_CASE("configuration errors")
{
    const auto error_of = [](const std::string& text) -> std::string {
        try {
            parse_config(text);
        } catch (const SpecError& e) {
            return e.what();
        }
        return "";
    };
    const std::string head = "beamopt-experiment 1\n[experiment]\npreset = tletter\n";
    CHECK(error_of(head + "[variables]\nF = 60 10\n").find("variable F: empty box") != std::string::npos);
    CHECK(error_of(head + "[variables]\nM = 205 205\n").find("variable M") != std::string::npos);
    CHECK(error_of(head + "colour = red\n").find("unknown key") != std::string::npos);
    CHECK(error_of(head + "[plots]\n").find("unknown section") != std::string::npos);
    CHECK(error_of(head + "runs = 3x\n").find("malformed") != std::string::npos);
    CHECK(error_of(head + "runs = 0\n").find("runs") != std::string::npos);
    CHECK(error_of("beamopt-experiment 1\n[ga]\npool_rate = 10\n").find("[experiment]") != std::string::npos);
    CHECK(error_of("[experiment]\npreset = tletter\n").find("header") != std::string::npos);
    CHECK(error_of("beamopt-experiment 1\n[experiment]\npreset = hletter\n").find("hletter") != std::string::npos);
    CHECK(error_of(head + "[surface]\ngrid = 20\n").find("surface.grid") != std::string::npos);
    CHECK(error_of(head + "[surface]\nstart = 5 200\n").find("surface.start") != std::string::npos);
    CHECK(error_of(head + "[ga]\npool_rate = 1\n").find("pool rate") != std::string::npos);
    CHECK(error_of(head + "seed = 1\nseed = 2\n").find("duplicate") != std::string::npos);
    CHECK_THROWS_AS(named_experiment("nothing"), SpecError);
}

TEST_CASE("canonical text round trip")
{
    for (const std::string& name : experiment_names()) {
        CAPTURE(name);
        ExperimentSpec s = named_experiment(name);
        s.seed = 12345678901234ULL;
        s.ga.cr = 0.1 + 0.2;
        s.output_dir = "out dir";
        const std::string text = serialize_config(s);
        const ExperimentSpec back = parse_config(text);
        CHECK(back == s);
        CHECK(serialize_config(back) == text);
    }
}

TEST_CASE("statistics")
{
    const std::vector<std::string> names{"F", "M"};
    const auto single = stats_report(names, {row_with(40, 205, 500)});
    REQUIRE(single.size() == 3);
    for (const StatRow& r : single) {
        CHECK(r.min == r.max);
        CHECK(r.mean == r.min);
        CHECK(r.std == 0.0);
    }
    CHECK(single[2].quantity == "calls");

    const auto pair = stats_report(names, {row_with(39, 205, 400), row_with(41, 205, 600)});
    CHECK(pair[0].mean == 40.0);
    CHECK(pair[0].std == 1.0);
    CHECK(pair[0].min == 39.0);
    CHECK(pair[0].max == 41.0);
    CHECK(pair[2].mean == 500.0);

    // recomputed column by column with compensated sums
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n(40.0, 0.3);
    std::vector<RunRow> rows;
    for (int i = 0; i < 100; ++i) {
        rows.push_back(row_with(n(rng), 205.0 + n(rng) - 40.0, 400 + i * 3));
    }
    const auto agg = stats_report(names, rows);
    for (int j = 0; j < 3; ++j) {
        std::vector<long double> col;
        for (const auto& r : rows) {
            col.push_back(j < 2 ? static_cast<long double>(r.x[j]) : static_cast<long double>(r.calls));
        }
        long double sum = 0;
        for (auto v : col) {
            sum += v;
        }
        const long double mean = sum / col.size();
        long double ss = 0;
        for (auto v : col) {
            ss += (v - mean) * (v - mean);
        }
        const double std = static_cast<double>(std::sqrt(ss / col.size()));
        CHECK(std::abs(agg[j].mean - static_cast<double>(mean)) <= 1e-12 * std::abs(static_cast<double>(mean)));
        CHECK(std::abs(agg[j].std - std) <= 1e-12 * std::max(1.0, std));
        CHECK(agg[j].min == static_cast<double>(*std::min_element(col.begin(), col.end())));
        CHECK(agg[j].max == static_cast<double>(*std::max_element(col.begin(), col.end())));
    }
}

TEST_CASE("CSV quoting")
{
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    const std::vector<std::string> fields{"x", "a,b", "say \"hi\"", ""};
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        line += (i ? "," : "") + csv_field(fields[i]);
    }
    CHECK(split_csv_line(line) == fields);
}

TEST_CASE("roll-up shape is a closed polyline")
{
    const Mesh m = straight_cantilever(10.0, 20);
    LoadCase loads;
    loads.fixed.dead.push_back({m.node_count() - 1, Vec2::Zero(), 2.0 * std::numbers::pi * 1000.0 / 10.0});
    loads.steps = 20;
    const SolveReport r = newton_solve(m, loads, {}, {});
    REQUIRE(r.ok());
    const auto poly = shape_polyline(m, r.config);
    REQUIRE(poly.size() >= 21);
    CHECK((poly.front().position - poly.back().position).norm() < 1e-6 * 10.0);
    CHECK(poly.back().s == doctest::Approx(10.0).epsilon(1e-12));
    for (std::size_t k = 1; k < poly.size(); ++k) {
        CHECK(poly[k].s > poly[k - 1].s);
    }
}

TEST_CASE("forward report")
{
    const ExperimentSpec s = named_experiment("tletter");
    const RunReport r = forward_report(s, Eigen::Vector2d(40, 205));
    REQUIRE(r.rows.size() == 1);
    CHECK(r.rows[0].ok);
    CHECK(r.rows[0].calls == 1);
    CHECK(r.rows[0].iterations > 0);
    CHECK(std::abs(r.rows[0].value) < 1e-20);
    CHECK_THROWS_AS(forward_report(s, Eigen::Vector3d(1, 2, 3)), SpecError);
}

TEST_CASE("GA experiment export and reproducibility")
{
    ExperimentSpec s = named_experiment("tletter");
    s.runs = 3;
    s.seed = 5;
    s.threads = 2;
    const RunReport a = run_experiment(s);
    REQUIRE(a.rows.size() == 3);
    CHECK(a.all_ok());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].seed == 5 + i);
        CHECK(a.rows[i].approx_value <= 1e-7);
        CHECK(std::abs(a.rows[i].x[0] - 40.0) < 0.5);
        CHECK(std::abs(a.rows[i].x[1] - 205.0) < 0.5);
    }
    s.threads = 1;
    const RunReport b = run_experiment(s);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].x == b.rows[i].x);
        CHECK(a.rows[i].calls == b.rows[i].calls);
    }

    const fs::path dir = scratch_dir("export");
    export_results(a, dir.string());
    CHECK(parse_config(read_file(dir / "experiment.cfg")) == a.spec);
    const auto agg = lines_of(dir / "aggregate.csv");
    CHECK(agg.size() == 1 + a.names.size() + 1);
    CHECK(fs::exists(dir / "shape.csv"));
    CHECK(fs::exists(dir / "history_5.csv"));
    for (const auto& entry : fs::directory_iterator(dir)) {
        CHECK(entry.path().extension() != ".tmp");
    }

    const auto [names, rows] = read_runs_csv((dir / "runs.csv").string());
    CHECK(names == a.names);
    REQUIRE(rows.size() == a.rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].x == a.rows[i].x);
        CHECK(rows[i].value == a.rows[i].value);
        CHECK(rows[i].calls == a.rows[i].calls);
        CHECK(rows[i].seed == a.rows[i].seed);
        CHECK(rows[i].ok == a.rows[i].ok);
    }
    const auto recomputed = stats_report(names, rows);
    for (std::size_t j = 0; j < recomputed.size(); ++j) {
        CHECK(recomputed[j].mean == a.aggregate[j].mean);
        CHECK(recomputed[j].std == a.aggregate[j].std);
    }
    fs::remove_all(dir);

    CHECK_THROWS_AS(export_results(a, "/proc/beamopt_cannot_write"), std::runtime_error);
}

TEST_CASE("simultaneous methods run")
{
    for (const Method method : {Method::ga_simultaneous_full, Method::ga_simultaneous_reduced}) {
        CAPTURE(to_string(method));
        ExperimentSpec s = named_experiment("tletter");
        s.method = method;
        s.runs = 1;
        s.ga.max_calls = 3000;
        s.ga.target = -1.0;
        const RunReport r = run_experiment(s);
        REQUIRE(r.rows.size() == 1);
        CHECK(r.rows[0].calls == 3000);
        CHECK(std::isfinite(r.rows[0].approx_value));
        CHECK(r.rows[0].x.size() == 2);
        CHECK(r.rows[0].x[0] >= 10.0);
        CHECK(r.rows[0].x[0] <= 60.0);
        CHECK(parse_method(to_string(method)) == method);
    }
}

TEST_CASE("surface method on a coarse grid")
{
    ExperimentSpec s = parse_config(surface_config);
    s.grid = {6, 6};
    const RunReport r = run_experiment(s);
    CHECK(r.grid_evaluations == 36);
    REQUIRE(r.rows.size() == 1);
    CHECK(r.rows[0].ok);
    CHECK(r.rows[0].trail.size() >= 1);
    CHECK(r.rows[0].x[1] > 175.0);
    CHECK(r.rows[0].x[1] < 225.0);
}
