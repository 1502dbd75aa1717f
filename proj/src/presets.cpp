#include "beamopt/presets.hpp"

#include <numbers>
#include <stdexcept>

namespace beamopt {

namespace {

SectionLaw unit_square_section()
{
    SectionLaw s;
    s.young = 12000.0;
    s.shear = 6000.0;
    s.geometry = RectangularSection{1.0, 1.0};
    return s;
}

// Clamped semicircle of diameter 10 rising from the origin and turning
// clockwise, so its far end sits at (10, 0) heading down. Returns the
// junction node.
int semicircle(Mesh& mesh, int elements)
{
    mesh.clamp(0);
    constexpr double radius = 5.0;
    return append_arc(mesh, 0, std::numbers::pi / 2, -1.0 / radius, std::numbers::pi * radius, elements);
}

}  // namespace

Mesh straight_cantilever(double length, int elements)
{
    Mesh mesh = start_mesh(Vec2::Zero(), unit_square_section());
    append_line(mesh, 0, 0.0, length, elements);
    mesh.clamp(0);
    mesh.validate();
    return mesh;
}

Configuration solve_or_throw(const Mesh& mesh, const LoadCase& loads, std::span<const double> control,
                             const SolverOptions& solver)
{
    SolveReport rep = newton_solve(mesh, loads, control, solver);
    if (!rep.ok()) {
        throw std::runtime_error("forward solve failed: " + rep.message());
    }
    return rep.config;
}

ControlScenario tletter_scenario(const SolverOptions& solver)
{
    ControlScenario sc;
    sc.name = "tletter";
    sc.mesh = start_mesh(Vec2::Zero(), unit_square_section());
    const int junction = semicircle(sc.mesh, 5);
    // flat bar of length 10 centred on the junction, square to the arc end
    append_line(sc.mesh, junction, 0.0, 5.0, 1);
    append_line(sc.mesh, junction, std::numbers::pi, 5.0, 1);
    sc.mesh.validate();

    sc.loads.controls.resize(2);
    sc.loads.controls[0].dead.push_back({junction, Vec2(0.0, 1.0), 0.0});
    sc.loads.controls[1].dead.push_back({junction, Vec2::Zero(), 1.0});
    sc.loads.validate(sc.mesh);

    sc.variables = {"F", "M"};
    sc.desired_control = {40.0, 205.0};
    sc.lower = Eigen::Vector2d(10.0, 175.0);
    sc.upper = Eigen::Vector2d(60.0, 225.0);
    sc.solver = solver;
    sc.cost.desired = solve_or_throw(sc.mesh, sc.loads, sc.desired_control, solver);
    return sc;
}

ControlScenario iletter_scenario(double alpha, const SolverOptions& solver)
{
    ControlScenario sc;
    sc.name = "iletter";
    sc.mesh = start_mesh(Vec2::Zero(), unit_square_section());
    // the short bar is made nearly rigid so the couple and the moment act
    // on the arc interchangeably
    SectionLaw bar = unit_square_section();
    bar.young *= 1e3;
    bar.shear *= 1e3;
    sc.mesh.sections.push_back(bar);
    const int junction = semicircle(sc.mesh, 5);
    const int right = append_line(sc.mesh, junction, 0.0, 1.0, 1, 1);
    const int left = append_line(sc.mesh, junction, std::numbers::pi, 1.0, 1, 1);
    sc.mesh.validate();

    // follower couple of arm 2: +F up at the right end, -F at the left end
    sc.loads.controls.resize(2);
    sc.loads.controls[0].follower.push_back({right, Vec2(0.0, 1.0)});
    sc.loads.controls[0].follower.push_back({left, Vec2(0.0, -1.0)});
    sc.loads.controls[1].dead.push_back({junction, Vec2::Zero(), 1.0});
    sc.loads.validate(sc.mesh);

    sc.variables = {"F", "M"};
    sc.desired_control = {0.0, 205.4};
    sc.lower = Eigen::Vector2d(0.0, 0.0);
    sc.upper = Eigen::Vector2d(100.0, 230.0);
    sc.solver = solver;
    sc.cost.desired = solve_or_throw(sc.mesh, sc.loads, sc.desired_control, solver);
    sc.cost.alpha = alpha;
    // each of the two follower forces carries F
    sc.cost.weights = {2.0, 1.0};
    return sc;
}

DesignScenario thickness_scenario(DesignCostKind kind, const SolverOptions& solver)
{
    DesignScenario sc;
    sc.name = kind == DesignCostKind::shear_energy ? "thickness-shear" : "thickness-disp";
    SectionLaw s;
    s.young = 75000.0;
    s.shear = 50000.0;
    s.shear_factor = 5.0 / 6.0;
    s.density = 1.0 / 30.0;
    s.geometry = RectangularSection{30.0, 30.0};
    sc.mesh = start_mesh(Vec2::Zero(), s);
    constexpr int segments = 4;
    constexpr int per_segment = 1;
    append_line(sc.mesh, 0, 0.0, 1000.0, segments * per_segment);
    sc.mesh.clamp(0);
    sc.mesh.validate();

    sc.loads.fixed.dead.push_back({sc.mesh.node_count() - 1, Vec2(0.0, -1000.0), 0.0});
    sc.loads.validate(sc.mesh);

    std::vector<std::vector<int>> groups(segments);
    for (int e = 0; e < segments * per_segment; ++e) {
        groups[e / per_segment].push_back(e);
    }
    sc.variables = {"h1", "h2", "h3", "h4"};
    sc.cost.kind = kind;
    sc.cost.mass_target = 30000.0;
    if (kind == DesignCostKind::shear_energy) {
        sc.design = grouped_element_design(groups, {30, 30, 15, 15}, {60, 60, 35, 35});
        sc.cost.sign = -1.0;
        sc.cost.penalty = PenaltyKind::lower;
        sc.cost.penalty_weight = 1.0;
    } else {
        sc.design = grouped_element_design(groups, {30, 30, 15, 5}, {60, 60, 35, 25});
        sc.cost.penalty = PenaltyKind::upper;
        sc.cost.penalty_weight = 0.25;
    }
    sc.design.validate(sc.mesh);
    sc.solver = solver;
    return sc;
}

}  // namespace beamopt
