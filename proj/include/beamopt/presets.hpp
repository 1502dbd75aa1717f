#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "beamopt/optimality.hpp"

namespace beamopt {

/// A control problem with its desired shape and admissible box.
struct ControlScenario {
    std::string name;
    Mesh mesh;
    LoadCase loads;
    std::vector<std::string> variables;
    std::vector<double> desired_control;  // control that generated the desired shape
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    ControlCostSpec cost;
    SolverOptions solver;
};

struct DesignScenario {
    std::string name;
    Mesh mesh;
    LoadCase loads;
    DesignParam design;
    std::vector<std::string> variables;
    DesignCostSpec cost;
    SolverOptions solver;
};

/// Cantilever along +x clamped at the origin, unit-square section with
/// E = 12000, G = 6000.
Mesh straight_cantilever(double length, int elements);

/// Clamped semicircle of diameter 10 (5 elements) ending in the middle of
/// a perpendicular flat bar of length 10; vertical force F and moment M at
/// the junction. Deploying it gives a T.
ControlScenario tletter_scenario(const SolverOptions& solver = {});

/// Same semicircle with a stiff bar of length 2, a follower couple of arm 2
/// at the bar ends and a junction moment. `alpha` regularizes with weights (2, 1).
ControlScenario iletter_scenario(double alpha = 0.0, const SolverOptions& solver = {});

/// Tip-loaded thickness-designed cantilever, L = 1000, b = 30.
/// kind selects the shear-energy (maximized) or displacement-norm cost.
DesignScenario thickness_scenario(DesignCostKind kind, const SolverOptions& solver = {});

/// Desired configuration: forward solve at `control`. Throws
/// std::runtime_error if the solve fails.
Configuration solve_or_throw(const Mesh& mesh, const LoadCase& loads, std::span<const double> control,
                             const SolverOptions& solver);

}  // namespace beamopt
