#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "beamopt/mesh.hpp"

namespace beamopt {

/// Dead (configuration-independent) nodal force and moment.
struct NodalLoad {
    int node = 0;
    Vec2 force = Vec2::Zero();
    double moment = 0.0;
};

/// Force that rotates with the cross-section at `node`; `force` is its
/// value in the reference configuration.
struct FollowerLoad {
    int node = 0;
    Vec2 force = Vec2::Zero();
};

/// Uniform dead load per unit reference length on one element.
struct DistributedLoad {
    int element = 0;
    Vec2 force = Vec2::Zero();
};

struct LoadPattern {
    std::vector<NodalLoad> dead;
    std::vector<FollowerLoad> follower;
    std::vector<DistributedLoad> distributed;

    bool empty() const { return dead.empty() && follower.empty() && distributed.empty(); }
};

/// A fixed pattern plus one pattern per control variable (the columns of
/// the control influence matrix), ramped over `steps` uniform load steps.
struct LoadCase {
    LoadPattern fixed;
    std::vector<LoadPattern> controls;
    int steps = 10;

    int control_count() const { return static_cast<int>(controls.size()); }

    /// Throws std::invalid_argument on references to missing nodes/elements.
    void validate(const Mesh& mesh) const;
};

struct FollowerForce {
    Vec2 force = Vec2::Zero();
    Vec2 d_force_d_rotation = Vec2::Zero();
};

/// Current follower force R(theta_a) p0 and its derivative in theta_a.
FollowerForce follower_load_work(const Configuration& config, const FollowerLoad& load);

/// Nodal external force vector of a pattern at unit scale (full dofs).
Eigen::VectorXd pattern_force(const Mesh& mesh, const LoadPattern& pattern, const Configuration& config);

/// Derivative of pattern_force with respect to the configuration.
Eigen::MatrixXd pattern_stiffness(const Mesh& mesh, const LoadPattern& pattern, const Configuration& config);

/// Control influence matrix, one column per control pattern.
Eigen::MatrixXd control_influence(const Mesh& mesh, const LoadCase& loads, const Configuration& config);

/// factor * (fixed + sum_j control_j * pattern_j).
Eigen::VectorXd external_force(const Mesh& mesh, const LoadCase& loads, const Configuration& config,
                               std::span<const double> control, double factor = 1.0);

/// Derivative of external_force with respect to the configuration.
Eigen::MatrixXd load_stiffness(const Mesh& mesh, const LoadCase& loads, const Configuration& config,
                               std::span<const double> control, double factor = 1.0);

bool has_followers(const LoadCase& loads);

}  // namespace beamopt
