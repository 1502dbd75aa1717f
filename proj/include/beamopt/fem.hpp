#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "beamopt/loads.hpp"
#include "beamopt/mesh.hpp"
#include "beamopt/strains.hpp"

namespace beamopt {

/// Strains and stiffness at one Gauss point of an element.
struct GaussPointState {
    double xi = 0.0;
    double weight_jacobian = 0.0;  // w_l * j(xi_l)
    Strains2D strains;
    SectionStiffness stiffness;
};

/// Evaluate strains (current and reference) at every Gauss point.
std::vector<GaussPointState> element_gauss_states(const Mesh& mesh, const Configuration& config, int e);

/// Element stored energy.
double element_energy(const Mesh& mesh, const Configuration& config, int e);

/// Internal force of element e, ordered (x, y, rotation) per element node.
Eigen::VectorXd element_internal_force(const Mesh& mesh, const Configuration& config, int e);

/// Internal force minus the element's distributed loads (fixed pattern plus
/// control-scaled patterns). Nodal and follower loads enter at assembly.
Eigen::VectorXd element_residual(const Mesh& mesh, const Configuration& config, int e, const LoadCase& loads,
                                 std::span<const double> control);

/// Material plus geometric stiffness of element e. Distributed loads are
/// dead, so this is also the tangent of element_residual.
Eigen::MatrixXd element_tangent(const Mesh& mesh, const Configuration& config, int e);

/// Derivative of element_internal_force with respect to the design
/// dimension at each Gauss point: one column per Gauss point.
Eigen::MatrixXd element_dimension_sensitivity(const Mesh& mesh, const Configuration& config, int e);

/// Strain-displacement matrix (rows: axial, shear, curvature) at every
/// Gauss point of element e.
std::vector<Eigen::MatrixXd> element_strain_operators(const Mesh& mesh, const Configuration& config, int e);

/// Flat dof indices of element e in the global vector.
std::vector<int> element_dofs(const Element& el);

Eigen::VectorXd assemble_internal_force(const Mesh& mesh, const Configuration& config);
Eigen::MatrixXd assemble_internal_tangent(const Mesh& mesh, const Configuration& config);
double total_strain_energy(const Mesh& mesh, const Configuration& config);

/// Full-dof residual f_int - f_ext and tangent d(residual)/dq.
struct Assembly {
    Eigen::VectorXd residual;
    Eigen::MatrixXd tangent;
};

Assembly assemble(const Mesh& mesh, const LoadCase& loads, const Configuration& config,
                  std::span<const double> control, double factor = 1.0);

struct SolverOptions {
    int load_steps = 0;  // 0 uses the load case's schedule
    int max_iterations = 30;
    double tolerance = 1e-10;
    double absolute_floor = 1e-12;
    int max_halvings = 4;

    bool operator==(const SolverOptions&) const = default;
};

enum class SolveStatus {
    converged,
    max_iterations,
    singular_tangent,
    diverged,
};

struct SolveReport {
    Configuration config;
    SolveStatus status = SolveStatus::converged;
    int total_iterations = 0;
    std::vector<int> iterations_per_step;
    std::vector<double> final_step_residuals;  // residual history of the last step
    double residual_norm = 0.0;                // free-dof residual at exit
    double load_factor = 0.0;                  // reached load factor

    bool ok() const { return status == SolveStatus::converged; }
    std::string message() const;
};

/// Newton-Raphson on the free dofs, ramping loads and prescribed
/// displacements from the reference configuration.
SolveReport newton_solve(const Mesh& mesh, const LoadCase& loads, std::span<const double> control,
                         const SolverOptions& options = {});

/// True when the symmetric part of `k` admits a Cholesky factorization.
bool is_positive_definite(const Eigen::MatrixXd& k);

/// Assembled tangent restricted to the free dofs.
Eigen::MatrixXd free_tangent(const Mesh& mesh, const LoadCase& loads, const Configuration& config,
                             std::span<const double> control);

}  // namespace beamopt
