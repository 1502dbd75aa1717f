#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "beamopt/fem.hpp"

namespace beamopt {

// ---------------------------------------------------------------------------
// Design fields

/// Bernstein polynomials of `degree` on eta in [-1, 1].
std::vector<double> bernstein(int degree, double eta);
std::vector<double> bernstein_derivative(int degree, double eta);

/// A design element: a Bezier field over a run of analysis elements, with
/// one design variable per control value. Degree 0 gives a constant field.
struct DesignPatch {
    std::vector<int> elements;   // contiguous in arc length, in order
    std::vector<int> variables;  // degree + 1 entries

    int degree() const { return static_cast<int>(variables.size()) - 1; }
};

struct DesignParam {
    std::vector<DesignPatch> patches;
    std::vector<double> lower;
    std::vector<double> upper;

    int size() const { return static_cast<int>(lower.size()); }

    /// Throws std::invalid_argument on bad bounds, unknown elements or
    /// unknown variables.
    void validate(const Mesh& mesh) const;
};

/// One constant design variable per element group.
DesignParam grouped_element_design(const std::vector<std::vector<int>>& groups, std::vector<double> lower,
                                   std::vector<double> upper);

/// One Bezier design element of `degree` over `elements`.
DesignParam bezier_design(std::vector<int> elements, int degree, double lower, double upper);

/// (variable, weight) pairs giving the design dimension at natural
/// coordinate xi of element e; empty if e carries no design field.
std::vector<std::pair<int, double>> design_weights(const Mesh& mesh, const DesignParam& design, int e, double xi);

/// Write the design dimension at every Gauss point of the designed elements.
void apply_design(Mesh& mesh, const DesignParam& design, std::span<const double> d);

/// Partial derivative of the assembled internal force with respect to each
/// design variable (full dofs x design size). Requires apply_design first.
Eigen::MatrixXd design_sensitivity_fint(const Mesh& mesh, const Configuration& config, const DesignParam& design);

struct VolumeMass {
    double volume = 0.0;
    double mass = 0.0;
    Eigen::VectorXd d_volume;
    Eigen::VectorXd d_mass;
};

/// V = int A ds and M = int rho A ds, with the design field integrated
/// exactly for the field's polynomial degree.
VolumeMass volume_and_mass(const Mesh& mesh, const DesignParam& design, std::span<const double> d);

// ---------------------------------------------------------------------------
// Costs

/// 1/4 sum_e sum_{a in e} l_e |u_a - u_a^d|^2 over displacement dofs (two-node
/// elements; in general each node of e carries l_e / (2 n_en)).
double shape_matching_cost(const Mesh& mesh, const Configuration& config, const Configuration& desired);

/// Gradient of shape_matching_cost with respect to the full dof vector.
Eigen::VectorXd shape_matching_gradient(const Mesh& mesh, const Configuration& config,
                                        const Configuration& desired);

/// shape + alpha * sum_j w_j nu_j^2; `weights` empty means all ones.
double regularized_control_cost(double shape_cost, std::span<const double> control, double alpha,
                                std::span<const double> weights = {});

/// int 1/2 kGA gamma^2 ds at the element Gauss points.
double shear_energy_cost(const Mesh& mesh, const Configuration& config);

/// 1/2 int |phi - x|^2 ds with the nodal rule of shape_matching_cost.
double displacement_norm_cost(const Mesh& mesh, const Configuration& config);

/// Value with its partial derivatives.
struct CostValue {
    double value = 0.0;
    Eigen::VectorXd d_state;     // full dofs
    Eigen::VectorXd d_variable;  // control or design
};

CostValue shear_energy_with_gradient(const Mesh& mesh, const Configuration& config, const DesignParam& design);
CostValue displacement_norm_with_gradient(const Mesh& mesh, const Configuration& config, int design_size);

enum class PenaltyKind {
    none,
    upper,     // w max(0, M - M0)^2
    lower,     // w max(0, M0 - M)^2
    equality,  // w (M - M0)^2
};

enum class DesignCostKind {
    volume,
    shear_energy,
    displacement_norm,
};

struct DesignCostSpec {
    DesignCostKind kind = DesignCostKind::volume;
    double sign = 1.0;  // -1 maximizes the cost
    PenaltyKind penalty = PenaltyKind::none;
    double mass_target = 0.0;
    double penalty_weight = 0.0;
};

/// sign * J + mass penalty, with partial derivatives. The mesh must carry
/// the design `d` (apply_design).
CostValue design_cost(const Mesh& mesh, const Configuration& config, const DesignParam& design,
                      std::span<const double> d, const DesignCostSpec& spec);

struct ControlCostSpec {
    Configuration desired;
    double alpha = 0.0;
    std::vector<double> weights;  // regularization multiplicity per control
};

CostValue control_cost(const Mesh& mesh, const Configuration& config, std::span<const double> control,
                       const ControlCostSpec& spec);

// ---------------------------------------------------------------------------
// Optimality systems

/// Stacked residual of the coupled problem on free dofs.
struct KktResidual {
    Eigen::VectorXd r_lambda;    // equilibrium
    Eigen::VectorXd r_phi;       // stationarity in the state
    Eigen::VectorXd r_variable;  // stationarity in control or design

    Eigen::VectorXd stacked() const;
    bool finite() const;
};

double merit_least_squares(const KktResidual& r);

/// r_lambda = f_int - f_ext(nu), r_phi = dJ/dphi + K^T lambda,
/// r_nu = dJ/dnu - F0^T lambda (all restricted to free dofs).
KktResidual kkt_residual_control(const Mesh& mesh, const LoadCase& loads, const Configuration& config,
                                 std::span<const double> control, const Eigen::VectorXd& lambda,
                                 const ControlCostSpec& spec);

/// r_lambda as above, r_phi = dJ/dphi + K^T lambda,
/// r_d = dJ/dd + (df_int/dd)^T lambda. The mesh must carry `d`.
KktResidual kkt_residual_design(const Mesh& mesh, const LoadCase& loads, const Configuration& config,
                                const DesignParam& design, std::span<const double> d,
                                const Eigen::VectorXd& lambda, const DesignCostSpec& spec);

/// J + lambda^T r_lambda for the control problem.
double lagrangian_control(const Mesh& mesh, const LoadCase& loads, const Configuration& config,
                          std::span<const double> control, const Eigen::VectorXd& lambda,
                          const ControlCostSpec& spec);

double lagrangian_design(const Mesh& mesh, const LoadCase& loads, const Configuration& config,
                         const DesignParam& design, std::span<const double> d, const Eigen::VectorXd& lambda,
                         const DesignCostSpec& spec);

/// Multiplier solving r_phi = 0: lambda = -K^{-T} dJ/dphi.
/// Throws std::runtime_error when K is singular.
Eigen::VectorXd adjoint_multipliers(const Eigen::MatrixXd& k_free, const Eigen::VectorXd& dj_dphi_free);

/// Residual with the multipliers eliminated: (r_lambda, r_nu(lambda(phi))).
struct ReducedResidual {
    Eigen::VectorXd r_lambda;
    Eigen::VectorXd r_control;
    Eigen::VectorXd lambda;
};

ReducedResidual eliminate_multipliers(const Mesh& mesh, const LoadCase& loads, const Configuration& config,
                                      std::span<const double> control, const ControlCostSpec& spec);

/// dJ/dnu at a converged equilibrium via the adjoint.
Eigen::VectorXd adjoint_reduced_gradient_control(const Mesh& mesh, const LoadCase& loads,
                                                 const Configuration& config, std::span<const double> control,
                                                 const ControlCostSpec& spec);

/// dJ/dd at a converged equilibrium via the adjoint (mesh carries d).
Eigen::VectorXd adjoint_reduced_gradient_design(const Mesh& mesh, const LoadCase& loads,
                                                const Configuration& config, const DesignParam& design,
                                                std::span<const double> d, const DesignCostSpec& spec);

/// Per component: [c - ep|c|, c + ep|c|], or [-ep, ep] when |c| < 1e-12.
std::pair<Eigen::VectorXd, Eigen::VectorXd> bound_box_from_reference(const Eigen::VectorXd& reference, double ep);

// ---------------------------------------------------------------------------
// Shape design

struct CurveVolume {
    double volume = 0.0;
    Eigen::Matrix2Xd gradient;  // one column per control point
};

/// V = int A j(xi) dxi over a Bezier curve with `points` as control
/// points, j = |dc/dxi|. Throws std::domain_error when j vanishes at a
/// quadrature point.
CurveVolume shape_design_volume_gradient(const std::vector<Vec2>& points, double area, int quadrature = 0);

/// V = int A |c'(xi)| dxi for an arbitrary curve derivative on [-1, 1].
double curve_volume(const std::function<Vec2(double)>& tangent, double area, int quadrature);

// ---------------------------------------------------------------------------
// Reduced problems used by the optimizers

struct Evaluation {
    double value = 0.0;
    bool converged = false;
    Configuration config;
    SolveReport report;
};

/// Forward map control -> cost through the equilibrium solve.
class ControlProblem {
public:
    ControlProblem(Mesh mesh, LoadCase loads, ControlCostSpec spec, SolverOptions options = {});

    Evaluation evaluate(std::span<const double> control) const;
    Eigen::VectorXd gradient(std::span<const double> control) const;

    const Mesh& mesh() const { return mesh_; }
    const LoadCase& loads() const { return loads_; }
    const ControlCostSpec& spec() const { return spec_; }
    const SolverOptions& options() const { return options_; }

private:
    Mesh mesh_;
    LoadCase loads_;
    ControlCostSpec spec_;
    SolverOptions options_;
};

/// Forward map design -> cost through the equilibrium solve.
class DesignProblem {
public:
    DesignProblem(Mesh mesh, LoadCase loads, DesignParam design, DesignCostSpec spec, SolverOptions options = {});

    Evaluation evaluate(std::span<const double> d) const;
    Eigen::VectorXd gradient(std::span<const double> d) const;
    Mesh designed_mesh(std::span<const double> d) const;

    const DesignParam& design() const { return design_; }
    const DesignCostSpec& spec() const { return spec_; }
    const LoadCase& loads() const { return loads_; }

private:
    Mesh mesh_;
    LoadCase loads_;
    DesignParam design_;
    DesignCostSpec spec_;
    SolverOptions options_;
};

}  // namespace beamopt
