#include "beamopt/fem.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "beamopt/quadrature.hpp"

namespace beamopt {

namespace {

// Gauss-point data shared by the force, tangent and sensitivity kernels.
struct PointData {
    GaussPointState state;
    std::vector<double> N;
    std::vector<double> dN_ds;
    double angle = 0.0;  // absolute cross-section angle
    Vec2 position_prime = Vec2::Zero();
};

std::vector<PointData> evaluate(const Mesh& mesh, const Configuration& config, int e)
{
    if (e < 0 || e >= mesh.element_count()) {
        throw std::invalid_argument("fem: element index out of range");
    }
    const Element& el = mesh.elements[e];
    const int n = el.node_count();
    const SectionLaw& section = mesh.sections.at(el.section);
    const QuadratureRule rule = gauss_legendre(el.gauss_points());

    std::vector<Vec2> ref_pos(n), cur_pos(n);
    std::vector<double> cur_angle(n);
    for (int a = 0; a < n; ++a) {
        ref_pos[a] = mesh.nodes[el.nodes[a]];
        cur_pos[a] = config.position(el.nodes[a]);
        cur_angle[a] = config.rotation(el.nodes[a]) + el.frame_angles[a];
    }

    std::vector<PointData> out(rule.points.size());
    for (std::size_t l = 0; l < rule.points.size(); ++l) {
        const ShapeValues s = lagrange_shape(n, rule.points[l]);
        Vec2 dx = Vec2::Zero();
        for (int a = 0; a < n; ++a) {
            dx += s.dN_dxi[a] * ref_pos[a];
        }
        const double j = dx.norm();
        const PointKinematics2D ref = interpolate_kinematics(ref_pos, el.frame_angles, s.N, s.dN_dxi, j);
        const PointKinematics2D cur = interpolate_kinematics(cur_pos, cur_angle, s.N, s.dN_dxi, j);

        PointData& p = out[l];
        p.N = s.N;
        p.dN_ds.resize(n);
        for (int a = 0; a < n; ++a) {
            p.dN_ds[a] = s.dN_dxi[a] / j;
        }
        p.angle = cur.angle;
        p.position_prime = cur.position_prime;
        p.state.xi = rule.points[l];
        p.state.weight_jacobian = rule.weights[l] * j;
        p.state.strains = {material_strains_2d(cur), material_strains_2d(ref)};
        p.state.stiffness = el.gp_dimension.empty()
                                ? stiffness(section)
                                : stiffness_and_sensitivity(section, natural_role(section), el.gp_dimension[l]);
    }
    return out;
}

// Strain-displacement matrix: rows (axial, shear, curvature).
Eigen::MatrixXd strain_operator(const PointData& p)
{
    const int n = static_cast<int>(p.N.size());
    const double c = std::cos(p.angle);
    const double s = std::sin(p.angle);
    const PlanarStrain& e = p.state.strains.current;
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(3, dofs_per_node * n);
    for (int a = 0; a < n; ++a) {
        const int k = dofs_per_node * a;
        B(0, k) = p.dN_ds[a] * c;
        B(0, k + 1) = p.dN_ds[a] * s;
        B(0, k + 2) = p.N[a] * e.shear;
        B(1, k) = -p.dN_ds[a] * s;
        B(1, k + 1) = p.dN_ds[a] * c;
        B(1, k + 2) = -p.N[a] * (1.0 + e.axial);
        B(2, k + 2) = p.dN_ds[a];
    }
    return B;
}

Eigen::Vector3d resultants(const PointData& p)
{
    const StressResultants2D r = stress_resultants(p.state.strains, p.state.stiffness);
    return {r.axial, r.shear, r.moment};
}

}  // namespace

std::vector<GaussPointState> element_gauss_states(const Mesh& mesh, const Configuration& config, int e)
{
    std::vector<GaussPointState> out;
    for (const PointData& p : evaluate(mesh, config, e)) {
        out.push_back(p.state);
    }
    return out;
}

double element_energy(const Mesh& mesh, const Configuration& config, int e)
{
    double w = 0.0;
    for (const PointData& p : evaluate(mesh, config, e)) {
        w += p.state.weight_jacobian * stored_energy_density(p.state.strains, p.state.stiffness);
    }
    return w;
}

Eigen::VectorXd element_internal_force(const Mesh& mesh, const Configuration& config, int e)
{
    Eigen::VectorXd f = Eigen::VectorXd::Zero(dofs_per_node * mesh.elements.at(e).node_count());
    for (const PointData& p : evaluate(mesh, config, e)) {
        f += p.state.weight_jacobian * strain_operator(p).transpose() * resultants(p);
    }
    return f;
}

Eigen::VectorXd element_residual(const Mesh& mesh, const Configuration& config, int e, const LoadCase& loads,
                                 std::span<const double> control)
{
    if (static_cast<int>(control.size()) != loads.control_count()) {
        throw std::invalid_argument("fem: control vector size does not match the load case");
    }
    Eigen::VectorXd r = element_internal_force(mesh, config, e);
    const Element& el = mesh.elements[e];
    const auto subtract = [&](const LoadPattern& pattern, double scale) {
        if (scale == 0.0) {
            return;
        }
        LoadPattern own;
        for (const auto& d : pattern.distributed) {
            if (d.element == e) {
                own.distributed.push_back(d);
            }
        }
        if (own.distributed.empty()) {
            return;
        }
        const Eigen::VectorXd f = pattern_force(mesh, own, config);
        const std::vector<int> dofs = element_dofs(el);
        for (std::size_t i = 0; i < dofs.size(); ++i) {
            r[i] -= scale * f[dofs[i]];
        }
    };
    subtract(loads.fixed, 1.0);
    for (int j = 0; j < loads.control_count(); ++j) {
        subtract(loads.controls[j], control[j]);
    }
    return r;
}

Eigen::MatrixXd element_tangent(const Mesh& mesh, const Configuration& config, int e)
{
    const int n = mesh.elements.at(e).node_count();
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(dofs_per_node * n, dofs_per_node * n);
    for (const PointData& p : evaluate(mesh, config, e)) {
        const Eigen::MatrixXd B = strain_operator(p);
        const SectionStiffness& st = p.state.stiffness;
        const Eigen::Vector3d C(st.EA(), st.GA(), st.EI());
        const double wj = p.state.weight_jacobian;
        K.noalias() += wj * B.transpose() * C.asDiagonal() * B;

        // second variation of the strains contracted with the resultants
        const Eigen::Vector3d r = resultants(p);
        const double c = std::cos(p.angle);
        const double s = std::sin(p.angle);
        const PlanarStrain& eps = p.state.strains.current;
        const Vec2 mixed(-r[0] * s - r[1] * c, r[0] * c - r[1] * s);
        const double rot_rot = -r[0] * (1.0 + eps.axial) - r[1] * eps.shear;
        for (int a = 0; a < n; ++a) {
            for (int b = 0; b < n; ++b) {
                const double g = wj * p.dN_ds[a] * p.N[b];
                K(dofs_per_node * a, dofs_per_node * b + 2) += g * mixed.x();
                K(dofs_per_node * a + 1, dofs_per_node * b + 2) += g * mixed.y();
                K(dofs_per_node * b + 2, dofs_per_node * a) += g * mixed.x();
                K(dofs_per_node * b + 2, dofs_per_node * a + 1) += g * mixed.y();
                K(dofs_per_node * a + 2, dofs_per_node * b + 2) += wj * rot_rot * p.N[a] * p.N[b];
            }
        }
    }
    return K;
}

Eigen::MatrixXd element_dimension_sensitivity(const Mesh& mesh, const Configuration& config, int e)
{
    const std::vector<PointData> pts = evaluate(mesh, config, e);
    const int n = mesh.elements[e].node_count();
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(dofs_per_node * n, static_cast<int>(pts.size()));
    for (std::size_t l = 0; l < pts.size(); ++l) {
        const PointData& p = pts[l];
        const PlanarStrain d = p.state.strains.relative();
        const SectionStiffness& st = p.state.stiffness;
        const Eigen::Vector3d dr(st.dEA() * d.axial, st.dGA() * d.shear, st.dEI() * d.curvature);
        S.col(static_cast<int>(l)) = p.state.weight_jacobian * strain_operator(p).transpose() * dr;
    }
    return S;
}

std::vector<Eigen::MatrixXd> element_strain_operators(const Mesh& mesh, const Configuration& config, int e)
{
    std::vector<Eigen::MatrixXd> out;
    for (const PointData& p : evaluate(mesh, config, e)) {
        out.push_back(strain_operator(p));
    }
    return out;
}

std::vector<int> element_dofs(const Element& el)
{
    std::vector<int> dofs;
    dofs.reserve(dofs_per_node * el.nodes.size());
    for (int node : el.nodes) {
        for (int c = 0; c < dofs_per_node; ++c) {
            dofs.push_back(dof_index(node, c));
        }
    }
    return dofs;
}

Eigen::VectorXd assemble_internal_force(const Mesh& mesh, const Configuration& config)
{
    Eigen::VectorXd f = Eigen::VectorXd::Zero(mesh.dof_count());
    for (int e = 0; e < mesh.element_count(); ++e) {
        const Eigen::VectorXd fe = element_internal_force(mesh, config, e);
        const std::vector<int> dofs = element_dofs(mesh.elements[e]);
        for (std::size_t i = 0; i < dofs.size(); ++i) {
            f[dofs[i]] += fe[i];
        }
    }
    return f;
}

Eigen::MatrixXd assemble_internal_tangent(const Mesh& mesh, const Configuration& config)
{
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(mesh.dof_count(), mesh.dof_count());
    for (int e = 0; e < mesh.element_count(); ++e) {
        const Eigen::MatrixXd Ke = element_tangent(mesh, config, e);
        const std::vector<int> dofs = element_dofs(mesh.elements[e]);
        for (std::size_t i = 0; i < dofs.size(); ++i) {
            for (std::size_t j = 0; j < dofs.size(); ++j) {
                K(dofs[i], dofs[j]) += Ke(i, j);
            }
        }
    }
    return K;
}

double total_strain_energy(const Mesh& mesh, const Configuration& config)
{
    double w = 0.0;
    for (int e = 0; e < mesh.element_count(); ++e) {
        w += element_energy(mesh, config, e);
    }
    return w;
}

Assembly assemble(const Mesh& mesh, const LoadCase& loads, const Configuration& config,
                  std::span<const double> control, double factor)
{
    Assembly a;
    a.residual = assemble_internal_force(mesh, config) - external_force(mesh, loads, config, control, factor);
    a.tangent = assemble_internal_tangent(mesh, config);
    if (has_followers(loads)) {
        a.tangent -= load_stiffness(mesh, loads, config, control, factor);
    }
    return a;
}

std::string SolveReport::message() const
{
    std::ostringstream os;
    switch (status) {
    case SolveStatus::converged:
        os << "converged";
        break;
    case SolveStatus::max_iterations:
        os << "no convergence within the iteration limit";
        break;
    case SolveStatus::singular_tangent:
        os << "singular tangent";
        break;
    case SolveStatus::diverged:
        os << "diverged";
        break;
    }
    os << " at load factor " << load_factor << ", residual norm " << residual_norm;
    return os.str();
}

SolveReport newton_solve(const Mesh& mesh, const LoadCase& loads, std::span<const double> control,
                         const SolverOptions& options)
{
    mesh.validate();
    loads.validate(mesh);
    if (static_cast<int>(control.size()) != loads.control_count()) {
        throw std::invalid_argument("fem: control vector size does not match the load case");
    }
    const DofMap map = make_dof_map(mesh);
    const Eigen::VectorXd reference = mesh.reference_state();
    Eigen::VectorXd prescribed = Eigen::VectorXd::Zero(mesh.dof_count());
    for (const auto& s : mesh.supports) {
        prescribed[dof_index(s.node, s.component)] = s.value;
    }

    SolveReport report;
    report.config.q = reference;
    const int steps = options.load_steps > 0 ? options.load_steps : loads.steps;
    double t = 0.0;
    double dt = 1.0 / steps;
    int halvings = 0;
    Eigen::VectorXd last_increment;
    double last_dt = 0.0;

    while (t < 1.0) {
        const double t_try = (t + dt > 1.0 - 1e-12) ? 1.0 : t + dt;
        const Eigen::VectorXd saved = report.config.q;
        // secant predictor from the last converged increment
        if (last_increment.size() > 0) {
            report.config.q += ((t_try - t) / last_dt) * last_increment;
        }
        for (int i : map.fixed) {
            report.config.q[i] = reference[i] + t_try * prescribed[i];
        }

        SolveStatus status = SolveStatus::max_iterations;
        std::vector<double> history;
        int iter = 0;
        double r0 = 0.0;
        bool stagnated = false;
        for (;; ++iter) {
            const Assembly a = assemble(mesh, loads, report.config, control, t_try);
            const Eigen::VectorXd r = restrict_vector(a.residual, map.free);
            const double norm = r.norm();
            history.push_back(norm);
            report.residual_norm = norm;
            if (iter == 0) {
                r0 = norm;
            }
            if (!std::isfinite(norm) || norm > 1e12 * std::max(r0, 1.0)) {
                status = SolveStatus::diverged;
                break;
            }
            // a residual entry cannot drop below the rounding of the terms it sums
            const Eigen::MatrixXd k_free = restrict_matrix(a.tangent, map.free, map.free);
            const Eigen::VectorXd q_free = restrict_vector(report.config.q, map.free);
            const double roundoff = 10.0 * std::numeric_limits<double>::epsilon() *
                                    (k_free.cwiseAbs() * q_free.cwiseAbs()).maxCoeff();
            const double floor = std::max({options.tolerance * r0, options.absolute_floor, roundoff});
            if (norm <= floor || (stagnated && norm <= 1e-6 * r0)) {
                status = SolveStatus::converged;
                break;
            }
            if (iter == options.max_iterations) {
                break;
            }
            const Eigen::PartialPivLU<Eigen::MatrixXd> lu(k_free);
            if (!(lu.rcond() > 1e-15)) {
                status = SolveStatus::singular_tangent;
                break;
            }
            const Eigen::VectorXd dq = lu.solve(r);
            stagnated = dq.lpNorm<Eigen::Infinity>() <=
                        1e-13 * (1.0 + report.config.q.lpNorm<Eigen::Infinity>());
            for (int i = 0; i < map.free_count(); ++i) {
                report.config.q[map.free[i]] -= dq[i];
            }
        }
        report.total_iterations += iter;

        if (status == SolveStatus::converged) {
            last_increment = report.config.q - saved;
            last_dt = t_try - t;
            t = t_try;
            report.load_factor = t;
            report.iterations_per_step.push_back(iter);
            report.final_step_residuals = std::move(history);
            continue;
        }
        report.config.q = saved;
        last_increment.resize(0);
        if (halvings == options.max_halvings) {
            report.status = status;
            report.final_step_residuals = std::move(history);
            return report;
        }
        ++halvings;
        dt *= 0.5;
    }
    report.status = SolveStatus::converged;
    return report;
}

bool is_positive_definite(const Eigen::MatrixXd& k)
{
    const Eigen::MatrixXd sym = 0.5 * (k + k.transpose());
    const Eigen::LLT<Eigen::MatrixXd> llt(sym);
    return llt.info() == Eigen::Success;
}

Eigen::MatrixXd free_tangent(const Mesh& mesh, const LoadCase& loads, const Configuration& config,
                             std::span<const double> control)
{
    const DofMap map = make_dof_map(mesh);
    return restrict_matrix(assemble(mesh, loads, config, control).tangent, map.free, map.free);
}

}  // namespace beamopt
