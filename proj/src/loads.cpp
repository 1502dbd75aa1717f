#include "beamopt/loads.hpp"

#include <stdexcept>
#include <string>

#include "beamopt/quadrature.hpp"

namespace beamopt {

namespace {

void check_pattern(const Mesh& mesh, const LoadPattern& p, const std::string& where)
{
    for (const auto& l : p.dead) {
        if (l.node < 0 || l.node >= mesh.node_count()) {
            throw std::invalid_argument(where + ": dead load on missing node " + std::to_string(l.node));
        }
    }
    for (const auto& l : p.follower) {
        if (l.node < 0 || l.node >= mesh.node_count()) {
            throw std::invalid_argument(where + ": follower load on missing node " + std::to_string(l.node));
        }
    }
    for (const auto& l : p.distributed) {
        if (l.element < 0 || l.element >= mesh.element_count()) {
            throw std::invalid_argument(where + ": distributed load on missing element " +
                                        std::to_string(l.element));
        }
    }
}

void add_distributed(const Mesh& mesh, const DistributedLoad& load, Eigen::VectorXd& f)
{
    const Element& el = mesh.elements[load.element];
    const int n = el.node_count();
    const QuadratureRule rule = gauss_legendre(n);
    for (std::size_t l = 0; l < rule.points.size(); ++l) {
        const ShapeValues s = lagrange_shape(n, rule.points[l]);
        Vec2 dx = Vec2::Zero();
        for (int a = 0; a < n; ++a) {
            dx += s.dN_dxi[a] * mesh.nodes[el.nodes[a]];
        }
        const double wj = rule.weights[l] * dx.norm();
        for (int a = 0; a < n; ++a) {
            f.segment<2>(dof_index(el.nodes[a], 0)) += wj * s.N[a] * load.force;
        }
    }
}

}  // namespace

void LoadCase::validate(const Mesh& mesh) const
{
    if (steps < 1) {
        throw std::invalid_argument("loads: need at least one load step");
    }
    check_pattern(mesh, fixed, "loads");
    for (std::size_t j = 0; j < controls.size(); ++j) {
        check_pattern(mesh, controls[j], "loads: control " + std::to_string(j));
    }
}

FollowerForce follower_load_work(const Configuration& config, const FollowerLoad& load)
{
    const double theta = config.rotation(load.node);
    return {rot2(theta) * load.force, rot2_prime(theta) * load.force};
}

Eigen::VectorXd pattern_force(const Mesh& mesh, const LoadPattern& pattern, const Configuration& config)
{
    Eigen::VectorXd f = Eigen::VectorXd::Zero(mesh.dof_count());
    for (const auto& l : pattern.dead) {
        f.segment<2>(dof_index(l.node, 0)) += l.force;
        f[dof_index(l.node, 2)] += l.moment;
    }
    for (const auto& l : pattern.follower) {
        f.segment<2>(dof_index(l.node, 0)) += follower_load_work(config, l).force;
    }
    for (const auto& l : pattern.distributed) {
        add_distributed(mesh, l, f);
    }
    return f;
}

Eigen::MatrixXd pattern_stiffness(const Mesh& mesh, const LoadPattern& pattern, const Configuration& config)
{
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(mesh.dof_count(), mesh.dof_count());
    for (const auto& l : pattern.follower) {
        k.block<2, 1>(dof_index(l.node, 0), dof_index(l.node, 2)) += follower_load_work(config, l).d_force_d_rotation;
    }
    return k;
}

Eigen::MatrixXd control_influence(const Mesh& mesh, const LoadCase& loads, const Configuration& config)
{
    Eigen::MatrixXd f0(mesh.dof_count(), loads.control_count());
    for (int j = 0; j < loads.control_count(); ++j) {
        f0.col(j) = pattern_force(mesh, loads.controls[j], config);
    }
    return f0;
}

Eigen::VectorXd external_force(const Mesh& mesh, const LoadCase& loads, const Configuration& config,
                               std::span<const double> control, double factor)
{
    if (static_cast<int>(control.size()) != loads.control_count()) {
        throw std::invalid_argument("loads: control vector size does not match the load case");
    }
    Eigen::VectorXd f = pattern_force(mesh, loads.fixed, config);
    for (int j = 0; j < loads.control_count(); ++j) {
        if (control[j] != 0.0) {
            f += control[j] * pattern_force(mesh, loads.controls[j], config);
        }
    }
    return factor * f;
}

Eigen::MatrixXd load_stiffness(const Mesh& mesh, const LoadCase& loads, const Configuration& config,
                               std::span<const double> control, double factor)
{
    if (static_cast<int>(control.size()) != loads.control_count()) {
        throw std::invalid_argument("loads: control vector size does not match the load case");
    }
    Eigen::MatrixXd k = pattern_stiffness(mesh, loads.fixed, config);
    for (int j = 0; j < loads.control_count(); ++j) {
        if (control[j] != 0.0 && !loads.controls[j].follower.empty()) {
            k += control[j] * pattern_stiffness(mesh, loads.controls[j], config);
        }
    }
    return factor * k;
}

bool has_followers(const LoadCase& loads)
{
    if (!loads.fixed.follower.empty()) {
        return true;
    }
    for (const auto& p : loads.controls) {
        if (!p.follower.empty()) {
            return true;
        }
    }
    return false;
}

}  // namespace beamopt
