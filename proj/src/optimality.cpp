#include "beamopt/optimality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/LU>

#include "beamopt/quadrature.hpp"

namespace beamopt {

namespace {

double binomial(int n, int k)
{
    double r = 1.0;
    for (int i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;
    }
    return r;
}

double element_jacobian(const Mesh& mesh, const Element& el, double xi)
{
    const ShapeValues s = lagrange_shape(el.node_count(), xi);
    Vec2 dx = Vec2::Zero();
    for (int a = 0; a < el.node_count(); ++a) {
        dx += s.dN_dxi[a] * mesh.nodes[el.nodes[a]];
    }
    return dx.norm();
}

// Position of element e inside its design patch.
struct PatchLocation {
    const DesignPatch* patch = nullptr;
    double start = 0.0;   // arc length at the element's first node
    double length = 0.0;  // element length
    double total = 0.0;   // patch length
};

std::optional<PatchLocation> locate(const Mesh&, const DesignParam& design, int e,
                                    const std::vector<double>& lengths)
{
    for (const DesignPatch& patch : design.patches) {
        double s = 0.0;
        std::optional<PatchLocation> hit;
        for (int pe : patch.elements) {
            if (pe == e) {
                hit = PatchLocation{&patch, s, lengths[pe], 0.0};
            }
            s += lengths[pe];
        }
        if (hit) {
            hit->total = s;
            return hit;
        }
    }
    return std::nullopt;
}

std::vector<std::pair<int, double>> weights_at(const PatchLocation& loc, double xi)
{
    const double s = loc.start + loc.length * 0.5 * (xi + 1.0);
    const double eta = std::clamp(2.0 * s / loc.total - 1.0, -1.0, 1.0);
    const std::vector<double> b = bernstein(loc.patch->degree(), eta);
    std::vector<std::pair<int, double>> w;
    w.reserve(b.size());
    for (std::size_t k = 0; k < b.size(); ++k) {
        w.emplace_back(loc.patch->variables[k], b[k]);
    }
    return w;
}

double evaluate_field(const std::vector<std::pair<int, double>>& w, std::span<const double> d)
{
    double v = 0.0;
    for (const auto& [var, weight] : w) {
        v += weight * d[var];
    }
    return v;
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& m, const std::vector<int>& rows)
{
    Eigen::MatrixXd out(rows.size(), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
    }
    return out;
}

// Equilibrium residual and tangent on the free dofs.
struct FreeSystem {
    DofMap map;
    Eigen::VectorXd residual;
    Eigen::MatrixXd tangent;
};

FreeSystem free_system(const Mesh& mesh, const LoadCase& loads, const Configuration& config,
                       std::span<const double> control)
{
    FreeSystem sys;
    sys.map = make_dof_map(mesh);
    const Assembly a = assemble(mesh, loads, config, control);
    sys.residual = restrict_vector(a.residual, sys.map.free);
    sys.tangent = restrict_matrix(a.tangent, sys.map.free, sys.map.free);
    return sys;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<double> bernstein(int degree, double eta)
{
    if (degree < 0) {
        throw std::invalid_argument("bernstein: negative degree");
    }
    const double t = 0.5 * (eta + 1.0);
    std::vector<double> b(degree + 1);
    for (int k = 0; k <= degree; ++k) {
        b[k] = binomial(degree, k) * std::pow(t, k) * std::pow(1.0 - t, degree - k);
    }
    return b;
}

std::vector<double> bernstein_derivative(int degree, double eta)
{
    std::vector<double> db(degree + 1, 0.0);
    if (degree == 0) {
        return db;
    }
    const std::vector<double> lower = bernstein(degree - 1, eta);
    for (int k = 0; k <= degree; ++k) {
        const double left = k > 0 ? lower[k - 1] : 0.0;
        const double right = k < degree ? lower[k] : 0.0;
        db[k] = 0.5 * degree * (left - right);
    }
    return db;
}

void DesignParam::validate(const Mesh& mesh) const
{
    if (lower.size() != upper.size()) {
        throw std::invalid_argument("design: bound vectors differ in length");
    }
    for (int i = 0; i < size(); ++i) {
        if (!(lower[i] < upper[i])) {
            throw std::invalid_argument("design: empty box for variable " + std::to_string(i));
        }
    }
    std::vector<int> owner(mesh.element_count(), -1);
    for (std::size_t p = 0; p < patches.size(); ++p) {
        if (patches[p].variables.empty() || patches[p].elements.empty()) {
            throw std::invalid_argument("design: patch " + std::to_string(p) + " is empty");
        }
        for (int v : patches[p].variables) {
            if (v < 0 || v >= size()) {
                throw std::invalid_argument("design: patch " + std::to_string(p) + " uses unknown variable");
            }
        }
        for (int e : patches[p].elements) {
            if (e < 0 || e >= mesh.element_count()) {
                throw std::invalid_argument("design: patch " + std::to_string(p) + " uses unknown element");
            }
            if (owner[e] != -1) {
                throw std::invalid_argument("design: element " + std::to_string(e) + " in two patches");
            }
            owner[e] = static_cast<int>(p);
        }
    }
}

DesignParam grouped_element_design(const std::vector<std::vector<int>>& groups, std::vector<double> lower,
                                   std::vector<double> upper)
{
    DesignParam d;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        d.patches.push_back({groups[g], {static_cast<int>(g)}});
    }
    d.lower = std::move(lower);
    d.upper = std::move(upper);
    if (d.size() != static_cast<int>(groups.size())) {
        throw std::invalid_argument("design: one bound pair per group required");
    }
    return d;
}

DesignParam bezier_design(std::vector<int> elements, int degree, double lower, double upper)
{
    DesignParam d;
    DesignPatch patch;
    patch.elements = std::move(elements);
    for (int k = 0; k <= degree; ++k) {
        patch.variables.push_back(k);
    }
    d.patches.push_back(std::move(patch));
    d.lower.assign(degree + 1, lower);
    d.upper.assign(degree + 1, upper);
    return d;
}

std::vector<std::pair<int, double>> design_weights(const Mesh& mesh, const DesignParam& design, int e, double xi)
{
    const auto loc = locate(mesh, design, e, mesh.element_lengths());
    if (!loc) {
        return {};
    }
    return weights_at(*loc, xi);
}

void apply_design(Mesh& mesh, const DesignParam& design, std::span<const double> d)
{
    if (static_cast<int>(d.size()) != design.size()) {
        throw std::invalid_argument("design: value vector has the wrong size");
    }
    const std::vector<double> lengths = mesh.element_lengths();
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto loc = locate(mesh, design, e, lengths);
        Element& el = mesh.elements[e];
        if (!loc) {
            el.gp_dimension.clear();
            continue;
        }
        const QuadratureRule rule = gauss_legendre(el.gauss_points());
        el.gp_dimension.resize(rule.points.size());
        for (std::size_t l = 0; l < rule.points.size(); ++l) {
            el.gp_dimension[l] = evaluate_field(weights_at(*loc, rule.points[l]), d);
        }
    }
}

Eigen::MatrixXd design_sensitivity_fint(const Mesh& mesh, const Configuration& config, const DesignParam& design)
{
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(mesh.dof_count(), design.size());
    const std::vector<double> lengths = mesh.element_lengths();
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto loc = locate(mesh, design, e, lengths);
        if (!loc) {
            continue;
        }
        const Element& el = mesh.elements[e];
        if (el.gp_dimension.empty()) {
            throw std::invalid_argument("design: mesh does not carry the design (apply_design first)");
        }
        const Eigen::MatrixXd S = element_dimension_sensitivity(mesh, config, e);
        const QuadratureRule rule = gauss_legendre(el.gauss_points());
        const std::vector<int> dofs = element_dofs(el);
        for (std::size_t l = 0; l < rule.points.size(); ++l) {
            for (const auto& [var, weight] : weights_at(*loc, rule.points[l])) {
                for (std::size_t i = 0; i < dofs.size(); ++i) {
                    out(dofs[i], var) += weight * S(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l));
                }
            }
        }
    }
    return out;
}

VolumeMass volume_and_mass(const Mesh& mesh, const DesignParam& design, std::span<const double> d)
{
    if (static_cast<int>(d.size()) != design.size()) {
        throw std::invalid_argument("design: value vector has the wrong size");
    }
    VolumeMass vm;
    vm.d_volume = Eigen::VectorXd::Zero(design.size());
    vm.d_mass = Eigen::VectorXd::Zero(design.size());
    const std::vector<double> lengths = mesh.element_lengths();
    for (int e = 0; e < mesh.element_count(); ++e) {
        const Element& el = mesh.elements[e];
        const SectionLaw& section = mesh.sections.at(el.section);
        const auto loc = locate(mesh, design, e, lengths);
        const int degree = loc ? loc->patch->degree() : 0;
        const QuadratureRule rule = gauss_legendre(degree + el.node_count() + 1);
        for (std::size_t l = 0; l < rule.points.size(); ++l) {
            const double wj = rule.weights[l] * element_jacobian(mesh, el, rule.points[l]);
            if (!loc) {
                const double area = section_properties(section).area;
                vm.volume += wj * area;
                vm.mass += wj * area * section.density;
                continue;
            }
            const auto w = weights_at(*loc, rule.points[l]);
            const auto [area, d_area] = area_and_derivative(section, natural_role(section), evaluate_field(w, d));
            vm.volume += wj * area;
            vm.mass += wj * area * section.density;
            for (const auto& [var, weight] : w) {
                vm.d_volume[var] += wj * d_area * weight;
                vm.d_mass[var] += wj * d_area * weight * section.density;
            }
        }
    }
    return vm;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> node_weights(const Mesh& mesh)
{
    std::vector<double> w(mesh.node_count(), 0.0);
    const std::vector<double> lengths = mesh.element_lengths();
    for (int e = 0; e < mesh.element_count(); ++e) {
        // half the element length shared equally by its nodes: 1/4 l_e for
        // two-node elements
        const auto& nodes = mesh.elements[e].nodes;
        for (int a : nodes) {
            w[a] += 0.5 * lengths[e] / static_cast<double>(nodes.size());
        }
    }
    return w;
}

void check_same_mesh(const Mesh& mesh, const Configuration& a, const Configuration& b)
{
    if (a.q.size() != mesh.dof_count() || b.q.size() != mesh.dof_count()) {
        throw std::invalid_argument("cost: configurations do not match the mesh");
    }
}

}  // namespace

double shape_matching_cost(const Mesh& mesh, const Configuration& config, const Configuration& desired)
{
    check_same_mesh(mesh, config, desired);
    const std::vector<double> w = node_weights(mesh);
    double j = 0.0;
    for (int a = 0; a < mesh.node_count(); ++a) {
        j += w[a] * (config.position(a) - desired.position(a)).squaredNorm();
    }
    return j;
}

Eigen::VectorXd shape_matching_gradient(const Mesh& mesh, const Configuration& config, const Configuration& desired)
{
    check_same_mesh(mesh, config, desired);
    const std::vector<double> w = node_weights(mesh);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(mesh.dof_count());
    for (int a = 0; a < mesh.node_count(); ++a) {
        g.segment<2>(dof_index(a, 0)) = 2.0 * w[a] * (config.position(a) - desired.position(a));
    }
    return g;
}

double regularized_control_cost(double shape_cost, std::span<const double> control, double alpha,
                                std::span<const double> weights)
{
    if (alpha < 0.0) {
        throw std::invalid_argument("cost: negative regularization weight");
    }
    if (!weights.empty() && weights.size() != control.size()) {
        throw std::invalid_argument("cost: regularization weights do not match the control size");
    }
    double reg = 0.0;
    for (std::size_t j = 0; j < control.size(); ++j) {
        reg += (weights.empty() ? 1.0 : weights[j]) * control[j] * control[j];
    }
    return shape_cost + alpha * reg;
}

double shear_energy_cost(const Mesh& mesh, const Configuration& config)
{
    double j = 0.0;
    for (int e = 0; e < mesh.element_count(); ++e) {
        for (const GaussPointState& g : element_gauss_states(mesh, config, e)) {
            const double gamma = g.strains.relative().shear;
            j += g.weight_jacobian * 0.5 * g.stiffness.GA() * gamma * gamma;
        }
    }
    return j;
}

CostValue shear_energy_with_gradient(const Mesh& mesh, const Configuration& config, const DesignParam& design)
{
    CostValue c;
    c.d_state = Eigen::VectorXd::Zero(mesh.dof_count());
    c.d_variable = Eigen::VectorXd::Zero(design.size());
    const std::vector<double> lengths = mesh.element_lengths();
    for (int e = 0; e < mesh.element_count(); ++e) {
        const Element& el = mesh.elements[e];
        const std::vector<GaussPointState> gps = element_gauss_states(mesh, config, e);
        const std::vector<Eigen::MatrixXd> B = element_strain_operators(mesh, config, e);
        const std::vector<int> dofs = element_dofs(el);
        const auto loc = locate(mesh, design, e, lengths);
        for (std::size_t l = 0; l < gps.size(); ++l) {
            const GaussPointState& g = gps[l];
            const double gamma = g.strains.relative().shear;
            c.value += g.weight_jacobian * 0.5 * g.stiffness.GA() * gamma * gamma;
            const Eigen::VectorXd row = g.weight_jacobian * g.stiffness.GA() * gamma * B[l].row(1).transpose();
            for (std::size_t i = 0; i < dofs.size(); ++i) {
                c.d_state[dofs[i]] += row[static_cast<Eigen::Index>(i)];
            }
            if (loc) {
                for (const auto& [var, weight] : weights_at(*loc, g.xi)) {
                    c.d_variable[var] += weight * g.weight_jacobian * 0.5 * g.stiffness.dGA() * gamma * gamma;
                }
            }
        }
    }
    return c;
}

CostValue displacement_norm_with_gradient(const Mesh& mesh, const Configuration& config, int design_size)
{
    // nodal quadrature, the same rule as the shape-matching cost
    const Configuration reference = Configuration::reference(mesh);
    CostValue c;
    c.value = shape_matching_cost(mesh, config, reference);
    c.d_state = shape_matching_gradient(mesh, config, reference);
    c.d_variable = Eigen::VectorXd::Zero(design_size);
    return c;
}

double displacement_norm_cost(const Mesh& mesh, const Configuration& config)
{
    return displacement_norm_with_gradient(mesh, config, 0).value;
}

CostValue design_cost(const Mesh& mesh, const Configuration& config, const DesignParam& design,
                      std::span<const double> d, const DesignCostSpec& spec)
{
    CostValue c;
    const VolumeMass vm = volume_and_mass(mesh, design, d);
    switch (spec.kind) {
    case DesignCostKind::volume:
        c.value = vm.volume;
        c.d_state = Eigen::VectorXd::Zero(mesh.dof_count());
        c.d_variable = vm.d_volume;
        break;
    case DesignCostKind::shear_energy:
        c = shear_energy_with_gradient(mesh, config, design);
        break;
    case DesignCostKind::displacement_norm:
        c = displacement_norm_with_gradient(mesh, config, design.size());
        break;
    }
    c.value *= spec.sign;
    c.d_state *= spec.sign;
    c.d_variable *= spec.sign;

    const double excess = vm.mass - spec.mass_target;
    double active = 0.0;
    switch (spec.penalty) {
    case PenaltyKind::none:
        break;
    case PenaltyKind::upper:
        active = std::max(0.0, excess);
        break;
    case PenaltyKind::lower:
        active = std::min(0.0, excess);
        break;
    case PenaltyKind::equality:
        active = excess;
        break;
    }
    c.value += spec.penalty_weight * active * active;
    c.d_variable += 2.0 * spec.penalty_weight * active * vm.d_mass;
    return c;
}

CostValue control_cost(const Mesh& mesh, const Configuration& config, std::span<const double> control,
                       const ControlCostSpec& spec)
{
    CostValue c;
    const double shape = shape_matching_cost(mesh, config, spec.desired);
    c.value = regularized_control_cost(shape, control, spec.alpha, spec.weights);
    c.d_state = shape_matching_gradient(mesh, config, spec.desired);
    c.d_variable.resize(static_cast<Eigen::Index>(control.size()));
    for (std::size_t j = 0; j < control.size(); ++j) {
        const double w = spec.weights.empty() ? 1.0 : spec.weights[j];
        c.d_variable[static_cast<Eigen::Index>(j)] = 2.0 * spec.alpha * w * control[j];
    }
    return c;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd KktResidual::stacked() const
{
    Eigen::VectorXd out(r_lambda.size() + r_phi.size() + r_variable.size());
    out << r_lambda, r_phi, r_variable;
    return out;
}

bool KktResidual::finite() const
{
    return stacked().allFinite();
}

double merit_least_squares(const KktResidual& r)
{
    return r.r_lambda.squaredNorm() + r.r_phi.squaredNorm() + r.r_variable.squaredNorm();
}

KktResidual kkt_residual_control(const Mesh& mesh, const LoadCase& loads, const Configuration& config,
                                 std::span<const double> control, const Eigen::VectorXd& lambda,
                                 const ControlCostSpec& spec)
{
    const FreeSystem sys = free_system(mesh, loads, config, control);
    if (lambda.size() != sys.map.free_count()) {
        throw std::invalid_argument("kkt: multiplier size does not match the free dofs");
    }
    const CostValue c = control_cost(mesh, config, control, spec);
    const Eigen::MatrixXd f0 = rows_of(control_influence(mesh, loads, config), sys.map.free);
    KktResidual r;
    r.r_lambda = sys.residual;
    r.r_phi = restrict_vector(c.d_state, sys.map.free) + sys.tangent.transpose() * lambda;
    r.r_variable = c.d_variable - f0.transpose() * lambda;
    return r;
}

KktResidual kkt_residual_design(const Mesh& mesh, const LoadCase& loads, const Configuration& config,
                                const DesignParam& design, std::span<const double> d,
                                const Eigen::VectorXd& lambda, const DesignCostSpec& spec)
{
    const std::vector<double> none(loads.control_count(), 0.0);
    const FreeSystem sys = free_system(mesh, loads, config, none);
    if (lambda.size() != sys.map.free_count()) {
        throw std::invalid_argument("kkt: multiplier size does not match the free dofs");
    }
    const CostValue c = design_cost(mesh, config, design, d, spec);
    const Eigen::MatrixXd s = rows_of(design_sensitivity_fint(mesh, config, design), sys.map.free);
    KktResidual r;
    r.r_lambda = sys.residual;
    r.r_phi = restrict_vector(c.d_state, sys.map.free) + sys.tangent.transpose() * lambda;
    r.r_variable = c.d_variable + s.transpose() * lambda;
    return r;
}

double lagrangian_control(const Mesh& mesh, const LoadCase& loads, const Configuration& config,
                          std::span<const double> control, const Eigen::VectorXd& lambda,
                          const ControlCostSpec& spec)
{
    const DofMap map = make_dof_map(mesh);
    const Eigen::VectorXd r = restrict_vector(assemble_internal_force(mesh, config) -
                                                  external_force(mesh, loads, config, control),
                                              map.free);
    const double j = regularized_control_cost(shape_matching_cost(mesh, config, spec.desired), control, spec.alpha,
                                              spec.weights);
    return j + lambda.dot(r);
}

double lagrangian_design(const Mesh& mesh, const LoadCase& loads, const Configuration& config,
                         const DesignParam& design, std::span<const double> d, const Eigen::VectorXd& lambda,
                         const DesignCostSpec& spec)
{
    const std::vector<double> none(loads.control_count(), 0.0);
    const DofMap map = make_dof_map(mesh);
    const Eigen::VectorXd r =
        restrict_vector(assemble_internal_force(mesh, config) - external_force(mesh, loads, config, none), map.free);
    return design_cost(mesh, config, design, d, spec).value + lambda.dot(r);
}

Eigen::VectorXd adjoint_multipliers(const Eigen::MatrixXd& k_free, const Eigen::VectorXd& dj_dphi_free)
{
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(k_free.transpose());
    if (!(lu.rcond() > 1e-15)) {
        throw std::runtime_error("adjoint: singular tangent");
    }
    return -lu.solve(dj_dphi_free);
}

ReducedResidual eliminate_multipliers(const Mesh& mesh, const LoadCase& loads, const Configuration& config,
                                      std::span<const double> control, const ControlCostSpec& spec)
{
    const FreeSystem sys = free_system(mesh, loads, config, control);
    const CostValue c = control_cost(mesh, config, control, spec);
    const Eigen::MatrixXd f0 = rows_of(control_influence(mesh, loads, config), sys.map.free);
    ReducedResidual r;
    r.lambda = adjoint_multipliers(sys.tangent, restrict_vector(c.d_state, sys.map.free));
    r.r_lambda = sys.residual;
    r.r_control = c.d_variable - f0.transpose() * r.lambda;
    return r;
}

Eigen::VectorXd adjoint_reduced_gradient_control(const Mesh& mesh, const LoadCase& loads,
                                                 const Configuration& config, std::span<const double> control,
                                                 const ControlCostSpec& spec)
{
    return eliminate_multipliers(mesh, loads, config, control, spec).r_control;
}

Eigen::VectorXd adjoint_reduced_gradient_design(const Mesh& mesh, const LoadCase& loads,
                                                const Configuration& config, const DesignParam& design,
                                                std::span<const double> d, const DesignCostSpec& spec)
{
    const std::vector<double> none(loads.control_count(), 0.0);
    const FreeSystem sys = free_system(mesh, loads, config, none);
    const CostValue c = design_cost(mesh, config, design, d, spec);
    const Eigen::VectorXd lambda = adjoint_multipliers(sys.tangent, restrict_vector(c.d_state, sys.map.free));
    const Eigen::MatrixXd s = rows_of(design_sensitivity_fint(mesh, config, design), sys.map.free);
    return c.d_variable + s.transpose() * lambda;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> bound_box_from_reference(const Eigen::VectorXd& reference, double ep)
{
    if (!(ep > 0.0)) {
        throw std::invalid_argument("bounds: EP must be positive");
    }
    Eigen::VectorXd lo(reference.size()), hi(reference.size());
    for (Eigen::Index i = 0; i < reference.size(); ++i) {
        const double c = reference[i];
        const double half = std::abs(c) < 1e-12 ? ep : ep * std::abs(c);
        const double centre = std::abs(c) < 1e-12 ? 0.0 : c;
        lo[i] = centre - half;
        hi[i] = centre + half;
    }
    return {lo, hi};
}

// ---------------------------------------------------------------------------

CurveVolume shape_design_volume_gradient(const std::vector<Vec2>& points, double area, int quadrature)
{
    if (points.size() < 2) {
        throw std::invalid_argument("shape design: need at least two control points");
    }
    const int degree = static_cast<int>(points.size()) - 1;
    const QuadratureRule rule = gauss_legendre(quadrature > 0 ? quadrature : 16);
    CurveVolume out;
    out.gradient = Eigen::Matrix2Xd::Zero(2, static_cast<Eigen::Index>(points.size()));
    for (std::size_t l = 0; l < rule.points.size(); ++l) {
        const std::vector<double> db = bernstein_derivative(degree, rule.points[l]);
        Vec2 tangent = Vec2::Zero();
        for (int a = 0; a <= degree; ++a) {
            tangent += db[a] * points[a];
        }
        const double j = tangent.norm();
        if (!(j > 1e-14)) {
            throw std::domain_error("shape design: vanishing curve tangent");
        }
        out.volume += rule.weights[l] * area * j;
        for (int a = 0; a <= degree; ++a) {
            out.gradient.col(a) += rule.weights[l] * area * db[a] / j * tangent;
        }
    }
    return out;
}

double curve_volume(const std::function<Vec2(double)>& tangent, double area, int quadrature)
{
    const QuadratureRule rule = gauss_legendre(quadrature);
    double v = 0.0;
    for (std::size_t l = 0; l < rule.points.size(); ++l) {
        const double j = tangent(rule.points[l]).norm();
        if (!(j > 1e-14)) {
            throw std::domain_error("shape design: vanishing curve tangent");
        }
        v += rule.weights[l] * area * j;
    }
    return v;
}

// ---------------------------------------------------------------------------

ControlProblem::ControlProblem(Mesh mesh, LoadCase loads, ControlCostSpec spec, SolverOptions options)
    : mesh_(std::move(mesh)), loads_(std::move(loads)), spec_(std::move(spec)), options_(options)
{
    mesh_.validate();
    loads_.validate(mesh_);
    if (spec_.desired.q.size() != mesh_.dof_count()) {
        throw std::invalid_argument("control problem: desired shape does not match the mesh");
    }
}

Evaluation ControlProblem::evaluate(std::span<const double> control) const
{
    Evaluation ev;
    ev.report = newton_solve(mesh_, loads_, control, options_);
    ev.converged = ev.report.ok();
    ev.config = ev.report.config;
    ev.value = ev.converged ? control_cost(mesh_, ev.config, control, spec_).value
                            : std::numeric_limits<double>::infinity();
    return ev;
}

Eigen::VectorXd ControlProblem::gradient(std::span<const double> control) const
{
    const Evaluation ev = evaluate(control);
    if (!ev.converged) {
        throw std::runtime_error("control problem: " + ev.report.message());
    }
    return adjoint_reduced_gradient_control(mesh_, loads_, ev.config, control, spec_);
}

DesignProblem::DesignProblem(Mesh mesh, LoadCase loads, DesignParam design, DesignCostSpec spec,
                             SolverOptions options)
    : mesh_(std::move(mesh)), loads_(std::move(loads)), design_(std::move(design)), spec_(spec), options_(options)
{
    mesh_.validate();
    loads_.validate(mesh_);
    design_.validate(mesh_);
}

Mesh DesignProblem::designed_mesh(std::span<const double> d) const
{
    Mesh m = mesh_;
    apply_design(m, design_, d);
    return m;
}

Evaluation DesignProblem::evaluate(std::span<const double> d) const
{
    const Mesh m = designed_mesh(d);
    const std::vector<double> none(loads_.control_count(), 0.0);
    Evaluation ev;
    ev.report = newton_solve(m, loads_, none, options_);
    ev.converged = ev.report.ok();
    ev.config = ev.report.config;
    ev.value = ev.converged ? design_cost(m, ev.config, design_, d, spec_).value
                            : std::numeric_limits<double>::infinity();
    return ev;
}

Eigen::VectorXd DesignProblem::gradient(std::span<const double> d) const
{
    const Mesh m = designed_mesh(d);
    const Evaluation ev = evaluate(d);
    if (!ev.converged) {
        throw std::runtime_error("design problem: " + ev.report.message());
    }
    return adjoint_reduced_gradient_design(m, loads_, ev.config, design_, d, spec_);
}

}  // namespace beamopt
