#include "beamopt/mesh.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "beamopt/quadrature.hpp"

namespace beamopt {

namespace {

double element_jacobian(const Mesh& mesh, const Element& el, double xi)
{
    const ShapeValues s = lagrange_shape(el.node_count(), xi);
    Vec2 dx = Vec2::Zero();
    for (int a = 0; a < el.node_count(); ++a) {
        dx += s.dN_dxi[a] * mesh.nodes[el.nodes[a]];
    }
    return dx.norm();
}

int add_node(Mesh& mesh, const Vec2& x)
{
    mesh.nodes.push_back(x);
    return mesh.node_count() - 1;
}

void check_run(const Mesh& mesh, int from, double length, int n_elements, int section, int n_en)
{
    if (from < 0 || from >= mesh.node_count()) {
        throw std::invalid_argument("mesh: start node " + std::to_string(from) + " does not exist");
    }
    if (!(length > 0.0) || n_elements < 1) {
        throw std::invalid_argument("mesh: segment needs positive length and at least one element");
    }
    if (section < 0 || section >= static_cast<int>(mesh.sections.size())) {
        throw std::invalid_argument("mesh: unknown section " + std::to_string(section));
    }
    if (n_en < 2 || n_en > 4) {
        throw std::invalid_argument("mesh: element must have 2 to 4 nodes");
    }
}

}  // namespace

void Mesh::validate() const
{
    if (nodes.empty() || elements.empty()) {
        throw std::invalid_argument("mesh: no nodes or no elements");
    }
    for (const auto& s : sections) {
        s.validate();
    }
    for (int e = 0; e < element_count(); ++e) {
        const Element& el = elements[e];
        const std::string tag = "mesh: element " + std::to_string(e);
        if (el.node_count() < 2 || el.node_count() > 4) {
            throw std::invalid_argument(tag + " must have 2 to 4 nodes");
        }
        if (el.frame_angles.size() != el.nodes.size()) {
            throw std::invalid_argument(tag + " needs one frame angle per node");
        }
        for (int n : el.nodes) {
            if (n < 0 || n >= node_count()) {
                throw std::invalid_argument(tag + " references a missing node");
            }
        }
        if (el.section < 0 || el.section >= static_cast<int>(sections.size())) {
            throw std::invalid_argument(tag + " references a missing section");
        }
        if (!el.gp_dimension.empty() && static_cast<int>(el.gp_dimension.size()) != el.gauss_points()) {
            throw std::invalid_argument(tag + " has a design override of the wrong length");
        }
        for (double xi : gauss_legendre(el.gauss_points()).points) {
            if (!(element_jacobian(*this, el, xi) > 0.0)) {
                throw std::domain_error(tag + " is degenerate (jacobian <= 0)");
            }
        }
    }
    for (const auto& s : supports) {
        if (s.node < 0 || s.node >= node_count() || s.component < 0 || s.component >= dofs_per_node) {
            throw std::invalid_argument("mesh: support references a missing dof");
        }
    }
}

void Mesh::clamp(int node)
{
    for (int c = 0; c < dofs_per_node; ++c) {
        supports.push_back({node, c, 0.0});
    }
}

Eigen::VectorXd Mesh::reference_state() const
{
    Eigen::VectorXd q = Eigen::VectorXd::Zero(dof_count());
    for (int a = 0; a < node_count(); ++a) {
        q[dof_index(a, 0)] = nodes[a].x();
        q[dof_index(a, 1)] = nodes[a].y();
    }
    return q;
}

std::vector<double> Mesh::element_lengths() const
{
    std::vector<double> out;
    out.reserve(elements.size());
    for (const Element& el : elements) {
        // the reference map is a polynomial of degree n_en - 1
        const QuadratureRule rule = gauss_legendre(std::max(2, el.node_count() + 1));
        double len = 0.0;
        for (std::size_t l = 0; l < rule.points.size(); ++l) {
            len += rule.weights[l] * element_jacobian(*this, el, rule.points[l]);
        }
        out.push_back(len);
    }
    return out;
}

double Mesh::total_length() const
{
    double sum = 0.0;
    for (double l : element_lengths()) {
        sum += l;
    }
    return sum;
}

Mesh start_mesh(const Vec2& origin, const SectionLaw& section)
{
    Mesh mesh;
    mesh.nodes.push_back(origin);
    mesh.sections.push_back(section);
    return mesh;
}

int append_line(Mesh& mesh, int from, double direction, double length, int n_elements, int section, int n_en)
{
    check_run(mesh, from, length, n_elements, section, n_en);
    const Vec2 t(std::cos(direction), std::sin(direction));
    const Vec2 x0 = mesh.nodes[from];
    const int per = n_en - 1;
    const int total = n_elements * per;
    int prev = from;
    for (int e = 0; e < n_elements; ++e) {
        Element el;
        el.section = section;
        el.nodes.push_back(prev);
        for (int k = 1; k <= per; ++k) {
            el.nodes.push_back(add_node(mesh, x0 + length * (e * per + k) / total * t));
        }
        el.frame_angles.assign(n_en, direction);
        prev = el.nodes.back();
        mesh.elements.push_back(std::move(el));
    }
    return prev;
}

int append_arc(Mesh& mesh, int from, double direction, double curvature, double length, int n_elements,
               int section, int n_en)
{
    check_run(mesh, from, length, n_elements, section, n_en);
    if (curvature == 0.0) {
        return append_line(mesh, from, direction, length, n_elements, section, n_en);
    }
    const Vec2 x0 = mesh.nodes[from];
    const Vec2 normal(-std::sin(direction), std::cos(direction));
    const Vec2 centre = x0 + normal / curvature;
    const auto point = [&](double s) {
        const double a = direction + curvature * s;
        return Vec2(centre + Vec2(std::sin(a), -std::cos(a)) / curvature);
    };
    const int per = n_en - 1;
    const int total = n_elements * per;
    int prev = from;
    for (int e = 0; e < n_elements; ++e) {
        Element el;
        el.section = section;
        el.nodes.push_back(prev);
        el.frame_angles.push_back(direction + curvature * length * (e * per) / total);
        for (int k = 1; k <= per; ++k) {
            const double s = length * (e * per + k) / total;
            el.nodes.push_back(add_node(mesh, point(s)));
            el.frame_angles.push_back(direction + curvature * s);
        }
        prev = el.nodes.back();
        mesh.elements.push_back(std::move(el));
    }
    return prev;
}

DofMap make_dof_map(const Mesh& mesh)
{
    DofMap map;
    std::vector<bool> fixed(mesh.dof_count(), false);
    for (const auto& s : mesh.supports) {
        fixed[dof_index(s.node, s.component)] = true;
    }
    map.free_index.assign(mesh.dof_count(), -1);
    for (int i = 0; i < mesh.dof_count(); ++i) {
        if (fixed[i]) {
            map.fixed.push_back(i);
        } else {
            map.free_index[i] = map.free_count();
            map.free.push_back(i);
        }
    }
    return map;
}

Eigen::VectorXd restrict_vector(const Eigen::VectorXd& full, const std::vector<int>& rows)
{
    Eigen::VectorXd out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out[i] = full[rows[i]];
    }
    return out;
}

Eigen::MatrixXd restrict_matrix(const Eigen::MatrixXd& full, const std::vector<int>& rows,
                                const std::vector<int>& cols)
{
    Eigen::MatrixXd out(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            out(i, j) = full(rows[i], cols[j]);
        }
    }
    return out;
}

}  // namespace beamopt
