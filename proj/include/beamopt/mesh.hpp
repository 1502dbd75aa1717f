#pragma once

#include <vector>

#include <Eigen/Core>

#include "beamopt/rotation.hpp"
#include "beamopt/section.hpp"

namespace beamopt {

inline constexpr int dofs_per_node = 3;

/// Flat index of component `c` (0: x, 1: y, 2: rotation) of node `a`.
constexpr int dof_index(int a, int c) { return dofs_per_node * a + c; }

struct Element {
    std::vector<int> nodes;
    /// Absolute cross-section angle at each node in the reference state.
    /// Neighbouring elements may disagree at a shared node (rigid kink).
    std::vector<double> frame_angles;
    int section = 0;
    /// Gauss points; 0 selects reduced integration (n_en - 1 points).
    int quadrature = 0;
    /// Per-Gauss-point override of the section's design dimension; empty
    /// means the nominal section is used.
    std::vector<double> gp_dimension;

    int node_count() const { return static_cast<int>(nodes.size()); }
    int gauss_points() const { return quadrature > 0 ? quadrature : node_count() - 1; }
};

struct Support {
    int node = 0;
    int component = 0;
    /// Prescribed displacement (or rotation) measured from the reference.
    double value = 0.0;
};

struct Mesh {
    std::vector<Vec2> nodes;
    std::vector<Element> elements;
    std::vector<SectionLaw> sections;
    std::vector<Support> supports;

    int node_count() const { return static_cast<int>(nodes.size()); }
    int dof_count() const { return dofs_per_node * node_count(); }
    int element_count() const { return static_cast<int>(elements.size()); }

    /// Throws std::invalid_argument on dangling references and
    /// std::domain_error on a non-positive jacobian at any Gauss point.
    void validate() const;

    /// Fix all three dofs of `node` at zero displacement.
    void clamp(int node);

    /// Reference nodal coordinates as a flat vector with zero rotations.
    Eigen::VectorXd reference_state() const;

    /// Reference arc length of every element.
    std::vector<double> element_lengths() const;
    double total_length() const;
};

/// Start a mesh with a single node and one section.
Mesh start_mesh(const Vec2& origin, const SectionLaw& section);

/// Append a straight run of `n_elements` elements leaving `from` in
/// direction `direction` (radians). Returns the index of the last node.
int append_line(Mesh& mesh, int from, double direction, double length, int n_elements, int section = 0,
                int n_en = 2);

/// Append a circular arc of signed curvature `curvature` (positive turns
/// counter-clockwise) and arc length `length`, starting tangent to
/// `direction`. Nodes lie on the arc; frame angles are the exact tangents.
int append_arc(Mesh& mesh, int from, double direction, double curvature, double length, int n_elements,
               int section = 0, int n_en = 2);

/// Nodal configuration: displacement-free positions plus rotations measured
/// from each element's reference frame, flattened 3 per node.
struct Configuration {
    Eigen::VectorXd q;

    static Configuration reference(const Mesh& mesh) { return {mesh.reference_state()}; }

    Vec2 position(int a) const { return {q[dof_index(a, 0)], q[dof_index(a, 1)]}; }
    double rotation(int a) const { return q[dof_index(a, 2)]; }
    int node_count() const { return static_cast<int>(q.size()) / dofs_per_node; }
};

/// Partition of the flat dof vector into free and prescribed entries.
struct DofMap {
    std::vector<int> free;
    std::vector<int> fixed;
    std::vector<int> free_index;  // -1 for prescribed dofs

    int free_count() const { return static_cast<int>(free.size()); }
};

DofMap make_dof_map(const Mesh& mesh);

Eigen::VectorXd restrict_vector(const Eigen::VectorXd& full, const std::vector<int>& rows);
Eigen::MatrixXd restrict_matrix(const Eigen::MatrixXd& full, const std::vector<int>& rows,
                                const std::vector<int>& cols);

}  // namespace beamopt
