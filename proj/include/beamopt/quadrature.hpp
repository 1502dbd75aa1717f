#pragma once

#include <vector>

namespace beamopt {

struct QuadratureRule {
    std::vector<double> points;
    std::vector<double> weights;
};

/// Gauss-Legendre rule with `n` points on [-1, 1]; exact for degree 2n-1.
QuadratureRule gauss_legendre(int n);

/// Lagrange shape functions of an element with `n_en` equally spaced nodes
/// on [-1, 1].
struct ShapeValues {
    std::vector<double> N;
    std::vector<double> dN_dxi;
};

/// Throws std::invalid_argument for n_en outside [2, 4] and
/// std::domain_error for xi outside [-1, 1].
ShapeValues lagrange_shape(int n_en, double xi);

/// Natural coordinate of node `a` (0-based) in an element with n_en nodes.
double lagrange_node(int n_en, int a);

}  // namespace beamopt
