#include "beamopt/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace beamopt {

QuadratureRule gauss_legendre(int n)
{
    if (n < 1) {
        throw std::invalid_argument("gauss_legendre: need at least one point");
    }
    QuadratureRule rule;
    rule.points.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        // Newton iteration on P_n from the Chebyshev-like initial guess
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            const double pn = (n == 1) ? x : p1;
            const double pnm1 = (n == 1) ? 1.0 : p0;
            dp = n * (x * pn - pnm1) / (x * x - 1.0);
            const double dx = pn / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) {
                break;
            }
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.points[i] = -x;
        rule.points[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) {
        rule.points[n / 2] = 0.0;
    }
    return rule;
}

double lagrange_node(int n_en, int a)
{
    return -1.0 + 2.0 * a / (n_en - 1);
}

ShapeValues lagrange_shape(int n_en, double xi)
{
    if (n_en < 2 || n_en > 4) {
        throw std::invalid_argument("lagrange_shape: element must have 2 to 4 nodes");
    }
    if (!(xi >= -1.0 && xi <= 1.0)) {
        throw std::domain_error("lagrange_shape: natural coordinate outside [-1, 1]");
    }
    ShapeValues s;
    s.N.assign(n_en, 1.0);
    s.dN_dxi.assign(n_en, 0.0);
    for (int a = 0; a < n_en; ++a) {
        const double xa = lagrange_node(n_en, a);
        double value = 1.0;
        for (int b = 0; b < n_en; ++b) {
            if (b != a) {
                value *= (xi - lagrange_node(n_en, b)) / (xa - lagrange_node(n_en, b));
            }
        }
        // derivative of the product: sum over the dropped factor
        double deriv = 0.0;
        for (int c = 0; c < n_en; ++c) {
            if (c == a) {
                continue;
            }
            double term = 1.0 / (xa - lagrange_node(n_en, c));
            for (int b = 0; b < n_en; ++b) {
                if (b != a && b != c) {
                    term *= (xi - lagrange_node(n_en, b)) / (xa - lagrange_node(n_en, b));
                }
            }
            deriv += term;
        }
        s.N[a] = value;
        s.dN_dxi[a] = deriv;
    }
    return s;
}

}  // namespace beamopt
