#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace beamopt {

/// 1 + n + n(n+1)/2.
int quadratic_basis_size(int n);

/// (1, x_1..x_n, x_i x_j for i <= j in row-major order).
Eigen::VectorXd quadratic_basis(const Eigen::VectorXd& x);

/// Cost samples over a box, e.g. a full tensor grid.
struct SampleSet {
    std::vector<Eigen::VectorXd> points;
    std::vector<double> values;
    std::vector<int> grid_shape;  // empty for scattered samples

    int dimension() const { return points.empty() ? 0 : static_cast<int>(points.front().size()); }
    int size() const { return static_cast<int>(points.size()); }
    Eigen::VectorXd lower() const;
    Eigen::VectorXd upper() const;

    /// Throws std::invalid_argument on ragged points or value count mismatch.
    void validate() const;

    /// CSV with header x1..xn,J; values printed with 17 significant digits.
    void write_csv(const std::string& path) const;
    static SampleSet read_csv(const std::string& path);
};

/// Evaluate `objective` on a tensor grid with `shape[i]` nodes along each
/// axis (lower and upper included), using up to `threads` workers.
SampleSet build_grid(const std::function<double(const Eigen::VectorXd&)>& objective, const Eigen::VectorXd& lower,
                     const Eigen::VectorXd& upper, const std::vector<int>& shape, int threads = 0);

struct Neighbors {
    std::vector<int> indices;  // nearest first, ties by sample index
    std::vector<double> distances;
    double radius = 0.0;
};

/// The `count` nearest samples (default: basis size + 1) and their radius.
/// Throws std::invalid_argument when the set has fewer samples.
Neighbors select_neighbors(const SampleSet& samples, const Eigen::VectorXd& x, int count = 0);

/// rho(min(distance / radius, 1)) with rho(s) = 1 - 3 s^2 + 2 s^3.
double window_weight(double distance, double radius);

/// Point-dependent quadratic model c + b^T y + 1/2 y^T H y fitted at x.
struct DiffuseModel {
    Eigen::VectorXd x;
    double c = 0.0;
    Eigen::VectorXd b;
    Eigen::MatrixXd H;
    Neighbors neighbors;
    int enlargements = 0;  // neighbor-set growth steps needed
    bool ridge = false;    // ridge regularization applied

    double value(const Eigen::VectorXd& y) const;
    Eigen::VectorXd gradient(const Eigen::VectorXd& y) const;
    double value_at_query() const { return value(x); }

    /// Coefficients in the global monomial basis of quadratic_basis.
    Eigen::VectorXd coefficients() const;
};

/// Weighted least-squares fit over the neighbor set of x. Throws
/// std::runtime_error if the moment matrix stays singular.
DiffuseModel mls_fit(const SampleSet& samples, const Eigen::VectorXd& x);

struct SurfaceOptions {
    int max_iterations = 200;
    double step_tolerance = 1e-8;  // relative to the box diagonal
    bool pure_gradient = false;
    double gradient_step = 0.05;  // relative to the box, pure-gradient mode

    bool operator==(const SurfaceOptions&) const = default;
};

struct SurfaceResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<Eigen::VectorXd> trail;
};

/// Descent on the diffuse surface inside the sample box, re-fitting the
/// model at every iterate.
SurfaceResult surface_minimize(const SampleSet& samples, const Eigen::VectorXd& x0, const SurfaceOptions& options = {});

}  // namespace beamopt
