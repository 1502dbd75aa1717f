#include "beamopt/surrogate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <Eigen/Cholesky>

namespace beamopt {

int quadratic_basis_size(int n)
{
    return 1 + n + n * (n + 1) / 2;
}

Eigen::VectorXd quadratic_basis(const Eigen::VectorXd& x)
{
    const int n = static_cast<int>(x.size());
    if (n < 1) {
        throw std::invalid_argument("quadratic_basis: empty point");
    }
    Eigen::VectorXd p(quadratic_basis_size(n));
    p[0] = 1.0;
    p.segment(1, n) = x;
    int k = 1 + n;
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            p[k++] = x[i] * x[j];
        }
    }
    return p;
}

Eigen::VectorXd SampleSet::lower() const
{
    Eigen::VectorXd lo = points.at(0);
    for (const auto& p : points) {
        lo = lo.cwiseMin(p);
    }
    return lo;
}

Eigen::VectorXd SampleSet::upper() const
{
    Eigen::VectorXd hi = points.at(0);
    for (const auto& p : points) {
        hi = hi.cwiseMax(p);
    }
    return hi;
}

void SampleSet::validate() const
{
    if (points.size() != values.size()) {
        throw std::invalid_argument("samples: point and value counts differ");
    }
    for (const auto& p : points) {
        if (p.size() != dimension()) {
            throw std::invalid_argument("samples: points of mixed dimension");
        }
    }
}

void SampleSet::write_csv(const std::string& path) const
{
    validate();
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    for (int i = 0; i < dimension(); ++i) {
        out << 'x' << (i + 1) << ',';
    }
    out << "J\n";
    char buf[64];
    for (int s = 0; s < size(); ++s) {
        for (int i = 0; i < dimension(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g,", points[s][i]);
            out << buf;
        }
        std::snprintf(buf, sizeof buf, "%.17g\n", values[s]);
        out << buf;
    }
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

SampleSet SampleSet::read_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error(path + ": empty file");
    }
    const int columns = static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;
    if (columns < 2) {
        throw std::runtime_error(path + ": need at least one variable column and J");
    }
    SampleSet set;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) {
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> v;
        while (std::getline(ss, cell, ',')) {
            std::size_t used = 0;
            double value = 0.0;
            try {
                value = std::stod(cell, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0) {
                throw std::runtime_error(path + ":" + std::to_string(row) + ": malformed number '" + cell + "'");
            }
            v.push_back(value);
        }
        if (static_cast<int>(v.size()) != columns) {
            throw std::runtime_error(path + ":" + std::to_string(row) + ": wrong column count");
        }
        set.points.push_back(Eigen::Map<Eigen::VectorXd>(v.data(), columns - 1));
        set.values.push_back(v.back());
    }
    return set;
}

SampleSet build_grid(const std::function<double(const Eigen::VectorXd&)>& objective, const Eigen::VectorXd& lower,
                     const Eigen::VectorXd& upper, const std::vector<int>& shape, int threads)
{
    const int n = static_cast<int>(lower.size());
    if (upper.size() != n || static_cast<int>(shape.size()) != n) {
        throw std::invalid_argument("grid: bounds and shape differ in dimension");
    }
    int total = 1;
    for (int i = 0; i < n; ++i) {
        if (shape[i] < 2 || !(lower[i] < upper[i])) {
            throw std::invalid_argument("grid: need at least two nodes per axis and lo < hi");
        }
        total *= shape[i];
    }
    SampleSet set;
    set.grid_shape = shape;
    set.points.resize(total);
    set.values.resize(total);
    for (int k = 0; k < total; ++k) {
        Eigen::VectorXd x(n);
        int rest = k;
        for (int i = n - 1; i >= 0; --i) {
            const int idx = rest % shape[i];
            rest /= shape[i];
            x[i] = lower[i] + (upper[i] - lower[i]) * idx / (shape[i] - 1);
        }
        set.points[k] = x;
    }

    const int workers = std::max(1, threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency()));
    std::atomic<int> next{0};
    const auto work = [&] {
        for (int k = next++; k < total; k = next++) {
            set.values[k] = objective(set.points[k]);
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back(work);
        }
    }
    return set;
}

Neighbors select_neighbors(const SampleSet& samples, const Eigen::VectorXd& x, int count)
{
    const int n = static_cast<int>(x.size());
    if (count <= 0) {
        count = quadratic_basis_size(n) + 1;
    }
    if (samples.size() < count) {
        throw std::invalid_argument("neighbors: sample set has fewer than " + std::to_string(count) + " points");
    }
    std::vector<double> dist(samples.size());
    for (int i = 0; i < samples.size(); ++i) {
        dist[i] = (samples.points[i] - x).norm();
    }
    std::vector<int> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + count, order.end(), [&](int a, int b) {
        return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
    });
    Neighbors nb;
    nb.indices.assign(order.begin(), order.begin() + count);
    for (int i : nb.indices) {
        nb.distances.push_back(dist[i]);
        nb.radius = std::max(nb.radius, dist[i]);
    }
    return nb;
}

double window_weight(double distance, double radius)
{
    if (!(radius > 0.0)) {
        throw std::invalid_argument("window_weight: radius must be positive");
    }
    const double s = std::min(distance / radius, 1.0);
    return 1.0 - 3.0 * s * s + 2.0 * s * s * s;
}

double DiffuseModel::value(const Eigen::VectorXd& y) const
{
    return c + b.dot(y) + 0.5 * y.dot(H * y);
}

Eigen::VectorXd DiffuseModel::gradient(const Eigen::VectorXd& y) const
{
    return b + H * y;
}

Eigen::VectorXd DiffuseModel::coefficients() const
{
    const int n = static_cast<int>(b.size());
    Eigen::VectorXd a(quadratic_basis_size(n));
    a[0] = c;
    a.segment(1, n) = b;
    int k = 1 + n;
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            a[k++] = (i == j) ? 0.5 * H(i, i) : H(i, j);
        }
    }
    return a;
}

DiffuseModel mls_fit(const SampleSet& samples, const Eigen::VectorXd& x)
{
    const int n = static_cast<int>(x.size());
    if (n != samples.dimension()) {
        throw std::invalid_argument("mls_fit: query dimension differs from the samples");
    }
    const int m = quadratic_basis_size(n);
    DiffuseModel model;
    model.x = x;
    int count = m + 1;
    Eigen::VectorXd a;
    for (;;) {
        model.neighbors = select_neighbors(samples, x, count);
        const double r = model.neighbors.radius;
        if (!(r > 0.0)) {
            throw std::runtime_error("mls_fit: neighbors coincide with the query point");
        }
        // local coordinates (y - x) / r keep the moment matrix well scaled
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
        for (std::size_t k = 0; k < model.neighbors.indices.size(); ++k) {
            const int i = model.neighbors.indices[k];
            const double w = window_weight(model.neighbors.distances[k], r);
            if (w == 0.0) {
                continue;
            }
            const Eigen::VectorXd p = quadratic_basis((samples.points[i] - x) / r);
            A.noalias() += w * p * p.transpose();
            rhs += w * samples.values[i] * p;
        }
        Eigen::LLT<Eigen::MatrixXd> llt(A);
        if (llt.info() == Eigen::Success && llt.rcond() > 1e-11) {
            a = llt.solve(rhs);
            break;
        }
        if (count >= samples.size()) {
            A.diagonal().array() += 1e-12 * A.trace();
            llt.compute(A);
            if (llt.info() != Eigen::Success) {
                throw std::runtime_error("mls_fit: singular moment matrix");
            }
            model.ridge = true;
            a = llt.solve(rhs);
            break;
        }
        count = std::min(samples.size(), count + n);
        ++model.enlargements;
    }

    const double r = model.neighbors.radius;
    const double v = a[0];
    const Eigen::VectorXd g = a.segment(1, n) / r;
    Eigen::MatrixXd H(n, n);
    int k = 1 + n;
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            H(i, j) = H(j, i) = (i == j ? 2.0 * a[k] : a[k]) / (r * r);
            ++k;
        }
    }
    model.H = H;
    model.b = g - H * x;
    model.c = v - g.dot(x) + 0.5 * x.dot(H * x);
    return model;
}

SurfaceResult surface_minimize(const SampleSet& samples, const Eigen::VectorXd& x0, const SurfaceOptions& options)
{
    const Eigen::VectorXd lo = samples.lower();
    const Eigen::VectorXd hi = samples.upper();
    const Eigen::VectorXd width = hi - lo;
    const double diag = width.norm();
    const auto clamp = [&](const Eigen::VectorXd& y) { return Eigen::VectorXd(y.cwiseMax(lo).cwiseMin(hi)); };
    // the query-point value of the re-fitted model is the surface J_appr
    const auto surface = [&](const Eigen::VectorXd& y) {
        const DiffuseModel m = mls_fit(samples, y);
        return std::pair{m, m.c + m.b.dot(y) + 0.5 * y.dot(m.H * y)};
    };

    SurfaceResult res;
    res.x = clamp(x0);
    auto [model, value] = surface(res.x);
    res.value = value;
    res.trail.push_back(res.x);

    for (res.iterations = 0; res.iterations < options.max_iterations;) {
        const Eigen::VectorXd g = model.gradient(res.x);
        Eigen::VectorXd step;
        bool newton = false;
        if (!options.pure_gradient) {
            Eigen::LLT<Eigen::MatrixXd> llt(model.H);
            if (llt.info() == Eigen::Success) {
                step = -llt.solve(g);
                newton = true;
            }
        }
        if (!newton) {
            const Eigen::VectorXd gz = g.cwiseProduct(width);
            const double norm = gz.norm();
            if (!(norm > 0.0)) {
                res.converged = true;
                break;
            }
            step = -options.gradient_step * width.cwiseProduct(gz) / norm;
        }

        bool accepted = false;
        Eigen::VectorXd y;
        double t = 1.0;
        for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
            y = clamp(res.x + t * step);
            if ((y - res.x).norm() < options.step_tolerance * diag) {
                break;
            }
            auto [m2, v2] = surface(y);
            if (v2 < res.value) {
                model = std::move(m2);
                res.value = v2;
                accepted = true;
                break;
            }
        }
        ++res.iterations;
        if (!accepted) {
            res.converged = true;
            break;
        }
        const double moved = (y - res.x).norm();
        res.x = y;
        res.trail.push_back(y);
        if (moved < options.step_tolerance * diag) {
            res.converged = true;
            break;
        }
    }
    return res;
}

}  // namespace beamopt
