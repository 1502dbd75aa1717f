#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace beamopt {

using Rng = std::mt19937_64;

struct Box {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    int dimension() const { return static_cast<int>(lower.size()); }
    Eigen::VectorXd width() const { return upper - lower; }
    Eigen::VectorXd clamp(const Eigen::VectorXd& x) const { return x.cwiseMax(lower).cwiseMin(upper); }
    bool contains(const Eigen::VectorXd& x) const;
    Eigen::VectorXd sample(Rng& rng) const;

    /// Throws std::invalid_argument when lo >= hi for some component.
    void validate() const;
};

struct Chromosome {
    Eigen::VectorXd x;
    double fitness = std::numeric_limits<double>::infinity();
};

/// x + mr (rp - x).
Eigen::VectorXd mutate_toward(const Eigen::VectorXd& x, const Eigen::VectorXd& rp, double mr);

/// mutate_toward a random point drawn uniformly from the box.
Eigen::VectorXd mutate(const Eigen::VectorXd& x, const Box& box, double mr, Rng& rng);

/// Each component moved by U(-range_i, range_i), then clamped.
Eigen::VectorXd local_mutate(const Eigen::VectorXd& x, const Eigen::VectorXd& range, const Box& box, Rng& rng);

/// x_p + cr (x_q - x_r), clamped.
Eigen::VectorXd cross_sade(const Eigen::VectorXd& xp, const Eigen::VectorXd& xq, const Eigen::VectorXd& xr,
                           double cr, const Box& box);

/// Step from the better parent along (better - worse) scaled by cr, clamped.
Eigen::VectorXd cross_grade(const Chromosome& q, const Chromosome& r, double cr, const Box& box);

/// As above with cr drawn from U(0, cl).
Eigen::VectorXd cross_grade(const Chromosome& q, const Chromosome& r, double cl, const Box& box, Rng& rng);

/// Random pairwise tournaments, casting off the worse, until `nominal`
/// members remain.
void tournament_reduce(std::vector<Chromosome>& population, std::size_t nominal, Rng& rng);

enum class Algorithm {
    sade,
    grade,
};

struct GaSettings {
    Algorithm algorithm = Algorithm::grade;
    int pool_rate = 10;
    double mr = 0.5;             // SADE mutation rate; GRADE draws U(0, 1)
    double cr = 0.3;             // SADE cross rate
    double cl = 1.0;             // GRADE cross limit
    double radioactivity = -1;   // < 0: 0.1 for SADE, 0.2 for GRADE
    double local_range = 0.0025; // SADE local mutation, fraction of box width
    double target = -std::numeric_limits<double>::infinity();
    long max_calls = 100000;
    double spread_tolerance = 0.0;  // > 0: stop when max - min fitness <= tol
    std::uint64_t seed = 1;

    double effective_radioactivity() const;
    void validate() const;

    bool operator==(const GaSettings&) const = default;
};

struct GaHistoryRow {
    int generation = 0;
    long calls = 0;
    double best = 0.0;
    double mean = 0.0;
    Eigen::VectorXd best_x;
};

struct GaResult {
    Chromosome best;
    long calls = 0;
    int generations = 0;
    bool reached_target = false;
    bool converged_spread = false;
    bool budget_exhausted = false;
    std::vector<GaHistoryRow> history;
    std::vector<Chromosome> population;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

/// Minimize `objective` over `box`. Offspring are evaluated in creation
/// order and the run stops at the first value <= target, so `calls` is
/// exact. Deterministic for a given seed.
GaResult evolve(const Objective& objective, const Box& box, const GaSettings& settings);

void write_history_csv(const std::vector<GaHistoryRow>& history, const std::string& path);

}  // namespace beamopt
