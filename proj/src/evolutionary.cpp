#include "beamopt/evolutionary.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

namespace beamopt {

bool Box::contains(const Eigen::VectorXd& x) const
{
    return x.size() == lower.size() && (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
}

Eigen::VectorXd Box::sample(Rng& rng) const
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::VectorXd x(dimension());
    for (int i = 0; i < dimension(); ++i) {
        x[i] = lower[i] + u(rng) * (upper[i] - lower[i]);
    }
    return x;
}

void Box::validate() const
{
    if (lower.size() != upper.size() || lower.size() == 0) {
        throw std::invalid_argument("box: bounds differ in size or are empty");
    }
    for (int i = 0; i < dimension(); ++i) {
        if (!(lower[i] < upper[i])) {
            throw std::invalid_argument("box: empty interval for variable " + std::to_string(i));
        }
    }
}

Eigen::VectorXd mutate_toward(const Eigen::VectorXd& x, const Eigen::VectorXd& rp, double mr)
{
    return x + mr * (rp - x);
}

Eigen::VectorXd mutate(const Eigen::VectorXd& x, const Box& box, double mr, Rng& rng)
{
    return mutate_toward(x, box.sample(rng), mr);
}

Eigen::VectorXd local_mutate(const Eigen::VectorXd& x, const Eigen::VectorXd& range, const Box& box, Rng& rng)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::VectorXd y = x;
    for (int i = 0; i < x.size(); ++i) {
        y[i] += range[i] * u(rng);
    }
    return box.clamp(y);
}

Eigen::VectorXd cross_sade(const Eigen::VectorXd& xp, const Eigen::VectorXd& xq, const Eigen::VectorXd& xr,
                           double cr, const Box& box)
{
    return box.clamp(xp + cr * (xq - xr));
}

Eigen::VectorXd cross_grade(const Chromosome& q, const Chromosome& r, double cr, const Box& box)
{
    const bool q_better = q.fitness <= r.fitness;
    const Chromosome& better = q_better ? q : r;
    const double sg = q_better ? 1.0 : -1.0;
    return box.clamp(better.x + sg * cr * (q.x - r.x));
}

Eigen::VectorXd cross_grade(const Chromosome& q, const Chromosome& r, double cl, const Box& box, Rng& rng)
{
    std::uniform_real_distribution<double> u(0.0, cl);
    return cross_grade(q, r, u(rng), box);
}

void tournament_reduce(std::vector<Chromosome>& population, std::size_t nominal, Rng& rng)
{
    while (population.size() > nominal) {
        std::uniform_int_distribution<std::size_t> pick(0, population.size() - 1);
        const std::size_t a = pick(rng);
        std::size_t b = pick(rng);
        while (b == a) {
            b = pick(rng);
        }
        // ties cast off the later index, so the best is never removed
        const bool a_worse = population[a].fitness > population[b].fitness ||
                             (population[a].fitness == population[b].fitness && a > b);
        const std::size_t loser = a_worse ? a : b;
        population[loser] = std::move(population.back());
        population.pop_back();
    }
}

double GaSettings::effective_radioactivity() const
{
    if (radioactivity >= 0.0) {
        return radioactivity;
    }
    return algorithm == Algorithm::sade ? 0.1 : 0.2;
}

void GaSettings::validate() const
{
    if (pool_rate < 2) {
        throw std::invalid_argument("ga: pool rate must be at least 2");
    }
    if (effective_radioactivity() > 1.0) {
        throw std::invalid_argument("ga: radioactivity must lie in [0, 1]");
    }
    if (!(cl > 0.0)) {
        throw std::invalid_argument("ga: CL must be positive");
    }
    if (max_calls < 1) {
        throw std::invalid_argument("ga: call budget must be positive");
    }
}

GaResult evolve(const Objective& objective, const Box& box, const GaSettings& settings)
{
    box.validate();
    settings.validate();
    const int n = box.dimension();
    const std::size_t pop_size = static_cast<std::size_t>(settings.pool_rate) * n;
    const int mutations = static_cast<int>(std::lround(settings.effective_radioactivity() * pop_size));
    const Eigen::VectorXd local_range = settings.local_range * box.width();
    Rng rng(settings.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    GaResult res;
    const auto evaluate = [&](const Eigen::VectorXd& x) {
        Chromosome c{x, objective(x)};
        ++res.calls;
        if (std::isnan(c.fitness)) {
            c.fitness = std::numeric_limits<double>::infinity();
        }
        if (c.fitness < res.best.fitness || res.calls == 1) {
            res.best = c;
        }
        if (c.fitness <= settings.target) {
            res.reached_target = true;
        }
        return c;
    };
    const auto record = [&](const std::vector<Chromosome>& pop) {
        double sum = 0.0;
        for (const auto& c : pop) {
            sum += c.fitness;
        }
        res.history.push_back({res.generations, res.calls, res.best.fitness, sum / pop.size(), res.best.x});
    };

    std::vector<Chromosome> pop;
    pop.reserve(3 * pop_size);
    for (std::size_t i = 0; i < pop_size && !res.reached_target && res.calls < settings.max_calls; ++i) {
        pop.push_back(evaluate(box.sample(rng)));
    }
    record(pop);

    while (!res.reached_target) {
        if (res.calls >= settings.max_calls) {
            res.budget_exhausted = true;
            break;
        }
        if (settings.spread_tolerance > 0.0) {
            const auto [lo, hi] = std::minmax_element(pop.begin(), pop.end(), [](const auto& a, const auto& b) {
                return a.fitness < b.fitness;
            });
            if (hi->fitness - lo->fitness <= settings.spread_tolerance) {
                res.converged_spread = true;
                break;
            }
        }
        ++res.generations;

        // all draws for the generation happen before any evaluation
        std::vector<Eigen::VectorXd> offspring;
        std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);
        for (int k = 0; k < mutations; ++k) {
            const double mr = settings.algorithm == Algorithm::grade ? unit(rng) : settings.mr;
            offspring.push_back(mutate(pop[pick(rng)].x, box, mr, rng));
        }
        if (settings.algorithm == Algorithm::sade) {
            for (int k = 0; k < mutations; ++k) {
                offspring.push_back(local_mutate(pop[pick(rng)].x, local_range, box, rng));
            }
        }
        for (std::size_t k = 0; k < pop_size; ++k) {
            const std::size_t q = pick(rng);
            std::size_t r = pick(rng);
            while (r == q) {
                r = pick(rng);
            }
            if (settings.algorithm == Algorithm::sade) {
                std::size_t p = pick(rng);
                while (p == q || p == r) {
                    p = pick(rng);
                }
                offspring.push_back(cross_sade(pop[p].x, pop[q].x, pop[r].x, settings.cr, box));
            } else {
                offspring.push_back(cross_grade(pop[q], pop[r], settings.cl, box, rng));
            }
        }

        for (const auto& x : offspring) {
            if (res.calls >= settings.max_calls) {
                break;
            }
            pop.push_back(evaluate(x));
            if (res.reached_target) {
                break;
            }
        }
        tournament_reduce(pop, pop_size, rng);
        record(pop);
    }
    res.population = std::move(pop);
    return res;
}

void write_history_csv(const std::vector<GaHistoryRow>& history, const std::string& path)
{
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    const int n = history.empty() ? 0 : static_cast<int>(history.front().best_x.size());
    out << "generation,calls,best_J,mean_J";
    for (int i = 0; i < n; ++i) {
        out << ",best_x" << (i + 1);
    }
    out << '\n';
    char buf[64];
    for (const auto& row : history) {
        out << row.generation << ',' << row.calls;
        std::snprintf(buf, sizeof buf, ",%.17g,%.17g", row.best, row.mean);
        out << buf;
        for (int i = 0; i < row.best_x.size(); ++i) {
            std::snprintf(buf, sizeof buf, ",%.17g", row.best_x[i]);
            out << buf;
        }
        out << '\n';
    }
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

}  // namespace beamopt
