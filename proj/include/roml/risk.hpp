#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace roml {

/// ceil(x) that forgives floating-point noise just above an integer,
/// so that e.g. ceil(0.3 * 10) == 3.
inline std::size_t ceil_count(double x) {
    const double r = std::round(x);
    if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) return static_cast<std::size_t>(r);
    return static_cast<std::size_t>(std::ceil(x));
}

/// floor(x) with the same tolerance as ceil_count.
inline std::size_t floor_count(double x) {
    const double r = std::round(x);
    if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) return static_cast<std::size_t>(r);
    return static_cast<std::size_t>(std::floor(x));
}

/// Per-task and per-rollout returns of one batch, with importance weights.
struct ReturnBatch {
    std::vector<double> per_task;                  // R_i
    std::vector<std::vector<double>> per_rollout;  // R_{i,m}
    std::vector<double> weights;                   // w_i

    /// Builds R_i as the mean over each task's rollouts, weights default to 1.
    static ReturnBatch from_rollouts(std::vector<std::vector<double>> per_rollout);
};

/// Empirical lower-tail CVaR: mean of the ceil(alpha N) smallest values.
/// alpha must lie in (0, 1].
double cvar(std::span<const double> values, double alpha);

/// Order-statistic quantile: the ceil(p N)-th smallest value, p in (0, 1].
double quantile(std::span<const double> values, double p);

/// Smallest value v whose normalized cumulative weight (ascending order) is >= p.
double weighted_quantile(std::span<const double> values, std::span<const double> weights, double p);

/// Importance-weighted lower-tail mean: weighted mean of values <= weighted_quantile.
double weighted_cvar(std::span<const double> values, std::span<const double> weights, double alpha);

double mean(std::span<const double> values);

}  // namespace roml
