#include "roml/risk.hpp"

#include <algorithm>
#include <numeric>

#include "roml/taskdist.hpp"

namespace roml {

namespace {

void check_level(double p, const char* what) {
    if (!(p > 0.0 && p <= 1.0)) throw ParameterError(std::string(what) + " must lie in (0, 1]");
}

std::vector<double> sorted_copy(std::span<const double> values) {
    if (values.empty()) throw ParameterError("empty sample");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    return v;
}

std::size_t tail_count(double level, std::size_t n) { return std::clamp<std::size_t>(ceil_count(level * n), 1, n); }

}  // namespace

ReturnBatch ReturnBatch::from_rollouts(std::vector<std::vector<double>> per_rollout) {
    ReturnBatch b;
    b.per_task.reserve(per_rollout.size());
    for (const auto& r : per_rollout) b.per_task.push_back(mean(r));
    b.weights.assign(per_rollout.size(), 1.0);
    b.per_rollout = std::move(per_rollout);
    return b;
}

double mean(std::span<const double> values) {
    if (values.empty()) throw ParameterError("mean of empty sample");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double cvar(std::span<const double> values, double alpha) {
    check_level(alpha, "cvar alpha");
    const auto v = sorted_copy(values);
    const std::size_t k = tail_count(alpha, v.size());
    return std::accumulate(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), 0.0) / static_cast<double>(k);
}

double quantile(std::span<const double> values, double p) {
    check_level(p, "quantile level");
    const auto v = sorted_copy(values);
    return v[tail_count(p, v.size()) - 1];
}

double weighted_quantile(std::span<const double> values, std::span<const double> weights, double p) {
    check_level(p, "quantile level");
    if (values.size() != weights.size()) throw ParameterError("weighted_quantile: length mismatch");
    if (values.empty()) throw ParameterError("empty sample");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw ParameterError("weighted_quantile: negative weight");
        total += w;
    }
    if (!(total > 0.0)) throw ParameterError("weighted_quantile: weights sum to zero");

    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    const double target = p * total * (1.0 - 1e-9);
    double cum = 0.0;
    for (std::size_t idx : order) {
        cum += weights[idx];
        if (cum >= target && weights[idx] > 0.0) return values[idx];
    }
    return values[order.back()];
}

double weighted_cvar(std::span<const double> values, std::span<const double> weights, double alpha) {
    const double q = weighted_quantile(values, weights, alpha);
    double sw = 0.0, swv = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] <= q) {
            sw += weights[i];
            swv += weights[i] * values[i];
        }
    }
    return sw > 0.0 ? swv / sw : q;
}

}  // namespace roml
