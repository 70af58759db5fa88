#include "roml/cem.hpp"

#include <algorithm>

#include "roml/risk.hpp"

namespace roml {

CemState CemState::initial(const TaskDistribution& phi0, double alpha, double beta, double nu) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ParameterError("cem alpha must lie in (0, 1]");
    if (!(beta > 0.0 && beta <= 1.0)) throw ParameterError("cem beta must lie in (0, 1]");
    if (!(nu >= 0.0 && nu <= 1.0)) throw ParameterError("cem nu must lie in [0, 1]");
    CemState s{phi0, phi0, alpha, beta, nu, 0.0, 0};
    return s;
}

CemBatch cem_sample_batch(const CemState& state, std::size_t n, RandomStream& rng) {
    if (n == 0) throw ParameterError("cem batch size must be >= 1");
    const std::size_t n_original = std::min(n, floor_count(state.nu * static_cast<double>(n)));
    const std::size_t n_sampler = n - n_original;

    CemBatch batch;
    batch.tasks.reserve(n);
    batch.weights.reserve(n);
    batch.from_original.reserve(n);
    for (std::size_t i = 0; i < n_original; ++i) {
        batch.tasks.push_back(state.phi0.sample_one(rng));
        batch.weights.push_back(1.0);
        batch.from_original.push_back(true);
    }
    for (std::size_t i = 0; i < n_sampler; ++i) {
        Task z = state.phi.sample_one(rng);
        batch.weights.push_back(importance_weight(state.phi0, state.phi, z));
        batch.tasks.push_back(std::move(z));
        batch.from_original.push_back(false);
    }
    return batch;
}

CemUpdate cem_update(const CemState& state, std::span<const Task> tasks, std::span<const double> weights,
                     std::span<const double> returns) {
    if (tasks.size() != weights.size() || tasks.size() != returns.size())
        throw ParameterError("cem_update: tasks, weights and returns differ in length");
    if (tasks.empty()) throw ParameterError("cem_update: empty batch");

    CemUpdateReport report;
    report.q_alpha_hat = weighted_quantile(returns, weights, state.alpha);
    report.q_beta = quantile(returns, state.beta);
    report.q = std::max(report.q_alpha_hat, report.q_beta);
    report.mean_sample_return = mean(returns);
    double sw = 0.0, swr = 0.0;
    for (std::size_t i = 0; i < returns.size(); ++i) {
        sw += weights[i];
        swr += weights[i] * returns[i];
    }
    report.mean_reference_return = swr / sw;
    report.cvar_reference_return = weighted_cvar(returns, weights, state.alpha);

    std::vector<Task> selected;
    std::vector<double> selected_weights;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (returns[i] <= report.q) {
            selected.push_back(tasks[i]);
            selected_weights.push_back(weights[i]);
        }
    }
    report.n_selected = selected.size();

    CemState next = state;
    next.reference_quantile_estimate = report.q_alpha_hat;
    auto refit = ce_update(state.phi, selected, selected_weights);
    if (refit) {
        next.phi = std::move(*refit);
        report.updated = true;
    } else {
        ++next.empty_selections;
    }
    return {std::move(next), report};
}

std::vector<StaticCemIteration> static_cem_run(const TaskDistribution& phi0, const ScoreFn& score, double target_level,
                                               std::size_t n, double beta, std::size_t iterations, RandomStream& rng) {
    if (iterations == 0) throw ParameterError("static_cem_run needs at least one iteration");
    if (n == 0) throw ParameterError("static_cem_run needs a positive batch size");
    std::vector<StaticCemIteration> trace;
    trace.reserve(iterations);
    TaskDistribution phi = phi0;
    for (std::size_t it = 0; it < iterations; ++it) {
        StaticCemIteration rec{phi, phi.sample(rng, n), {}, {}, 0.0, 0, 0.0};
        rec.weights.reserve(n);
        rec.scores.reserve(n);
        std::size_t below = 0;
        for (const auto& z : rec.tasks) {
            rec.weights.push_back(importance_weight(phi0, phi, z));
            rec.scores.push_back(score(z));
            if (rec.scores.back() <= target_level) ++below;
        }
        rec.fraction_below_target = static_cast<double>(below) / static_cast<double>(n);
        rec.threshold = std::max(target_level, quantile(rec.scores, beta));

        std::vector<Task> selected;
        std::vector<double> selected_weights;
        for (std::size_t i = 0; i < n; ++i) {
            if (rec.scores[i] <= rec.threshold) {
                selected.push_back(rec.tasks[i]);
                selected_weights.push_back(rec.weights[i]);
            }
        }
        rec.n_selected = selected.size();
        if (auto refit = ce_update(phi, selected, selected_weights)) phi = std::move(*refit);
        trace.push_back(std::move(rec));
    }
    return trace;
}

}  // namespace roml
