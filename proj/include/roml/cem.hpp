#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "roml/random.hpp"
#include "roml/taskdist.hpp"

namespace roml {

/// Sampler state of the dynamic-target cross-entropy method used by RoML.
/// Immutable value: cem_update returns a new state.
struct CemState {
    TaskDistribution phi0;  // original task distribution, frozen
    TaskDistribution phi;   // current sampler
    double alpha = 0.05;    // target risk level
    double beta = 0.2;      // CEM quantile
    double nu = 0.0;        // fraction of every batch drawn from phi0
    double reference_quantile_estimate = 0.0;
    std::size_t empty_selections = 0;  // updates skipped because nothing was selected

    /// Starts at phi = phi0. nu may be 1 only for sampler tests.
    static CemState initial(const TaskDistribution& phi0, double alpha, double beta, double nu);
};

struct CemBatch {
    std::vector<Task> tasks;
    std::vector<double> weights;      // D_phi0(z) / D_phi(z), 1 for phi0 draws
    std::vector<bool> from_original;  // true for the floor(nu n) phi0 draws
};

/// floor(nu n) draws from phi0 followed by n - floor(nu n) draws from phi.
CemBatch cem_sample_batch(const CemState& state, std::size_t n, RandomStream& rng);

/// Diagnostics of one sampler update; one CSV row per iteration.
struct CemUpdateReport {
    double q_alpha_hat = 0.0;  // weighted alpha-quantile, reference distribution
    double q_beta = 0.0;       // unweighted beta-quantile of the batch
    double q = 0.0;            // max of the two
    std::size_t n_selected = 0;
    double mean_sample_return = 0.0;
    double mean_reference_return = 0.0;  // importance-weighted mean
    double cvar_reference_return = 0.0;  // importance-weighted lower-tail mean
    bool updated = false;
};

struct CemUpdate {
    CemState state;
    CemUpdateReport report;
};

/// Selects {i : R_i <= max(q_alpha_hat, q_beta)} and refits phi on the
/// selected (task, weight) pairs. An empty selection leaves phi unchanged.
CemUpdate cem_update(const CemState& state, std::span<const Task> tasks, std::span<const double> weights,
                     std::span<const double> returns);

/// One iteration of the static tail sampler.
struct StaticCemIteration {
    TaskDistribution phi;          // distribution the batch was drawn from
    std::vector<Task> tasks;
    std::vector<double> weights;
    std::vector<double> scores;
    double threshold = 0.0;        // max(q, q_beta)
    std::size_t n_selected = 0;
    double fraction_below_target = 0.0;  // share of the batch with score <= q
};

using ScoreFn = std::function<double(const Task&)>;

/// Static cross-entropy tail sampler: repeatedly samples from phi and refits
/// phi toward {z : score(z) <= max(q, q_beta)}.
std::vector<StaticCemIteration> static_cem_run(const TaskDistribution& phi0, const ScoreFn& score, double target_level,
                                               std::size_t n, double beta, std::size_t iterations, RandomStream& rng);

}  // namespace roml
