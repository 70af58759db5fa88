#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "roml/cem.hpp"
#include "roml/learner.hpp"
#include "roml/metamdp.hpp"
#include "roml/risk.hpp"

namespace roml {

enum class Algorithm { Baseline, CvarML, RoML, NaiveSampler };

std::string algorithm_name(Algorithm a);
Algorithm parse_algorithm(const std::string& name);

struct TrainConfig {
    Algorithm algorithm = Algorithm::Baseline;
    double alpha = 0.05;
    double beta = 0.2;
    double nu = 0.0;
    std::size_t n_tasks = 16;
    std::size_t m_rollouts = 1;
    std::size_t iterations = 100;
    std::uint64_t seed = 0;
    std::size_t eval_every = 25;  // 0 disables evaluation during training
    std::size_t eval_tasks = 1000;
    std::size_t final_eval_tasks = 3000;
    std::optional<double> eval_alpha;  // defaults to alpha
    std::size_t naive_memory = 100;
    bool freeze_sampler = false;

    double risk_level() const { return eval_alpha.value_or(alpha); }
    void validate() const;
    nlohmann::json to_json() const;
};

struct EvalResult {
    double mean = 0.0;
    double cvar = 0.0;
    double hazard_rate = 0.0;  // share of episodes that visited a hazard cell
    std::vector<double> per_task_returns;
    std::vector<Task> tasks;
    std::vector<double> extra;  // problem-specific metrics, named by the problem
};

struct TrainRecord {
    std::size_t iteration = 0;
    std::size_t frames = 0;  // cumulative environment steps (or examples)
    double train_mean_return = 0.0;
    std::size_t n_trained = 0;  // samples passed to the learner
    double task_mean = 0.0;     // mean first task coordinate in the batch
    std::vector<double> sampler_params;
    bool evaluated = false;
    double eval_mean = std::numeric_limits<double>::quiet_NaN();
    double eval_cvar = std::numeric_limits<double>::quiet_NaN();
    double eval_hazard_rate = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> eval_extra;
    std::uint64_t policy_checksum = 0;
    double wall_seconds = 0.0;

    /// Equality over every field except wall time.
    bool same_learning_state(const TrainRecord& o) const;
};

struct TrainTrace {
    TrainConfig config;
    std::vector<TrainRecord> records;
    std::vector<std::string> extra_names;
    std::vector<CemUpdateReport> sampler;  // RoML only, one per iteration
    std::vector<Task> naive_memory;
    EvalResult final_eval;
    double wall_seconds = 0.0;

    /// First iteration whose evaluation CVaR reaches `threshold`, if any.
    std::optional<std::size_t> iterations_to_cvar(double threshold) const;
    bool same_learning_trajectory(const TrainTrace& o) const;
};

/// Random stream tags, shared by every algorithm so that reductions replay the
/// same draws.
enum StreamTag : std::uint64_t { kTaskStream = 1, kRolloutStream = 2, kEvalStream = 3, kFinalEvalStream = 4 };

/// The training loop shared by the RL and supervised tracks. A Problem provides:
///   TaskDistribution task_distribution() const;
///   Sample generate(const Task&, RandomStream&);
///   double score(const Sample&) const;          // higher is better
///   std::size_t frames(const Sample&) const;
///   void ml_step(std::span<const Sample>);
///   EvalResult evaluate(std::size_t n, double alpha, RandomStream rng) const;  // tasks from the original D
///   std::vector<std::string> extra_names() const;
///   std::uint64_t checksum() const;
template <class Problem>
TrainTrace run_meta_training(const TrainConfig& cfg, Problem& problem) {
    using Sample = typename Problem::Sample;
    using clock = std::chrono::steady_clock;
    cfg.validate();
    const auto start = clock::now();
    const RandomStream master(cfg.seed);
    const TaskDistribution original = problem.task_distribution();

    TrainTrace trace;
    trace.config = cfg;
    trace.extra_names = problem.extra_names();
    CemState cem = CemState::initial(original, cfg.alpha, cfg.beta, cfg.nu);
    const std::size_t memory_size = ceil_count(cfg.alpha * static_cast<double>(cfg.naive_memory));
    std::vector<std::pair<double, Task>> warmup;  // (score, task) of the first naive_memory tasks
    std::size_t tasks_seen = 0;
    std::size_t frames = 0;

    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        RandomStream task_rng = master.split({kTaskStream, it});
        std::vector<Task> tasks;
        std::vector<double> weights(cfg.n_tasks, 1.0);
        tasks.reserve(cfg.n_tasks);
        if (cfg.algorithm == Algorithm::RoML) {
            CemBatch batch = cem_sample_batch(cem, cfg.n_tasks, task_rng);
            tasks = std::move(batch.tasks);
            weights = std::move(batch.weights);
        } else if (cfg.algorithm == Algorithm::NaiveSampler && !trace.naive_memory.empty()) {
            for (std::size_t i = 0; i < cfg.n_tasks; ++i)
                tasks.push_back(trace.naive_memory[task_rng.index(trace.naive_memory.size())]);
        } else {
            for (std::size_t i = 0; i < cfg.n_tasks; ++i) tasks.push_back(original.sample_one(task_rng));
        }

        const std::size_t m = cfg.algorithm == Algorithm::CvarML ? cfg.m_rollouts : 1;
        std::vector<std::vector<Sample>> samples(cfg.n_tasks);
        std::vector<double> task_scores(cfg.n_tasks, 0.0);
        for (std::size_t i = 0; i < cfg.n_tasks; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                RandomStream rng = master.split({kRolloutStream, it, i, j});
                samples[i].push_back(problem.generate(tasks[i], rng));
                s += problem.score(samples[i].back());
                frames += problem.frames(samples[i].back());
            }
            task_scores[i] = s / static_cast<double>(m);
        }

        std::vector<Sample> train;
        if (cfg.algorithm == Algorithm::CvarML) {
            const double q = quantile(task_scores, cfg.alpha);
            for (std::size_t i = 0; i < cfg.n_tasks; ++i)
                if (task_scores[i] <= q)
                    for (auto& x : samples[i]) train.push_back(std::move(x));
        } else {
            for (auto& batch : samples)
                for (auto& x : batch) train.push_back(std::move(x));
        }
        problem.ml_step(std::span<const Sample>(train));

        TrainRecord rec;
        rec.iteration = it;
        rec.frames = frames;
        rec.train_mean_return = mean(task_scores);
        rec.n_trained = train.size();
        double tm = 0.0;
        for (const auto& t : tasks) tm += t.at(0);
        rec.task_mean = tm / static_cast<double>(tasks.size());
        rec.sampler_params = cem.phi.params();

        if (cfg.algorithm == Algorithm::RoML) {
            CemUpdate upd = cem_update(cem, tasks, weights, task_scores);
            trace.sampler.push_back(upd.report);
            if (!cfg.freeze_sampler) cem = std::move(upd.state);
        }
        if (cfg.algorithm == Algorithm::NaiveSampler && trace.naive_memory.empty()) {
            for (std::size_t i = 0; i < cfg.n_tasks && tasks_seen < cfg.naive_memory; ++i, ++tasks_seen)
                warmup.emplace_back(task_scores[i], tasks[i]);
            if (tasks_seen >= cfg.naive_memory) {
                std::stable_sort(warmup.begin(), warmup.end(),
                                 [](const auto& a, const auto& b) { return a.first < b.first; });
                for (std::size_t i = 0; i < memory_size; ++i) trace.naive_memory.push_back(warmup[i].second);
            }
        }

        if (cfg.eval_every > 0 && ((it + 1) % cfg.eval_every == 0 || it + 1 == cfg.iterations)) {
            const EvalResult ev = problem.evaluate(cfg.eval_tasks, cfg.risk_level(), master.split({kEvalStream, it}));
            rec.evaluated = true;
            rec.eval_mean = ev.mean;
            rec.eval_cvar = ev.cvar;
            rec.eval_hazard_rate = ev.hazard_rate;
            rec.eval_extra = ev.extra;
        }
        rec.policy_checksum = problem.checksum();
        rec.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
        trace.records.push_back(std::move(rec));
    }
    if (cfg.final_eval_tasks > 0)
        trace.final_eval = problem.evaluate(cfg.final_eval_tasks, cfg.risk_level(), master.split({kFinalEvalStream}));
    trace.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
    return trace;
}

/// Evaluation on fresh tasks from the environment's original distribution, one
/// meta-rollout each.
EvalResult evaluate(const Policy& policy, const MetaMdp& env, std::size_t n_tasks, double alpha, RandomStream rng);

/// Adapter running the shared loop on a meta-MDP with a meta-learner.
class RlProblem {
public:
    using Sample = MetaRollout;

    RlProblem(const MetaMdp& env, MetaLearner& learner) : env_(env), learner_(learner) {}

    TaskDistribution task_distribution() const { return env_.task_distribution(); }
    Sample generate(const Task& task, RandomStream& rng) const { return rollout(env_, task, learner_.policy(), rng); }
    double score(const Sample& s) const { return s.ret; }
    std::size_t frames(const Sample& s) const { return s.frames(); }
    void ml_step(std::span<const Sample> batch) { learner_.ml_step(batch); }
    EvalResult evaluate(std::size_t n, double alpha, RandomStream rng) const {
        return roml::evaluate(learner_.policy(), env_, n, alpha, rng);
    }
    std::vector<std::string> extra_names() const { return {}; }
    std::uint64_t checksum() const { return learner_.policy().checksum(); }

private:
    const MetaMdp& env_;
    MetaLearner& learner_;
};

TrainTrace run_baseline(TrainConfig cfg, const MetaMdp& env, MetaLearner& learner);
TrainTrace run_cvar_ml(TrainConfig cfg, const MetaMdp& env, MetaLearner& learner);
TrainTrace run_roml(TrainConfig cfg, const MetaMdp& env, MetaLearner& learner);
TrainTrace run_naive_sampler(TrainConfig cfg, const MetaMdp& env, MetaLearner& learner);
/// Dispatches on cfg.algorithm.
TrainTrace run_training(const TrainConfig& cfg, const MetaMdp& env, MetaLearner& learner);

/// Monte-Carlo check of the variance-reduction relations for a frozen policy.
/// Task values are estimated on a pool of tasks; the tail is the alpha share of
/// the pool with the lowest estimates.
struct VarianceReport {
    double alpha = 1.0;
    std::vector<double> mean_original;  // E_D[G]
    std::vector<double> mean_tail;      // E_{D_alpha}[alpha G]
    double max_mean_gap = 0.0;
    double mean_gap_halfwidth = 0.0;    // 95% CI half-width on the largest coordinate gap
    double var_original = 0.0;          // trace Var_D(G)
    double var_tail = 0.0;              // trace Var_{D_alpha}(alpha G)
    double var_ratio = 0.0;             // var_tail / var_original
    double var_ratio_halfwidth = 0.0;
};

VarianceReport variance_harness(const Policy& policy, const MetaMdp& env, double alpha, std::size_t n_batches,
                                std::size_t pool_size, std::size_t value_rollouts, RandomStream rng);

}  // namespace roml
