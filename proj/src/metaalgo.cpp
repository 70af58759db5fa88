#include "roml/metaalgo.hpp"

#include <algorithm>
#include <cmath>

namespace roml {

std::string algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::Baseline: return "baseline";
        case Algorithm::CvarML: return "cvar_ml";
        case Algorithm::RoML: return "roml";
        case Algorithm::NaiveSampler: return "naive_sampler";
    }
    return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
    if (name == "baseline") return Algorithm::Baseline;
    if (name == "cvar_ml") return Algorithm::CvarML;
    if (name == "roml") return Algorithm::RoML;
    if (name == "naive_sampler") return Algorithm::NaiveSampler;
    throw ParameterError("unknown algorithm '" + name + "'");
}

void TrainConfig::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ParameterError("alpha must lie in (0, 1]");
    if (!(beta > 0.0 && beta < 1.0)) throw ParameterError("beta must lie in (0, 1)");
    if (!(nu >= 0.0 && nu < 1.0)) throw ParameterError("nu must lie in [0, 1)");
    if (n_tasks == 0) throw ParameterError("n_tasks must be >= 1");
    if (m_rollouts == 0) throw ParameterError("m_rollouts must be >= 1");
    if (eval_alpha && !(*eval_alpha > 0.0 && *eval_alpha <= 1.0)) throw ParameterError("eval_alpha must lie in (0, 1]");
    if (algorithm == Algorithm::NaiveSampler && alpha * static_cast<double>(naive_memory) < 1.0 - 1e-9)
        throw ParameterError("naive sampler needs alpha * naive_memory >= 1");
}

nlohmann::json TrainConfig::to_json() const {
    return {{"algorithm", algorithm_name(algorithm)},
            {"alpha", alpha},
            {"beta", beta},
            {"nu", nu},
            {"n_tasks", n_tasks},
            {"m_rollouts", m_rollouts},
            {"iterations", iterations},
            {"seed", seed},
            {"eval_every", eval_every},
            {"eval_tasks", eval_tasks},
            {"final_eval_tasks", final_eval_tasks},
            {"eval_alpha", risk_level()},
            {"naive_memory", naive_memory},
            {"freeze_sampler", freeze_sampler}};
}

namespace {

bool same_double(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

bool same_vector(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!same_double(a[i], b[i])) return false;
    return true;
}

}  // namespace

bool TrainRecord::same_learning_state(const TrainRecord& o) const {
    return iteration == o.iteration && frames == o.frames && same_double(train_mean_return, o.train_mean_return) &&
           n_trained == o.n_trained && same_double(task_mean, o.task_mean) &&
           same_vector(sampler_params, o.sampler_params) && evaluated == o.evaluated &&
           same_double(eval_mean, o.eval_mean) && same_double(eval_cvar, o.eval_cvar) &&
           same_double(eval_hazard_rate, o.eval_hazard_rate) && same_vector(eval_extra, o.eval_extra) &&
           policy_checksum == o.policy_checksum;
}

std::optional<std::size_t> TrainTrace::iterations_to_cvar(double threshold) const {
    for (const auto& r : records)
        if (r.evaluated && r.eval_cvar >= threshold) return r.iteration + 1;
    return std::nullopt;
}

bool TrainTrace::same_learning_trajectory(const TrainTrace& o) const {
    if (records.size() != o.records.size()) return false;
    for (std::size_t i = 0; i < records.size(); ++i)
        if (!records[i].same_learning_state(o.records[i])) return false;
    return same_vector(final_eval.per_task_returns, o.final_eval.per_task_returns);
}

EvalResult evaluate(const Policy& policy, const MetaMdp& env, std::size_t n_tasks, double alpha, RandomStream rng) {
    if (n_tasks == 0) throw ParameterError("evaluation needs at least one task");
    const TaskDistribution dist = env.task_distribution();
    EvalResult res;
    res.tasks.reserve(n_tasks);
    res.per_task_returns.reserve(n_tasks);
    std::size_t hazard = 0;
    for (std::size_t i = 0; i < n_tasks; ++i) {
        res.tasks.push_back(dist.sample_one(rng));
        RandomStream r = rng.split({i});
        const MetaRollout ro = rollout(env, res.tasks.back(), policy, r);
        res.per_task_returns.push_back(ro.ret);
        hazard += ro.hazard_episodes();
    }
    res.mean = mean(res.per_task_returns);
    res.cvar = cvar(res.per_task_returns, alpha);
    res.hazard_rate = static_cast<double>(hazard) / static_cast<double>(n_tasks * static_cast<std::size_t>(env.episodes()));
    return res;
}

namespace {

TrainTrace run_as(TrainConfig cfg, Algorithm a, const MetaMdp& env, MetaLearner& learner) {
    cfg.algorithm = a;
    RlProblem problem(env, learner);
    return run_meta_training(cfg, problem);
}

}  // namespace

TrainTrace run_baseline(TrainConfig cfg, const MetaMdp& env, MetaLearner& learner) {
    return run_as(std::move(cfg), Algorithm::Baseline, env, learner);
}
TrainTrace run_cvar_ml(TrainConfig cfg, const MetaMdp& env, MetaLearner& learner) {
    return run_as(std::move(cfg), Algorithm::CvarML, env, learner);
}
TrainTrace run_roml(TrainConfig cfg, const MetaMdp& env, MetaLearner& learner) {
    return run_as(std::move(cfg), Algorithm::RoML, env, learner);
}
TrainTrace run_naive_sampler(TrainConfig cfg, const MetaMdp& env, MetaLearner& learner) {
    return run_as(std::move(cfg), Algorithm::NaiveSampler, env, learner);
}
TrainTrace run_training(const TrainConfig& cfg, const MetaMdp& env, MetaLearner& learner) {
    return run_as(cfg, cfg.algorithm, env, learner);
}

VarianceReport variance_harness(const Policy& policy, const MetaMdp& env, double alpha, std::size_t n_batches,
                                std::size_t pool_size, std::size_t value_rollouts, RandomStream rng) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ParameterError("alpha must lie in (0, 1]");
    if (n_batches < 2 || pool_size == 0 || value_rollouts == 0)
        throw ParameterError("variance harness needs n_batches >= 2, a pool and value rollouts");
    const TaskDistribution dist = env.task_distribution();
    std::vector<Task> pool;
    std::vector<double> values;
    for (std::size_t i = 0; i < pool_size; ++i) {
        pool.push_back(dist.sample_one(rng));
        double s = 0.0;
        for (std::size_t m = 0; m < value_rollouts; ++m) {
            RandomStream r = rng.split({1, i, m});
            s += rollout(env, pool.back(), policy, r).ret;
        }
        values.push_back(s / static_cast<double>(value_rollouts));
    }
    // Tail: the ceil(alpha * pool) lowest estimates, ties broken by index.
    std::vector<std::size_t> order(pool_size);
    for (std::size_t i = 0; i < pool_size; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t k = std::clamp<std::size_t>(ceil_count(alpha * static_cast<double>(pool_size)), 1, pool_size);
    std::vector<bool> in_tail(pool_size, false);
    for (std::size_t i = 0; i < k; ++i) in_tail[order[i]] = true;
    const double a_eff = static_cast<double>(k) / static_cast<double>(pool_size);
    const double b = mean(values);

    const std::size_t d = policy.num_params();
    std::vector<double> sum_o(d, 0.0), sum_t(d, 0.0), sq_o(d, 0.0), sq_t(d, 0.0);
    std::vector<std::vector<double>> draws_o, draws_t;
    for (std::size_t j = 0; j < n_batches; ++j) {
        const std::size_t io = rng.index(pool_size);
        RandomStream ro = rng.split({2, j});
        const MetaRollout x = rollout(env, pool[io], policy, ro);
        std::vector<double> g(d, 0.0);
        if (in_tail[io]) {
            const Vector s = score_function(policy, x);
            for (std::size_t c = 0; c < d; ++c) g[c] = (x.ret - b) * s[c] / a_eff;
        }
        const std::size_t it = order[rng.index(k)];
        RandomStream rt = rng.split({3, j});
        const MetaRollout y = rollout(env, pool[it], policy, rt);
        const Vector st = score_function(policy, y);
        std::vector<double> h(d);
        for (std::size_t c = 0; c < d; ++c) h[c] = (y.ret - b) * st[c];
        draws_o.push_back(std::move(g));
        draws_t.push_back(std::move(h));
    }
    const double n = static_cast<double>(n_batches);
    for (std::size_t j = 0; j < n_batches; ++j)
        for (std::size_t c = 0; c < d; ++c) {
            sum_o[c] += draws_o[j][c];
            sum_t[c] += draws_t[j][c];
        }
    VarianceReport rep;
    rep.alpha = a_eff;
    rep.mean_original.resize(d);
    rep.mean_tail.resize(d);
    for (std::size_t c = 0; c < d; ++c) {
        rep.mean_original[c] = sum_o[c] / n;
        rep.mean_tail[c] = sum_t[c] / n;
    }
    std::vector<double> dev_o(n_batches, 0.0), dev_t(n_batches, 0.0);
    for (std::size_t j = 0; j < n_batches; ++j)
        for (std::size_t c = 0; c < d; ++c) {
            const double eo = draws_o[j][c] - rep.mean_original[c];
            const double et = draws_t[j][c] - rep.mean_tail[c];
            sq_o[c] += eo * eo;
            sq_t[c] += et * et;
            dev_o[j] += eo * eo;
            dev_t[j] += et * et;
        }
    std::size_t worst = 0;
    for (std::size_t c = 0; c < d; ++c) {
        const double gap = std::abs(rep.mean_original[c] - rep.mean_tail[c]);
        if (gap >= rep.max_mean_gap) {
            rep.max_mean_gap = gap;
            worst = c;
        }
        rep.var_original += sq_o[c] / (n - 1.0);
        rep.var_tail += sq_t[c] / (n - 1.0);
    }
    if (d > 0)
        rep.mean_gap_halfwidth = 1.96 * std::sqrt(sq_o[worst] / (n - 1.0) / n + sq_t[worst] / (n - 1.0) / n);
    rep.var_ratio = rep.var_original > 0.0 ? rep.var_tail / rep.var_original : 0.0;
    auto se_of_mean = [&](const std::vector<double>& v) {
        const double m = mean(v);
        double s = 0.0;
        for (double x : v) s += (x - m) * (x - m);
        return std::sqrt(s / (n - 1.0) / n);
    };
    if (rep.var_original > 0.0 && rep.var_tail > 0.0) {
        const double ro = se_of_mean(dev_o) / rep.var_original;
        const double rt = se_of_mean(dev_t) / rep.var_tail;
        rep.var_ratio_halfwidth = 1.96 * rep.var_ratio * std::sqrt(ro * ro + rt * rt);
    }
    return rep;
}

}  // namespace roml
