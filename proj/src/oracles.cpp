#include "roml/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "roml/learner.hpp"
#include "roml/metamdp.hpp"
#include "roml/random.hpp"
#include "roml/risk.hpp"

namespace roml {

// ---------------------------------------------------------------- reports

OracleReport OracleReport::compare(std::string name, std::vector<double> oracle, std::vector<double> estimate,
                                   double abs_tol, double rel_tol, Check check) {
    OracleReport r;
    r.check = check;
    r.name = std::move(name);
    r.oracle = std::move(oracle);
    r.estimate = std::move(estimate);
    r.abs_tol = abs_tol;
    r.rel_tol = rel_tol;
    r.recompute();
    return r;
}

void OracleReport::recompute() {
    if (oracle.size() != estimate.size()) throw ParameterError("oracle report: vector sizes differ");
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < oracle.size(); ++i) {
        diff = std::max(diff, std::abs(estimate[i] - oracle[i]));
        scale = std::max(scale, std::abs(oracle[i]));
    }
    abs_error = diff;
    rel_error = scale > 0.0 ? diff / scale : diff;
    const bool within = abs_error <= abs_tol || rel_error <= rel_tol;
    switch (check) {
        case Check::Match: pass = within; break;
        case Check::Mismatch: pass = !within; break;
        case Check::AtMost:
            pass = true;
            for (std::size_t i = 0; i < oracle.size(); ++i) pass = pass && estimate[i] <= oracle[i] + abs_tol;
            break;
    }
}

nlohmann::json OracleReport::to_json() const {
    return {{"name", name},       {"oracle", oracle},   {"estimate", estimate}, {"abs_error", abs_error},
            {"rel_error", rel_error}, {"abs_tol", abs_tol}, {"rel_tol", rel_tol},   {"check", check == Check::Match ? "match" : check == Check::Mismatch ? "mismatch" : "at_most"},
            {"pass", pass}};
}

// ---------------------------------------------------------------- finite differences

namespace {

double central(const std::function<double(std::span<const double>)>& f, std::vector<double>& x, std::size_t i,
               double h) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double up = f(x);
    x[i] = x0 - h;
    const double down = f(x);
    x[i] = x0;
    return (up - down) / (2.0 * h);
}

}  // namespace

std::vector<double> fd_gradient(const std::function<double(std::span<const double>)>& objective,
                                std::span<const double> params, double step) {
    if (!(step > 0.0)) throw ParameterError("finite-difference step must be positive");
    std::vector<double> x(params.begin(), params.end());
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = central(objective, x, i, step);
        const double coarse = central(objective, x, i, 10.0 * step);
        // Truncation error of the coarse estimate is 100x that of d.
        if (std::abs(coarse - d) <= 1e-6 * std::max(1.0, std::abs(d))) {
            g[i] = d;
            continue;
        }
        const double fine = central(objective, x, i, 0.1 * step);
        g[i] = (100.0 * fine - d) / 99.0;
    }
    return g;
}

// ---------------------------------------------------------------- path enumeration

namespace {

struct Layout {
    std::size_t states;
    std::size_t actions;
    std::size_t horizon;
    std::size_t episodes;
    bool by_step;
    bool by_episode;
    bool by_slip;

    std::size_t context(std::size_t s, std::size_t t, std::size_t k, bool slipped) const {
        const std::size_t c = by_slip && slipped ? 1 : 0;
        const std::size_t tt = by_step ? t : 0, T = by_step ? horizon : 1;
        const std::size_t kk = by_episode ? k : 0, K = by_episode ? episodes : 1;
        return s + states * (tt + T * (kk + K * c));
    }
};

Layout layout_of(const TabularMetaMdp& env, const Policy& policy) {
    if (policy.kind() != Policy::Kind::TabularSoftmax) throw ParameterError("oracles need a tabular policy");
    const auto& f = policy.featurizer();
    if (f.mode() != HistoryFeaturizer::Mode::FullTabular) throw ParameterError("oracles need full tabular contexts");
    const auto o = f.options();
    return {env.num_states(),
            static_cast<std::size_t>(env.num_actions()),
            static_cast<std::size_t>(env.horizon()),
            static_cast<std::size_t>(env.episodes()),
            o.by_step,
            o.by_episode,
            o.by_slip};
}

std::vector<double> softmax_row(std::span<const double> theta, std::size_t row, std::size_t n) {
    std::vector<double> p(n);
    double mx = -INFINITY;
    for (std::size_t a = 0; a < n; ++a) mx = std::max(mx, theta[row * n + a]);
    double z = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        p[a] = std::exp(theta[row * n + a] - mx);
        z += p[a];
    }
    for (auto& v : p) v /= z;
    return p;
}

struct Walker {
    const TabularMetaMdp& env;
    const Task& task;
    const Layout& L;
    std::span<const double> theta;
    double gamma;
    double max_paths;
    std::vector<OraclePath>& out;

    void episode(std::size_t k, bool slipped, double prob, double total, std::vector<double>& score) {
        if (k == L.episodes) {
            if (static_cast<double>(out.size()) >= max_paths) throw SizeError("oracle path enumeration exceeds the limit");
            out.push_back({prob, total / static_cast<double>(L.episodes), score});
            return;
        }
        for (const auto& [p0, s0] : env.initial_distribution(task)) {
            if (p0 <= 0.0) continue;
            step(k, 0, s0, slipped, prob * p0, total, 1.0, score);
        }
    }

    void step(std::size_t k, std::size_t t, int s, bool slipped, double prob, double total, double disc,
              std::vector<double>& score) {
        if (t == L.horizon) {
            episode(k + 1, slipped, prob, total, score);
            return;
        }
        const std::size_t row = L.context(static_cast<std::size_t>(s), t, k, slipped);
        const auto pi = softmax_row(theta, row, L.actions);
        for (std::size_t a = 0; a < L.actions; ++a) {
            if (pi[a] <= 0.0) continue;
            for (std::size_t b = 0; b < L.actions; ++b) score[row * L.actions + b] += (a == b ? 1.0 : 0.0) - pi[b];
            for (const auto& o : env.transition_distribution(s, static_cast<int>(a), task)) {
                if (o.probability <= 0.0) continue;
                step(k, t + 1, o.transition.next_state, slipped || o.transition.slip > 0.0, prob * pi[a] * o.probability,
                     total + disc * o.transition.reward, disc * gamma, score);
            }
            for (std::size_t b = 0; b < L.actions; ++b) score[row * L.actions + b] -= (a == b ? 1.0 : 0.0) - pi[b];
        }
    }
};

}  // namespace

std::vector<OraclePath> oracle_paths(const TabularMetaMdp& env, std::size_t task, const Policy& policy,
                                     std::span<const double> theta, double max_paths) {
    const Layout L = layout_of(env, policy);
    if (theta.size() != policy.num_params()) throw ParameterError("oracle parameter vector has the wrong size");
    const Task t = env.task_value(task);
    std::vector<OraclePath> out;
    std::vector<double> score(theta.size(), 0.0);
    Walker w{env, t, L, theta, env.discount(), max_paths, out};
    w.episode(0, false, 1.0, 0.0, score);
    return out;
}

std::vector<double> oracle_task_values(const TabularMetaMdp& env, const Policy& policy, std::span<const double> theta) {
    std::vector<double> v(env.num_tasks(), 0.0);
    for (std::size_t z = 0; z < env.num_tasks(); ++z)
        for (const auto& p : oracle_paths(env, z, policy, theta)) v[z] += p.probability * p.ret;
    return v;
}

// ---------------------------------------------------------------- atom statistics

std::vector<double> tail_membership(std::span<const double> values, std::span<const double> probabilities,
                                    double alpha) {
    if (values.size() != probabilities.size() || values.empty()) throw ParameterError("atoms need matching values and probabilities");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ParameterError("alpha must lie in (0, 1]");
    const double total = std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> w(values.size(), 0.0);
    double need = alpha * total;
    for (std::size_t i : order) {
        if (need <= 1e-15 * total) break;
        const double p = probabilities[i];
        if (p <= 0.0) continue;
        if (p <= need) {
            w[i] = 1.0;
            need -= p;
        } else {
            w[i] = need / p;
            need = 0.0;
        }
    }
    return w;
}

double atom_cvar(std::span<const double> values, std::span<const double> probabilities, double alpha) {
    const auto w = tail_membership(values, probabilities, alpha);
    const double total = std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) s += probabilities[i] * w[i] * values[i];
    return s / (alpha * total);
}

double atom_quantile(std::span<const double> values, std::span<const double> probabilities, double alpha) {
    if (values.size() != probabilities.size() || values.empty()) throw ParameterError("atoms need matching values and probabilities");
    const double total = std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    double cum = 0.0;
    for (std::size_t i : order) {
        cum += probabilities[i];
        if (cum >= alpha * total * (1.0 - 1e-12)) return values[i];
    }
    return values[order.back()];
}

double exact_cvar_meta_objective(const TabularMetaMdp& env, const Policy& policy, double alpha,
                                 std::span<const double> theta) {
    const auto v = oracle_task_values(env, policy, theta);
    std::vector<double> p(env.num_tasks());
    for (std::size_t z = 0; z < p.size(); ++z) p[z] = env.task_probability(z);
    return atom_cvar(v, p, alpha);
}

double exact_cvar_meta_objective(const TabularMetaMdp& env, const Policy& policy, double alpha) {
    return exact_cvar_meta_objective(env, policy, alpha, policy.params());
}

namespace {

void return_atoms(const TabularMetaMdp& env, const Policy& policy, std::span<const double> theta,
                  std::vector<double>& values, std::vector<double>& probs) {
    for (std::size_t z = 0; z < env.num_tasks(); ++z)
        for (const auto& p : oracle_paths(env, z, policy, theta)) {
            values.push_back(p.ret);
            probs.push_back(env.task_probability(z) * p.probability);
        }
}

}  // namespace

double exact_rl_cvar_objective(const TabularMetaMdp& env, const Policy& policy, double alpha,
                               std::span<const double> theta) {
    std::vector<double> values, probs;
    return_atoms(env, policy, theta, values, probs);
    return atom_cvar(values, probs, alpha);
}

double exact_return_quantile(const TabularMetaMdp& env, const Policy& policy, double alpha) {
    std::vector<double> values, probs;
    return_atoms(env, policy, policy.params(), values, probs);
    return atom_quantile(values, probs, alpha);
}

// ---------------------------------------------------------------- estimator expectations

namespace {

struct SlotOutcome {
    double probability = 0.0;
    std::vector<MetaRollout> rollouts;
    bool selected = true;
};

// Odometer over n slots drawn from `outcomes`; calls f(indices, probability).
template <class F>
void for_each_batch(const std::vector<SlotOutcome>& outcomes, std::size_t n, double limit, F&& f) {
    if (std::pow(static_cast<double>(outcomes.size()), static_cast<double>(n)) > limit)
        throw SizeError("batch sample space exceeds the enumeration limit");
    std::vector<std::size_t> idx(n, 0);
    while (true) {
        double p = 1.0;
        for (std::size_t i : idx) p *= outcomes[i].probability;
        if (p > 0.0) f(idx, p);
        std::size_t pos = 0;
        while (pos < n && ++idx[pos] == outcomes.size()) idx[pos++] = 0;
        if (pos == n) break;
    }
}

// All ordered m-tuples of weighted rollouts.
void tuples(const std::vector<WeightedRollout>& paths, std::size_t m, double prob, std::vector<MetaRollout>& cur,
            std::vector<std::pair<double, std::vector<MetaRollout>>>& out) {
    if (cur.size() == m) {
        out.emplace_back(prob, cur);
        return;
    }
    for (const auto& w : paths) {
        cur.push_back(w.rollout);
        tuples(paths, m, prob * w.probability, cur, out);
        cur.pop_back();
    }
}

struct Moments {
    std::vector<double> sum, sq;
    double count = 0.0;
    void add(const std::vector<double>& g) {
        if (sum.empty()) sum.assign(g.size(), 0.0), sq.assign(g.size(), 0.0);
        for (std::size_t i = 0; i < g.size(); ++i) {
            sum[i] += g[i];
            sq[i] += g[i] * g[i];
        }
        count += 1.0;
    }
};

double exact_mean_value(const TabularMetaMdp& env, const Policy& policy) {
    const auto v = oracle_task_values(env, policy, policy.params());
    double s = 0.0;
    for (std::size_t z = 0; z < v.size(); ++z) s += env.task_probability(z) * v[z];
    return s;
}

}  // namespace

EstimatorExpectation estimator_expectation(const EstimatorConfig& config, const TabularMetaMdp& env,
                                           const Policy& policy, bool exact, std::uint64_t seed,
                                           std::size_t mc_samples) {
    if (config.n == 0 || config.m == 0) throw ParameterError("estimator batches need n >= 1 and m >= 1");
    const bool meta = config.kind == EstimatorConfig::Kind::MetaCvar;
    EstimatorExpectation res;
    res.baseline = config.batch_mean_baseline ? exact_mean_value(env, policy) : config.baseline;
    const double b = res.baseline;

    if (!exact) {
        RandomStream base(seed);
        const TaskDistribution dist = env.task_distribution();
        Moments mom;
        for (std::size_t s = 0; s < mc_samples; ++s) {
            RandomStream rng = base.split({s});
            GradientEstimate g;
            if (meta) {
                std::vector<std::vector<MetaRollout>> batches(config.n);
                for (auto& tb : batches) {
                    const Task task = dist.sample_one(rng);
                    for (std::size_t j = 0; j < config.m; ++j) tb.push_back(rollout(env, task, policy, rng));
                }
                g = cvar_ml_gradient(policy, batches, config.alpha, b);
            } else {
                std::vector<MetaRollout> trajs;
                for (std::size_t i = 0; i < config.n; ++i) trajs.push_back(rollout(env, dist.sample_one(rng), policy, rng));
                g = rl_cvar_pg_gradient(policy, trajs, config.alpha, b, config.quantile);
            }
            mom.add(g.grad);
        }
        res.realizations = mom.count;
        res.mean.resize(mom.sum.size());
        res.std_error.resize(mom.sum.size());
        for (std::size_t i = 0; i < mom.sum.size(); ++i) {
            res.mean[i] = mom.sum[i] / mom.count;
            const double var = std::max(0.0, mom.sq[i] / mom.count - res.mean[i] * res.mean[i]);
            res.std_error[i] = std::sqrt(var / std::max(1.0, mom.count - 1.0));
        }
        return res;
    }

    std::vector<SlotOutcome> outcomes;
    if (meta) {
        const auto values = oracle_task_values(env, policy, policy.params());
        std::vector<double> probs(env.num_tasks());
        for (std::size_t z = 0; z < probs.size(); ++z) probs[z] = env.task_probability(z);
        const auto w = tail_membership(values, probs, config.alpha);
        for (std::size_t z = 0; z < env.num_tasks(); ++z) {
            const auto paths = enumerate_rollouts(env, env.task_value(z), policy, config.max_realizations);
            std::vector<std::pair<double, std::vector<MetaRollout>>> tup;
            std::vector<MetaRollout> cur;
            tuples(paths, config.m, 1.0, cur, tup);
            for (auto& [p, rs] : tup) {
                if (w[z] > 0.0) outcomes.push_back({probs[z] * p * w[z], rs, true});
                if (w[z] < 1.0) outcomes.push_back({probs[z] * p * (1.0 - w[z]), std::move(rs), false});
            }
        }
    } else {
        for (std::size_t z = 0; z < env.num_tasks(); ++z)
            for (auto& wr : enumerate_rollouts(env, env.task_value(z), policy, config.max_realizations))
                outcomes.push_back({env.task_probability(z) * wr.probability, {std::move(wr.rollout)}, true});
    }

    double q = 0.0;
    if (!meta) {
        if (config.quantile) {
            q = *config.quantile;
        } else {
            q = exact_return_quantile(env, policy, config.alpha);
            // Returns of the same path may differ in the last bits between the two
            // summations; nudge q up to the gap before the next atom.
            double next = INFINITY;
            for (const auto& o : outcomes)
                if (o.rollouts[0].ret > q + 1e-9 * std::max(1.0, std::abs(q))) next = std::min(next, o.rollouts[0].ret);
            q += std::min(1e-10 * std::max(1.0, std::abs(q)), 0.5 * (next - q));
        }
    }

    res.mean.assign(policy.num_params(), 0.0);
    res.std_error.assign(policy.num_params(), 0.0);
    std::vector<std::vector<MetaRollout>> batches(config.n);
    std::vector<bool> selected(config.n);
    std::vector<MetaRollout> trajs(config.n);
    for_each_batch(outcomes, config.n, config.max_realizations, [&](const std::vector<std::size_t>& idx, double p) {
        GradientEstimate g;
        if (meta) {
            for (std::size_t i = 0; i < config.n; ++i) {
                batches[i] = outcomes[idx[i]].rollouts;
                selected[i] = outcomes[idx[i]].selected;
            }
            g = cvar_ml_gradient_selected(policy, batches, selected, config.alpha, b);
        } else {
            for (std::size_t i = 0; i < config.n; ++i) trajs[i] = outcomes[idx[i]].rollouts[0];
            g = rl_cvar_pg_gradient(policy, trajs, config.alpha, b, q);
        }
        for (std::size_t k = 0; k < g.grad.size(); ++k) res.mean[k] += p * g.grad[k];
        res.realizations += 1.0;
    });
    return res;
}

// ---------------------------------------------------------------- tail sampling moments

Prop1Report prop1_report(const TabularMetaMdp& env, const Policy& policy, double alpha, std::size_t n,
                         double baseline) {
    if (n == 0) throw ParameterError("prop1 needs n >= 1");
    const auto theta = policy.params();
    const std::size_t d = theta.size();
    const std::size_t Z = env.num_tasks();
    std::vector<double> probs(Z);
    for (std::size_t z = 0; z < Z; ++z) probs[z] = env.task_probability(z);

    std::vector<std::vector<double>> cond_mean(Z, std::vector<double>(d, 0.0));
    std::vector<double> cond_sq(Z, 0.0), values(Z, 0.0);
    for (std::size_t z = 0; z < Z; ++z) {
        for (const auto& path : oracle_paths(env, z, policy, theta)) {
            const double c = path.ret - baseline;
            double norm2 = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                cond_mean[z][i] += path.probability * c * path.score[i];
                norm2 += path.score[i] * path.score[i];
            }
            cond_sq[z] += path.probability * c * c * norm2;
            values[z] += path.probability * path.ret;
        }
    }
    const auto w = tail_membership(values, probs, alpha);

    // Under D: X = alpha^-1 1{tail} G.
    std::vector<double> mean_d(d, 0.0);
    double sq_d = 0.0;
    for (std::size_t z = 0; z < Z; ++z) {
        for (std::size_t i = 0; i < d; ++i) mean_d[i] += probs[z] * w[z] * cond_mean[z][i] / alpha;
        sq_d += probs[z] * w[z] * cond_sq[z] / (alpha * alpha);
    }
    // Under D_alpha: X = G, tasks drawn with probability p_z w_z / alpha.
    double tail_mass = 0.0;
    for (std::size_t z = 0; z < Z; ++z) tail_mass += probs[z] * w[z];
    std::vector<double> mean_t(d, 0.0);
    double sq_t = 0.0;
    for (std::size_t z = 0; z < Z; ++z) {
        const double q = probs[z] * w[z] / tail_mass;
        for (std::size_t i = 0; i < d; ++i) mean_t[i] += q * cond_mean[z][i];
        sq_t += q * cond_sq[z];
    }
    auto norm2 = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x * x;
        return s;
    };
    Prop1Report r;
    r.alpha = alpha;
    r.n = n;
    r.var_original = (sq_d - norm2(mean_d)) / static_cast<double>(n);
    r.var_tail = (sq_t - norm2(mean_t)) / static_cast<double>(n);
    r.mean = OracleReport::compare("tail_mean", mean_d, mean_t, 1e-8, 0.0);
    const double bound = alpha * r.var_original;
    r.variance = OracleReport::compare("tail_variance", {bound}, {r.var_tail}, 1e-12 * std::max(1.0, std::abs(bound)),
                                       0.0, OracleReport::Check::AtMost);
    r.strict = r.var_tail < bound;
    return r;
}

// ---------------------------------------------------------------- fixtures and suite

Policy oracle_policy(const TabularMetaMdp& env, std::uint64_t seed, double scale) {
    HistoryFeaturizer::Options o;
    o.by_step = true;
    o.by_episode = false;
    HistoryFeaturizer f(o);
    Policy p = Policy::tabular(f, f.tabular_size(env), env.num_actions());
    RandomStream rng(seed);
    for (auto& v : p.mutable_params()) v = rng.normal(0.0, scale);
    return p;
}

TabularMetaMdp contrast_bandit() {
    return TabularMetaMdp::bandit({{{0.6, 1.0}, {0.4, 3.0}}, {{0.2, 0.0}, {0.8, 2.0}}});
}

std::vector<OracleReport> run_oracle_suite(const OracleSuiteOptions& options) {
    std::vector<OracleReport> out;

    {
        const auto env = TabularMetaMdp::canonical_chain();
        const Policy pol = oracle_policy(env, options.seed);
        const double alpha = 0.4;
        const auto fd = fd_gradient(
            [&](std::span<const double> th) { return exact_cvar_meta_objective(env, pol, alpha, th); }, pol.params());
        EstimatorConfig cfg;
        cfg.kind = EstimatorConfig::Kind::MetaCvar;
        cfg.alpha = alpha;
        cfg.n = 2;
        cfg.m = 1;
        std::vector<double> first;
        for (const char* label : {"0", "1", "-5", "batch_mean"}) {
            cfg.batch_mean_baseline = std::string(label) == "batch_mean";
            cfg.baseline = cfg.batch_mean_baseline ? 0.0 : std::stod(label);
            const auto e = estimator_expectation(cfg, env, pol, true);
            out.push_back(OracleReport::compare(std::string("meta_unbiased_b=") + label, fd, e.mean, 0.0, 1e-5));
            if (first.empty()) first = e.mean;
            else out.push_back(OracleReport::compare(std::string("meta_baseline_invariance_b=") + label, first, e.mean, 1e-8, 0.0));
        }
    }

    {
        const auto env = contrast_bandit();
        const Policy pol = oracle_policy(env, options.seed, 0.3);
        const double alpha = 0.3;
        const auto fd = fd_gradient(
            [&](std::span<const double> th) { return exact_rl_cvar_objective(env, pol, alpha, th); }, pol.params());
        const double q = exact_return_quantile(env, pol, alpha);
        EstimatorConfig cfg;
        cfg.kind = EstimatorConfig::Kind::RlCvar;
        cfg.alpha = alpha;
        cfg.n = 1;
        cfg.baseline = options.flip_rl_baseline ? -q : q;
        const auto matched = estimator_expectation(cfg, env, pol, true);
        auto m = OracleReport::compare("rl_baseline_at_quantile", fd, matched.mean, 0.0, 1e-4);
        out.push_back(m);
        const double floor_abs = std::max(m.abs_error, 1e-14);
        const double floor_rel = std::max(m.rel_error, 1e-14);
        for (double off : {1.0, -1.0}) {
            cfg.baseline = q + off;
            const auto e = estimator_expectation(cfg, env, pol, true);
            out.push_back(OracleReport::compare(off > 0 ? "rl_baseline_quantile_plus_1_biased"
                                                        : "rl_baseline_quantile_minus_1_biased",
                                                fd, e.mean, 10.0 * floor_abs, 10.0 * floor_rel,
                                                OracleReport::Check::Mismatch));
        }
    }

    {
        std::vector<std::pair<std::string, TabularMetaMdp>> instances;
        instances.emplace_back("chain", TabularMetaMdp::canonical_chain());
        instances.emplace_back("bandit4",
                               TabularMetaMdp::multi_task_bandit({{0.0, 1.0}, {0.5, 0.2}, {1.0, 1.5}, {2.0, 0.4}}, 0.3));
        instances.emplace_back("bandit3", TabularMetaMdp::multi_task_bandit({{1.0, -1.0, 0.0}, {0.0, 2.0, 0.5}, {3.0, 1.0, 2.0}}, 1.0));
        for (const auto& [label, env] : instances) {
            const Policy pol = oracle_policy(env, options.seed + 1);
            for (double alpha : {0.25, 0.5, 1.0}) {
                auto r = prop1_report(env, pol, alpha, 4);
                char buf[64];
                std::snprintf(buf, sizeof buf, "_%s_alpha=%g", label.c_str(), alpha);
                r.mean.name += buf;
                r.variance.name += buf;
                out.push_back(r.mean);
                out.push_back(r.variance);
            }
        }
    }
    return out;
}

}  // namespace roml
