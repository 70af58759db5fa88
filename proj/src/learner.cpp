#include "roml/learner.hpp"

#include <cmath>

#include "roml/risk.hpp"

namespace roml {

std::string baseline_name(BaselineRule::Kind kind) {
    switch (kind) {
        case BaselineRule::Kind::Constant: return "constant";
        case BaselineRule::Kind::BatchMeanReturn: return "batch_mean";
        case BaselineRule::Kind::ValueTable: return "value_table";
        case BaselineRule::Kind::QuantileBaseline: return "quantile";
    }
    return "unknown";
}

BaselineRule::Kind parse_baseline(const std::string& name) {
    if (name == "constant") return BaselineRule::Kind::Constant;
    if (name == "batch_mean") return BaselineRule::Kind::BatchMeanReturn;
    if (name == "value_table") return BaselineRule::Kind::ValueTable;
    if (name == "quantile") return BaselineRule::Kind::QuantileBaseline;
    throw ParameterError("unknown baseline '" + name + "'");
}

double ValueTable::value(std::size_t index) const {
    const auto it = table_.find(index);
    return it == table_.end() ? 0.0 : it->second.first;
}

void ValueTable::update(std::size_t index, double target) {
    auto& [v, n] = table_[index];
    ++n;
    const double step = rate_ > 0.0 ? rate_ : 1.0 / static_cast<double>(n);
    v += (n == 1 ? 1.0 : step) * (target - v);
}

Vector score_function(const Policy& policy, const MetaRollout& rollout) {
    Vector g(policy.num_params(), 0.0);
    for (const auto& ep : rollout.episodes)
        for (const auto& st : ep.steps)
            if (st.action >= 0) policy.add_grad_log_prob(st.context, st.action, 1.0, g);
    return g;
}

double resolve_baseline(const BaselineRule& rule, std::span<const double> returns) {
    switch (rule.kind) {
        case BaselineRule::Kind::Constant: return rule.value;
        case BaselineRule::Kind::BatchMeanReturn: return mean(returns);
        case BaselineRule::Kind::QuantileBaseline: return quantile(returns, rule.alpha);
        case BaselineRule::Kind::ValueTable: break;
    }
    throw ParameterError("value-table baselines are per state, not scalar");
}

namespace {

void require_nonempty(std::span<const MetaRollout> rollouts) {
    if (rollouts.empty()) throw ParameterError("policy gradient needs at least one rollout");
}

std::vector<double> returns_of(std::span<const MetaRollout> rollouts) {
    std::vector<double> r;
    r.reserve(rollouts.size());
    for (const auto& x : rollouts) r.push_back(x.ret);
    return r;
}

// Credit per step in rollout order: the full return, or the share of it earned from this step on.
std::vector<double> step_credit(const MetaRollout& rollout, Credit credit, double discount) {
    std::vector<double> out;
    out.reserve(rollout.frames());
    if (credit == Credit::FullReturn) {
        out.assign(rollout.frames(), rollout.ret);
        return out;
    }
    const double scale = 1.0 / static_cast<double>(rollout.episodes.size());
    for (const auto& ep : rollout.episodes) {
        double g = 1.0;
        for (const auto& st : ep.steps) {
            out.push_back(g * st.reward * scale);
            g *= discount;
        }
    }
    double acc = 0.0;
    for (auto it = out.rbegin(); it != out.rend(); ++it) {
        acc += *it;
        *it = acc;
    }
    return out;
}

void refresh_values(ValueTable& values, std::span<const MetaRollout> rollouts, Credit credit) {
    for (const auto& r : rollouts) {
        const auto credits = step_credit(r, credit, 1.0);
        std::size_t j = 0;
        for (const auto& ep : r.episodes)
            for (const auto& st : ep.steps) {
                const double c = credits[j++];
                if (st.action >= 0) values.update(st.context.index, c);
            }
    }
}

}  // namespace

GradientEstimate mean_pg_gradient(const Policy& policy, std::span<const MetaRollout> rollouts, double b) {
    require_nonempty(rollouts);
    GradientEstimate est;
    est.grad.assign(policy.num_params(), 0.0);
    est.n_tasks = est.n_rollouts = rollouts.size();
    est.baseline = b;
    const double inv_n = 1.0 / static_cast<double>(rollouts.size());
    for (const auto& r : rollouts) {
        const double scale = (r.ret - b) * inv_n;
        if (scale == 0.0) continue;
        for (const auto& ep : r.episodes)
            for (const auto& st : ep.steps)
                if (st.action >= 0) policy.add_grad_log_prob(st.context, st.action, scale, est.grad);
    }
    return est;
}

GradientEstimate mean_pg_gradient(const Policy& policy, std::span<const MetaRollout> rollouts,
                                  const BaselineRule& rule, const ValueTable* values, Credit credit) {
    require_nonempty(rollouts);
    const bool per_state = rule.kind == BaselineRule::Kind::ValueTable;
    if (!per_state && credit == Credit::FullReturn)
        return mean_pg_gradient(policy, rollouts, resolve_baseline(rule, returns_of(rollouts)));

    GradientEstimate est;
    est.grad.assign(policy.num_params(), 0.0);
    est.n_tasks = est.n_rollouts = rollouts.size();
    // Scalar baselines are resolved on the credit signal of the first step of each rollout.
    double scalar_b = 0.0;
    if (!per_state) {
        std::vector<double> first;
        for (const auto& r : rollouts) first.push_back(step_credit(r, credit, 1.0).front());
        scalar_b = resolve_baseline(rule, first);
    }
    est.baseline = scalar_b;
    const double inv_n = 1.0 / static_cast<double>(rollouts.size());
    for (const auto& r : rollouts) {
        const auto credits = step_credit(r, credit, 1.0);
        std::size_t j = 0;
        for (const auto& ep : r.episodes) {
            for (const auto& st : ep.steps) {
                const double c = credits[j++];
                if (st.action < 0) continue;
                const double b = per_state ? (values ? values->value(st.context.index) : 0.0) : scalar_b;
                policy.add_grad_log_prob(st.context, st.action, (c - b) * inv_n, est.grad);
            }
        }
    }
    return est;
}

Policy mean_pg_step(const Policy& policy, std::span<const MetaRollout> rollouts, const BaselineRule& rule, double lr,
                    ValueTable* values, Credit credit) {
    const auto est = mean_pg_gradient(policy, rollouts, rule, values, credit);
    Policy next = policy;
    auto& p = next.mutable_params();
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += lr * est.grad[i];
    if (values && rule.kind == BaselineRule::Kind::ValueTable) refresh_values(*values, rollouts, credit);
    return next;
}

GradientEstimate cvar_ml_gradient_selected(const Policy& policy,
                                           const std::vector<std::vector<MetaRollout>>& task_batches,
                                           const std::vector<bool>& selected, double alpha, double b) {
    if (task_batches.empty()) throw ParameterError("cvar_ml_gradient needs at least one task");
    if (selected.size() != task_batches.size()) throw ParameterError("selection mask has the wrong length");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ParameterError("alpha must lie in (0, 1]");
    GradientEstimate est;
    est.grad.assign(policy.num_params(), 0.0);
    est.baseline = b;
    const double scale0 = 1.0 / (alpha * static_cast<double>(task_batches.size()));
    for (std::size_t i = 0; i < task_batches.size(); ++i) {
        if (!selected[i]) continue;
        ++est.n_tasks;
        for (const auto& r : task_batches[i]) {
            ++est.n_rollouts;
            const double scale = (r.ret - b) * scale0;
            if (scale == 0.0) continue;
            for (const auto& ep : r.episodes)
                for (const auto& st : ep.steps)
                    if (st.action >= 0) policy.add_grad_log_prob(st.context, st.action, scale, est.grad);
        }
    }
    return est;
}

GradientEstimate cvar_ml_gradient(const Policy& policy, const std::vector<std::vector<MetaRollout>>& task_batches,
                                  double alpha, double b) {
    if (task_batches.empty()) throw ParameterError("cvar_ml_gradient needs at least one task");
    std::vector<double> task_returns;
    for (const auto& batch : task_batches) {
        if (batch.empty()) throw ParameterError("every task needs at least one rollout");
        double s = 0.0;
        for (const auto& r : batch) s += r.ret;
        task_returns.push_back(s / static_cast<double>(batch.size()));
    }
    const double q = quantile(task_returns, alpha);
    std::vector<bool> selected;
    for (double r : task_returns) selected.push_back(r <= q);
    return cvar_ml_gradient_selected(policy, task_batches, selected, alpha, b);
}

GradientEstimate rl_cvar_pg_gradient(const Policy& policy, std::span<const MetaRollout> trajectories, double alpha,
                                     double b, std::optional<double> quantile_value) {
    require_nonempty(trajectories);
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ParameterError("alpha must lie in (0, 1]");
    const auto rets = returns_of(trajectories);
    const double q = quantile_value ? *quantile_value : quantile(rets, alpha);
    GradientEstimate est;
    est.grad.assign(policy.num_params(), 0.0);
    est.baseline = b;
    const double scale0 = 1.0 / (alpha * static_cast<double>(trajectories.size()));
    for (const auto& r : trajectories) {
        if (r.ret > q) continue;
        ++est.n_tasks;
        ++est.n_rollouts;
        const double scale = (r.ret - b) * scale0;
        if (scale == 0.0) continue;
        for (const auto& ep : r.episodes)
            for (const auto& st : ep.steps)
                if (st.action >= 0) policy.add_grad_log_prob(st.context, st.action, scale, est.grad);
    }
    return est;
}

PolicyGradientLearner::PolicyGradientLearner(Policy policy, Options options)
    : policy_(std::move(policy)), options_(options), values_(options.value_rate) {
    if (!(options_.lr > 0.0)) throw ParameterError("learning rate must be positive");
}

void PolicyGradientLearner::ml_step(std::span<const MetaRollout> rollouts) {
    if (rollouts.empty()) return;
    ValueTable* values = options_.baseline.kind == BaselineRule::Kind::ValueTable ? &values_ : nullptr;
    auto est = mean_pg_gradient(policy_, rollouts, options_.baseline, values, options_.credit);
    if (options_.entropy != 0.0) {
        const double w = options_.entropy / static_cast<double>(rollouts.size());
        for (const auto& r : rollouts)
            for (const auto& ep : r.episodes)
                for (const auto& st : ep.steps)
                    if (st.action >= 0) policy_.add_grad_entropy(st.context, w, est.grad);
    }
    double scale = options_.lr;
    if (options_.max_grad_norm > 0.0) {
        double sq = 0.0;
        for (double g : est.grad) sq += g * g;
        const double norm = std::sqrt(sq);
        if (norm > options_.max_grad_norm) scale *= options_.max_grad_norm / norm;
    }
    auto& p = policy_.mutable_params();
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += scale * est.grad[i];
    if (values) refresh_values(*values, rollouts, options_.credit);
}

RecordingLearner::RecordingLearner(Policy policy, std::unique_ptr<MetaLearner> inner)
    : policy_(std::move(policy)), inner_(std::move(inner)) {}

RecordingLearner::RecordingLearner(const RecordingLearner& other)
    : policy_(other.policy_), inner_(other.inner_ ? other.inner_->clone() : nullptr), calls_(other.calls_) {}

void RecordingLearner::ml_step(std::span<const MetaRollout> rollouts) {
    calls_.emplace_back(rollouts.begin(), rollouts.end());
    if (inner_) inner_->ml_step(rollouts);
}

}  // namespace roml
