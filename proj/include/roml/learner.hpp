#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "roml/metamdp.hpp"
#include "roml/policy.hpp"

namespace roml {

using Vector = std::vector<double>;

/// Sum over decision steps of grad log pi(a; s~).
Vector score_function(const Policy& policy, const MetaRollout& rollout);

struct BaselineRule {
    enum class Kind { Constant, BatchMeanReturn, ValueTable, QuantileBaseline };
    Kind kind = Kind::BatchMeanReturn;
    double value = 0.0;  // Constant
    double alpha = 1.0;  // QuantileBaseline

    static BaselineRule constant(double b) { return {Kind::Constant, b, 1.0}; }
    static BaselineRule batch_mean() { return {Kind::BatchMeanReturn, 0.0, 1.0}; }
    static BaselineRule value_table() { return {Kind::ValueTable, 0.0, 1.0}; }
    static BaselineRule quantile(double alpha) { return {Kind::QuantileBaseline, 0.0, alpha}; }
};

std::string baseline_name(BaselineRule::Kind kind);
BaselineRule::Kind parse_baseline(const std::string& name);

/// Per-extended-state running-average estimates of the credit signal.
/// rate 0 uses the sample mean (1/n step size).
class ValueTable {
public:
    explicit ValueTable(double rate = 0.0) : rate_(rate) {}
    double value(std::size_t index) const;
    void update(std::size_t index, double target);
    std::size_t size() const { return table_.size(); }

private:
    double rate_;
    std::unordered_map<std::size_t, std::pair<double, std::size_t>> table_;
};

struct GradientEstimate {
    Vector grad;
    std::size_t n_tasks = 0;
    std::size_t n_rollouts = 0;
    double baseline = 0.0;
};

/// Scalar baseline for the rules that produce one (all but ValueTable).
double resolve_baseline(const BaselineRule& rule, std::span<const double> returns);

/// (1/n) sum_j (R_j - b) score_j.
GradientEstimate mean_pg_gradient(const Policy& policy, std::span<const MetaRollout> rollouts, double b);

/// How each decision step is credited.
enum class Credit { FullReturn, RewardToGo };

/// Mean meta-PG with a baseline rule. ValueTable subtracts b(s~_t) per step.
GradientEstimate mean_pg_gradient(const Policy& policy, std::span<const MetaRollout> rollouts,
                                  const BaselineRule& rule, const ValueTable* values = nullptr,
                                  Credit credit = Credit::FullReturn);

/// theta <- theta + lr * G. The baseline is computed before the gradient pass;
/// the value table (when used) is refreshed afterwards.
Policy mean_pg_step(const Policy& policy, std::span<const MetaRollout> rollouts, const BaselineRule& rule, double lr,
                    ValueTable* values = nullptr, Credit credit = Credit::FullReturn);

/// Tail-selected meta-PG: (1/(alpha N)) sum_i 1{R_i <= q} sum_m (R_im - b) score_im,
/// with R_i the mean over the task's rollouts and q the order-statistic alpha-quantile of {R_i}.
GradientEstimate cvar_ml_gradient(const Policy& policy, const std::vector<std::vector<MetaRollout>>& task_batches,
                                  double alpha, double b);

/// Same estimator with the task selection supplied by the caller (exact quantile).
GradientEstimate cvar_ml_gradient_selected(const Policy& policy,
                                           const std::vector<std::vector<MetaRollout>>& task_batches,
                                           const std::vector<bool>& selected, double alpha, double b);

/// Standard RL CVaR-PG: (1/(alpha N)) sum_i 1{R_i <= q} (R_i - b) score_i. The quantile
/// is the batch order statistic unless `quantile` is given.
GradientEstimate rl_cvar_pg_gradient(const Policy& policy, std::span<const MetaRollout> trajectories, double alpha,
                                     double b, std::optional<double> quantile = std::nullopt);

/// A meta-learner: given a batch of meta-rollouts it updates its policy.
class MetaLearner {
public:
    virtual ~MetaLearner() = default;
    virtual std::string name() const = 0;
    virtual const Policy& policy() const = 0;
    virtual void ml_step(std::span<const MetaRollout> rollouts) = 0;
    virtual std::unique_ptr<MetaLearner> clone() const = 0;
};

/// REINFORCE with a pluggable baseline, an optional entropy bonus and plain gradient ascent.
class PolicyGradientLearner final : public MetaLearner {
public:
    struct Options {
        BaselineRule baseline = BaselineRule::batch_mean();
        double lr = 0.05;
        Credit credit = Credit::FullReturn;
        double value_rate = 0.0;
        double max_grad_norm = 0.0;  // 0 disables clipping
        double entropy = 0.0;        // bonus weight on the mean per-step policy entropy
    };

    PolicyGradientLearner(Policy policy, Options options);

    std::string name() const override { return "policy_gradient"; }
    const Policy& policy() const override { return policy_; }
    void ml_step(std::span<const MetaRollout> rollouts) override;
    std::unique_ptr<MetaLearner> clone() const override { return std::make_unique<PolicyGradientLearner>(*this); }

    const Options& options() const { return options_; }
    const ValueTable& values() const { return values_; }

private:
    Policy policy_;
    Options options_;
    ValueTable values_;
};

/// Leaves the policy untouched.
class NoOpLearner final : public MetaLearner {
public:
    explicit NoOpLearner(Policy policy) : policy_(std::move(policy)) {}
    std::string name() const override { return "noop"; }
    const Policy& policy() const override { return policy_; }
    void ml_step(std::span<const MetaRollout>) override {}
    std::unique_ptr<MetaLearner> clone() const override { return std::make_unique<NoOpLearner>(*this); }

private:
    Policy policy_;
};

/// Records every batch it receives, then forwards to an optional inner learner.
class RecordingLearner final : public MetaLearner {
public:
    RecordingLearner(Policy policy, std::unique_ptr<MetaLearner> inner = nullptr);
    RecordingLearner(const RecordingLearner& other);

    std::string name() const override { return "recording"; }
    const Policy& policy() const override { return inner_ ? inner_->policy() : policy_; }
    void ml_step(std::span<const MetaRollout> rollouts) override;
    std::unique_ptr<MetaLearner> clone() const override { return std::make_unique<RecordingLearner>(*this); }

    const std::vector<std::vector<MetaRollout>>& calls() const { return calls_; }

private:
    Policy policy_;
    std::unique_ptr<MetaLearner> inner_;
    std::vector<std::vector<MetaRollout>> calls_;
};

}  // namespace roml
