#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "roml/metaalgo.hpp"
#include "roml/random.hpp"
#include "roml/taskdist.hpp"

namespace roml {

/// y = A sin(w x + b).
struct SineTask {
    double amplitude = 1.0;
    double phase = 0.0;
    double frequency = 1.0;

    static constexpr double kAmplitudeLo = 0.1, kAmplitudeHi = 5.0;
    static constexpr double kPhaseLo = 0.0, kPhaseHi = 6.283185307179586;
    static constexpr double kFrequencyLo = 0.3, kFrequencyHi = 3.0;

    double operator()(double x) const;
    bool in_range() const;

    static SineTask from_task(const Task& t);
    Task to_task() const { return {amplitude, phase, frequency}; }
};

/// Product of three affine Beta(2 phi, 2 - 2 phi) components over the amplitude,
/// phase and frequency ranges. phi = (0.5, 0.5, 0.5) is the uniform distribution.
TaskDistribution sine_task_distribution(std::array<double, 3> phi = {0.5, 0.5, 0.5});
SineTask sample_sine_task(const TaskDistribution& dist, RandomStream& rng);

struct SineData {
    std::vector<double> x;
    std::vector<double> y;
    std::size_t size() const { return x.size(); }
};

/// n points with x uniform on [0, 2 pi).
SineData sample_sine_data(const SineTask& task, std::size_t n, RandomStream& rng);

/// Fully connected net 1 -> hidden... -> 1 with tanh hidden units and a linear
/// output. Layer l stores W_l (out x in, row-major) then b_l.
class Regressor {
public:
    static Regressor create(std::vector<int> hidden, RandomStream& init_rng);

    const std::vector<int>& layer_sizes() const { return layers_; }
    std::size_t num_params() const { return params_.size(); }
    std::span<const double> params() const { return params_; }
    std::vector<double>& mutable_params() { return params_; }

    double predict(double x) const;
    /// Mean squared error.
    double loss(const SineData& data) const;
    /// Mean squared error; grad is overwritten with its gradient.
    double loss_and_grad(const SineData& data, std::vector<double>& grad) const;

    /// Hessian of the mean squared error on `data` times v.
    void hessian_vector(const SineData& data, std::span<const double> v, std::vector<double>& out) const;

    /// `steps` gradient-descent steps on `data`.
    Regressor adapted(const SineData& data, double lr, int steps) const;

    std::uint64_t checksum() const;

private:
    std::vector<int> layers_;
    std::vector<double> params_;
};

struct FomamlResult {
    std::vector<double> grad;  // gradient of the query loss at the adapted parameters
    double query_loss = 0.0;   // query loss after adaptation
};

/// One inner step on the support set, then the first-order outer gradient.
FomamlResult fomaml_gradient(const Regressor& model, const SineData& support, const SineData& query, double inner_lr);

/// Exact outer gradient (I - inner_lr H_support) g_query through the one inner step.
FomamlResult maml_gradient(const Regressor& model, const SineData& support, const SineData& query, double inner_lr);

/// Query loss after one inner step from `params`; maml_gradient is its gradient.
double maml_objective(const Regressor& model, std::span<const double> params, const SineData& support,
                      const SineData& query, double inner_lr);

/// The post-adaptation query loss as a function of the initial parameters, with
/// the inner gradient held fixed at its value for `model`. Its gradient is the
/// first-order outer gradient.
double fomaml_surrogate(const Regressor& model, std::span<const double> params, const SineData& support,
                        const SineData& query, double inner_lr);

struct MetaTrainStep {
    Regressor model;
    double query_loss = 0.0;
};

/// Single-task first-order MAML step with plain gradient descent on the outer loss.
MetaTrainStep meta_train_step(const Regressor& model, const SineData& support, const SineData& query,
                              double inner_lr, double outer_lr);

/// Adam over a flat parameter vector; descends.
class Adam {
public:
    explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
    void step(std::vector<double>& params, std::span<const double> grad);
    std::size_t steps() const { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    std::vector<double> m_, v_;
    std::size_t t_ = 0;
};

struct SineConfig {
    std::vector<int> hidden{40, 40};
    double inner_lr = 0.01;
    double outer_lr = 1e-3;      // Adam step size
    std::size_t support = 10;
    std::size_t query = 10;
    std::size_t minibatch = 10;  // tasks per outer update inside one training iteration
    std::vector<int> test_steps{1, 5, 10};
    std::uint64_t init_seed = 0;
    bool first_order = false;    // drop the inner-step Jacobian from the outer gradient
};

/// One generated training sample: a task, its data and the post-adaptation
/// query loss at the parameters current when it was generated.
struct SineSample {
    SineTask task;
    SineData support;
    SineData query;
    double query_loss = 0.0;
};

/// Supervised meta-learning problem for run_meta_training. Scores are negative
/// post-adaptation query losses. ml_step takes one Adam step per minibatch, with
/// outer gradients computed at the parameters current for that minibatch. Evaluation reports, per test-time step count s,
/// extra metrics "mean_loss_s" and "cvar_loss_s" (mean of the worst alpha share of
/// losses); per_task_returns hold the negative losses after the first count.
class SineProblem {
public:
    using Sample = SineSample;

    explicit SineProblem(SineConfig config = {});

    TaskDistribution task_distribution() const { return sine_task_distribution(); }
    Sample generate(const Task& task, RandomStream& rng) const;
    /// Outer gradient of one sample at the current parameters.
    FomamlResult outer_gradient(const Sample& s) const;
    double score(const Sample& s) const { return -s.query_loss; }
    std::size_t frames(const Sample&) const { return config_.support + config_.query; }
    void ml_step(std::span<const Sample> batch);
    EvalResult evaluate(std::size_t n, double alpha, RandomStream rng) const;
    std::vector<std::string> extra_names() const;
    std::uint64_t checksum() const { return model_.checksum(); }

    const Regressor& model() const { return model_; }
    const SineConfig& config() const { return config_; }

private:
    SineConfig config_;
    Regressor model_;
    Adam adam_;
};

/// Runs cfg.algorithm on the sine problem.
TrainTrace run_supervised(const TrainConfig& cfg, const SineConfig& sine = {});

}  // namespace roml
