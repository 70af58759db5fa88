#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "roml/metamdp.hpp"
#include "roml/random.hpp"

namespace roml {

/// Maps (state, history) to an extended state.
///
/// FullTabular: index = s + S * (t' + T' * (k' + K' * slipped')), where each
/// primed component is present only when its flag is on.
/// Features: observation ++ one-hot(episode) ++ [mean slip on hazard cells,
/// t / T, 1]. The discrete index is computed in both modes (value tables use it).
class HistoryFeaturizer {
public:
    enum class Mode { FullTabular, Features };

    struct Options {
        Mode mode = Mode::FullTabular;
        bool by_step = false;
        bool by_episode = true;
        bool by_slip = false;
    };

    HistoryFeaturizer() = default;
    explicit HistoryFeaturizer(Options options) : options_(options) {}

    const Options& options() const { return options_; }
    Mode mode() const { return options_.mode; }

    ExtendedState featurize(const MetaMdp& env, int state, const HistoryState& history) const;
    std::size_t tabular_size(const MetaMdp& env) const;
    std::size_t feature_dim(const MetaMdp& env) const;

    nlohmann::json to_json() const;
    static HistoryFeaturizer from_json(const nlohmann::json& j);

private:
    Options options_;
};

/// Parameters theta of a stochastic softmax meta-policy pi_theta(a; s~).
///
/// TabularSoftmax keeps one logit row per extended-state index. DenseNet is a
/// fully connected tanh network with a softmax head; zero hidden layers gives a
/// linear softmax policy. Layer l stores W_l (row-major, out x in) then b_l.
class Policy {
public:
    enum class Kind { TabularSoftmax, DenseNet };

    static Policy tabular(HistoryFeaturizer featurizer, std::size_t num_contexts, int num_actions);
    static Policy dense(HistoryFeaturizer featurizer, std::size_t input_dim, std::vector<int> hidden, int num_actions,
                        RandomStream& init_rng, double init_scale = 1.0);

    Kind kind() const { return kind_; }
    int num_actions() const { return num_actions_; }
    const HistoryFeaturizer& featurizer() const { return featurizer_; }
    const std::vector<int>& layer_sizes() const { return layers_; }

    std::size_t num_params() const { return params_.size(); }
    std::span<const double> params() const { return params_; }
    std::vector<double>& mutable_params() { return params_; }

    /// Action probabilities at an extended state (size num_actions()).
    void probabilities(const ExtendedState& s, std::span<double> out) const;
    std::vector<double> probabilities(const ExtendedState& s) const;

    int act(const ExtendedState& s, RandomStream& rng) const;

    /// grad += scale * d/dtheta log pi(action | s).
    void add_grad_log_prob(const ExtendedState& s, int action, double scale, std::span<double> grad) const;
    std::vector<double> grad_log_pi(const ExtendedState& s, int action) const;

    /// Entropy of pi(. | s) in nats, and grad += scale * d/dtheta of it.
    double entropy(const ExtendedState& s) const;
    void add_grad_entropy(const ExtendedState& s, double scale, std::span<double> grad) const;

    /// FNV-1a over the raw parameter bytes; identical parameters give identical checksums.
    std::uint64_t checksum() const;

    nlohmann::json to_json() const;
    static Policy from_json(const nlohmann::json& j);

private:
    Policy() = default;

    void dense_forward(const ExtendedState& s, std::vector<std::vector<double>>& activations) const;
    // Backpropagates logit_grad(p, delta), which fills dF/dlogits given the probabilities.
    template <class LogitGrad>
    void add_grad_of_logits(const ExtendedState& s, std::span<double> grad, LogitGrad&& logit_grad) const;

    Kind kind_ = Kind::TabularSoftmax;
    HistoryFeaturizer featurizer_;
    int num_actions_ = 0;
    std::size_t num_contexts_ = 0;  // tabular only
    std::vector<int> layers_;       // dense only: input, hidden..., actions
    std::vector<double> params_;
};

/// Builds a policy sized for `env`: tabular over the featurizer's index space or
/// dense over its feature vector.
Policy make_policy(const MetaMdp& env, Policy::Kind kind, const HistoryFeaturizer& featurizer,
                   const std::vector<int>& hidden, RandomStream& init_rng, double init_scale = 1.0);

}  // namespace roml
