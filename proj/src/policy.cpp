#include "roml/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "roml/taskdist.hpp"

namespace roml {

namespace {

void softmax_inplace(std::span<double> logits) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double& v : logits) {
        v = std::exp(v - mx);
        total += v;
    }
    for (double& v : logits) v /= total;
}

const char* mode_name(HistoryFeaturizer::Mode m) {
    return m == HistoryFeaturizer::Mode::FullTabular ? "full_tabular" : "features";
}

}  // namespace

// ---------------------------------------------------------------------------
// HistoryFeaturizer

std::size_t HistoryFeaturizer::tabular_size(const MetaMdp& env) const {
    std::size_t n = env.num_states();
    if (options_.by_step) n *= static_cast<std::size_t>(env.horizon());
    if (options_.by_episode) n *= static_cast<std::size_t>(env.episodes());
    if (options_.by_slip) n *= 2;
    return n;
}

std::size_t HistoryFeaturizer::feature_dim(const MetaMdp& env) const {
    return env.observation_dim() + static_cast<std::size_t>(env.episodes()) + 3;
}

ExtendedState HistoryFeaturizer::featurize(const MetaMdp& env, int state, const HistoryState& history) const {
    ExtendedState ext;
    std::size_t idx = options_.by_slip && history.slipped ? 1 : 0;
    if (options_.by_episode)
        idx = idx * static_cast<std::size_t>(env.episodes()) + static_cast<std::size_t>(history.episode);
    if (options_.by_step)
        idx = idx * static_cast<std::size_t>(env.horizon()) + static_cast<std::size_t>(history.step);
    ext.index = idx * env.num_states() + static_cast<std::size_t>(state);

    if (options_.mode == Mode::Features) {
        const std::size_t obs = env.observation_dim();
        ext.features.assign(feature_dim(env), 0.0);
        env.observe(state, std::span<double>(ext.features.data(), obs));
        ext.features[obs + static_cast<std::size_t>(history.episode)] = 1.0;
        const std::size_t tail = obs + static_cast<std::size_t>(env.episodes());
        ext.features[tail] = history.mean_slip();
        ext.features[tail + 1] = static_cast<double>(history.step) / env.horizon();
        ext.features[tail + 2] = 1.0;
    }
    return ext;
}

nlohmann::json HistoryFeaturizer::to_json() const {
    return {{"mode", mode_name(options_.mode)},
            {"by_step", options_.by_step},
            {"by_episode", options_.by_episode},
            {"by_slip", options_.by_slip}};
}

HistoryFeaturizer HistoryFeaturizer::from_json(const nlohmann::json& j) {
    Options o;
    const auto mode = j.at("mode").get<std::string>();
    if (mode == "full_tabular") o.mode = Mode::FullTabular;
    else if (mode == "features") o.mode = Mode::Features;
    else throw ParameterError("unknown featurizer mode '" + mode + "'");
    o.by_step = j.value("by_step", false);
    o.by_episode = j.value("by_episode", true);
    o.by_slip = j.value("by_slip", false);
    return HistoryFeaturizer(o);
}

// ---------------------------------------------------------------------------
// Policy

Policy Policy::tabular(HistoryFeaturizer featurizer, std::size_t num_contexts, int num_actions) {
    if (num_actions < 1 || num_contexts < 1) throw ParameterError("tabular policy needs contexts and actions");
    Policy p;
    p.kind_ = Kind::TabularSoftmax;
    p.featurizer_ = featurizer;
    p.num_actions_ = num_actions;
    p.num_contexts_ = num_contexts;
    p.params_.assign(num_contexts * static_cast<std::size_t>(num_actions), 0.0);
    return p;
}

Policy Policy::dense(HistoryFeaturizer featurizer, std::size_t input_dim, std::vector<int> hidden, int num_actions,
                     RandomStream& init_rng, double init_scale) {
    if (num_actions < 1 || input_dim < 1) throw ParameterError("dense policy needs inputs and actions");
    Policy p;
    p.kind_ = Kind::DenseNet;
    p.featurizer_ = featurizer;
    p.num_actions_ = num_actions;
    p.layers_.push_back(static_cast<int>(input_dim));
    for (int h : hidden) {
        if (h < 1) throw ParameterError("hidden layer sizes must be positive");
        p.layers_.push_back(h);
    }
    p.layers_.push_back(num_actions);
    for (std::size_t l = 0; l + 1 < p.layers_.size(); ++l) {
        const int in = p.layers_[l], out = p.layers_[l + 1];
        const bool last = l + 2 == p.layers_.size();
        const double scale = (last ? init_scale : 1.0) / std::sqrt(static_cast<double>(in));
        for (int i = 0; i < in * out; ++i) p.params_.push_back(scale == 0.0 ? 0.0 : init_rng.normal(0.0, scale));
        for (int i = 0; i < out; ++i) p.params_.push_back(0.0);
    }
    return p;
}

void Policy::dense_forward(const ExtendedState& s, std::vector<std::vector<double>>& act) const {
    if (s.features.size() != static_cast<std::size_t>(layers_.front()))
        throw ParameterError("dense policy: feature dimension mismatch");
    act.resize(layers_.size());
    act[0] = s.features;
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
        const std::size_t in = static_cast<std::size_t>(layers_[l]);
        const std::size_t out = static_cast<std::size_t>(layers_[l + 1]);
        const double* w = params_.data() + offset;
        const double* b = w + in * out;
        auto& y = act[l + 1];
        y.assign(b, b + out);
        const auto& x = act[l];
        // Column sweep so that zero inputs (sparse observations) are skipped.
        for (std::size_t j = 0; j < in; ++j) {
            const double xj = x[j];
            if (xj == 0.0) continue;
            for (std::size_t i = 0; i < out; ++i) y[i] += w[i * in + j] * xj;
        }
        if (l + 2 < layers_.size())
            for (double& v : y) v = std::tanh(v);
        offset += in * out + out;
    }
}

void Policy::probabilities(const ExtendedState& s, std::span<double> out) const {
    if (out.size() != static_cast<std::size_t>(num_actions_)) throw ParameterError("probability buffer size mismatch");
    if (kind_ == Kind::TabularSoftmax) {
        if (s.index >= num_contexts_) throw ParameterError("tabular policy: context index out of range");
        const double* row = params_.data() + s.index * static_cast<std::size_t>(num_actions_);
        std::copy(row, row + num_actions_, out.begin());
    } else {
        std::vector<std::vector<double>> act;
        dense_forward(s, act);
        std::copy(act.back().begin(), act.back().end(), out.begin());
    }
    softmax_inplace(out);
}

std::vector<double> Policy::probabilities(const ExtendedState& s) const {
    std::vector<double> p(static_cast<std::size_t>(num_actions_));
    probabilities(s, p);
    return p;
}

int Policy::act(const ExtendedState& s, RandomStream& rng) const {
    double buf[16];
    std::vector<double> heap;
    std::span<double> p;
    if (num_actions_ <= 16) {
        p = std::span<double>(buf, static_cast<std::size_t>(num_actions_));
    } else {
        heap.resize(static_cast<std::size_t>(num_actions_));
        p = heap;
    }
    probabilities(s, p);
    return static_cast<int>(rng.categorical(p.data(), p.size()));
}

template <class LogitGrad>
void Policy::add_grad_of_logits(const ExtendedState& s, std::span<double> grad, LogitGrad&& logit_grad) const {
    if (grad.size() != params_.size()) throw ParameterError("gradient buffer size mismatch");
    const std::size_t na = static_cast<std::size_t>(num_actions_);
    if (kind_ == Kind::TabularSoftmax) {
        std::vector<double> p = probabilities(s);
        std::vector<double> delta(na);
        logit_grad(std::span<const double>(p), std::span<double>(delta));
        double* row = grad.data() + s.index * na;
        for (std::size_t a = 0; a < na; ++a) row[a] += delta[a];
        return;
    }

    std::vector<std::vector<double>> act;
    dense_forward(s, act);
    std::vector<double> p = act.back();
    softmax_inplace(p);
    std::vector<double> delta(na);
    logit_grad(std::span<const double>(p), std::span<double>(delta));

    // Offsets of each layer's block.
    std::vector<std::size_t> offsets(layers_.size() - 1);
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
        offsets[l] = offset;
        offset += static_cast<std::size_t>(layers_[l]) * layers_[l + 1] + layers_[l + 1];
    }
    for (std::size_t l = layers_.size() - 1; l-- > 0;) {
        const std::size_t in = static_cast<std::size_t>(layers_[l]);
        const std::size_t out = static_cast<std::size_t>(layers_[l + 1]);
        const double* w = params_.data() + offsets[l];
        double* gw = grad.data() + offsets[l];
        double* gb = gw + in * out;
        const auto& x = act[l];
        for (std::size_t i = 0; i < out; ++i) {
            const double d = delta[i];
            gb[i] += d;
            if (d == 0.0) continue;
            double* gwi = gw + i * in;
            for (std::size_t j = 0; j < in; ++j)
                if (x[j] != 0.0) gwi[j] += d * x[j];
        }
        if (l == 0) break;
        std::vector<double> prev(in, 0.0);
        for (std::size_t i = 0; i < out; ++i) {
            const double d = delta[i];
            if (d == 0.0) continue;
            const double* wi = w + i * in;
            for (std::size_t j = 0; j < in; ++j) prev[j] += wi[j] * d;
        }
        for (std::size_t j = 0; j < in; ++j) prev[j] *= 1.0 - x[j] * x[j];  // tanh'
        delta = std::move(prev);
    }
}

void Policy::add_grad_log_prob(const ExtendedState& s, int action, double scale, std::span<double> grad) const {
    if (action < 0 || action >= num_actions_) throw ParameterError("action out of range");
    add_grad_of_logits(s, grad, [&](std::span<const double> p, std::span<double> delta) {
        for (std::size_t a = 0; a < p.size(); ++a)
            delta[a] = scale * ((static_cast<int>(a) == action ? 1.0 : 0.0) - p[a]);
    });
}

double Policy::entropy(const ExtendedState& s) const {
    const auto p = probabilities(s);
    double h = 0.0;
    for (double x : p)
        if (x > 0.0) h -= x * std::log(x);
    return h;
}

void Policy::add_grad_entropy(const ExtendedState& s, double scale, std::span<double> grad) const {
    add_grad_of_logits(s, grad, [&](std::span<const double> p, std::span<double> delta) {
        double h = 0.0;
        for (double x : p)
            if (x > 0.0) h -= x * std::log(x);
        for (std::size_t a = 0; a < p.size(); ++a)
            delta[a] = p[a] > 0.0 ? -scale * p[a] * (std::log(p[a]) + h) : 0.0;
    });
}

std::vector<double> Policy::grad_log_pi(const ExtendedState& s, int action) const {
    std::vector<double> g(params_.size(), 0.0);
    add_grad_log_prob(s, action, 1.0, g);
    return g;
}

std::uint64_t Policy::checksum() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (double v : params_) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof(double));
        for (unsigned char c : bytes) {
            h ^= c;
            h *= 1099511628211ULL;
        }
    }
    return h;
}

nlohmann::json Policy::to_json() const {
    nlohmann::json j;
    j["representation"] = kind_ == Kind::TabularSoftmax ? "tabular_softmax" : "dense_net";
    j["featurizer"] = featurizer_.to_json();
    j["num_actions"] = num_actions_;
    if (kind_ == Kind::TabularSoftmax) j["num_contexts"] = num_contexts_;
    else j["layers"] = layers_;
    j["params"] = params_;
    return j;
}

Policy Policy::from_json(const nlohmann::json& j) {
    Policy p;
    const auto rep = j.at("representation").get<std::string>();
    p.featurizer_ = HistoryFeaturizer::from_json(j.at("featurizer"));
    p.num_actions_ = j.at("num_actions").get<int>();
    if (rep == "tabular_softmax") {
        p.kind_ = Kind::TabularSoftmax;
        p.num_contexts_ = j.at("num_contexts").get<std::size_t>();
    } else if (rep == "dense_net") {
        p.kind_ = Kind::DenseNet;
        p.layers_ = j.at("layers").get<std::vector<int>>();
    } else {
        throw ParameterError("unknown policy representation '" + rep + "'");
    }
    p.params_ = j.at("params").get<std::vector<double>>();
    std::size_t expected = 0;
    if (p.kind_ == Kind::TabularSoftmax) {
        expected = p.num_contexts_ * static_cast<std::size_t>(p.num_actions_);
    } else {
        for (std::size_t l = 0; l + 1 < p.layers_.size(); ++l)
            expected += static_cast<std::size_t>(p.layers_[l]) * p.layers_[l + 1] + p.layers_[l + 1];
    }
    if (p.params_.size() != expected) throw ParameterError("policy checkpoint: parameter count mismatch");
    return p;
}

Policy make_policy(const MetaMdp& env, Policy::Kind kind, const HistoryFeaturizer& featurizer,
                   const std::vector<int>& hidden, RandomStream& init_rng, double init_scale) {
    if (kind == Policy::Kind::TabularSoftmax) return Policy::tabular(featurizer, featurizer.tabular_size(env), env.num_actions());
    if (featurizer.mode() != HistoryFeaturizer::Mode::Features)
        throw ParameterError("dense policy requires the features history mode");
    return Policy::dense(featurizer, featurizer.feature_dim(env), hidden, env.num_actions(), init_rng, init_scale);
}

}  // namespace roml
