#include "roml/sinemeta.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "roml/risk.hpp"

namespace roml {

double SineTask::operator()(double x) const { return amplitude * std::sin(frequency * x + phase); }

bool SineTask::in_range() const {
    return amplitude >= kAmplitudeLo && amplitude <= kAmplitudeHi && phase >= kPhaseLo && phase <= kPhaseHi &&
           frequency >= kFrequencyLo && frequency <= kFrequencyHi;
}

SineTask SineTask::from_task(const Task& t) {
    if (t.size() != 3) throw ParameterError("a sine task has three coordinates");
    return {t[0], t[1], t[2]};
}

TaskDistribution sine_task_distribution(std::array<double, 3> phi) {
    return TaskDistribution::product({
        TaskDistribution::affine_beta_unit(phi[0], SineTask::kAmplitudeLo, SineTask::kAmplitudeHi),
        TaskDistribution::affine_beta_unit(phi[1], SineTask::kPhaseLo, SineTask::kPhaseHi),
        TaskDistribution::affine_beta_unit(phi[2], SineTask::kFrequencyLo, SineTask::kFrequencyHi),
    });
}

SineTask sample_sine_task(const TaskDistribution& dist, RandomStream& rng) {
    return SineTask::from_task(dist.sample_one(rng));
}

SineData sample_sine_data(const SineTask& task, std::size_t n, RandomStream& rng) {
    SineData d;
    d.x.reserve(n);
    d.y.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = rng.uniform(0.0, SineTask::kPhaseHi);
        d.x.push_back(x);
        d.y.push_back(task(x));
    }
    return d;
}

Regressor Regressor::create(std::vector<int> hidden, RandomStream& init_rng) {
    Regressor r;
    r.layers_.push_back(1);
    for (int h : hidden) {
        if (h < 1) throw ParameterError("hidden layer sizes must be positive");
        r.layers_.push_back(h);
    }
    r.layers_.push_back(1);
    for (std::size_t l = 0; l + 1 < r.layers_.size(); ++l) {
        const int in = r.layers_[l];
        const int out = r.layers_[l + 1];
        const double scale = 1.0 / std::sqrt(static_cast<double>(in));
        for (int i = 0; i < in * out; ++i) r.params_.push_back(init_rng.normal(0.0, scale));
        for (int i = 0; i < out; ++i) r.params_.push_back(0.0);
    }
    return r;
}

namespace {

// Forward pass over one input; acts[l] is the input to layer l (acts.back() is the output).
void forward(const std::vector<int>& layers, const double* p, double x, std::vector<std::vector<double>>& acts) {
    acts.resize(layers.size());
    acts[0].assign(1, x);
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
        const std::size_t in = static_cast<std::size_t>(layers[l]);
        const std::size_t out = static_cast<std::size_t>(layers[l + 1]);
        const double* w = p + off;
        const double* b = w + in * out;
        auto& y = acts[l + 1];
        y.assign(b, b + out);
        const auto& xin = acts[l];
        // Column sweeps (axpy) vectorize; row dot products would not.
        for (std::size_t j = 0; j < in; ++j) {
            const double xj = xin[j];
            for (std::size_t i = 0; i < out; ++i) y[i] += w[i * in + j] * xj;
        }
        if (l + 2 < layers.size())
            for (auto& v : y) v = std::tanh(v);
        off += in * out + out;
    }
}

double loss_grad_impl(const std::vector<int>& layers, const double* p, std::size_t np, const SineData& data,
                      std::vector<double>* grad) {
    if (data.size() == 0) throw ParameterError("loss needs at least one point");
    if (grad) grad->assign(np, 0.0);
    std::vector<std::vector<double>> acts;
    std::vector<std::size_t> offsets(layers.size() - 1);
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
        offsets[l] = off;
        off += static_cast<std::size_t>(layers[l]) * layers[l + 1] + layers[l + 1];
    }
    const double inv_n = 1.0 / static_cast<double>(data.size());
    double total = 0.0;
    std::vector<double> delta, prev;
    for (std::size_t k = 0; k < data.size(); ++k) {
        forward(layers, p, data.x[k], acts);
        const double err = acts.back()[0] - data.y[k];
        total += err * err;
        if (!grad) continue;
        delta.assign(1, 2.0 * err * inv_n);
        for (std::size_t l = layers.size() - 1; l-- > 0;) {
            const std::size_t in = static_cast<std::size_t>(layers[l]);
            const std::size_t out = static_cast<std::size_t>(layers[l + 1]);
            const double* w = p + offsets[l];
            double* gw = grad->data() + offsets[l];
            double* gb = gw + in * out;
            const auto& x = acts[l];
            for (std::size_t i = 0; i < out; ++i) {
                gb[i] += delta[i];
                double* gwi = gw + i * in;
                for (std::size_t j = 0; j < in; ++j) gwi[j] += delta[i] * x[j];
            }
            if (l == 0) break;
            prev.assign(in, 0.0);
            for (std::size_t i = 0; i < out; ++i) {
                const double* wi = w + i * in;
                for (std::size_t j = 0; j < in; ++j) prev[j] += wi[j] * delta[i];
            }
            for (std::size_t j = 0; j < in; ++j) prev[j] *= 1.0 - x[j] * x[j];
            delta.swap(prev);
        }
    }
    return total * inv_n;
}

// Hessian of the MSE times v (Pearlmutter R-operator through forward and backward passes).
void hvp_impl(const std::vector<int>& layers, const double* p, std::size_t np, const SineData& data,
              std::span<const double> v, std::vector<double>& out) {
    out.assign(np, 0.0);
    const std::size_t L = layers.size() - 1;
    std::vector<std::size_t> offsets(L);
    std::size_t off = 0;
    for (std::size_t l = 0; l < L; ++l) {
        offsets[l] = off;
        off += static_cast<std::size_t>(layers[l]) * layers[l + 1] + layers[l + 1];
    }
    const double inv_n = 1.0 / static_cast<double>(data.size());
    std::vector<std::vector<double>> acts, racts(L + 1);
    std::vector<double> delta, rdelta, prev, rprev;
    for (std::size_t k = 0; k < data.size(); ++k) {
        forward(layers, p, data.x[k], acts);
        racts[0].assign(1, 0.0);
        for (std::size_t l = 0; l < L; ++l) {
            const std::size_t in = static_cast<std::size_t>(layers[l]);
            const std::size_t outn = static_cast<std::size_t>(layers[l + 1]);
            const double* w = p + offsets[l];
            const double* vw = v.data() + offsets[l];
            const double* vb = vw + in * outn;
            auto& r = racts[l + 1];
            r.assign(vb, vb + outn);
            for (std::size_t j = 0; j < in; ++j) {
                const double xj = acts[l][j], rj = racts[l][j];
                for (std::size_t i = 0; i < outn; ++i) r[i] += vw[i * in + j] * xj + w[i * in + j] * rj;
            }
            if (l + 1 < L)
                for (std::size_t i = 0; i < outn; ++i) r[i] *= 1.0 - acts[l + 1][i] * acts[l + 1][i];
        }
        const double err = acts.back()[0] - data.y[k];
        delta.assign(1, 2.0 * err * inv_n);
        rdelta.assign(1, 2.0 * racts.back()[0] * inv_n);
        for (std::size_t l = L; l-- > 0;) {
            const std::size_t in = static_cast<std::size_t>(layers[l]);
            const std::size_t outn = static_cast<std::size_t>(layers[l + 1]);
            const double* w = p + offsets[l];
            const double* vw = v.data() + offsets[l];
            double* gw = out.data() + offsets[l];
            double* gb = gw + in * outn;
            const auto& x = acts[l];
            const auto& rx = racts[l];
            for (std::size_t i = 0; i < outn; ++i) {
                gb[i] += rdelta[i];
                for (std::size_t j = 0; j < in; ++j) gw[i * in + j] += rdelta[i] * x[j] + delta[i] * rx[j];
            }
            if (l == 0) break;
            prev.assign(in, 0.0);
            rprev.assign(in, 0.0);
            for (std::size_t i = 0; i < outn; ++i)
                for (std::size_t j = 0; j < in; ++j) {
                    prev[j] += w[i * in + j] * delta[i];
                    rprev[j] += vw[i * in + j] * delta[i] + w[i * in + j] * rdelta[i];
                }
            for (std::size_t j = 0; j < in; ++j) {
                const double d = 1.0 - x[j] * x[j];
                rprev[j] = rprev[j] * d - 2.0 * x[j] * rx[j] * prev[j];
                prev[j] *= d;
            }
            delta.swap(prev);
            rdelta.swap(rprev);
        }
    }
}

}  // namespace

double Regressor::predict(double x) const {
    std::vector<std::vector<double>> acts;
    forward(layers_, params_.data(), x, acts);
    return acts.back()[0];
}

double Regressor::loss(const SineData& data) const {
    return loss_grad_impl(layers_, params_.data(), params_.size(), data, nullptr);
}

double Regressor::loss_and_grad(const SineData& data, std::vector<double>& grad) const {
    return loss_grad_impl(layers_, params_.data(), params_.size(), data, &grad);
}

void Regressor::hessian_vector(const SineData& data, std::span<const double> v, std::vector<double>& out) const {
    if (v.size() != params_.size()) throw ParameterError("direction has the wrong size");
    if (data.size() == 0) throw ParameterError("loss needs at least one point");
    hvp_impl(layers_, params_.data(), params_.size(), data, v, out);
}

Regressor Regressor::adapted(const SineData& data, double lr, int steps) const {
    Regressor r = *this;
    std::vector<double> g;
    for (int s = 0; s < steps; ++s) {
        r.loss_and_grad(data, g);
        for (std::size_t i = 0; i < g.size(); ++i) r.params_[i] -= lr * g[i];
    }
    return r;
}

std::uint64_t Regressor::checksum() const {
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

FomamlResult fomaml_gradient(const Regressor& model, const SineData& support, const SineData& query, double inner_lr) {
    const Regressor adapted = model.adapted(support, inner_lr, 1);
    FomamlResult res;
    res.query_loss = adapted.loss_and_grad(query, res.grad);
    return res;
}

FomamlResult maml_gradient(const Regressor& model, const SineData& support, const SineData& query, double inner_lr) {
    FomamlResult res = fomaml_gradient(model, support, query, inner_lr);
    std::vector<double> hv;
    model.hessian_vector(support, res.grad, hv);
    for (std::size_t i = 0; i < hv.size(); ++i) res.grad[i] -= inner_lr * hv[i];
    return res;
}

double maml_objective(const Regressor& model, std::span<const double> params, const SineData& support,
                      const SineData& query, double inner_lr) {
    if (params.size() != model.num_params()) throw ParameterError("parameter vector has the wrong size");
    Regressor r = model;
    r.mutable_params().assign(params.begin(), params.end());
    return r.adapted(support, inner_lr, 1).loss(query);
}

double fomaml_surrogate(const Regressor& model, std::span<const double> params, const SineData& support,
                        const SineData& query, double inner_lr) {
    if (params.size() != model.num_params()) throw ParameterError("parameter vector has the wrong size");
    std::vector<double> g;
    model.loss_and_grad(support, g);
    Regressor shifted = model;
    auto& p = shifted.mutable_params();
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = params[i] - inner_lr * g[i];
    return shifted.loss(query);
}

MetaTrainStep meta_train_step(const Regressor& model, const SineData& support, const SineData& query,
                              double inner_lr, double outer_lr) {
    const FomamlResult r = fomaml_gradient(model, support, query, inner_lr);
    MetaTrainStep out{model, r.query_loss};
    auto& p = out.model.mutable_params();
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= outer_lr * r.grad[i];
    return out;
}

void Adam::step(std::vector<double>& params, std::span<const double> grad) {
    if (grad.size() != params.size()) throw ParameterError("gradient size mismatch");
    if (m_.empty()) {
        m_.assign(params.size(), 0.0);
        v_.assign(params.size(), 0.0);
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
        params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
}

namespace {

Regressor initial_model(const SineConfig& c) {
    RandomStream rng(c.init_seed);
    return Regressor::create(c.hidden, rng);
}

}  // namespace

SineProblem::SineProblem(SineConfig config)
    : config_(std::move(config)), model_(initial_model(config_)), adam_(config_.outer_lr) {
    if (config_.support == 0 || config_.query == 0) throw ParameterError("support and query sets must be non-empty");
    if (config_.minibatch == 0) throw ParameterError("minibatch must be >= 1");
    if (config_.test_steps.empty()) throw ParameterError("at least one test-time step count is needed");
    for (int s : config_.test_steps)
        if (s < 0) throw ParameterError("test-time step counts must be >= 0");
}

SineSample SineProblem::generate(const Task& task, RandomStream& rng) const {
    SineSample s;
    s.task = SineTask::from_task(task);
    s.support = sample_sine_data(s.task, config_.support, rng);
    s.query = sample_sine_data(s.task, config_.query, rng);
    s.query_loss = model_.adapted(s.support, config_.inner_lr, 1).loss(s.query);
    return s;
}

FomamlResult SineProblem::outer_gradient(const Sample& s) const {
    return config_.first_order ? fomaml_gradient(model_, s.support, s.query, config_.inner_lr)
                               : maml_gradient(model_, s.support, s.query, config_.inner_lr);
}

void SineProblem::ml_step(std::span<const Sample> batch) {
    auto& p = model_.mutable_params();
    std::vector<double> g(p.size());
    for (std::size_t start = 0; start < batch.size(); start += config_.minibatch) {
        const std::size_t end = std::min(batch.size(), start + config_.minibatch);
        std::fill(g.begin(), g.end(), 0.0);
        for (std::size_t i = start; i < end; ++i) {
            const FomamlResult r = outer_gradient(batch[i]);
            for (std::size_t k = 0; k < g.size(); ++k) g[k] += r.grad[k];
        }
        const double inv = 1.0 / static_cast<double>(end - start);
        for (double& x : g) x *= inv;
        adam_.step(p, g);
    }
}

std::vector<std::string> SineProblem::extra_names() const {
    std::vector<std::string> names;
    for (int s : config_.test_steps) names.push_back("mean_loss_" + std::to_string(s));
    for (int s : config_.test_steps) names.push_back("cvar_loss_" + std::to_string(s));
    return names;
}

EvalResult SineProblem::evaluate(std::size_t n, double alpha, RandomStream rng) const {
    if (n == 0) throw ParameterError("evaluation needs at least one task");
    const TaskDistribution dist = task_distribution();
    const std::size_t k = config_.test_steps.size();
    std::vector<std::vector<double>> neg_losses(k);
    EvalResult res;
    for (std::size_t i = 0; i < n; ++i) {
        res.tasks.push_back(dist.sample_one(rng));
        const SineTask task = SineTask::from_task(res.tasks.back());
        RandomStream r = rng.split({i});
        const SineData support = sample_sine_data(task, config_.support, r);
        const SineData query = sample_sine_data(task, config_.query, r);
        // Step counts need not be sorted; adapt incrementally from the previous count.
        std::vector<std::size_t> order(k);
        for (std::size_t j = 0; j < k; ++j) order[j] = j;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return config_.test_steps[a] < config_.test_steps[b]; });
        Regressor m = model_;
        int done = 0;
        for (std::size_t j : order) {
            m = m.adapted(support, config_.inner_lr, config_.test_steps[j] - done);
            done = config_.test_steps[j];
            neg_losses[j].push_back(-m.loss(query));
        }
    }
    res.per_task_returns = neg_losses[0];
    res.mean = mean(res.per_task_returns);
    res.cvar = cvar(res.per_task_returns, alpha);
    for (std::size_t j = 0; j < k; ++j) res.extra.push_back(-mean(neg_losses[j]));
    for (std::size_t j = 0; j < k; ++j) res.extra.push_back(-cvar(neg_losses[j], alpha));
    return res;
}

TrainTrace run_supervised(const TrainConfig& cfg, const SineConfig& sine) {
    SineProblem problem(sine);
    return run_meta_training(cfg, problem);
}

}  // namespace roml
