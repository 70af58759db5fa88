#include "roml/metamdp.hpp"

#include <algorithm>
#include <cmath>

#include "roml/policy.hpp"

namespace roml {

void HistoryState::record(const Transition& tr) {
    ++step;
    if (tr.hazard) {
        ++hazard_steps;
        slip_sum += tr.slip;
    }
    if (tr.slip > 0.0) slipped = true;
}

std::size_t MetaRollout::hazard_episodes() const {
    return static_cast<std::size_t>(std::count_if(episodes.begin(), episodes.end(), [](const Episode& e) { return e.hazard; }));
}

std::size_t MetaRollout::frames() const {
    std::size_t n = 0;
    for (const auto& e : episodes) n += e.steps.size();
    return n;
}

void MetaMdp::observe(int state, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    out[static_cast<std::size_t>(state)] = 1.0;
}

std::vector<std::pair<double, int>> MetaMdp::initial_distribution(const Task&) const {
    throw SizeError(name() + " does not support exact enumeration");
}

std::vector<Outcome> MetaMdp::transition_distribution(int, int, const Task&) const {
    throw SizeError(name() + " does not support exact enumeration");
}

double recompute_return(const MetaRollout& rollout, double discount) {
    double total = 0.0;
    for (const auto& ep : rollout.episodes) {
        double g = 1.0;
        for (const auto& st : ep.steps) {
            total += g * st.reward;
            g *= discount;
        }
    }
    return rollout.episodes.empty() ? 0.0 : total / static_cast<double>(rollout.episodes.size());
}

MetaRollout rollout(const MetaMdp& env, const Task& task, const Policy& policy, RandomStream& rng) {
    const int K = env.episodes();
    const int T = env.horizon();
    const double gamma = env.discount();
    MetaRollout out;
    out.task = task;
    out.episodes.resize(static_cast<std::size_t>(K));
    HistoryState history;
    double total = 0.0;
    for (int k = 0; k < K; ++k) {
        history.episode = k;
        history.step = 0;
        Episode& ep = out.episodes[static_cast<std::size_t>(k)];
        ep.steps.reserve(static_cast<std::size_t>(T));
        int s = env.initial_state(task, rng);
        double g = 1.0;
        for (int t = 0; t < T; ++t) {
            Step st;
            st.state = s;
            if (!env.is_absorbing(s)) {
                st.context = policy.featurizer().featurize(env, s, history);
                st.action = policy.act(st.context, rng);
            }
            const Transition tr = env.step(s, st.action, task, rng);
            st.reward = tr.reward;
            st.slip = tr.slip;
            ep.hazard = ep.hazard || tr.hazard;
            history.record(tr);
            total += g * tr.reward;
            g *= gamma;
            s = tr.next_state;
            ep.steps.push_back(std::move(st));
        }
    }
    out.ret = total / static_cast<double>(K);
    return out;
}

namespace {

struct Enumerator {
    const MetaMdp& env;
    const Task& task;
    const Policy& policy;
    std::vector<WeightedRollout>& out;
    int K, T;
    double gamma;

    void step(MetaRollout& partial, HistoryState history, int k, int t, int s, double prob, double total, double g) {
        if (prob == 0.0) return;
        if (t == T) {
            start_episode(partial, history, k + 1, prob, total);
            return;
        }
        history.episode = k;
        history.step = t;
        Step st;
        st.state = s;
        std::vector<std::pair<int, double>> actions;
        if (env.is_absorbing(s)) {
            actions.emplace_back(-1, 1.0);
        } else {
            st.context = policy.featurizer().featurize(env, s, history);
            const auto p = policy.probabilities(st.context);
            for (std::size_t a = 0; a < p.size(); ++a) actions.emplace_back(static_cast<int>(a), p[a]);
        }
        for (const auto& [a, pa] : actions) {
            for (const auto& o : env.transition_distribution(s, a, task)) {
                if (o.probability == 0.0) continue;
                Step copy = st;
                copy.action = a;
                copy.reward = o.transition.reward;
                copy.slip = o.transition.slip;
                auto& ep = partial.episodes[static_cast<std::size_t>(k)];
                const bool prev_hazard = ep.hazard;
                ep.hazard = ep.hazard || o.transition.hazard;
                ep.steps.push_back(std::move(copy));
                HistoryState h = history;
                h.record(o.transition);
                step(partial, h, k, t + 1, o.transition.next_state, prob * pa * o.probability,
                     total + g * o.transition.reward, g * gamma);
                ep.steps.pop_back();
                ep.hazard = prev_hazard;
            }
        }
    }

    void start_episode(MetaRollout& partial, const HistoryState& history, int k, double prob, double total) {
        if (k == K) {
            WeightedRollout w{prob, partial};
            w.rollout.ret = total / static_cast<double>(K);
            out.push_back(std::move(w));
            return;
        }
        for (const auto& [p0, s0] : env.initial_distribution(task)) {
            if (p0 == 0.0) continue;
            step(partial, history, k, 0, s0, prob * p0, total, 1.0);
        }
    }
};

}  // namespace

std::vector<WeightedRollout> enumerate_rollouts(const MetaMdp& env, const Task& task, const Policy& policy,
                                                double max_paths) {
    if (!env.enumerable()) throw SizeError(env.name() + " does not support exact enumeration");
    const double bound = std::pow(static_cast<double>(env.num_states()) * env.num_actions(),
                                  static_cast<double>(env.episodes()) * env.horizon());
    if (!(bound < max_paths))
        throw SizeError("enumeration bound (states*actions)^(K*T) = " + std::to_string(bound) + " exceeds budget");
    std::vector<WeightedRollout> out;
    MetaRollout partial;
    partial.task = task;
    partial.episodes.resize(static_cast<std::size_t>(env.episodes()));
    Enumerator e{env, task, policy, out, env.episodes(), env.horizon(), env.discount()};
    e.start_episode(partial, HistoryState{}, 0, 1.0, 0.0);
    return out;
}

std::vector<std::pair<double, double>> enumerate_returns(const MetaMdp& env, const Task& task, const Policy& policy,
                                                         double max_paths) {
    auto paths = enumerate_rollouts(env, task, policy, max_paths);
    std::vector<std::pair<double, double>> atoms;
    atoms.reserve(paths.size());
    for (const auto& w : paths) atoms.emplace_back(w.probability, w.rollout.ret);
    std::sort(atoms.begin(), atoms.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
    std::vector<std::pair<double, double>> merged;
    for (const auto& [p, r] : atoms) {
        if (!merged.empty() && std::abs(merged.back().second - r) <= 1e-12) merged.back().first += p;
        else merged.emplace_back(p, r);
    }
    return merged;
}

}  // namespace roml
