#include "roml/tabular_mdp.hpp"

#include <algorithm>
#include <cmath>

namespace roml {

TabularMetaMdp::TabularMetaMdp(std::string name, std::size_t num_states, int num_actions, int horizon, int episodes,
                               double discount, std::vector<TaskTable> tasks)
    : name_(std::move(name)),
      num_states_(num_states),
      num_actions_(num_actions),
      horizon_(horizon),
      episodes_(episodes),
      discount_(discount),
      tasks_(std::move(tasks)) {
    if (num_states_ == 0 || num_actions_ < 1) throw ParameterError("tabular meta-MDP needs states and actions");
    if (horizon_ < 1 || episodes_ < 1) throw ParameterError("tabular meta-MDP needs T >= 1 and K >= 1");
    if (!(discount_ > 0.0 && discount_ <= 1.0)) throw ParameterError("discount must lie in (0, 1]");
    if (tasks_.empty()) throw ParameterError("tabular meta-MDP needs at least one task");
    double total = 0.0;
    for (const auto& t : tasks_) {
        if (!(t.probability > 0.0)) throw ParameterError("task probabilities must be positive");
        if (t.outcomes.size() != num_states_) throw ParameterError("transition table has wrong state count");
        for (const auto& row : t.outcomes) {
            if (row.size() != static_cast<std::size_t>(num_actions_))
                throw ParameterError("transition table has wrong action count");
            for (const auto& cell : row) {
                double p = 0.0;
                for (const auto& o : cell) p += o.probability;
                if (std::abs(p - 1.0) > 1e-12) throw ParameterError("transition probabilities must sum to 1");
            }
        }
        total += t.probability;
        cumulative_.push_back(total);
    }
    if (std::abs(total - 1.0) > 1e-12) throw ParameterError("task probabilities must sum to 1");
    cumulative_.back() = 1.0;
}

std::size_t TabularMetaMdp::task_index(const Task& task) const {
    const double u = task.at(0);
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min(static_cast<std::size_t>(it - cumulative_.begin()), tasks_.size() - 1);
}

Task TabularMetaMdp::task_value(std::size_t i) const {
    const double lo = i == 0 ? 0.0 : cumulative_[i - 1];
    return {0.5 * (lo + cumulative_[i])};
}

int TabularMetaMdp::initial_state(const Task& task, RandomStream& rng) const {
    const auto& init = table(task).initial;
    double u = rng.uniform();
    for (std::size_t i = 0; i + 1 < init.size(); ++i) {
        if (u < init[i].first) return init[i].second;
        u -= init[i].first;
    }
    return init.back().second;
}

Transition TabularMetaMdp::step(int state, int action, const Task& task, RandomStream& rng) const {
    const auto& cell = table(task).outcomes.at(static_cast<std::size_t>(state)).at(static_cast<std::size_t>(action));
    double u = rng.uniform();
    for (std::size_t i = 0; i + 1 < cell.size(); ++i) {
        if (u < cell[i].probability) return cell[i].transition;
        u -= cell[i].probability;
    }
    return cell.back().transition;
}

std::vector<std::pair<double, int>> TabularMetaMdp::initial_distribution(const Task& task) const {
    return table(task).initial;
}

std::vector<Outcome> TabularMetaMdp::transition_distribution(int state, int action, const Task& task) const {
    return table(task).outcomes.at(static_cast<std::size_t>(state)).at(static_cast<std::size_t>(action));
}

namespace {

Outcome out(double p, int next, double reward) { return {p, Transition{next, reward, 0.0, false}}; }

}  // namespace

TabularMetaMdp TabularMetaMdp::canonical_chain() {
    // States 0 -> 1 -> 2 along a chain. Action 1 tries to advance, action 0 stays.
    // Tasks differ in how slippery the advance is and in the reward at the end.
    auto make = [](double prob, double slip, double end_reward, double stay_reward) {
        TaskTable t;
        t.probability = prob;
        t.initial = {{0.7, 0}, {0.3, 1}};
        t.outcomes.assign(3, std::vector<std::vector<Outcome>>(2));
        for (int s = 0; s < 3; ++s) {
            const int next = std::min(s + 1, 2);
            const double adv_reward = next == 2 ? end_reward : 0.2;
            t.outcomes[static_cast<std::size_t>(s)][0] = {out(1.0, s, stay_reward)};
            t.outcomes[static_cast<std::size_t>(s)][1] = {out(1.0 - slip, next, adv_reward), out(slip, s, -0.5)};
        }
        return t;
    };
    return TabularMetaMdp("canonical_chain", 3, 2, 2, 1, 1.0,
                          {make(0.5, 0.1, 1.0, 0.1), make(0.3, 0.4, 2.0, 0.0), make(0.2, 0.7, 0.5, -0.2)});
}

TabularMetaMdp TabularMetaMdp::bandit(const std::vector<std::vector<std::pair<double, double>>>& rewards) {
    TaskTable t;
    t.probability = 1.0;
    t.initial = {{1.0, 0}};
    t.outcomes.assign(1, std::vector<std::vector<Outcome>>(rewards.size()));
    for (std::size_t a = 0; a < rewards.size(); ++a)
        for (const auto& [p, r] : rewards[a]) t.outcomes[0][a].push_back(out(p, 0, r));
    return TabularMetaMdp("bandit", 1, static_cast<int>(rewards.size()), 1, 1, 1.0, {t});
}

TabularMetaMdp TabularMetaMdp::multi_task_bandit(const std::vector<std::vector<double>>& arm_means, double spread) {
    std::vector<TaskTable> tasks;
    const double p = 1.0 / static_cast<double>(arm_means.size());
    const int actions = static_cast<int>(arm_means.at(0).size());
    for (const auto& means : arm_means) {
        TaskTable t;
        t.probability = p;
        t.initial = {{1.0, 0}};
        t.outcomes.assign(1, std::vector<std::vector<Outcome>>(means.size()));
        for (std::size_t a = 0; a < means.size(); ++a) {
            if (spread > 0.0) t.outcomes[0][a] = {out(0.5, 0, means[a] - spread), out(0.5, 0, means[a] + spread)};
            else t.outcomes[0][a] = {out(1.0, 0, means[a])};
        }
        tasks.push_back(std::move(t));
    }
    return TabularMetaMdp("multi_task_bandit", 1, actions, 1, 1, 1.0, std::move(tasks));
}

}  // namespace roml
