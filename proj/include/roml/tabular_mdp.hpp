#pragma once

#include <string>
#include <vector>

#include "roml/metamdp.hpp"

namespace roml {

/// Finite meta-MDP given by explicit tables, small enough for exact enumeration.
///
/// The task value is a single coordinate u in [0, 1] drawn uniformly; it selects
/// task i when u falls in the i-th interval of the cumulative task probabilities.
/// This keeps the original distribution a member of the BetaUnit family.
class TabularMetaMdp final : public MetaMdp {
public:
    struct TaskTable {
        double probability = 0.0;
        std::vector<std::pair<double, int>> initial;              // (p, state)
        std::vector<std::vector<std::vector<Outcome>>> outcomes;  // [state][action]
    };

    TabularMetaMdp(std::string name, std::size_t num_states, int num_actions, int horizon, int episodes,
                   double discount, std::vector<TaskTable> tasks);

    std::string name() const override { return name_; }
    std::size_t num_states() const override { return num_states_; }
    int num_actions() const override { return num_actions_; }
    int horizon() const override { return horizon_; }
    int episodes() const override { return episodes_; }
    double discount() const override { return discount_; }
    TaskDistribution task_distribution() const override { return TaskDistribution::beta_unit(0.5); }

    int initial_state(const Task& task, RandomStream& rng) const override;
    Transition step(int state, int action, const Task& task, RandomStream& rng) const override;

    bool enumerable() const override { return true; }
    std::vector<std::pair<double, int>> initial_distribution(const Task& task) const override;
    std::vector<Outcome> transition_distribution(int state, int action, const Task& task) const override;

    std::size_t num_tasks() const { return tasks_.size(); }
    double task_probability(std::size_t i) const { return tasks_[i].probability; }
    std::size_t task_index(const Task& task) const;
    /// A task value inside the interval of task i (its midpoint).
    Task task_value(std::size_t i) const;

    /// 3 states, 2 actions, K=1, T=2, three tasks with unequal probabilities and
    /// stochastic transitions.
    static TabularMetaMdp canonical_chain();
    /// One state, one step, one task: each arm pays from its own discrete distribution.
    /// rewards[a] lists (probability, reward) atoms.
    static TabularMetaMdp bandit(const std::vector<std::vector<std::pair<double, double>>>& rewards);
    /// Equiprobable tasks over a one-step bandit; arm_means[i][a] is the mean payoff
    /// of arm a in task i, paid as mean +- spread with equal probability.
    static TabularMetaMdp multi_task_bandit(const std::vector<std::vector<double>>& arm_means, double spread);

private:
    const TaskTable& table(const Task& task) const { return tasks_[task_index(task)]; }

    std::string name_;
    std::size_t num_states_;
    int num_actions_;
    int horizon_;
    int episodes_;
    double discount_;
    std::vector<TaskTable> tasks_;
    std::vector<double> cumulative_;
};

}  // namespace roml
