#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "roml/random.hpp"
#include "roml/taskdist.hpp"

namespace roml {

class Policy;

/// Raised when an exact enumeration would exceed its size budget.
class SizeError : public std::length_error {
public:
    using std::length_error::length_error;
};

/// Result of one environment step.
struct Transition {
    int next_state = 0;
    double reward = 0.0;
    double slip = 0.0;    // magnitude of the action noise the agent experienced
    bool hazard = false;  // the step started on a hazardous cell (Khazad Dum: the bridge)
};

struct Outcome {
    double probability = 0.0;
    Transition transition;
};

/// Agent memory summary carried across the K episodes of one meta-rollout.
struct HistoryState {
    int episode = 0;
    int step = 0;
    double slip_sum = 0.0;
    int hazard_steps = 0;
    bool slipped = false;

    double mean_slip() const { return hazard_steps > 0 ? slip_sum / hazard_steps : 0.0; }
    void record(const Transition& tr);
};

/// Extended state s~ = (s, h): a discrete index for tabular consumers and a
/// feature vector for function approximators.
struct ExtendedState {
    std::size_t index = 0;
    std::vector<double> features;
};

struct Step {
    int state = 0;
    int action = -1;  // -1: absorbing state, no decision taken
    double reward = 0.0;
    double slip = 0.0;
    ExtendedState context;  // only filled for decision steps
};

struct Episode {
    std::vector<Step> steps;
    bool hazard = false;  // visited a hazardous cell
};

/// K episodes on one task, sharing the agent's history.
struct MetaRollout {
    Task task;
    std::vector<Episode> episodes;
    double ret = 0.0;  // (1/K) sum_k sum_t gamma^t r_{k,t}

    std::size_t hazard_episodes() const;
    std::size_t frames() const;
};

/// A family of MDPs indexed by a task, sharing state and action spaces.
class MetaMdp {
public:
    virtual ~MetaMdp() = default;

    virtual std::string name() const = 0;
    virtual std::size_t num_states() const = 0;
    virtual int num_actions() const = 0;
    virtual int horizon() const = 0;   // T
    virtual int episodes() const = 0;  // K
    virtual double discount() const { return 1.0; }

    /// The original task distribution D.
    virtual TaskDistribution task_distribution() const = 0;

    virtual int initial_state(const Task& task, RandomStream& rng) const = 0;
    /// Absorbing states ignore the action; the agent takes no decision there.
    virtual bool is_absorbing(int /*state*/) const { return false; }
    virtual Transition step(int state, int action, const Task& task, RandomStream& rng) const = 0;

    virtual std::size_t observation_dim() const { return num_states(); }
    /// Writes the observation of `state` into out (size observation_dim()); default one-hot.
    virtual void observe(int state, std::span<double> out) const;

    /// Exact distributions, for enumerable environments only.
    virtual bool enumerable() const { return false; }
    virtual std::vector<std::pair<double, int>> initial_distribution(const Task& task) const;
    virtual std::vector<Outcome> transition_distribution(int state, int action, const Task& task) const;
};

/// Recomputes (1/K) sum_k sum_t gamma^t r_{k,t} from the stored triplets.
double recompute_return(const MetaRollout& rollout, double discount);

/// K sequential episodes of `policy` on `task`; the history carries across episodes.
MetaRollout rollout(const MetaMdp& env, const Task& task, const Policy& policy, RandomStream& rng);

struct WeightedRollout {
    double probability = 0.0;
    MetaRollout rollout;
};

/// Every meta-rollout with its exact probability. Throws SizeError when
/// (states * actions)^(K T) reaches `max_paths`.
std::vector<WeightedRollout> enumerate_rollouts(const MetaMdp& env, const Task& task, const Policy& policy,
                                                double max_paths = 1e7);

/// Exact return distribution as (probability, return) atoms, sorted by return.
std::vector<std::pair<double, double>> enumerate_returns(const MetaMdp& env, const Task& task, const Policy& policy,
                                                         double max_paths = 1e7);

}  // namespace roml
