#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "roml/policy.hpp"
#include "roml/tabular_mdp.hpp"

// Brute-force reference computations. Everything here works from the
// environment tables and the raw tabular parameters; none of it calls the
// rollout, featurizer or gradient code it is meant to check.

namespace roml {

struct OracleReport {
    /// Match: estimate equals oracle within tolerance. Mismatch: it must not.
    /// AtMost: estimate <= oracle + abs_tol, coordinate-wise.
    enum class Check { Match, Mismatch, AtMost };

    std::string name;
    std::vector<double> oracle;
    std::vector<double> estimate;
    double abs_error = 0.0;  // max_i |estimate_i - oracle_i|
    double rel_error = 0.0;  // abs_error / max_i |oracle_i| (abs_error when the oracle is zero)
    double abs_tol = 0.0;
    double rel_tol = 0.0;
    Check check = Check::Match;
    bool pass = false;       // Match: abs_error <= abs_tol or rel_error <= rel_tol

    static OracleReport compare(std::string name, std::vector<double> oracle, std::vector<double> estimate,
                                double abs_tol, double rel_tol, Check check = Check::Match);
    /// Recomputes the discrepancy fields and the verdict from the vectors.
    void recompute();
    nlohmann::json to_json() const;
};

/// Central differences, one coordinate at a time. When the estimates at step and
/// 10 * step disagree by more than a curvature tolerance, the result is the
/// Richardson extrapolation of the estimates at step and step / 10.
std::vector<double> fd_gradient(const std::function<double(std::span<const double>)>& objective,
                                std::span<const double> params, double step = 1e-5);

/// One path of a meta-rollout: probability, return and d/dtheta log probability.
struct OraclePath {
    double probability = 0.0;
    double ret = 0.0;
    std::vector<double> score;
};

/// All meta-rollouts of task `task` under tabular parameters `theta`, using the
/// featurizer options of `policy` to lay out contexts. Throws SizeError past `max_paths`.
std::vector<OraclePath> oracle_paths(const TabularMetaMdp& env, std::size_t task, const Policy& policy,
                                     std::span<const double> theta, double max_paths = 1e7);

/// Exact V_z for every task.
std::vector<double> oracle_task_values(const TabularMetaMdp& env, const Policy& policy, std::span<const double> theta);

/// Tail membership w_z in [0, 1] of atoms (values, probabilities) for level alpha:
/// the lowest atoms are fully in, the boundary atom is in by the fraction that
/// completes mass alpha.
std::vector<double> tail_membership(std::span<const double> values, std::span<const double> probabilities,
                                    double alpha);
/// (1 / alpha) sum_z p_z w_z v_z.
double atom_cvar(std::span<const double> values, std::span<const double> probabilities, double alpha);
/// Smallest atom v with P(V <= v) >= alpha.
double atom_quantile(std::span<const double> values, std::span<const double> probabilities, double alpha);

/// CVaR_alpha over tasks of the exact task values.
double exact_cvar_meta_objective(const TabularMetaMdp& env, const Policy& policy, double alpha,
                                 std::span<const double> theta);
double exact_cvar_meta_objective(const TabularMetaMdp& env, const Policy& policy, double alpha);

/// CVaR_alpha of the return distribution, mixed over tasks.
double exact_rl_cvar_objective(const TabularMetaMdp& env, const Policy& policy, double alpha,
                               std::span<const double> theta);
double exact_return_quantile(const TabularMetaMdp& env, const Policy& policy, double alpha);

struct EstimatorConfig {
    enum class Kind { MetaCvar, RlCvar };
    Kind kind = Kind::MetaCvar;
    double alpha = 1.0;
    std::size_t n = 2;  // tasks (meta) or trajectories (RL) per batch
    std::size_t m = 1;  // rollouts per task, meta only
    double baseline = 0.0;
    bool batch_mean_baseline = false;    // b = E_D[V], computed exactly
    std::optional<double> quantile;      // RL selection threshold; exact q_alpha when unset
    double max_realizations = 2e7;
};

struct EstimatorExpectation {
    std::vector<double> mean;
    std::vector<double> std_error;  // zeros in exact mode
    double realizations = 0.0;      // enumerated batches or Monte-Carlo samples
    double baseline = 0.0;          // the b actually used
};

/// Expectation of cvar_ml_gradient (Kind::MetaCvar) or rl_cvar_pg_gradient
/// (Kind::RlCvar) over the batch sample space.
///
/// Exact mode enumerates every batch. The meta selection is fixed at exact tail
/// membership; a boundary task is selected with probability w_z. The RL
/// selection uses the exact return quantile. Monte-Carlo mode draws batches from
/// D and lets both estimators use their batch order statistics, which exposes
/// quantile noise.
EstimatorExpectation estimator_expectation(const EstimatorConfig& config, const TabularMetaMdp& env,
                                           const Policy& policy, bool exact, std::uint64_t seed = 0,
                                           std::size_t mc_samples = 1000000);

/// Moments of one meta-rollout's G = (R - b) * score under the original task
/// distribution D (scaled by 1/alpha and restricted to the tail) and under the
/// tail distribution D_alpha. Batch size n divides both variances.
struct Prop1Report {
    double alpha = 1.0;
    std::size_t n = 1;
    OracleReport mean;      // oracle: E_D[alpha^-1 1{tail} G], estimate: E_{D_alpha}[G]
    OracleReport variance;  // oracle: alpha * trace Var_D, estimate: trace Var_{D_alpha}
    double var_original = 0.0;
    double var_tail = 0.0;
    bool strict = false;    // var_tail < alpha * var_original
    bool pass() const { return mean.pass && variance.pass; }
};

Prop1Report prop1_report(const TabularMetaMdp& env, const Policy& policy, double alpha, std::size_t n,
                         double baseline = 0.0);

/// The tabular policy with by-step contexts used by the checks.
Policy oracle_policy(const TabularMetaMdp& env, std::uint64_t seed, double scale = 0.7);
/// Two-armed bandit whose lower return atoms move with the arm probabilities.
TabularMetaMdp contrast_bandit();

struct OracleSuiteOptions {
    std::uint64_t seed = 7;
    bool flip_rl_baseline = false;  // fault injection: negates the matched RL baseline
};

/// Unbiasedness, RL-baseline contrast and tail-sampling reports.
std::vector<OracleReport> run_oracle_suite(const OracleSuiteOptions& options = {});

}  // namespace roml
