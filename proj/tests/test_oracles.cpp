#include <doctest.h>

#include <cmath>
#include <map>

#include "roml/learner.hpp"
#include "roml/oracles.hpp"
#include "roml/tabular_mdp.hpp"

using namespace roml;

TEST_CASE("report verdicts") {
    auto r = OracleReport::compare("x", {1.0, 2.0}, {1.0, 2.1}, 1e-3, 0.06);
    CHECK(r.abs_error == doctest::Approx(0.1));
    CHECK(r.rel_error == doctest::Approx(0.05));
    CHECK(r.pass);
    CHECK_FALSE(OracleReport::compare("x", {1.0, 2.0}, {1.0, 2.1}, 1e-3, 0.01).pass);
    CHECK(OracleReport::compare("x", {1.0}, {1.5}, 1e-3, 0.01, OracleReport::Check::Mismatch).pass);
    CHECK(OracleReport::compare("x", {1.0}, {0.5}, 0.0, 0.0, OracleReport::Check::AtMost).pass);
    CHECK_FALSE(OracleReport::compare("x", {1.0}, {1.5}, 0.0, 0.0, OracleReport::Check::AtMost).pass);
    CHECK(r.to_json()["name"] == "x");
}

TEST_CASE("finite differences of a known function") {
    const auto f = [](std::span<const double> x) { return std::sin(x[0]) * x[1] * x[1] + std::exp(x[0]); };
    const std::vector<double> p{0.3, -1.2};
    const auto g = fd_gradient(f, p);
    CHECK(g[0] == doctest::Approx(std::cos(0.3) * 1.44 + std::exp(0.3)).epsilon(1e-9));
    CHECK(g[1] == doctest::Approx(std::sin(0.3) * 2 * -1.2).epsilon(1e-9));
}

TEST_CASE("tail membership, atom cvar and quantile") {
    const std::vector<double> v{3.0, 1.0, 2.0};
    const std::vector<double> p{0.5, 0.3, 0.2};
    const auto w = tail_membership(v, p, 0.4);
    CHECK(w[1] == doctest::Approx(1.0));
    CHECK(w[2] == doctest::Approx(0.5));
    CHECK(w[0] == doctest::Approx(0.0));
    CHECK(atom_cvar(v, p, 0.4) == doctest::Approx((0.3 * 1.0 + 0.1 * 2.0) / 0.4));
    CHECK(atom_cvar(v, p, 1.0) == doctest::Approx(0.5 * 3 + 0.3 + 0.4));
    CHECK(atom_quantile(v, p, 0.3) == 1.0);
    CHECK(atom_quantile(v, p, 0.31) == 2.0);
    CHECK(atom_quantile(v, p, 1.0) == 3.0);
}

TEST_CASE("oracle paths agree with the main enumerator") {
    const auto env = TabularMetaMdp::canonical_chain();
    const Policy p = oracle_policy(env, 3);
    for (std::size_t task = 0; task < env.num_tasks(); ++task) {
        const auto paths = oracle_paths(env, task, p, p.params());
        const auto main = enumerate_rollouts(env, env.task_value(task), p);
        // Group both by return; the path sets can differ in how they split atoms.
        std::map<double, double> a, b;
        double mass = 0.0;
        for (const auto& x : paths) {
            a[std::round(x.ret * 1e9)] += x.probability;
            mass += x.probability;
        }
        for (const auto& x : main) b[std::round(x.rollout.ret * 1e9)] += x.probability;
        CHECK(mass == doctest::Approx(1.0));
        REQUIRE(a.size() == b.size());
        for (const auto& [k, q] : a) CHECK(b[k] == doctest::Approx(q));
        // Expected score times return equals the main-code estimate.
        std::vector<double> ga(p.num_params(), 0.0), gb(p.num_params(), 0.0);
        for (const auto& x : paths)
            for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += x.probability * x.ret * x.score[i];
        for (const auto& x : main) {
            const auto s = score_function(p, x.rollout);
            for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += x.probability * x.rollout.ret * s[i];
        }
        for (std::size_t i = 0; i < ga.size(); ++i) CHECK(ga[i] == doctest::Approx(gb[i]).epsilon(1e-10).scale(1e-12));
    }
}

TEST_CASE("exact objectives at alpha = 1 are the mean") {
    const auto env = TabularMetaMdp::canonical_chain();
    const Policy p = oracle_policy(env, 4);
    const auto v = oracle_task_values(env, p, p.params());
    double mean = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) mean += env.task_probability(i) * v[i];
    CHECK(exact_cvar_meta_objective(env, p, 1.0) == doctest::Approx(mean));
    CHECK(exact_rl_cvar_objective(env, p, 1.0, p.params()) == doctest::Approx(mean));
    CHECK(exact_cvar_meta_objective(env, p, 0.2) <= exact_cvar_meta_objective(env, p, 0.6));
    // Return-level CVaR is never above task-level CVaR.
    CHECK(exact_rl_cvar_objective(env, p, 0.3, p.params()) <= exact_cvar_meta_objective(env, p, 0.3) + 1e-12);
}

TEST_CASE("exact estimator expectation at alpha = 1 is the policy gradient") {
    const auto env = TabularMetaMdp::canonical_chain();
    const Policy p = oracle_policy(env, 5);
    EstimatorConfig cfg;
    cfg.alpha = 1.0;
    cfg.baseline = 0.7;
    const auto exact = estimator_expectation(cfg, env, p, true);
    const auto fd = fd_gradient(
        [&](std::span<const double> th) { return exact_cvar_meta_objective(env, p, 1.0, th); }, p.params());
    for (std::size_t i = 0; i < fd.size(); ++i) CHECK(exact.mean[i] == doctest::Approx(fd[i]).epsilon(1e-6).scale(1e-9));

    const auto mc = estimator_expectation(cfg, env, p, false, 3, 20000);
    for (std::size_t i = 0; i < fd.size(); ++i) CHECK(std::abs(mc.mean[i] - exact.mean[i]) <= 5.0 * mc.std_error[i] + 1e-12);
}

TEST_CASE("explosion guard") {
    const auto env = TabularMetaMdp::canonical_chain();
    const Policy p = oracle_policy(env, 5);
    EstimatorConfig cfg;
    cfg.n = 6;
    cfg.max_realizations = 1e3;
    CHECK_THROWS_AS(estimator_expectation(cfg, env, p, true), SizeError);
}

TEST_CASE("tail sampling keeps the mean and shrinks the variance") {
    const auto env = TabularMetaMdp::multi_task_bandit({{0, 1}, {0.5, 0.2}, {1, 1.5}, {2, 0.4}}, 0.3);
    const Policy p = oracle_policy(env, 6);
    for (double alpha : {0.25, 0.5}) {
        const auto r = prop1_report(env, p, alpha, 4);
        CHECK(r.pass());
        CHECK(r.var_tail <= alpha * r.var_original + 1e-12);
    }
    const auto full = prop1_report(env, p, 1.0, 4);
    CHECK(full.var_tail == doctest::Approx(full.var_original));
}

TEST_CASE("the suite passes and catches an injected fault") {
    const auto reports = run_oracle_suite();
    CHECK(reports.size() >= 20);
    for (const auto& r : reports) CHECK_MESSAGE(r.pass, r.name);
    OracleSuiteOptions faulty;
    faulty.flip_rl_baseline = true;
    bool caught = false;
    for (const auto& r : run_oracle_suite(faulty))
        if (r.name == "rl_baseline_at_quantile") caught = !r.pass;
    CHECK(caught);
}
