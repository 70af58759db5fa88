#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "roml/learner.hpp"
#include "roml/oracles.hpp"
#include "roml/risk.hpp"
#include "roml/tabular_mdp.hpp"

using namespace roml;

namespace {

struct Fixture {
    TabularMetaMdp env = TabularMetaMdp::canonical_chain();
    Policy policy = oracle_policy(env, 1, 0.7);
    std::vector<MetaRollout> batch;

    Fixture() {
        RandomStream r(2);
        for (int i = 0; i < 12; ++i) batch.push_back(rollout(env, env.task_value(i % 3), policy, r));
    }

    // Score of one rollout from grad_log_pi, summed by hand.
    std::vector<double> score(const MetaRollout& ro) const {
        std::vector<double> g(policy.num_params(), 0.0);
        for (const auto& ep : ro.episodes)
            for (const auto& st : ep.steps)
                if (st.action >= 0) {
                    const auto d = policy.grad_log_pi(st.context, st.action);
                    for (std::size_t i = 0; i < g.size(); ++i) g[i] += d[i];
                }
        return g;
    }
};

void check_close(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12).scale(1e-12));
}

}  // namespace

TEST_CASE("score function sums grad log pi over decisions") {
    Fixture f;
    for (const auto& ro : f.batch) check_close(score_function(f.policy, ro), f.score(ro));
}

TEST_CASE("mean policy gradient with a constant baseline") {
    Fixture f;
    const double b = 0.3;
    std::vector<double> expect(f.policy.num_params(), 0.0);
    for (const auto& ro : f.batch) {
        const auto s = f.score(ro);
        for (std::size_t i = 0; i < s.size(); ++i) expect[i] += (ro.ret - b) * s[i] / f.batch.size();
    }
    check_close(mean_pg_gradient(f.policy, f.batch, b).grad, expect);
    check_close(mean_pg_gradient(f.policy, f.batch, BaselineRule::constant(b)).grad, expect);
}

TEST_CASE("scalar baseline rules") {
    const std::vector<double> r{3, 1, 2, 6};
    CHECK(resolve_baseline(BaselineRule::constant(1.5), r) == 1.5);
    CHECK(resolve_baseline(BaselineRule::batch_mean(), r) == 3.0);
    CHECK(resolve_baseline(BaselineRule::quantile(0.5), r) == 2.0);
    CHECK(parse_baseline(baseline_name(BaselineRule::Kind::ValueTable)) == BaselineRule::Kind::ValueTable);
    CHECK_THROWS(parse_baseline("median"));
}

TEST_CASE("value table averages its targets") {
    ValueTable t;
    t.update(3, 1.0);
    t.update(3, 3.0);
    t.update(3, 5.0);
    CHECK(t.value(3) == doctest::Approx(3.0));
    CHECK(t.value(4) == 0.0);
    ValueTable fast(0.5);
    fast.update(0, 2.0);
    fast.update(0, 4.0);
    CHECK(fast.value(0) == doctest::Approx(3.0));
}

TEST_CASE("tail-selected meta gradient keeps the alpha share of tasks") {
    Fixture f;
    std::vector<std::vector<MetaRollout>> tasks;
    for (std::size_t i = 0; i < f.batch.size(); i += 2) tasks.push_back({f.batch[i], f.batch[i + 1]});
    const double alpha = 0.5, b = -0.2;
    std::vector<double> means;
    for (const auto& t : tasks) means.push_back((t[0].ret + t[1].ret) / 2);
    const double q = quantile(means, alpha);
    std::vector<double> expect(f.policy.num_params(), 0.0);
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (means[i] > q) continue;
        for (const auto& ro : tasks[i]) {
            const auto s = f.score(ro);
            for (std::size_t k = 0; k < s.size(); ++k) expect[k] += (ro.ret - b) * s[k] / (alpha * tasks.size());
        }
    }
    const auto g = cvar_ml_gradient(f.policy, tasks, alpha, b);
    check_close(g.grad, expect);
    CHECK(g.n_tasks == static_cast<std::size_t>(std::count_if(means.begin(), means.end(), [&](double m) { return m <= q; })));
}

TEST_CASE("RL CVaR policy gradient uses the supplied quantile") {
    Fixture f;
    const double alpha = 0.25, q = 0.4, b = q;
    std::vector<double> expect(f.policy.num_params(), 0.0);
    for (const auto& ro : f.batch) {
        if (ro.ret > q) continue;
        const auto s = f.score(ro);
        for (std::size_t k = 0; k < s.size(); ++k) expect[k] += (ro.ret - b) * s[k] / (alpha * f.batch.size());
    }
    check_close(rl_cvar_pg_gradient(f.policy, f.batch, alpha, b, q).grad, expect);
}

TEST_CASE("learner step moves along the gradient") {
    Fixture f;
    PolicyGradientLearner::Options o;
    o.lr = 0.1;
    o.baseline = BaselineRule::constant(0.0);
    PolicyGradientLearner l(f.policy, o);
    l.ml_step(f.batch);
    const auto g = mean_pg_gradient(f.policy, f.batch, 0.0).grad;
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(l.policy().params()[i] == doctest::Approx(f.policy.params()[i] + 0.1 * g[i]));

    o.max_grad_norm = 1e-3;
    PolicyGradientLearner clipped(f.policy, o);
    clipped.ml_step(f.batch);
    double sq = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) sq += std::pow(clipped.policy().params()[i] - f.policy.params()[i], 2);
    CHECK(std::sqrt(sq) == doctest::Approx(0.1 * 1e-3));
}

TEST_CASE("reward-to-go credit drops rewards earned before a decision") {
    const auto env = TabularMetaMdp::canonical_chain();
    const Policy p = oracle_policy(env, 3, 0.5);
    RandomStream r(4);
    const auto ro = rollout(env, env.task_value(0), p, r);
    const std::vector<MetaRollout> one{ro};
    std::vector<double> expect(p.num_params(), 0.0);
    const auto& steps = ro.episodes[0].steps;
    for (std::size_t t = 0; t < steps.size(); ++t) {
        double g = 0.0;
        for (std::size_t u = t; u < steps.size(); ++u) g += steps[u].reward;
        const auto d = p.grad_log_pi(steps[t].context, steps[t].action);
        for (std::size_t i = 0; i < d.size(); ++i) expect[i] += g * d[i];
    }
    check_close(mean_pg_gradient(p, one, BaselineRule::constant(0.0), nullptr, Credit::RewardToGo).grad, expect);
}

TEST_CASE("recording learner keeps every batch") {
    Fixture f;
    RecordingLearner rec(f.policy);
    rec.ml_step(f.batch);
    rec.ml_step(std::span<const MetaRollout>(f.batch).first(2));
    REQUIRE(rec.calls().size() == 2);
    CHECK(rec.calls()[1].size() == 2);
    CHECK(rec.policy().checksum() == f.policy.checksum());
}
