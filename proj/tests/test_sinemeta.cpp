#include <doctest.h>

#include <cmath>

#include "roml/oracles.hpp"
#include "roml/risk.hpp"
#include "roml/sinemeta.hpp"

using namespace roml;

namespace {

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num = std::max(num, std::abs(a[i] - b[i]));
        den = std::max(den, std::abs(b[i]));
    }
    return num / den;
}

struct Setup {
    Regressor model;
    SineData support, query;
    explicit Setup(std::uint64_t seed, std::vector<int> hidden = {12, 12}) {
        RandomStream r(seed);
        model = Regressor::create(std::move(hidden), r);
        const SineTask t{2.5, 1.0, 1.7};
        support = sample_sine_data(t, 10, r);
        query = sample_sine_data(t, 10, r);
    }
};

}  // namespace

TEST_CASE("sine tasks and data") {
    const SineTask t{2.0, 0.5, 1.5};
    CHECK(t(1.0) == doctest::Approx(2.0 * std::sin(1.5 + 0.5)));
    CHECK(SineTask::from_task(t.to_task()).frequency == 1.5);
    CHECK_FALSE(SineTask{6.0, 0.0, 1.0}.in_range());
    const auto d = sine_task_distribution();
    CHECK(d.dim() == 3);
    CHECK(d.density({1.0, 3.0, 1.0}) == doctest::Approx(1.0 / (4.9 * 6.283185307179586 * 2.7)));
    RandomStream r(1);
    const auto data = sample_sine_data(t, 50, r);
    for (std::size_t i = 0; i < data.size(); ++i) {
        CHECK(data.x[i] >= 0.0);
        CHECK(data.x[i] < 6.283185307179586);
        CHECK(data.y[i] == t(data.x[i]));
    }
}

TEST_CASE("regressor shape and loss") {
    Setup s(2, {40, 40});
    CHECK(s.model.layer_sizes() == std::vector<int>{1, 40, 40, 1});
    CHECK(s.model.num_params() == 40 + 40 + 1600 + 40 + 40 + 1);
    double mse = 0.0;
    for (std::size_t i = 0; i < s.support.size(); ++i) mse += std::pow(s.model.predict(s.support.x[i]) - s.support.y[i], 2);
    CHECK(s.model.loss(s.support) == doctest::Approx(mse / s.support.size()));
    std::vector<double> g;
    CHECK(s.model.loss_and_grad(s.support, g) == doctest::Approx(mse / s.support.size()));
    CHECK(s.model.adapted(s.support, 0.01, 5).loss(s.support) < s.model.loss(s.support));
}

TEST_CASE("Hessian-vector product matches differences of gradients") {
    Setup s(3);
    RandomStream r(4);
    std::vector<double> v(s.model.num_params());
    for (auto& x : v) x = r.normal();
    std::vector<double> hv;
    s.model.hessian_vector(s.support, v, hv);
    const double h = 1e-5;
    Regressor plus = s.model, minus = s.model;
    for (std::size_t i = 0; i < v.size(); ++i) {
        plus.mutable_params()[i] += h * v[i];
        minus.mutable_params()[i] -= h * v[i];
    }
    std::vector<double> gp, gm, fd(v.size());
    plus.loss_and_grad(s.support, gp);
    minus.loss_and_grad(s.support, gm);
    for (std::size_t i = 0; i < v.size(); ++i) fd[i] = (gp[i] - gm[i]) / (2 * h);
    CHECK(max_rel(hv, fd) < 1e-6);
}

TEST_CASE("second-order outer gradient is the derivative of the post-adaptation loss") {
    for (std::uint64_t seed : {5, 6}) {
        Setup s(seed);
        const double lr = 0.05;
        const auto g = maml_gradient(s.model, s.support, s.query, lr);
        CHECK(g.query_loss == doctest::Approx(s.model.adapted(s.support, lr, 1).loss(s.query)));
        const auto fd = fd_gradient(
            [&](std::span<const double> th) { return maml_objective(s.model, th, s.support, s.query, lr); },
            s.model.params());
        CHECK(max_rel(g.grad, fd) < 1e-6);
    }
}

TEST_CASE("first-order outer gradient is the derivative of its surrogate") {
    Setup s(7);
    const double lr = 0.05;
    const auto g = fomaml_gradient(s.model, s.support, s.query, lr);
    const auto fd = fd_gradient(
        [&](std::span<const double> th) { return fomaml_surrogate(s.model, th, s.support, s.query, lr); },
        s.model.params());
    CHECK(max_rel(g.grad, fd) < 1e-6);
    // The two estimators differ by the inner-step Jacobian.
    CHECK(max_rel(maml_gradient(s.model, s.support, s.query, lr).grad, g.grad) > 1e-4);
}

TEST_CASE("a meta-train step lowers the post-adaptation loss for small steps") {
    Setup s(8);
    const auto step = meta_train_step(s.model, s.support, s.query, 0.01, 1e-3);
    CHECK(step.model.adapted(s.support, 0.01, 1).loss(s.query) < step.query_loss);
}

TEST_CASE("Adam's first step has magnitude lr per coordinate") {
    Adam adam(0.1);
    std::vector<double> p{1.0, -2.0, 0.5};
    const std::vector<double> g{3.0, -0.2, 1e-3};
    adam.step(p, g);
    CHECK(p[0] == doctest::Approx(0.9));
    CHECK(p[1] == doctest::Approx(-1.9));
    CHECK(p[2] == doctest::Approx(0.4).epsilon(1e-4));
    CHECK(adam.steps() == 1);
    CHECK_THROWS_AS(adam.step(p, std::vector<double>{1.0}), ParameterError);
}

TEST_CASE("sine problem scores, evaluation and determinism") {
    SineConfig sc;
    sc.hidden = {10, 10};
    sc.test_steps = {1, 3};
    SineProblem problem(sc);
    CHECK(problem.extra_names() == std::vector<std::string>{"mean_loss_1", "mean_loss_3", "cvar_loss_1", "cvar_loss_3"});
    RandomStream r(1);
    const auto sample = problem.generate(SineTask{1.0, 0.0, 1.0}.to_task(), r);
    CHECK(problem.score(sample) == -sample.query_loss);
    CHECK(sample.query_loss == doctest::Approx(problem.model().adapted(sample.support, sc.inner_lr, 1).loss(sample.query)));
    CHECK(problem.frames(sample) == 20);
    const auto ev = problem.evaluate(40, 0.1, RandomStream(2));
    REQUIRE(ev.extra.size() == 4);
    std::vector<double> losses;
    for (double v : ev.per_task_returns) losses.push_back(-v);
    CHECK(ev.extra[0] == doctest::Approx(mean(losses)));
    CHECK(ev.extra[2] >= ev.extra[0]);

    TrainConfig c;
    c.algorithm = Algorithm::RoML;
    c.n_tasks = 20;
    c.iterations = 3;
    c.eval_every = 0;
    c.final_eval_tasks = 20;
    const auto a = run_supervised(c, sc);
    const auto b = run_supervised(c, sc);
    CHECK(a.same_learning_trajectory(b));
    CHECK(a.records.front().sampler_params == std::vector<double>{0.5, 0.5, 0.5});
}
