// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance            all criteria
//   acceptance --only 6,7 a subset

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "roml/cem.hpp"
#include "roml/khazad_dum.hpp"
#include "roml/metaalgo.hpp"
#include "roml/oracles.hpp"
#include "roml/policy.hpp"
#include "roml/risk.hpp"
#include "roml/sinemeta.hpp"
#include "roml/tabular_mdp.hpp"
#include "support/stats.hpp"

using namespace roml;
using teststats::paired_t_greater;
using teststats::sign_test_greater;

namespace {

struct Verdict {
    bool pass = true;
    std::vector<std::string> notes;
    void check(bool ok, const std::string& note) {
        pass = pass && ok;
        notes.push_back(std::string(ok ? "" : "NOT ") + note);
    }
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool starts_with(const std::string& s, const std::string& p) { return s.rfind(p, 0) == 0; }

// ------------------------------------------------------------------ 1-3

std::vector<OracleReport> suite_reports() {
    static const std::vector<OracleReport> reports = run_oracle_suite();
    return reports;
}

Verdict oracle_subset(const std::string& prefix, double budget) {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t n = 0;
    for (const auto& r : suite_reports()) {
        if (!starts_with(r.name, prefix)) continue;
        ++n;
        v.check(r.pass, r.name + fmt(" abs %.2e rel %.2e", r.abs_error, r.rel_error));
    }
    v.check(n > 0, "reports present");
    v.check(seconds_since(t0) < budget, fmt("runtime %.1fs < %.0fs", seconds_since(t0), budget));
    return v;
}

Verdict criterion1() { return oracle_subset("meta_", 60); }
Verdict criterion2() { return oracle_subset("rl_", 60); }

Verdict criterion3() {
    Verdict v = oracle_subset("tail_", 120);
    std::set<std::string> instances;
    std::set<std::string> levels;
    for (const auto& r : suite_reports()) {
        if (!starts_with(r.name, "tail_mean_")) continue;
        const auto rest = r.name.substr(10);
        const auto cut = rest.find("_alpha=");
        instances.insert(rest.substr(0, cut));
        levels.insert(rest.substr(cut + 7));
    }
    v.check(instances.size() >= 3, fmt("%.0f instances", static_cast<double>(instances.size())));
    v.check(levels.count("0.25") && levels.count("0.5") && levels.count("1"), "alpha in {0.25, 0.5, 1}");
    return v;
}

// ------------------------------------------------------------------ 4

// Weighted exponential log-likelihood maximized by grid search, then golden section.
double grid_search_rate(const std::vector<Task>& tasks, const std::vector<double>& w) {
    auto ll = [&](double rate) {
        double s = 0.0;
        for (std::size_t i = 0; i < tasks.size(); ++i) s += w[i] * (std::log(rate) - rate * tasks[i][0]);
        return s;
    };
    double best = 1e-3, best_ll = ll(best);
    for (double lr = -3.0; lr <= 5.0; lr += 1e-3) {
        const double r = std::pow(10.0, lr);
        if (const double l = ll(r); l > best_ll) best = r, best_ll = l;
    }
    double lo = best * std::pow(10.0, -2e-3), hi = best * std::pow(10.0, 2e-3);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 200; ++it) {
        const double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
        if (ll(a) < ll(b)) lo = a;
        else hi = b;
    }
    return 0.5 * (lo + hi);
}

Verdict criterion4() {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    RandomStream rng(4);
    double worst = 0.0;
    for (int inst = 0; inst < 20; ++inst) {
        const auto n = 5 + rng.index(50);
        std::vector<Task> tasks;
        std::vector<double> w;
        const double rate = std::pow(10.0, rng.uniform(-1.0, 2.0));
        for (std::size_t i = 0; i < n; ++i) {
            tasks.push_back({rng.exponential(rate)});
            w.push_back(rng.uniform(0.1, 3.0));
        }
        const auto fit = ce_update(TaskDistribution::exponential(1.0), tasks, w);
        const double oracle = grid_search_rate(tasks, w);
        worst = std::max(worst, std::abs(fit->params()[0] - oracle) / oracle);
    }
    v.check(worst <= 1e-6, fmt("ce_update vs grid search |d|/rate %.2e <= 1e-6", worst));

    const double mean = 0.1;
    const double q = -mean * std::log(0.99);
    RandomStream crng(40);
    const auto trace = static_cem_run(TaskDistribution::exponential(1.0 / mean),
                                      [](const Task& z) { return z[0]; }, q, 200, 0.2, 20, crng);
    double best = 0.0;
    std::size_t first = 0;
    for (std::size_t it = 0; it < trace.size(); ++it) {
        std::size_t below = 0;
        for (const auto& z : trace[it].tasks) below += z[0] <= q;
        const double frac = static_cast<double>(below) / 200.0;
        if (frac > best) best = frac;
        if (!first && frac >= 0.9) first = it + 1;
    }
    v.check(best >= 0.9, fmt("static CEM best share below q_0.01 %.3f >= 0.9 within 20 iterations", best));
    double late = 0.0;
    for (std::size_t it = 10; it < trace.size(); ++it)
        late += trace[it].fraction_below_target / static_cast<double>(trace.size() - 10);
    v.notes.push_back(fmt("(first iteration >= 0.9: %.0f, mean share over iterations 11-20: %.3f)",
                          static_cast<double>(first), late));
    v.check(seconds_since(t0) < 60, fmt("runtime %.1fs < 60s", seconds_since(t0)));
    return v;
}

// ------------------------------------------------------------------ 5

std::size_t brute_count(double level, std::size_t n) {
    const double target = level * static_cast<double>(n);
    std::size_t k = 1;
    while (static_cast<double>(k) < target - 1e-9 * std::max(1.0, target)) ++k;
    return k;
}

double brute_quantile(const std::vector<double>& x, double p) {
    const std::size_t k = brute_count(p, x.size());
    double best = INFINITY;
    for (double v : x) {
        std::size_t le = 0;
        for (double u : x) le += u <= v;
        if (le >= k && v < best) best = v;
    }
    return best;
}

double brute_cvar(std::vector<double> x, double alpha) {
    const std::size_t k = brute_count(alpha, x.size());
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        auto it = std::min_element(x.begin(), x.end());
        s += *it;
        x.erase(it);
    }
    return s / static_cast<double>(k);
}

double brute_weighted_quantile(const std::vector<double>& x, const std::vector<double>& w, double p) {
    double total = 0.0;
    for (double u : w) total += u;
    double best = INFINITY;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (w[i] <= 0.0) continue;
        double cum = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) cum += x[j] <= x[i] ? w[j] : 0.0;
        if (cum >= p * total * (1.0 - 1e-9) && x[i] < best) best = x[i];
    }
    return best;
}

Verdict criterion5() {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    RandomStream rng(5);
    std::size_t bad_cvar = 0, bad_q = 0, bad_wq = 0, bad_mono = 0;
    for (int inst = 0; inst < 1000; ++inst) {
        const auto n = 1 + rng.index(60);
        const bool ties = inst % 2 == 0;
        std::vector<double> x(n), w(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = ties ? static_cast<double>(rng.index(7)) - 3.0 : rng.normal(0.0, 2.0);
            w[i] = static_cast<double>(rng.index(5));
        }
        if (std::all_of(w.begin(), w.end(), [](double u) { return u == 0.0; })) w[0] = 1.0;
        const double alpha = inst % 5 == 0 ? static_cast<double>(1 + rng.index(n)) / static_cast<double>(n)
                                           : rng.uniform(1e-3, 1.0);
        bad_cvar += cvar(x, alpha) != brute_cvar(x, alpha);
        bad_q += quantile(x, alpha) != brute_quantile(x, alpha);
        bad_wq += weighted_quantile(x, w, alpha) != brute_weighted_quantile(x, w, alpha);
        const double a2 = rng.uniform(alpha, 1.0);
        bad_mono += cvar(x, alpha) > cvar(x, a2);
    }
    v.check(bad_cvar == 0, fmt("cvar mismatches %.0f/1000", static_cast<double>(bad_cvar)));
    v.check(bad_q == 0, fmt("quantile mismatches %.0f/1000", static_cast<double>(bad_q)));
    v.check(bad_wq == 0, fmt("weighted_quantile mismatches %.0f/1000", static_cast<double>(bad_wq)));
    v.check(bad_mono == 0, fmt("monotonicity violations %.0f/1000", static_cast<double>(bad_mono)));
    v.check(seconds_since(t0) < 30, fmt("runtime %.1fs < 30s", seconds_since(t0)));
    return v;
}

// ------------------------------------------------------------------ 6, 7, 9

constexpr int kKdSeeds = 20;
constexpr std::size_t kKdIterations = 5000;

TrainTrace kd_run(Algorithm a, int seed, std::size_t iterations, std::size_t eval_every) {
    static const KhazadDum env(KhazadDumConfig::standard());
    HistoryFeaturizer::Options fo;
    fo.by_episode = false;
    fo.by_slip = true;
    RandomStream init(static_cast<std::uint64_t>(seed));
    Policy p = make_policy(env, Policy::Kind::TabularSoftmax, HistoryFeaturizer(fo), {}, init);
    PolicyGradientLearner::Options lo;
    lo.lr = 1.0;
    lo.baseline = BaselineRule::value_table();
    lo.credit = Credit::RewardToGo;
    PolicyGradientLearner learner(p, lo);
    TrainConfig c;
    c.algorithm = a;
    c.alpha = 0.01;
    c.beta = 0.05;
    c.n_tasks = 64;
    c.iterations = iterations;
    c.seed = static_cast<std::uint64_t>(seed);
    c.eval_every = eval_every;
    c.eval_tasks = 500;
    c.final_eval_tasks = 1000;
    return run_training(c, env, learner);
}

struct KdResults {
    std::map<Algorithm, std::vector<TrainTrace>> runs;
    double seconds = 0.0;
};

const KdResults& kd_results() {
    static const KdResults r = [] {
        KdResults out;
        const auto t0 = std::chrono::steady_clock::now();
        for (int s = 0; s < kKdSeeds; ++s)
            for (Algorithm a : {Algorithm::Baseline, Algorithm::CvarML, Algorithm::RoML, Algorithm::NaiveSampler}) {
                out.runs[a].push_back(kd_run(a, s, kKdIterations, 100));
                const auto& t = out.runs[a].back();
                std::fprintf(stderr, "  kd seed %2d %-13s cvar %.3f hazard %.3f (%.1fs)\n", s,
                             algorithm_name(a).c_str(), t.final_eval.cvar, t.final_eval.hazard_rate, t.wall_seconds);
            }
        out.seconds = seconds_since(t0);
        return out;
    }();
    return r;
}

std::vector<double> final_metric(const std::vector<TrainTrace>& runs, double EvalResult::*field) {
    std::vector<double> v;
    for (const auto& t : runs) v.push_back(t.final_eval.*field);
    return v;
}

Verdict criterion6() {
    Verdict v;
    const auto& kd = kd_results();
    const auto& base = kd.runs.at(Algorithm::Baseline);
    const auto& cml = kd.runs.at(Algorithm::CvarML);
    const auto& roml = kd.runs.at(Algorithm::RoML);
    std::size_t min_frames = SIZE_MAX;
    for (const auto& [a, runs] : kd.runs)
        for (const auto& t : runs) min_frames = std::min(min_frames, t.records.back().frames);
    v.check(min_frames >= 200000, fmt("frames per run >= 2e5 (min %.3g)", static_cast<double>(min_frames)));

    const auto hb = final_metric(base, &EvalResult::hazard_rate);
    const auto sr = sign_test_greater(hb, final_metric(roml, &EvalResult::hazard_rate));
    const auto sc = sign_test_greater(hb, final_metric(cml, &EvalResult::hazard_rate));
    v.check(sr.p < 0.05, fmt("(a) RoML bridge rate < Baseline: %.0f/%.0f seeds, sign p %.2g", sr.wins,
                             sr.wins + sr.losses, sr.p));
    v.check(sc.p < 0.05, fmt("(a) CVaR-ML bridge rate < Baseline: %.0f/%.0f seeds, sign p %.2g", sc.wins,
                             sc.wins + sc.losses, sc.p));

    const auto tt = paired_t_greater(final_metric(roml, &EvalResult::cvar), final_metric(base, &EvalResult::cvar));
    v.check(tt.p < 0.05, fmt("(b) RoML CVaR_0.01 > Baseline: mean diff %.3f, paired t p %.2g", tt.mean_diff, tt.p));

    std::size_t faster = 0;
    for (int s = 0; s < kKdSeeds; ++s) {
        const double threshold = base[s].final_eval.cvar;
        const auto r = roml[s].iterations_to_cvar(threshold);
        const auto c = cml[s].iterations_to_cvar(threshold);
        faster += r && (!c || *r < *c);
    }
    v.check(faster * 10 >= 7 * kKdSeeds,
            fmt("(c) RoML reaches Baseline final CVaR before CVaR-ML in %.0f/%.0f seeds", static_cast<double>(faster),
                kKdSeeds));
    v.check(kd.seconds < 7200, fmt("runtime %.0fs < 7200s", kd.seconds));
    return v;
}

Verdict criterion7() {
    Verdict v;
    const auto& kd = kd_results();
    const auto r = final_metric(kd.runs.at(Algorithm::RoML), &EvalResult::cvar);
    const auto n = final_metric(kd.runs.at(Algorithm::NaiveSampler), &EvalResult::cvar);
    const auto tt = paired_t_greater(r, n);
    const auto st = sign_test_greater(r, n);
    v.check(tt.p < 0.05, fmt("RoML CVaR >= NaiveSampler over %.0f seeds: mean diff %.4f, paired t p %.3g",
                             static_cast<double>(tt.n), tt.mean_diff, tt.p));
    v.notes.push_back(fmt("(sign test %.0f/%.0f, p %.3g)", st.wins, st.wins + st.losses, st.p));
    return v;
}

Verdict criterion9() {
    Verdict v;
    for (int seed : {0, 1}) {
        const TrainTrace base = kd_run(Algorithm::Baseline, seed, 100, 10);
        static const KhazadDum env(KhazadDumConfig::standard());
        auto variant = [&](Algorithm a, auto&& tweak) {
            HistoryFeaturizer::Options fo;
            fo.by_episode = false;
            fo.by_slip = true;
            RandomStream init(static_cast<std::uint64_t>(seed));
            PolicyGradientLearner::Options lo;
            lo.lr = 1.0;
            lo.baseline = BaselineRule::value_table();
            lo.credit = Credit::RewardToGo;
            PolicyGradientLearner learner(make_policy(env, Policy::Kind::TabularSoftmax, HistoryFeaturizer(fo), {}, init),
                                          lo);
            TrainConfig c = base.config;
            c.algorithm = a;
            tweak(c);
            return run_training(c, env, learner);
        };
        const auto cml = variant(Algorithm::CvarML, [](TrainConfig& c) {
            c.eval_alpha = c.alpha;
            c.alpha = 1.0;
        });
        const auto roml = variant(Algorithm::RoML, [](TrainConfig& c) {
            c.freeze_sampler = true;
            c.nu = 0.0;
        });
        v.check(cml.same_learning_trajectory(base), fmt("seed %.0f CVaR-ML(alpha=1) == Baseline", seed));
        v.check(roml.same_learning_trajectory(base), fmt("seed %.0f RoML(frozen, nu=0) == Baseline", seed));
        bool final_same = cml.final_eval.per_task_returns == base.final_eval.per_task_returns &&
                          roml.final_eval.per_task_returns == base.final_eval.per_task_returns;
        v.check(final_same, fmt("seed %.0f final evaluations identical", seed));
    }
    return v;
}

// ------------------------------------------------------------------ 8

constexpr int kSineSeeds = 10;

Verdict criterion8() {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<double> c1b, c1r, c10b, c10r;
    bool amp_ok = true, phase_ok = true;
    double amp_min = INFINITY, ph_lo = INFINITY, ph_hi = -INFINITY;
    for (int seed = 0; seed < kSineSeeds; ++seed) {
        for (Algorithm a : {Algorithm::Baseline, Algorithm::RoML}) {
            TrainConfig c;
            c.algorithm = a;
            c.alpha = 0.05;
            c.beta = 0.2;
            c.nu = 0.0;
            c.n_tasks = 2000;
            c.iterations = 100;
            c.seed = static_cast<std::uint64_t>(seed);
            c.eval_every = 0;
            c.final_eval_tasks = 2000;
            SineConfig sc;
            sc.init_seed = static_cast<std::uint64_t>(seed);
            const TrainTrace t = run_supervised(c, sc);
            const auto& names = t.extra_names;
            const auto at = [&](const char* n) {
                return t.final_eval.extra.at(std::find(names.begin(), names.end(), n) - names.begin());
            };
            (a == Algorithm::Baseline ? c1b : c1r).push_back(at("cvar_loss_1"));
            (a == Algorithm::Baseline ? c10b : c10r).push_back(at("cvar_loss_10"));
            if (a == Algorithm::RoML) {
                double amp = 0.0;
                for (const auto& r : t.records) {
                    amp = std::max(amp, r.sampler_params.at(0));
                    ph_lo = std::min(ph_lo, r.sampler_params.at(1));
                    ph_hi = std::max(ph_hi, r.sampler_params.at(1));
                    phase_ok = phase_ok && r.sampler_params[1] >= 0.4 && r.sampler_params[1] <= 0.6;
                }
                amp_min = std::min(amp_min, amp);
                amp_ok = amp_ok && amp > 0.6;
            }
            std::fprintf(stderr, "  sine seed %d %-8s cvar_loss_1 %.3f cvar_loss_10 %.3f (%.1fs)\n", seed,
                         algorithm_name(a).c_str(), at("cvar_loss_1"), at("cvar_loss_10"), t.wall_seconds);
        }
    }
    // Lower loss is better: test Baseline - RoML > 0.
    const auto t1 = paired_t_greater(c1b, c1r);
    const auto t10 = paired_t_greater(c10b, c10r);
    v.check(t1.p < 0.05, fmt("RoML CVaR_0.05 loss < Baseline at 1 step: mean gain %.3f, paired t p %.3g", t1.mean_diff, t1.p));
    v.check(t10.p < 0.05,
            fmt("RoML CVaR_0.05 loss < Baseline at 10 steps: mean gain %.3f, paired t p %.3g", t10.mean_diff, t10.p));
    v.check(amp_ok, fmt("amplitude phi exceeds 0.6 in every seed (smallest peak %.3f)", amp_min));
    v.check(phase_ok, fmt("phase phi within [0.4, 0.6] throughout (range %.3f..%.3f)", ph_lo, ph_hi));
    v.check(seconds_since(t0) < 1800, fmt("runtime %.0fs < 1800s", seconds_since(t0)));
    return v;
}

// ------------------------------------------------------------------ 10

double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num = std::max(num, std::abs(a[i] - b[i]));
        den = std::max(den, std::abs(b[i]));
    }
    return den > 0.0 ? num / den : num;
}

Verdict criterion10() {
    Verdict v;
    RandomStream rng(10);
    const KhazadDum env;
    HistoryFeaturizer::Options fo;
    fo.mode = HistoryFeaturizer::Mode::Features;
    const HistoryFeaturizer feat(fo);
    double worst_tab = 0.0, worst_dense = 0.0, worst_reg = 0.0;
    for (int point = 0; point < 10; ++point) {
        HistoryState h;
        h.episode = static_cast<int>(rng.index(4));
        h.step = static_cast<int>(rng.index(32));
        h.slip_sum = rng.uniform(0.0, 2.0);
        h.hazard_steps = 1 + static_cast<int>(rng.index(3));
        const int state = env.state({1 + static_cast<int>(rng.index(2)), 1 + static_cast<int>(rng.index(9))});
        const int action = static_cast<int>(rng.index(4));

        for (bool dense : {false, true}) {
            RandomStream init(100 + point);
            Policy p = dense ? make_policy(env, Policy::Kind::DenseNet, feat, {16, 16}, init, 1.0)
                             : make_policy(env, Policy::Kind::TabularSoftmax, HistoryFeaturizer{}, {}, init);
            for (auto& x : p.mutable_params()) x = rng.normal(0.0, 0.5);
            const ExtendedState s = p.featurizer().featurize(env, state, h);
            const auto analytic = p.grad_log_pi(s, action);
            const auto fd = fd_gradient(
                [&](std::span<const double> th) {
                    Policy q = p;
                    std::copy(th.begin(), th.end(), q.mutable_params().begin());
                    return std::log(q.probabilities(s)[static_cast<std::size_t>(action)]);
                },
                p.params());
            (dense ? worst_dense : worst_tab) = std::max(dense ? worst_dense : worst_tab, rel_error(analytic, fd));
        }

        RandomStream init(200 + point);
        Regressor reg = Regressor::create({40, 40}, init);
        for (auto& x : reg.mutable_params()) x += rng.normal(0.0, 0.1);
        const SineTask task{rng.uniform(0.1, 5.0), rng.uniform(0.0, 6.28), rng.uniform(0.3, 3.0)};
        const SineData data = sample_sine_data(task, 10, rng);
        std::vector<double> grad;
        reg.loss_and_grad(data, grad);
        const auto fd = fd_gradient(
            [&](std::span<const double> th) {
                Regressor r = reg;
                std::copy(th.begin(), th.end(), r.mutable_params().begin());
                return r.loss(data);
            },
            reg.params());
        worst_reg = std::max(worst_reg, rel_error(grad, fd));
    }
    v.check(worst_tab <= 1e-5, fmt("tabular policy grad log pi vs central FD: max rel %.2e", worst_tab));
    v.check(worst_dense <= 1e-5, fmt("dense policy grad log pi vs central FD: max rel %.2e", worst_dense));
    v.check(worst_reg <= 1e-5, fmt("regressor loss gradient vs central FD: max rel %.2e", worst_reg));
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::vector<int> only;
    app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',')->check(CLI::Range(1, 10));
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"meta-gradient estimator unbiased and baseline invariant", criterion1},
        {"RL CVaR-PG baseline bias contrast", criterion2},
        {"tail sampling keeps the mean and shrinks the variance", criterion3},
        {"cross-entropy refit and static tail sampler", criterion4},
        {"risk statistics match brute force", criterion5},
        {"Khazad-dum: RoML avoids the bridge and improves CVaR", criterion6},
        {"Khazad-dum: RoML beats the naive sampler", criterion7},
        {"sine regression: RoML lowers tail loss", criterion8},
        {"reduction identities", criterion9},
        {"analytic gradients match finite differences", criterion10},
    };
    bool all = true;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i + 1);
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v.check(false, std::string("exception: ") + e.what());
        }
        all = all && v.pass;
        std::printf("%s criterion %d: %s (%.1fs)\n", v.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                    seconds_since(t0));
        for (const auto& n : v.notes) std::printf("    %s\n", n.c_str());
        std::fflush(stdout);
    }
    return all ? 0 : 1;
}
