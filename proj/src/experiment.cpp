#include "roml/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "roml/random.hpp"
#include "roml/tabular_mdp.hpp"

namespace roml {

ConfigError::ConfigError(const std::string& source, std::size_t line_no, const std::string& message)
    : std::runtime_error(source + ":" + std::to_string(line_no) + ": " + message), line(line_no) {}

std::uint64_t RunConfig::run_seed(std::uint64_t index) const { return derive_seed(master_seed, {index}); }

// ---------------------------------------------------------------- parsing

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

struct Entry {
    std::string value;
    std::size_t line;
    bool used = false;
};

class Reader {
public:
    Reader(std::string source, std::map<std::string, Entry> entries)
        : source_(std::move(source)), entries_(std::move(entries)) {}

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        throw ConfigError(source_, entries_.at(key).line, key + ": " + msg);
    }

    const Entry* find(const std::string& key) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return nullptr;
        it->second.used = true;
        return &it->second;
    }

    void require(const std::string& key) const {
        if (!entries_.count(key)) throw ConfigError(source_ + ": missing required field " + key);
    }

    bool str(const std::string& key, std::string& out) {
        const Entry* e = find(key);
        if (!e) return false;
        if (e->value.empty()) fail(key, "empty value");
        out = e->value;
        return true;
    }

    bool real(const std::string& key, double& out) {
        const Entry* e = find(key);
        if (!e) return false;
        try {
            out = parse_number(e->value);
        } catch (const CsvError&) {
            fail(key, "expected a number, got '" + e->value + "'");
        }
        if (!std::isfinite(out)) fail(key, "must be finite");
        return true;
    }

    template <class T>
    bool count(const std::string& key, T& out) {
        const Entry* e = find(key);
        if (!e) return false;
        out = static_cast<T>(parse_count(key, e->value));
        return true;
    }

    bool integer(const std::string& key, int& out) {
        const Entry* e = find(key);
        if (!e) return false;
        out = static_cast<int>(parse_count(key, e->value));
        return true;
    }

    bool flag(const std::string& key, bool& out) {
        const Entry* e = find(key);
        if (!e) return false;
        if (e->value == "true" || e->value == "yes" || e->value == "1") out = true;
        else if (e->value == "false" || e->value == "no" || e->value == "0") out = false;
        else fail(key, "expected true or false, got '" + e->value + "'");
        return true;
    }

    bool int_list(const std::string& key, std::vector<int>& out) {
        const Entry* e = find(key);
        if (!e) return false;
        out.clear();
        for (const auto& item : split_list(e->value)) out.push_back(static_cast<int>(parse_count(key, item)));
        if (out.empty()) fail(key, "empty list");
        return true;
    }

    std::uint64_t parse_count(const std::string& key, const std::string& v) const {
        if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
            fail(key, "expected a non-negative integer, got '" + v + "'");
        try {
            return std::stoull(v);
        } catch (const std::exception&) {
            fail(key, "integer out of range: '" + v + "'");
        }
    }

    void reject_unused() const {
        for (const auto& [k, e] : entries_)
            if (!e.used) throw ConfigError(source_, e.line, "unknown key '" + k + "'");
    }

private:
    std::string source_;
    std::map<std::string, Entry> entries_;
};

const std::vector<std::string> kSections{"experiment", "train", "learner", "khazad_dum", "sine"};

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& source) {
    std::map<std::string, Entry> entries;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError(source, line, "malformed section header");
            section = trim(s.substr(1, s.size() - 2));
            if (std::find(kSections.begin(), kSections.end(), section) == kSections.end())
                throw ConfigError(source, line, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(source, line, "expected 'key = value'");
        if (section.empty()) throw ConfigError(source, line, "key outside of any section");
        const std::string key = section + "." + trim(s.substr(0, eq));
        if (entries.count(key)) throw ConfigError(source, line, "duplicate key '" + key + "'");
        entries[key] = {trim(s.substr(eq + 1)), line};
    }

    Reader r(source, std::move(entries));
    RunConfig c;
    for (const char* k : {"experiment.name", "experiment.environment", "experiment.algorithms"}) r.require(k);

    r.str("experiment.name", c.name);
    r.str("experiment.environment", c.environment);
    if (c.environment != "khazad_dum" && c.environment != "sine" && c.environment != "canonical_chain")
        r.fail("experiment.environment", "expected khazad_dum, sine or canonical_chain");
    if (const Entry* e = r.find("experiment.algorithms")) {
        for (const auto& a : split_list(e->value)) {
            try {
                c.algorithms.push_back(parse_algorithm(a));
            } catch (const std::exception&) {
                r.fail("experiment.algorithms", "unknown algorithm '" + a + "'");
            }
        }
        if (c.algorithms.empty()) r.fail("experiment.algorithms", "empty list");
    }
    if (const Entry* e = r.find("experiment.seeds")) {
        c.seeds.clear();
        const auto dots = e->value.find("..");
        if (dots != std::string::npos) {
            const auto lo = r.parse_count("experiment.seeds", trim(e->value.substr(0, dots)));
            const auto hi = r.parse_count("experiment.seeds", trim(e->value.substr(dots + 2)));
            if (hi < lo) r.fail("experiment.seeds", "empty range");
            for (auto s = lo; s <= hi; ++s) c.seeds.push_back(s);
        } else if (e->value.find(',') != std::string::npos) {
            for (const auto& item : split_list(e->value)) c.seeds.push_back(r.parse_count("experiment.seeds", item));
        } else {
            const auto n = r.parse_count("experiment.seeds", e->value);
            if (n == 0) r.fail("experiment.seeds", "need at least one seed");
            for (std::uint64_t s = 0; s < n; ++s) c.seeds.push_back(s);
        }
    }
    r.count("experiment.master_seed", c.master_seed);
    r.str("experiment.output", c.output);

    auto& t = c.train;
    r.real("train.alpha", t.alpha);
    r.real("train.beta", t.beta);
    r.real("train.nu", t.nu);
    r.count("train.n_tasks", t.n_tasks);
    r.count("train.m_rollouts", t.m_rollouts);
    r.count("train.iterations", t.iterations);
    r.count("train.eval_every", t.eval_every);
    r.count("train.eval_tasks", t.eval_tasks);
    r.count("train.final_eval_tasks", t.final_eval_tasks);
    double ea = 0.0;
    if (r.real("train.eval_alpha", ea)) t.eval_alpha = ea;
    r.count("train.naive_memory", t.naive_memory);
    r.flag("train.freeze_sampler", t.freeze_sampler);

    auto& l = c.learner;
    std::string s;
    if (r.str("learner.policy", s)) {
        if (s == "tabular") l.policy = Policy::Kind::TabularSoftmax;
        else if (s == "dense") l.policy = Policy::Kind::DenseNet;
        else r.fail("learner.policy", "expected tabular or dense");
    }
    if (r.str("learner.history", s)) {
        if (s == "full_tabular") l.featurizer.mode = HistoryFeaturizer::Mode::FullTabular;
        else if (s == "features") l.featurizer.mode = HistoryFeaturizer::Mode::Features;
        else r.fail("learner.history", "expected full_tabular or features");
    } else if (l.policy == Policy::Kind::DenseNet) {
        l.featurizer.mode = HistoryFeaturizer::Mode::Features;
    }
    r.flag("learner.by_step", l.featurizer.by_step);
    r.flag("learner.by_episode", l.featurizer.by_episode);
    r.flag("learner.by_slip", l.featurizer.by_slip);
    r.int_list("learner.hidden", l.hidden);
    r.real("learner.init_scale", l.init_scale);
    r.real("learner.lr", l.pg.lr);
    if (r.str("learner.baseline", s)) {
        try {
            l.pg.baseline.kind = parse_baseline(s);
        } catch (const std::exception&) {
            r.fail("learner.baseline", "expected constant, batch_mean, value_table or quantile");
        }
    }
    r.real("learner.baseline_value", l.pg.baseline.value);
    r.real("learner.baseline_alpha", l.pg.baseline.alpha);
    if (r.str("learner.credit", s)) {
        if (s == "full_return") l.pg.credit = Credit::FullReturn;
        else if (s == "reward_to_go") l.pg.credit = Credit::RewardToGo;
        else r.fail("learner.credit", "expected full_return or reward_to_go");
    }
    r.real("learner.value_rate", l.pg.value_rate);
    r.real("learner.max_grad_norm", l.pg.max_grad_norm);
    r.real("learner.entropy", l.pg.entropy);

    auto& k = c.khazad_dum;
    r.str("khazad_dum.map", c.map_file);
    r.integer("khazad_dum.horizon", k.horizon);
    r.integer("khazad_dum.episodes", k.episodes);
    r.real("khazad_dum.shaping_radius", k.shaping_radius);
    r.real("khazad_dum.goal_reward", k.goal_reward);
    r.real("khazad_dum.rain_damage", k.rain_damage);
    r.real("khazad_dum.rain_mean", k.rain_mean);
    r.real("khazad_dum.kernel_width", k.kernel_width);

    auto& sc = c.sine;
    r.int_list("sine.hidden", sc.hidden);
    r.real("sine.inner_lr", sc.inner_lr);
    r.real("sine.outer_lr", sc.outer_lr);
    r.count("sine.support", sc.support);
    r.count("sine.query", sc.query);
    r.count("sine.minibatch", sc.minibatch);
    r.int_list("sine.test_steps", sc.test_steps);
    r.flag("sine.first_order", sc.first_order);

    r.reject_unused();
    if (c.output.empty()) c.output = "runs/" + c.name;
    try {
        for (Algorithm a : c.algorithms) {
            TrainConfig probe = c.train;
            probe.algorithm = a;
            probe.validate();
        }
    } catch (const std::exception& e) {
        throw ConfigError(source + ": " + e.what());
    }
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    RunConfig c = parse_run_config(read_file(path), path.string());
    if (!c.map_file.empty()) {
        std::filesystem::path map = c.map_file;
        if (map.is_relative()) map = path.parent_path() / map;
        std::vector<std::string> rows;
        std::istringstream in(read_file(map));
        for (std::string line; std::getline(in, line);) {
            line = trim(line);
            if (!line.empty()) rows.push_back(line);
        }
        KhazadDumConfig m = KhazadDumConfig::from_ascii(rows);
        const KhazadDumConfig& k = c.khazad_dum;
        m.horizon = k.horizon;
        m.episodes = k.episodes;
        m.shaping_radius = k.shaping_radius;
        m.goal_reward = k.goal_reward;
        m.rain_damage = k.rain_damage;
        m.rain_mean = k.rain_mean;
        m.kernel_width = k.kernel_width;
        c.khazad_dum = m;
    }
    return c;
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json algs = nlohmann::json::array();
    for (Algorithm a : algorithms) algs.push_back(algorithm_name(a));
    nlohmann::json train_json = train.to_json();
    train_json.erase("algorithm");
    train_json.erase("seed");
    const auto& p = learner.pg;
    nlohmann::json j{
        {"name", name},
        {"environment", environment},
        {"algorithms", algs},
        {"seeds", seeds},
        {"master_seed", master_seed},
        {"train", train_json},
        {"learner",
         {{"policy", learner.policy == Policy::Kind::TabularSoftmax ? "tabular" : "dense"},
          {"featurizer", HistoryFeaturizer(learner.featurizer).to_json()},
          {"hidden", learner.hidden},
          {"init_scale", learner.init_scale},
          {"lr", p.lr},
          {"baseline", baseline_name(p.baseline.kind)},
          {"baseline_value", p.baseline.value},
          {"baseline_alpha", p.baseline.alpha},
          {"credit", p.credit == Credit::FullReturn ? "full_return" : "reward_to_go"},
          {"value_rate", p.value_rate},
          {"max_grad_norm", p.max_grad_norm},
          {"entropy", p.entropy}}},
    };
    if (environment == "khazad_dum") {
        const auto& k = khazad_dum;
        j["khazad_dum"] = {{"map", KhazadDum(k).ascii_map()},   {"horizon", k.horizon},
                           {"episodes", k.episodes},            {"shaping_radius", k.shaping_radius},
                           {"goal_reward", k.goal_reward},      {"rain_damage", k.rain_damage},
                           {"rain_mean", k.rain_mean},          {"kernel_width", k.kernel_width}};
    }
    if (environment == "sine") {
        j["sine"] = {{"hidden", sine.hidden},         {"inner_lr", sine.inner_lr},     {"outer_lr", sine.outer_lr},
                     {"support", sine.support},       {"query", sine.query},           {"minibatch", sine.minibatch},
                     {"test_steps", sine.test_steps}, {"first_order", sine.first_order}};
    }
    return j;
}

std::string config_hash(const RunConfig& config) {
    const std::string text = config.to_json().dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------- running

TrainTrace run_cell(const RunConfig& config, Algorithm algorithm, std::uint64_t seed_index) {
    TrainConfig t = config.train;
    t.algorithm = algorithm;
    t.seed = config.run_seed(seed_index);
    if (config.environment == "sine") {
        SineConfig sc = config.sine;
        sc.init_seed = t.seed;
        return run_supervised(t, sc);
    }
    std::unique_ptr<MetaMdp> env;
    if (config.environment == "khazad_dum") env = std::make_unique<KhazadDum>(config.khazad_dum);
    else env = std::make_unique<TabularMetaMdp>(TabularMetaMdp::canonical_chain());
    const HistoryFeaturizer f(config.learner.featurizer);
    RandomStream init(derive_seed(t.seed, {0x1417}));
    Policy p = make_policy(*env, config.learner.policy, f, config.learner.hidden, init, config.learner.init_scale);
    PolicyGradientLearner learner(std::move(p), config.learner.pg);
    return run_training(t, *env, learner);
}

double t_critical_975(std::size_t df) {
    static constexpr double kTable[30] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
                                          2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
                                          2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
    if (df == 0) return INFINITY;
    if (df <= 30) return kTable[df - 1];
    // Cornish-Fisher expansion around the normal quantile.
    const double z = 1.959963984540054;
    const double n = static_cast<double>(df);
    return z + (z * z * z + z) / (4.0 * n) + (5.0 * std::pow(z, 5) + 16.0 * z * z * z + 3.0 * z) / (96.0 * n * n);
}

Interval mean_ci95(std::span<const double> values) {
    Interval r;
    r.n = values.size();
    if (values.empty()) {
        r.mean = r.low = r.high = std::nan("");
        return r;
    }
    double s = 0.0;
    for (double v : values) s += v;
    r.mean = s / static_cast<double>(r.n);
    if (r.n < 2) {
        r.low = r.high = r.mean;
        return r;
    }
    double ss = 0.0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    const double se = std::sqrt(ss / static_cast<double>(r.n - 1) / static_cast<double>(r.n));
    const double h = t_critical_975(r.n - 1) * se;
    r.low = r.mean - h;
    r.high = r.mean + h;
    return r;
}

CsvTable trace_csv(const TrainTrace& trace) {
    CsvTable t;
    t.header = {"iteration", "frames", "train_mean_return", "n_trained", "task_mean"};
    const std::size_t d = trace.records.empty() ? 0 : trace.records.front().sampler_params.size();
    for (std::size_t k = 0; k < d; ++k) t.header.push_back("phi_" + std::to_string(k));
    for (const char* h : {"evaluated", "eval_mean", "eval_cvar", "eval_hazard_rate"}) t.header.push_back(h);
    for (const auto& n : trace.extra_names) t.header.push_back(n);
    t.header.push_back("policy_checksum");
    for (const auto& r : trace.records) {
        std::vector<std::string> row{std::to_string(r.iteration), std::to_string(r.frames),
                                     format_number(r.train_mean_return), std::to_string(r.n_trained),
                                     format_number(r.task_mean)};
        for (double v : r.sampler_params) row.push_back(format_number(v));
        row.push_back(r.evaluated ? "1" : "0");
        row.push_back(format_number(r.eval_mean));
        row.push_back(format_number(r.eval_cvar));
        row.push_back(format_number(r.eval_hazard_rate));
        for (std::size_t k = 0; k < trace.extra_names.size(); ++k)
            row.push_back(r.evaluated && k < r.eval_extra.size() ? format_number(r.eval_extra[k]) : "nan");
        row.push_back(std::to_string(r.policy_checksum));
        t.rows.push_back(std::move(row));
    }
    return t;
}

CsvTable sampler_csv(const TrainTrace& trace) {
    CsvTable t;
    t.header = {"iteration",          "q_alpha_hat",           "q_beta",
                "q",                  "n_selected",            "mean_sample_return",
                "mean_reference_return", "cvar_reference_return", "updated"};
    for (std::size_t i = 0; i < trace.sampler.size(); ++i) {
        const auto& s = trace.sampler[i];
        t.rows.push_back({std::to_string(i), format_number(s.q_alpha_hat), format_number(s.q_beta), format_number(s.q),
                          std::to_string(s.n_selected), format_number(s.mean_sample_return),
                          format_number(s.mean_reference_return), format_number(s.cvar_reference_return),
                          s.updated ? "1" : "0"});
    }
    return t;
}

CsvTable final_tasks_csv(const TrainTrace& trace) {
    CsvTable t;
    const auto& ev = trace.final_eval;
    const std::size_t d = ev.tasks.empty() ? 0 : ev.tasks.front().size();
    for (std::size_t k = 0; k < d; ++k) t.header.push_back("task_" + std::to_string(k));
    t.header.push_back("return");
    for (std::size_t i = 0; i < ev.per_task_returns.size(); ++i) {
        std::vector<std::string> row;
        for (double v : ev.tasks.at(i)) row.push_back(format_number(v));
        row.push_back(format_number(ev.per_task_returns[i]));
        t.rows.push_back(std::move(row));
    }
    return t;
}

nlohmann::json run_summary(const TrainTrace& trace, const std::string& hash, std::uint64_t seed_index) {
    nlohmann::json extra = nlohmann::json::object();
    for (std::size_t k = 0; k < trace.extra_names.size() && k < trace.final_eval.extra.size(); ++k)
        extra[trace.extra_names[k]] = trace.final_eval.extra[k];
    return {{"config_hash", hash},
            {"algorithm", algorithm_name(trace.config.algorithm)},
            {"seed_index", seed_index},
            {"seed", trace.config.seed},
            {"train", trace.config.to_json()},
            {"frames", trace.records.empty() ? 0 : trace.records.back().frames},
            {"final", {{"mean", trace.final_eval.mean},
                       {"cvar", trace.final_eval.cvar},
                       {"hazard_rate", trace.final_eval.hazard_rate},
                       {"extra", extra}}},
            {"wall_seconds", trace.wall_seconds}};
}

namespace {

std::vector<Algorithm> algorithms_in(const std::vector<CellResult>& cells) {
    std::vector<Algorithm> out;
    for (const auto& c : cells)
        if (std::find(out.begin(), out.end(), c.algorithm) == out.end()) out.push_back(c.algorithm);
    return out;
}

std::vector<std::string> interval_row(std::vector<std::string> head, const Interval& ci) {
    head.push_back(format_number(ci.mean));
    head.push_back(format_number(ci.low));
    head.push_back(format_number(ci.high));
    head.push_back(std::to_string(ci.n));
    return head;
}

}  // namespace

CsvTable aggregate_curve(const std::vector<CellResult>& cells) {
    CsvTable t;
    t.header = {"algorithm", "iteration", "frames", "metric", "mean", "ci_low", "ci_high", "n"};
    for (Algorithm a : algorithms_in(cells)) {
        std::vector<const TrainTrace*> runs;
        for (const auto& c : cells)
            if (c.algorithm == a) runs.push_back(&c.trace);
        std::vector<std::string> metrics{"eval_mean", "eval_cvar", "eval_hazard_rate"};
        for (const auto& n : runs.front()->extra_names) metrics.push_back(n);
        for (std::size_t i = 0; i < runs.front()->records.size(); ++i) {
            const auto& r0 = runs.front()->records[i];
            if (!r0.evaluated) continue;
            double frames = 0.0;
            for (const auto* r : runs) frames += static_cast<double>(r->records.at(i).frames);
            frames /= static_cast<double>(runs.size());
            for (std::size_t m = 0; m < metrics.size(); ++m) {
                std::vector<double> v;
                for (const auto* r : runs) {
                    const auto& rec = r->records.at(i);
                    v.push_back(m == 0 ? rec.eval_mean : m == 1 ? rec.eval_cvar : m == 2 ? rec.eval_hazard_rate
                                                                                       : rec.eval_extra.at(m - 3));
                }
                t.rows.push_back(interval_row(
                    {algorithm_name(a), std::to_string(r0.iteration), format_number(frames), metrics[m]},
                    mean_ci95(v)));
            }
        }
    }
    return t;
}

CsvTable aggregate_final(const std::vector<CellResult>& cells) {
    CsvTable t;
    t.header = {"algorithm", "metric", "mean", "ci_low", "ci_high", "n"};
    for (Algorithm a : algorithms_in(cells)) {
        std::vector<const TrainTrace*> runs;
        for (const auto& c : cells)
            if (c.algorithm == a) runs.push_back(&c.trace);
        std::vector<std::string> metrics{"mean", "cvar", "hazard_rate"};
        for (const auto& n : runs.front()->extra_names) metrics.push_back(n);
        for (std::size_t m = 0; m < metrics.size(); ++m) {
            std::vector<double> v;
            for (const auto* r : runs) {
                const auto& ev = r->final_eval;
                v.push_back(m == 0 ? ev.mean : m == 1 ? ev.cvar : m == 2 ? ev.hazard_rate : ev.extra.at(m - 3));
            }
            t.rows.push_back(interval_row({algorithm_name(a), metrics[m]}, mean_ci95(v)));
        }
    }
    return t;
}

CsvTable aggregate_sampler(const std::vector<CellResult>& cells) {
    CsvTable t;
    t.header = {"algorithm", "iteration", "metric", "mean", "ci_low", "ci_high", "n"};
    for (Algorithm a : algorithms_in(cells)) {
        if (a != Algorithm::RoML) continue;
        std::vector<const TrainTrace*> runs;
        for (const auto& c : cells)
            if (c.algorithm == a) runs.push_back(&c.trace);
        const auto& recs = runs.front()->records;
        for (std::size_t i = 0; i < recs.size(); ++i)
            for (std::size_t k = 0; k < recs[i].sampler_params.size(); ++k) {
                std::vector<double> v;
                for (const auto* r : runs) v.push_back(r->records.at(i).sampler_params.at(k));
                t.rows.push_back(interval_row(
                    {algorithm_name(a), std::to_string(recs[i].iteration), "phi_" + std::to_string(k)}, mean_ci95(v)));
            }
    }
    return t;
}

CsvTable per_task_table(const std::vector<CellResult>& cells) {
    CsvTable t;
    t.header = {"algorithm", "seed", "task", "return"};
    for (const auto& c : cells) {
        const auto& ev = c.trace.final_eval;
        for (std::size_t i = 0; i < ev.per_task_returns.size(); ++i)
            t.rows.push_back({algorithm_name(c.algorithm), std::to_string(c.seed_index), format_number(ev.tasks.at(i).at(0)),
                              format_number(ev.per_task_returns[i])});
    }
    return t;
}

std::filesystem::path resolve_output_dir(const RunConfig& config, const RunOptions& options) {
    std::filesystem::path out = config.output;
    if (out.is_absolute()) return out;
    std::filesystem::path root = options.output_root;
    if (root.empty()) {
        if (const char* env = std::getenv(kOutputRootEnv); env && *env) root = env;
        else root = ".";
    }
    return root / out;
}

std::vector<CellResult> run_experiment(const RunConfig& config, const RunOptions& options) {
    const auto dir = resolve_output_dir(config, options);
    const std::string hash = config_hash(config);
    const auto manifest_path = dir / "manifest.json";
    if (std::filesystem::exists(manifest_path) && !options.force) {
        const auto old = nlohmann::json::parse(read_file(manifest_path), nullptr, false);
        const std::string old_hash = old.is_object() ? old.value("config_hash", "") : "";
        if (old_hash != hash)
            throw OverwriteError(dir.string() + " holds results of config " + old_hash + ", this config is " + hash +
                                 "; use --force to overwrite");
    }
    nlohmann::json manifest{{"config_hash", hash}, {"version", kVersion}, {"config", config.to_json()}};
    manifest["status"] = "running";
    write_file_atomic(manifest_path, manifest.dump(2) + "\n");

    struct Job {
        Algorithm algorithm;
        std::uint64_t seed_index;
    };
    std::vector<Job> jobs;
    for (Algorithm a : config.algorithms)
        for (std::uint64_t s : config.seeds) jobs.push_back({a, s});
    std::vector<std::optional<CellResult>> results(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;

    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            try {
                const Job& j = jobs[i];
                TrainTrace trace = run_cell(config, j.algorithm, j.seed_index);
                const auto cell_dir = dir / algorithm_name(j.algorithm) / ("seed_" + std::to_string(j.seed_index));
                write_file_atomic(cell_dir / "trace.csv", to_csv(trace_csv(trace)));
                if (!trace.sampler.empty()) write_file_atomic(cell_dir / "sampler.csv", to_csv(sampler_csv(trace)));
                write_file_atomic(cell_dir / "final_tasks.csv", to_csv(final_tasks_csv(trace)));
                write_file_atomic(cell_dir / "summary.json", run_summary(trace, hash, j.seed_index).dump(2) + "\n");
                if (!options.quiet) {
                    std::lock_guard lock(log_mutex);
                    std::fprintf(stderr, "[%zu/%zu] %s seed %llu: final mean %.4f cvar %.4f (%.1fs)\n", i + 1,
                                 jobs.size(), algorithm_name(j.algorithm).c_str(),
                                 static_cast<unsigned long long>(j.seed_index), trace.final_eval.mean,
                                 trace.final_eval.cvar, trace.wall_seconds);
                }
                results[i] = CellResult{j.algorithm, j.seed_index, std::move(trace)};
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t n_threads = std::clamp<std::size_t>(options.threads, 1, std::max<std::size_t>(1, jobs.size()));
    std::vector<std::thread> pool;
    for (std::size_t k = 1; k < n_threads; ++k) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::vector<CellResult> cells;
    for (auto& r : results) cells.push_back(std::move(*r));
    write_file_atomic(dir / "aggregate_curve.csv", to_csv(aggregate_curve(cells)));
    write_file_atomic(dir / "aggregate_final.csv", to_csv(aggregate_final(cells)));
    write_file_atomic(dir / "per_task.csv", to_csv(per_task_table(cells)));
    const CsvTable sampler = aggregate_sampler(cells);
    if (!sampler.rows.empty()) write_file_atomic(dir / "sampler_trace.csv", to_csv(sampler));
    manifest["status"] = "complete";
    write_file_atomic(manifest_path, manifest.dump(2) + "\n");
    return cells;
}

}  // namespace roml
