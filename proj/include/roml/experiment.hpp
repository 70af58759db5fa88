#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "roml/csv.hpp"
#include "roml/khazad_dum.hpp"
#include "roml/learner.hpp"
#include "roml/metaalgo.hpp"
#include "roml/policy.hpp"
#include "roml/sinemeta.hpp"

namespace roml {

inline constexpr const char* kVersion = "0.1.0";
/// Environment variable naming the directory that relative output paths resolve against.
inline constexpr const char* kOutputRootEnv = "ROML_OUTPUT_ROOT";

struct ConfigError : std::runtime_error {
    ConfigError(const std::string& source, std::size_t line, const std::string& message);
    explicit ConfigError(const std::string& message) : std::runtime_error(message) {}
    std::size_t line = 0;  // 0 when the error is not tied to a line
};

struct LearnerSettings {
    Policy::Kind policy = Policy::Kind::TabularSoftmax;
    HistoryFeaturizer::Options featurizer;
    std::vector<int> hidden{32, 32};
    double init_scale = 1.0;
    PolicyGradientLearner::Options pg;
};

/// One experiment: a grid of algorithms x seeds on one environment.
///
/// Text format: '[section]' headers and 'key = value' lines; '#' starts a
/// comment. Sections: experiment, train, learner, khazad_dum, sine. Unknown
/// sections or keys, duplicates and malformed values are errors that carry the
/// line number. experiment.name, experiment.environment and
/// experiment.algorithms are required.
struct RunConfig {
    std::string name;
    std::string environment;  // khazad_dum | sine | canonical_chain
    std::vector<Algorithm> algorithms;
    std::vector<std::uint64_t> seeds{0};  // seed indices
    std::uint64_t master_seed = 0;
    std::string output;                   // default: runs/<name>
    TrainConfig train;
    LearnerSettings learner;
    KhazadDumConfig khazad_dum = KhazadDumConfig::standard();
    std::string map_file;                 // optional ascii map, relative to the config file
    SineConfig sine;

    /// Per-run seed: derive_seed(master_seed, {index}); adding indices leaves other runs untouched.
    std::uint64_t run_seed(std::uint64_t index) const;
    nlohmann::json to_json() const;
};

RunConfig parse_run_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);

/// 16 hex digits of FNV-1a over the canonical JSON form.
std::string config_hash(const RunConfig& config);

/// Trains one (algorithm, seed index) cell.
TrainTrace run_cell(const RunConfig& config, Algorithm algorithm, std::uint64_t seed_index);

/// Mean with a two-sided 95% Student-t interval.
struct Interval {
    double mean = 0.0;
    double low = 0.0;
    double high = 0.0;
    std::size_t n = 0;
};
Interval mean_ci95(std::span<const double> values);
/// Two-sided 97.5% quantile of Student's t with `df` degrees of freedom.
double t_critical_975(std::size_t df);

CsvTable trace_csv(const TrainTrace& trace);
CsvTable sampler_csv(const TrainTrace& trace);
CsvTable final_tasks_csv(const TrainTrace& trace);
nlohmann::json run_summary(const TrainTrace& trace, const std::string& config_hash, std::uint64_t seed_index);

struct CellResult {
    Algorithm algorithm;
    std::uint64_t seed_index;
    TrainTrace trace;
};

/// algorithm, iteration, frames, metric, mean, ci_low, ci_high, n over evaluated iterations.
CsvTable aggregate_curve(const std::vector<CellResult>& cells);
/// algorithm, metric, mean, ci_low, ci_high, n over final evaluations.
CsvTable aggregate_final(const std::vector<CellResult>& cells);
/// algorithm, iteration, metric (phi_k), mean, ci_low, ci_high, n for the RoML sampler.
CsvTable aggregate_sampler(const std::vector<CellResult>& cells);
/// algorithm, seed, task, return for every final evaluation task (task = first coordinate).
CsvTable per_task_table(const std::vector<CellResult>& cells);

struct RunOptions {
    std::filesystem::path output_root;  // empty: $ROML_OUTPUT_ROOT, else the working directory
    std::size_t threads = 1;
    bool force = false;
    bool quiet = false;
};

/// Thrown when the output directory holds results of a different configuration.
struct OverwriteError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::filesystem::path resolve_output_dir(const RunConfig& config, const RunOptions& options);

/// Runs every cell, writes per-run and aggregate files, returns the cells in grid order.
std::vector<CellResult> run_experiment(const RunConfig& config, const RunOptions& options);

}  // namespace roml
