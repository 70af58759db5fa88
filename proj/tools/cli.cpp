#include "cli.hpp"

#include <cstdio>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "roml/csv.hpp"
#include "roml/experiment.hpp"
#include "roml/khazad_dum.hpp"
#include "roml/oracles.hpp"
#include "roml/plot.hpp"

namespace roml {

namespace {

std::string fixed(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

void print_final(const CsvTable& t, std::ostream& out) {
    out << "algorithm        metric             mean       95% CI\n";
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        std::string a = t.rows[r][t.column("algorithm")], m = t.rows[r][t.column("metric")];
        a.resize(std::max<std::size_t>(a.size(), 16), ' ');
        m.resize(std::max<std::size_t>(m.size(), 18), ' ');
        out << a << ' ' << m << ' ' << fixed(t.number(r, "mean")) << "  [" << fixed(t.number(r, "ci_low")) << ", "
            << fixed(t.number(r, "ci_high")) << "]\n";
    }
}

KhazadDumConfig map_config(const std::string& file) {
    if (file.empty()) return KhazadDumConfig::standard();
    std::vector<std::string> rows;
    std::istringstream in(read_file(file));
    for (std::string line; std::getline(in, line);) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty()) rows.push_back(line);
    }
    return KhazadDumConfig::from_ascii(rows);
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Robust meta reinforcement learning experiments"};
    app.require_subcommand(1);

    std::string config_path, output_root;
    std::size_t threads = 1;
    bool force = false, quiet = false;
    auto* run = app.add_subcommand("run", "train every algorithm x seed cell of a config and write results");
    run->add_option("config", config_path, "experiment config file")->required()->check(CLI::ExistingFile);
    run->add_option("-j,--threads", threads, "worker threads")->check(CLI::Range(1, 256));
    run->add_flag("--force", force, "overwrite results of a different config");
    run->add_option("--output-root", output_root, std::string("base for relative output paths (default $") +
                                                      kOutputRootEnv + " or the working directory)");
    run->add_flag("-q,--quiet", quiet, "no per-cell progress");

    bool as_json = false, inject_fault = false;
    std::uint64_t oracle_seed = 7;
    auto* oracle = app.add_subcommand("oracle-check", "compare gradient estimators with exact enumeration");
    oracle->add_flag("--json", as_json, "print the reports as JSON");
    oracle->add_option("--seed", oracle_seed, "policy parameter seed");
    oracle->add_flag("--inject-fault", inject_fault)->group("");

    std::string plot_dir;
    std::size_t bins = 10;
    auto* plot = app.add_subcommand("plot", "render SVG charts for a finished run directory");
    plot->add_option("dir", plot_dir, "run output directory")->required()->check(CLI::ExistingDirectory);
    plot->add_option("--bins", bins, "task bins for the per-task chart")->check(CLI::Range(1, 1000));

    std::string map_file;
    auto* dump = app.add_subcommand("dump-map", "print the Khazad-dum map and its constants");
    dump->add_option("--map", map_file, "ascii map file (default: built-in map)")->check(CLI::ExistingFile);

    auto* version = app.add_subcommand("version", "print the version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*version) {
            out << "roml " << kVersion << "\n";
            return 0;
        }
        if (*run) {
            const RunConfig cfg = load_run_config(config_path);
            RunOptions opts;
            opts.output_root = output_root;
            opts.threads = threads;
            opts.force = force;
            opts.quiet = quiet;
            const auto dir = resolve_output_dir(cfg, opts);
            run_experiment(cfg, opts);
            out << "results: " << dir.string() << " (config " << config_hash(cfg) << ")\n";
            print_final(parse_csv(read_file(dir / "aggregate_final.csv")), out);
            return 0;
        }
        if (*oracle) {
            OracleSuiteOptions opts;
            opts.seed = oracle_seed;
            opts.flip_rl_baseline = inject_fault;
            const auto reports = run_oracle_suite(opts);
            bool ok = true;
            nlohmann::json j = nlohmann::json::array();
            for (const auto& r : reports) {
                ok = ok && r.pass;
                if (as_json) {
                    j.push_back(r.to_json());
                } else {
                    char buf[256];
                    std::snprintf(buf, sizeof buf, "%-4s %-44s abs %.3e rel %.3e\n", r.pass ? "ok" : "FAIL",
                                  r.name.c_str(), r.abs_error, r.rel_error);
                    out << buf;
                }
            }
            if (as_json) out << j.dump(2) << "\n";
            else out << (ok ? "all oracle checks passed\n" : "oracle checks FAILED\n");
            return ok ? 0 : 1;
        }
        if (*plot) {
            for (const auto& p : plot_run(plot_dir, bins)) out << p.string() << "\n";
            return 0;
        }
        if (*dump) {
            const KhazadDumConfig c = map_config(map_file);
            const KhazadDum env(c);
            out << env.ascii_map() << "\n";
            out << "size " << c.rows << "x" << c.cols << ", horizon " << c.horizon << ", episodes " << c.episodes
                << ", rain mean " << c.rain_mean << "\n";
            return 0;
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const OverwriteError& e) {
        err << "refusing to overwrite: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace roml
