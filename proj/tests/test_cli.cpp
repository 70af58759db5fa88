#include <doctest.h>

#include <filesystem>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "cli.hpp"
#include "roml/csv.hpp"

using namespace roml;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "roml");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("version and usage") {
    CHECK(run({"version"}).out == "roml 0.1.0\n");
    CHECK(run({}).code != 0);
    CHECK(run({"frobnicate"}).code != 0);
    const auto help = run({"--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("oracle-check") != std::string::npos);
    CHECK(help.out.find("inject") == std::string::npos);
}

TEST_CASE("oracle-check passes and fails under fault injection") {
    const auto ok = run({"oracle-check"});
    CHECK(ok.code == 0);
    CHECK(ok.out.find("all oracle checks passed") != std::string::npos);
    const auto json = nlohmann::json::parse(run({"oracle-check", "--json"}).out);
    CHECK(json.is_array());
    CHECK(json.size() >= 20);
    const auto bad = run({"oracle-check", "--inject-fault"});
    CHECK(bad.code == 1);
    CHECK(bad.out.find("FAIL rl_baseline_at_quantile") != std::string::npos);
}

TEST_CASE("dump-map prints the built-in or a file map") {
    const auto r = run({"dump-map"});
    CHECK(r.code == 0);
    CHECK(r.out.find("#....G....#") != std::string::npos);
    const auto dir = fs::temp_directory_path() / "roml_cli_map";
    fs::remove_all(dir);
    write_file_atomic(dir / "m.txt", "#####\n#S=G#\n#####\n");
    CHECK(run({"dump-map", "--map", (dir / "m.txt").string()}).out.find("#S=G#") != std::string::npos);
    write_file_atomic(dir / "bad.txt", "#S?G#\n");
    CHECK(run({"dump-map", "--map", (dir / "bad.txt").string()}).code == 1);
    fs::remove_all(dir);
}

TEST_CASE("run, rerun refusal and plot") {
    const auto dir = fs::temp_directory_path() / "roml_cli_run";
    fs::remove_all(dir);
    const std::string cfg = "[experiment]\nname = c\nenvironment = canonical_chain\nalgorithms = baseline, roml\n"
                            "seeds = 2\noutput = out\n[train]\nn_tasks = 8\niterations = 10\neval_every = 5\n"
                            "eval_tasks = 40\nfinal_eval_tasks = 40\n";
    write_file_atomic(dir / "c.ini", cfg);
    const auto r = run({"run", (dir / "c.ini").string(), "--output-root", dir.string(), "-q"});
    CHECK(r.code == 0);
    CHECK(r.out.find("roml             cvar") != std::string::npos);
    CHECK(fs::exists(dir / "out" / "aggregate_final.csv"));

    write_file_atomic(dir / "c.ini", cfg + "alpha = 0.5\n");
    const auto refused = run({"run", (dir / "c.ini").string(), "--output-root", dir.string(), "-q"});
    CHECK(refused.code == 3);
    CHECK(refused.err.find("--force") != std::string::npos);
    CHECK(run({"run", (dir / "c.ini").string(), "--output-root", dir.string(), "-q", "--force"}).code == 0);

    const auto p = run({"plot", (dir / "out").string()});
    CHECK(p.code == 0);
    CHECK(fs::exists(dir / "out" / "sampler.svg"));

    write_file_atomic(dir / "bad.ini", "[experiment]\nname = c\nenvironment = sine\nalgorithms = roml\nseeds = x\n");
    const auto bad = run({"run", (dir / "bad.ini").string()});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("bad.ini:5: experiment.seeds") != std::string::npos);
    CHECK(run({"run", (dir / "absent.ini").string()}).code != 0);
    fs::remove_all(dir);
}
