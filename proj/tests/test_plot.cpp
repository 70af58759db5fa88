#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "roml/csv.hpp"
#include "roml/plot.hpp"

using namespace roml;
namespace fs = std::filesystem;

namespace {

std::size_t count(const std::string& s, const std::string& needle) {
    std::size_t n = 0;
    for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
    return n;
}

}  // namespace

TEST_CASE("line chart draws one path per series plus bands") {
    Series a{"roml", {0, 1, 2}, {1, 2, 3}, {0.5, 1.5, 2.5}, {1.5, 2.5, 3.5}};
    Series b{"base <1>", {0, 1, 2}, {3, 2, std::nan("")}, {}, {}};
    const auto svg = svg_line_chart({a, b}, {"t", "x", "y"});
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(count(svg, "fill-opacity") == 1);
    CHECK(count(svg, "stroke-width=\"1.5\"") == 2);
    CHECK(svg.find("base &lt;1&gt;") != std::string::npos);
    CHECK(svg.find("nan") == std::string::npos);
}

TEST_CASE("bar chart draws one bar per finite value") {
    Series a{"a", {}, {1, -2, std::nan("")}, {}, {}};
    Series b{"b", {}, {0.5, 0.5, 0.5}, {}, {}};
    const auto svg = svg_bar_chart({"x", "y", "z"}, {a, b}, {"bars", "", ""});
    // Two legend swatches plus five bars.
    CHECK(count(svg, "<rect x=") == 7);
}

TEST_CASE("plot_run renders every chart of a run directory") {
    const auto dir = fs::temp_directory_path() / "roml_plot_test";
    fs::remove_all(dir);
    CHECK_THROWS(plot_run(dir));
    CsvTable curve;
    curve.header = {"algorithm", "iteration", "frames", "metric", "mean", "ci_low", "ci_high", "n"};
    curve.rows = {{"baseline", "9", "100", "eval_cvar", "-1", "-1.2", "-0.8", "3"},
                  {"baseline", "19", "200", "eval_cvar", "-0.5", "-0.7", "-0.3", "3"},
                  {"baseline", "9", "100", "eval_mean", "0", "0", "0", "3"}};
    write_file_atomic(dir / "aggregate_curve.csv", to_csv(curve));
    CsvTable tasks;
    tasks.header = {"algorithm", "seed", "task", "return"};
    tasks.rows = {{"baseline", "0", "0.1", "-1"}, {"baseline", "0", "0.9", "-2"}, {"roml", "0", "0.5", "-1.5"}};
    write_file_atomic(dir / "per_task.csv", to_csv(tasks));
    const auto files = plot_run(dir, 4);
    CHECK(files.size() == 3);
    CHECK(fs::exists(dir / "curve_eval_cvar.svg"));
    CHECK(fs::exists(dir / "per_task.svg"));
    CHECK_FALSE(fs::exists(dir / "sampler.svg"));
    fs::remove_all(dir);
}
