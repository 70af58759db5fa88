#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace roml {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> low;   // optional band, same length as y
    std::vector<double> high;
};

struct ChartLabels {
    std::string title;
    std::string x;
    std::string y;
};

/// Standalone SVG line chart; bands are drawn under their line.
std::string svg_line_chart(const std::vector<Series>& series, const ChartLabels& labels);

/// Grouped bar chart: one group per category, one bar per series (series.y[i]
/// is the bar for categories[i]).
std::string svg_bar_chart(const std::vector<std::string>& categories, const std::vector<Series>& series,
                          const ChartLabels& labels);

/// Renders the charts for a finished run directory and returns the files written:
///   curve_<metric>.svg   from aggregate_curve.csv
///   per_task.svg         mean final return per task bin, from per_task.csv
///   sampler.svg          sampler parameters, from sampler_trace.csv (if present)
std::vector<std::filesystem::path> plot_run(const std::filesystem::path& run_dir, std::size_t task_bins = 10);

}  // namespace roml
