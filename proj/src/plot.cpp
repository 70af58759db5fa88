#include "roml/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <stdexcept>

#include "roml/csv.hpp"

namespace roml {

namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

std::string esc(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void finish() {
        if (!std::isfinite(lo)) lo = 0, hi = 1;
        if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
    }
};

struct Frame {
    Range xr, yr;
    double px(double x) const { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * (kWidth - kLeft - kRight); }
    double py(double y) const { return kHeight - kBottom - (y - yr.lo) / (yr.hi - yr.lo) * (kHeight - kTop - kBottom); }
};

std::string header(const ChartLabels& labels) {
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
                    num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + num(kWidth / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" + esc(labels.title) +
         "</text>\n";
    s += "<text x=\"" + num((kLeft + kWidth - kRight) / 2) + "\" y=\"" + num(kHeight - 10) +
         "\" text-anchor=\"middle\">" + esc(labels.x) + "</text>\n";
    s += "<text transform=\"translate(15," + num(kHeight / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
         esc(labels.y) + "</text>\n";
    return s;
}

std::string axes(const Frame& f, bool x_ticks) {
    std::string s;
    const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
    s += "<path d=\"M" + num(x0) + " " + num(y1) + " V" + num(y0) + " H" + num(x1) + "\" stroke=\"black\" fill=\"none\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double v = f.yr.lo + (f.yr.hi - f.yr.lo) * k / 4.0;
        s += "<text x=\"" + num(x0 - 5) + "\" y=\"" + num(f.py(v) + 4) + "\" text-anchor=\"end\">" + tick(v) + "</text>\n";
        s += "<line x1=\"" + num(x0) + "\" x2=\"" + num(x1) + "\" y1=\"" + num(f.py(v)) + "\" y2=\"" + num(f.py(v)) +
             "\" stroke=\"#ddd\"/>\n";
        if (x_ticks) {
            const double u = f.xr.lo + (f.xr.hi - f.xr.lo) * k / 4.0;
            s += "<text x=\"" + num(f.px(u)) + "\" y=\"" + num(y0 + 15) + "\" text-anchor=\"middle\">" + tick(u) +
                 "</text>\n";
        }
    }
    return s;
}

std::string legend(const std::vector<Series>& series) {
    std::string s;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double y = kTop + 15.0 * static_cast<double>(i);
        const double x = kWidth - kRight + 10;
        s += "<rect x=\"" + num(x) + "\" y=\"" + num(y - 8) + "\" width=\"12\" height=\"8\" fill=\"" +
             kPalette[i % 7] + "\"/>\n";
        s += "<text x=\"" + num(x + 16) + "\" y=\"" + num(y) + "\">" + esc(series[i].label) + "</text>\n";
    }
    return s;
}

}  // namespace

std::string svg_line_chart(const std::vector<Series>& series, const ChartLabels& labels) {
    Frame f;
    for (const auto& s : series) {
        for (double x : s.x) f.xr.add(x);
        for (double y : s.y) f.yr.add(y);
        for (double y : s.low) f.yr.add(y);
        for (double y : s.high) f.yr.add(y);
    }
    f.xr.finish();
    f.yr.finish();
    std::string out = header(labels) + axes(f, true);
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        const char* color = kPalette[i % 7];
        if (s.low.size() == s.y.size() && s.high.size() == s.y.size() && !s.y.empty()) {
            std::string d;
            for (std::size_t k = 0; k < s.x.size(); ++k)
                if (std::isfinite(s.high[k])) d += (d.empty() ? "M" : " L") + num(f.px(s.x[k])) + " " + num(f.py(s.high[k]));
            for (std::size_t k = s.x.size(); k-- > 0;)
                if (std::isfinite(s.low[k])) d += " L" + num(f.px(s.x[k])) + " " + num(f.py(s.low[k]));
            if (!d.empty())
                out += "<path d=\"" + d + " Z\" fill=\"" + color + "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
        }
        std::string d;
        for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k)
            if (std::isfinite(s.y[k])) d += (d.empty() ? "M" : " L") + num(f.px(s.x[k])) + " " + num(f.py(s.y[k]));
        if (!d.empty()) out += "<path d=\"" + d + "\" stroke=\"" + color + "\" fill=\"none\" stroke-width=\"1.5\"/>\n";
    }
    return out + legend(series) + "</svg>\n";
}

std::string svg_bar_chart(const std::vector<std::string>& categories, const std::vector<Series>& series,
                          const ChartLabels& labels) {
    Frame f;
    f.yr.add(0.0);
    for (const auto& s : series) {
        for (double y : s.y) f.yr.add(y);
        for (double y : s.low) f.yr.add(y);
        for (double y : s.high) f.yr.add(y);
    }
    f.xr.lo = 0;
    f.xr.hi = std::max<double>(1.0, static_cast<double>(categories.size()));
    f.yr.finish();
    std::string out = header(labels) + axes(f, false);
    const double group = f.px(1) - f.px(0);
    const double bar = group * 0.8 / std::max<double>(1.0, static_cast<double>(series.size()));
    for (std::size_t c = 0; c < categories.size(); ++c) {
        out += "<text x=\"" + num(f.px(c + 0.5)) + "\" y=\"" + num(kHeight - kBottom + 15) +
               "\" text-anchor=\"middle\" font-size=\"9\">" + esc(categories[c]) + "</text>\n";
        for (std::size_t i = 0; i < series.size(); ++i) {
            if (c >= series[i].y.size() || !std::isfinite(series[i].y[c])) continue;
            const double x = f.px(static_cast<double>(c)) + group * 0.1 + bar * static_cast<double>(i);
            const double y0 = f.py(0.0), y1 = f.py(series[i].y[c]);
            out += "<rect x=\"" + num(x) + "\" y=\"" + num(std::min(y0, y1)) + "\" width=\"" + num(bar) +
                   "\" height=\"" + num(std::abs(y1 - y0)) + "\" fill=\"" + kPalette[i % 7] + "\"/>\n";
        }
    }
    return out + legend(series) + "</svg>\n";
}

namespace {

// Groups rows of an aggregate table into one series per `key`, ordered by first appearance.
std::vector<Series> series_by(const CsvTable& t, const std::vector<std::size_t>& rows, const std::string& key,
                              const std::string& xcol) {
    std::vector<Series> out;
    std::map<std::string, std::size_t> index;
    for (std::size_t r : rows) {
        const std::string& k = t.rows[r][t.column(key)];
        auto [it, fresh] = index.emplace(k, out.size());
        if (fresh) out.push_back(Series{k, {}, {}, {}, {}});
        Series& s = out[it->second];
        s.x.push_back(t.number(r, xcol));
        s.y.push_back(t.number(r, "mean"));
        s.low.push_back(t.number(r, "ci_low"));
        s.high.push_back(t.number(r, "ci_high"));
    }
    return out;
}

}  // namespace

std::vector<std::filesystem::path> plot_run(const std::filesystem::path& run_dir, std::size_t task_bins) {
    std::vector<std::filesystem::path> written;
    const auto curve_path = run_dir / "aggregate_curve.csv";
    if (!std::filesystem::exists(curve_path)) throw std::runtime_error("no aggregate_curve.csv in " + run_dir.string());

    const CsvTable curve = parse_csv(read_file(curve_path));
    std::vector<std::string> metrics;
    for (const auto& row : curve.rows) {
        const std::string& m = row[curve.column("metric")];
        if (std::find(metrics.begin(), metrics.end(), m) == metrics.end()) metrics.push_back(m);
    }
    for (const auto& m : metrics) {
        std::vector<std::size_t> rows;
        for (std::size_t r = 0; r < curve.rows.size(); ++r)
            if (curve.rows[r][curve.column("metric")] == m) rows.push_back(r);
        const auto path = run_dir / ("curve_" + m + ".svg");
        write_file_atomic(path, svg_line_chart(series_by(curve, rows, "algorithm", "frames"),
                                               {m + " during training (95% CI over seeds)", "frames", m}));
        written.push_back(path);
    }

    const auto task_path = run_dir / "per_task.csv";
    if (std::filesystem::exists(task_path) && task_bins > 0) {
        const CsvTable t = parse_csv(read_file(task_path));
        Range tr;
        for (std::size_t r = 0; r < t.rows.size(); ++r) tr.add(t.number(r, "task"));
        tr.finish();
        const double width = (tr.hi - tr.lo) / static_cast<double>(task_bins);
        std::vector<std::string> cats;
        for (std::size_t b = 0; b < task_bins; ++b) cats.push_back(tick(tr.lo + width * (static_cast<double>(b) + 0.5)));
        std::vector<Series> series;
        std::map<std::string, std::size_t> index;
        std::vector<std::vector<double>> sums, counts;
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            const std::string& a = t.rows[r][t.column("algorithm")];
            auto [it, fresh] = index.emplace(a, series.size());
            if (fresh) {
                series.push_back(Series{a, {}, {}, {}, {}});
                sums.emplace_back(task_bins, 0.0);
                counts.emplace_back(task_bins, 0.0);
            }
            const auto b = std::min<std::size_t>(
                task_bins - 1, static_cast<std::size_t>(std::max(0.0, (t.number(r, "task") - tr.lo) / width)));
            sums[it->second][b] += t.number(r, "return");
            counts[it->second][b] += 1.0;
        }
        for (std::size_t i = 0; i < series.size(); ++i)
            for (std::size_t b = 0; b < task_bins; ++b)
                series[i].y.push_back(counts[i][b] > 0 ? sums[i][b] / counts[i][b] : std::nan(""));
        const auto path = run_dir / "per_task.svg";
        write_file_atomic(path, svg_bar_chart(cats, series, {"final return by task", "task (bin centre)", "mean return"}));
        written.push_back(path);
    }

    const auto sampler_path = run_dir / "sampler_trace.csv";
    if (std::filesystem::exists(sampler_path)) {
        const CsvTable t = parse_csv(read_file(sampler_path));
        std::vector<std::size_t> rows(t.rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = r;
        const auto path = run_dir / "sampler.svg";
        write_file_atomic(path, svg_line_chart(series_by(t, rows, "metric", "iteration"),
                                               {"sampler parameters (95% CI over seeds)", "iteration", "value"}));
        written.push_back(path);
    }
    return written;
}

}  // namespace roml
