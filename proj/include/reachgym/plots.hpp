#pragma once

// Plot export from a metrics log: reward and entropy series as CSV plus a
// plain SVG line chart of each.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "reachgym/csv.hpp"
#include "reachgym/error.hpp"
#include "reachgym/ppo.hpp"

namespace reachgym {

struct Series {
    std::string name;
    std::vector<double> x, y;
};

inline std::string svg_line_chart(const Series& s, const std::string& x_label) {
    constexpr double W = 640, H = 400, L = 70, R = 20, T = 40, B = 50;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.y[i])) continue;
        x0 = std::min(x0, s.x[i]);
        x1 = std::max(x1, s.x[i]);
        y0 = std::min(y0, s.y[i]);
        y1 = std::max(y1, s.y[i]);
    }
    const bool empty = !std::isfinite(x0);
    if (empty) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y0 -= 0.5, y1 += 0.5;
    auto px = [&](double v) { return L + (v - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double v) { return H - B - (v - y0) / (y1 - y0) * (H - T - B); };

    std::ostringstream o;
    o << std::setprecision(6);
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << s.name << "</text>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double yv = y0 + (y1 - y0) * k / 4.0, xv = x0 + (x1 - x0) * k / 4.0;
        o << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << yv << "</text>\n";
        o << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << xv << "</text>\n";
    }
    o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">" << x_label << "</text>\n";
    if (!empty) {
        o << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            if (std::isfinite(s.y[i])) o << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
        o << "\"/>\n";
    }
    o << "</svg>\n";
    return o.str();
}

struct PlotOutput {
    std::vector<std::filesystem::path> files;
    std::string warning;  // non-empty when the log had no rows
    std::size_t points = 0;
};

/// Writes reward_series.csv, entropy_series.csv, reward.svg and entropy.svg
/// into out_dir. A malformed log throws ParseError with its line number.
inline PlotOutput emit_plots(const std::filesystem::path& metrics_log, const std::filesystem::path& out_dir) {
    std::ifstream in(metrics_log);
    if (!in) throw ParseError("cannot open metrics log " + metrics_log.string());
    std::vector<UpdateRecord> rows;
    in.seekg(0, std::ios::end);
    const bool blank = in.tellg() == 0;
    in.seekg(0);
    if (!blank) rows = read_metrics_csv(in);

    std::filesystem::create_directories(out_dir);
    PlotOutput out;
    out.points = rows.size();
    if (rows.empty()) out.warning = "metrics log " + metrics_log.string() + " has no rows; writing empty series";
    Series reward{"Mean episode reward", {}, {}}, entropy{"Policy entropy", {}, {}};
    for (const auto& r : rows) {
        reward.x.push_back(r.update);
        reward.y.push_back(r.mean_ep_reward);
        entropy.x.push_back(r.update);
        entropy.y.push_back(r.stats.entropy);
    }
    auto write = [&](const std::string& name, const std::string& content) {
        const auto path = out_dir / name;
        std::ofstream f(path);
        if (!f) throw ConfigError("cannot write " + path.string());
        f << content;
        out.files.push_back(path);
    };
    auto series_csv = [](const Series& s, const std::string& column) {
        std::ostringstream o;
        write_csv_header(o, {"update", column});
        if (s.x.empty()) return std::string();
        for (std::size_t i = 0; i < s.x.size(); ++i) write_csv_row(o, {s.x[i], s.y[i]});
        return o.str();
    };
    write("reward_series.csv", series_csv(reward, "mean_ep_reward"));
    write("entropy_series.csv", series_csv(entropy, "entropy"));
    write("reward.svg", rows.empty() ? std::string() : svg_line_chart(reward, "update"));
    write("entropy.svg", rows.empty() ? std::string() : svg_line_chart(entropy, "update"));
    return out;
}

}  // namespace reachgym
