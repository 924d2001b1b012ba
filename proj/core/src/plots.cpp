#include "ifg/plots.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ifg/io.hpp"

namespace ifg {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 64, kRight = 24, kTop = 44, kBottom = 52;

std::string svg_text(double x, double y, const std::string& s, const std::string& extra = "") {
    return "<text x=\"" + fmt_fixed(x, 1) + "\" y=\"" + fmt_fixed(y, 1) +
           "\" font-family=\"sans-serif\" font-size=\"12\"" + extra + ">" + s + "</text>\n";
}

std::string tick_label(double v) {
    // Short fixed form: enough digits to tell ticks apart, no exponentials.
    double a = std::abs(v);
    int digits = a >= 100.0 ? 0 : (a >= 1.0 ? 1 : 3);
    return fmt_fixed(v, digits);
}

}  // namespace

void write_line_plot(const std::string& path, const std::string& title, const std::string& x_label,
                     const std::string& y_label, const std::vector<PlotSeries>& series) {
    double x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = 1.0;
    bool any = false;
    for (const PlotSeries& s : series)
        for (const auto& [x, y] : s.points) {
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            if (!any) {
                x_lo = x_hi = x;
                y_lo = y_hi = y;
                any = true;
            } else {
                x_lo = std::min(x_lo, x);
                x_hi = std::max(x_hi, x);
                y_lo = std::min(y_lo, y);
                y_hi = std::max(y_hi, y);
            }
        }
    if (x_hi <= x_lo) x_hi = x_lo + 1.0;
    if (y_hi <= y_lo) y_hi = y_lo + 1.0;
    // A little headroom so lines do not hug the frame.
    double y_pad = 0.05 * (y_hi - y_lo);
    y_lo -= y_pad;
    y_hi += y_pad;

    double plot_w = kWidth - kLeft - kRight;
    double plot_h = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - x_lo) / (x_hi - x_lo) * plot_w; };
    auto py = [&](double y) { return kTop + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h; };

    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt_fixed(kWidth, 0) +
                      "\" height=\"" + fmt_fixed(kHeight, 0) + "\" viewBox=\"0 0 " + fmt_fixed(kWidth, 0) +
                      " " + fmt_fixed(kHeight, 0) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += svg_text(kWidth / 2, 22, title, " text-anchor=\"middle\" font-size=\"15\"");

    // Frame and ticks.
    svg += "<rect x=\"" + fmt_fixed(kLeft, 1) + "\" y=\"" + fmt_fixed(kTop, 1) + "\" width=\"" +
           fmt_fixed(plot_w, 1) + "\" height=\"" + fmt_fixed(plot_h, 1) +
           "\" fill=\"none\" stroke=\"#404040\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        double fx = x_lo + (x_hi - x_lo) * i / 4.0;
        double fy = y_lo + (y_hi - y_lo) * i / 4.0;
        double gx = px(fx), gy = py(fy);
        svg += "<line x1=\"" + fmt_fixed(gx, 1) + "\" y1=\"" + fmt_fixed(kTop + plot_h, 1) + "\" x2=\"" +
               fmt_fixed(gx, 1) + "\" y2=\"" + fmt_fixed(kTop + plot_h + 5, 1) + "\" stroke=\"#404040\"/>\n";
        svg += svg_text(gx, kTop + plot_h + 20, tick_label(fx), " text-anchor=\"middle\"");
        svg += "<line x1=\"" + fmt_fixed(kLeft - 5, 1) + "\" y1=\"" + fmt_fixed(gy, 1) + "\" x2=\"" +
               fmt_fixed(kLeft, 1) + "\" y2=\"" + fmt_fixed(gy, 1) + "\" stroke=\"#404040\"/>\n";
        svg += svg_text(kLeft - 9, gy + 4, tick_label(fy), " text-anchor=\"end\"");
    }
    svg += svg_text(kLeft + plot_w / 2, kHeight - 12, x_label, " text-anchor=\"middle\"");
    svg += "<text x=\"16\" y=\"" + fmt_fixed(kTop + plot_h / 2, 1) +
           "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
           fmt_fixed(kTop + plot_h / 2, 1) + ")\">" + y_label + "</text>\n";

    for (const PlotSeries& s : series) {
        if (s.points.empty()) continue;
        std::string pts;
        for (const auto& [x, y] : s.points) {
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            pts += fmt_fixed(px(x), 1) + "," + fmt_fixed(py(y), 1) + " ";
        }
        svg += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"1.5\" points=\"" + pts +
               "\"/>\n";
    }

    // Legend, top-right inside the frame.
    double ly = kTop + 14;
    for (const PlotSeries& s : series) {
        double lx = kLeft + plot_w - 150;
        svg += "<rect x=\"" + fmt_fixed(lx, 1) + "\" y=\"" + fmt_fixed(ly - 9, 1) +
               "\" width=\"10\" height=\"10\" fill=\"" + s.color + "\"/>\n";
        svg += svg_text(lx + 16, ly, s.name);
        ly += 16;
    }
    svg += "</svg>\n";
    write_text_file(path, svg);
}

void emit_bn_trajectory(const std::string& path, const std::vector<TrackerLogRow>& rows,
                        const std::unordered_map<int, bool>& bias_aligned_by_id, int bucket) {
    if (bucket < 1) throw ConfigError("bn trajectory bucket must be >= 1");
    // bucket id -> (sum, count) per group
    std::map<int, std::pair<double, int>> ba, bc;
    for (const TrackerLogRow& r : rows) {
        auto it = bias_aligned_by_id.find(r.sample_id);
        if (it == bias_aligned_by_id.end())
            throw InputError("bn trajectory: no bias flag for sample " + std::to_string(r.sample_id));
        int b = (r.step + bucket - 1) / bucket * bucket;
        auto& slot = it->second ? ba[b] : bc[b];
        slot.first += r.s;
        slot.second += 1;
    }
    auto to_points = [](const std::map<int, std::pair<double, int>>& m) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& [step, agg] : m)
            pts.emplace_back(static_cast<double>(step), agg.first / agg.second);
        return pts;
    };
    std::vector<PlotSeries> series = {
        {"bias-aligned", "#d6423c", to_points(ba)},
        {"bias-conflicting", "#3b6fd4", to_points(bc)},
    };
    write_line_plot(path, "BN score by bias group", "step", "mean BN score", series);
}

void emit_accuracy_plot(const std::string& path, const std::vector<AccuracyPoint>& points) {
    std::vector<PlotSeries> series(3);
    series[0] = {"overall", "#404040", {}};
    series[1] = {"class avg", "#2c8a4b", {}};
    series[2] = {"bias-conflicting", "#3b6fd4", {}};
    for (const AccuracyPoint& p : points) {
        series[0].points.emplace_back(p.step, p.overall);
        series[1].points.emplace_back(p.step, p.class_avg);
        series[2].points.emplace_back(p.step, p.bc);
    }
    write_line_plot(path, "Unbiased test accuracy", "step", "accuracy (%)", series);
}

}  // namespace ifg
