#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ifg/trainer.hpp"

namespace ifg {

struct PlotSeries {
    std::string name;
    std::string color;  // SVG color, e.g. "#d6423c"
    std::vector<std::pair<double, double>> points;
};

// Dependency-free SVG line plot; axes are always drawn, even with no data.
// Output is deterministic for identical inputs.
void write_line_plot(const std::string& path, const std::string& title, const std::string& x_label,
                     const std::string& y_label, const std::vector<PlotSeries>& series);

// BN-score trajectories averaged per bias group in fixed step buckets; one
// red series for bias-aligned candidates, one blue for bias-conflicting.
void emit_bn_trajectory(const std::string& path, const std::vector<TrackerLogRow>& rows,
                        const std::unordered_map<int, bool>& bias_aligned_by_id, int bucket = 500);

struct AccuracyPoint {
    int step = 0;
    double overall = 0.0;
    double class_avg = 0.0;
    double ba = 0.0;
    double bc = 0.0;
};

void emit_accuracy_plot(const std::string& path, const std::vector<AccuracyPoint>& points);

}  // namespace ifg
