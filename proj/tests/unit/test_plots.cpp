#include <cmath>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include <doctest.h>

#include "ifg/errors.hpp"
#include "ifg/io.hpp"
#include "ifg/plots.hpp"

using namespace ifg;
namespace fs = std::filesystem;

namespace {

std::string plot_to_string(const std::vector<PlotSeries>& series, const std::string& stem) {
    fs::path path = fs::temp_directory_path() / (stem + ".svg");
    write_line_plot(path.string(), "title", "x", "y", series);
    std::string svg = read_text_file(path.string());
    fs::remove(path);
    return svg;
}

}  // namespace

TEST_CASE("line plots are byte-deterministic") {
    std::vector<PlotSeries> series = {
        {"a", "#d6423c", {{0.0, 1.0}, {1.0, 3.0}, {2.0, 2.0}}},
        {"b", "#3b6fd4", {{0.0, 2.0}, {2.0, 0.5}}},
    };
    CHECK(plot_to_string(series, "ifg_plot_det1") == plot_to_string(series, "ifg_plot_det2"));
}

TEST_CASE("empty plots still draw the frame, axes, and labels") {
    std::string svg = plot_to_string({}, "ifg_plot_empty");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("<rect") != std::string::npos);   // frame
    CHECK(svg.find("title") != std::string::npos);
    CHECK(svg.find(">x<") != std::string::npos);
    CHECK(svg.find(">y<") != std::string::npos);
    CHECK(svg.find("<polyline") == std::string::npos);

    // A series with no drawable points behaves the same way.
    std::vector<PlotSeries> lone = {{"only", "#2c8a4b", {}}};
    std::string svg2 = plot_to_string(lone, "ifg_plot_lone");
    CHECK(svg2.find("<polyline") == std::string::npos);
    CHECK(svg2.find("only") != std::string::npos);  // legend entry survives
}

TEST_CASE("non-finite points are dropped rather than serialized") {
    std::vector<PlotSeries> series = {
        {"a", "#404040", {{0.0, 1.0}, {1.0, std::nan("")}, {2.0, 2.0}}},
    };
    std::string svg = plot_to_string(series, "ifg_plot_nan");
    CHECK(svg.find("nan") == std::string::npos);
    CHECK(svg.find("<polyline") != std::string::npos);
}

TEST_CASE("bn trajectory averages scores inside step buckets") {
    std::unordered_map<int, bool> flags = {{0, true}, {1, false}};
    fs::path a = fs::temp_directory_path() / "ifg_bn_a.svg";
    fs::path b = fs::temp_directory_path() / "ifg_bn_b.svg";

    // Two samples in the same bucket average to the same point as a single
    // sample already at the mean, so the files must match byte for byte.
    std::vector<TrackerLogRow> two = {{100, 0, 0, 0.0, 1.0}, {200, 0, 0, 0.0, 3.0}};
    std::vector<TrackerLogRow> one = {{300, 0, 0, 0.0, 2.0}};
    emit_bn_trajectory(a.string(), two, flags, 500);
    emit_bn_trajectory(b.string(), one, flags, 500);
    CHECK(read_text_file(a.string()) == read_text_file(b.string()));

    // A step exactly on the bucket boundary stays in that bucket...
    std::vector<TrackerLogRow> edge = {{500, 0, 0, 0.0, 2.0}};
    emit_bn_trajectory(b.string(), edge, flags, 500);
    CHECK(read_text_file(a.string()) == read_text_file(b.string()));
    // ...one past it moves to the next bucket and shifts the geometry.
    std::vector<TrackerLogRow> past = {{501, 0, 0, 0.0, 2.0}};
    emit_bn_trajectory(b.string(), past, flags, 500);
    CHECK(read_text_file(a.string()) != read_text_file(b.string()));

    // Both groups are drawn with their fixed legend names.
    std::vector<TrackerLogRow> mixed = {{100, 0, 0, 0.0, 1.0}, {100, 1, 1, 0.0, -0.5}};
    emit_bn_trajectory(a.string(), mixed, flags, 500);
    std::string svg = read_text_file(a.string());
    CHECK(svg.find("bias-aligned") != std::string::npos);
    CHECK(svg.find("bias-conflicting") != std::string::npos);

    fs::remove(a);
    fs::remove(b);
}

TEST_CASE("bn trajectory validates flags and bucket size") {
    std::unordered_map<int, bool> flags = {{0, true}};
    std::vector<TrackerLogRow> rows = {{100, 7, 0, 0.0, 1.0}};  // id 7 unknown
    fs::path path = fs::temp_directory_path() / "ifg_bn_bad.svg";
    CHECK_THROWS_WITH_AS(emit_bn_trajectory(path.string(), rows, flags, 500),
                         doctest::Contains("sample 7"), InputError);
    std::vector<TrackerLogRow> ok = {{100, 0, 0, 0.0, 1.0}};
    CHECK_THROWS_AS(emit_bn_trajectory(path.string(), ok, flags, 0), ConfigError);
    fs::remove(path);
}

TEST_CASE("accuracy plot tracks overall, class average, and bc curves") {
    std::vector<AccuracyPoint> points = {
        {250, 60.0, 55.0, 90.0, 20.0},
        {500, 70.0, 68.0, 91.0, 45.0},
    };
    fs::path path = fs::temp_directory_path() / "ifg_acc.svg";
    emit_accuracy_plot(path.string(), points);
    std::string svg = read_text_file(path.string());
    CHECK(svg.find("overall") != std::string::npos);
    CHECK(svg.find("class avg") != std::string::npos);
    CHECK(svg.find("bias-conflicting") != std::string::npos);
    CHECK(svg.find("accuracy (%)") != std::string::npos);
    // Three polylines, one per curve.
    std::size_t count = 0;
    for (std::size_t pos = svg.find("<polyline"); pos != std::string::npos;
         pos = svg.find("<polyline", pos + 1))
        ++count;
    CHECK(count == 3);
    fs::remove(path);
}
