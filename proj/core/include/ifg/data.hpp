#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ifg/tensor.hpp"

namespace ifg {

struct DataConfig {
    int classes = 2;
    int per_class_count = 2000;     // train samples per class
    int test_per_class = 200;       // test samples per class, split evenly BA/BC
    double severity = 0.01;         // fraction of bias-conflicting train samples per class
    double noise_std = 0.05;        // additive Gaussian pixel noise
    double color_jitter = 0.15;     // per-sample Gaussian offset of the background color
    double shape_scale = 1.4;       // multiplier on the base shape footprint
    int max_translation = 3;        // shape offset drawn from [-max, +max] per axis
    int image_size = 32;

    void validate() const;
    bool operator==(const DataConfig&) const = default;
};

// One 32x32x3 image in [0,1]. The class is defined by the rendered shape; the
// background color is the bias attribute. `bias_aligned` is evaluation-only
// ground truth: training code consumes TrainSample views that do not carry it.
struct Sample {
    int id = 0;
    int label = 0;
    bool bias_aligned = true;
    Tensor image;
};

// What the training path is allowed to see.
struct TrainSample {
    int id = 0;
    int label = 0;
    Tensor image;
};

struct BiasedDataset {
    DataConfig cfg;
    std::uint64_t seed = 0;
    std::vector<Sample> train;
    std::vector<Sample> test;

    std::vector<TrainSample> train_view() const;  // strips bias_aligned
};

bool dataset_equal(const BiasedDataset& a, const BiasedDataset& b);

// Deterministic for (cfg, seed). Per train class, exactly
// round(severity * per_class_count) samples are bias-conflicting (background
// drawn uniformly from the other classes' colors); the test split alternates
// BA/BC so per class |#BA - #BC| <= 1.
BiasedDataset generate_dataset(const DataConfig& cfg, std::uint64_t seed);

void save_dataset(const BiasedDataset& ds, const std::string& path);
BiasedDataset load_dataset(const std::string& path);

// Horizontal mirror of an [h, w, c] image (training augmentation).
Tensor flip_horizontal(const Tensor& image);

// Mean color over all pixels -> [c]; basis of the bias linear probe.
std::vector<double> mean_color(const Tensor& image);

// The per-class background palette (bias attribute values), size >= classes.
const std::vector<std::array<double, 3>>& class_palette();

}  // namespace ifg
