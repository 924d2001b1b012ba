#include <array>
#include <cmath>
#include <cstdio>
#include <vector>

#include <doctest.h>

#include "ifg/data.hpp"
#include "ifg/errors.hpp"

using namespace ifg;

namespace {

DataConfig small_cfg() {
    DataConfig cfg;
    cfg.per_class_count = 200;
    cfg.test_per_class = 20;
    cfg.severity = 0.05;
    return cfg;
}

int nearest_palette_class(const std::vector<double>& color, int classes) {
    const auto& palette = class_palette();
    int best = 0;
    double best_d = 1e300;
    for (int k = 0; k < classes; ++k) {
        double d = 0.0;
        for (int ch = 0; ch < 3; ++ch) {
            double diff = color[static_cast<std::size_t>(ch)] - palette[static_cast<std::size_t>(k)][static_cast<std::size_t>(ch)];
            d += diff * diff;
        }
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return best;
}

}  // namespace

TEST_CASE("bias-conflicting train counts follow round(severity * per_class)") {
    struct Case {
        double severity;
        int expect_bc_per_class;
    };
    for (Case c : {Case{0.005, 10}, Case{0.01, 20}, Case{0.02, 40}, Case{0.05, 100}}) {
        DataConfig cfg;  // 2000 per class
        cfg.severity = c.severity;
        BiasedDataset ds = generate_dataset(cfg, 5);
        std::vector<int> bc(2, 0), total(2, 0);
        for (const Sample& s : ds.train) {
            ++total[static_cast<std::size_t>(s.label)];
            if (!s.bias_aligned) ++bc[static_cast<std::size_t>(s.label)];
        }
        for (int k = 0; k < 2; ++k) {
            CHECK(total[static_cast<std::size_t>(k)] == 2000);
            CHECK(bc[static_cast<std::size_t>(k)] == c.expect_bc_per_class);
        }
    }
}

TEST_CASE("test split balances bias groups within one sample per class") {
    BiasedDataset ds = generate_dataset(small_cfg(), 9);
    std::vector<int> ba(2, 0), bc(2, 0);
    for (const Sample& s : ds.test) (s.bias_aligned ? ba : bc)[static_cast<std::size_t>(s.label)]++;
    for (int k = 0; k < 2; ++k) {
        CHECK(ba[static_cast<std::size_t>(k)] + bc[static_cast<std::size_t>(k)] == 20);
        CHECK(std::abs(ba[static_cast<std::size_t>(k)] - bc[static_cast<std::size_t>(k)]) <= 1);
    }
}

TEST_CASE("generation is deterministic per (config, seed)") {
    DataConfig cfg = small_cfg();
    CHECK(dataset_equal(generate_dataset(cfg, 3), generate_dataset(cfg, 3)));
    CHECK_FALSE(dataset_equal(generate_dataset(cfg, 3), generate_dataset(cfg, 4)));
}

TEST_CASE("sample ids are unique and dense across train") {
    BiasedDataset ds = generate_dataset(small_cfg(), 2);
    std::vector<char> seen(ds.train.size(), 0);
    for (const Sample& s : ds.train) {
        REQUIRE(s.id >= 0);
        REQUIRE(s.id < static_cast<int>(ds.train.size()));
        CHECK(seen[static_cast<std::size_t>(s.id)] == 0);
        seen[static_cast<std::size_t>(s.id)] = 1;
    }
}

TEST_CASE("pixels live in [0,1] and survive f32 quantization") {
    BiasedDataset ds = generate_dataset(small_cfg(), 7);
    for (const Sample& s : {ds.train[0], ds.train[42], ds.test[3]}) {
        for (double v : s.image.values()) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            CHECK(v == static_cast<double>(static_cast<float>(v)));
        }
    }
}

TEST_CASE("background color is the bias attribute") {
    BiasedDataset ds = generate_dataset(small_cfg(), 11);
    int ba_total = 0, ba_match = 0, bc_total = 0, bc_match = 0;
    for (const Sample& s : ds.train) {
        int guess = nearest_palette_class(mean_color(s.image), ds.cfg.classes);
        if (s.bias_aligned) {
            ++ba_total;
            ba_match += guess == s.label;
        } else {
            ++bc_total;
            bc_match += guess == s.label;
        }
    }
    REQUIRE(ba_total > 0);
    REQUIRE(bc_total > 0);
    // A pure color probe nails bias-aligned samples and fails bias-conflicting
    // ones: the shape, not the color, defines the class.
    CHECK(static_cast<double>(ba_match) / ba_total > 0.95);
    CHECK(static_cast<double>(bc_match) / bc_total < 0.5);
}

TEST_CASE("color jitter shifts the whole background once per sample") {
    DataConfig cfg = small_cfg();
    cfg.per_class_count = 100;
    cfg.noise_std = 0.0;
    cfg.max_translation = 0;
    cfg.color_jitter = 0.3;
    BiasedDataset ds = generate_dataset(cfg, 23);
    // With pixel noise off, all background pixels of one sample agree exactly,
    // but the shared offset differs between samples.
    auto corner = [](const Tensor& img) {
        std::array<double, 3> px;
        for (int c = 0; c < 3; ++c) px[static_cast<std::size_t>(c)] = img.values()[static_cast<std::size_t>(c)];
        return px;
    };
    // Indices 5 and 6 are the first bias-aligned class-0 samples (the
    // round(severity * per_class) = 5 conflicting ones come first).
    REQUIRE(ds.train[5].bias_aligned);
    REQUIRE(ds.train[6].bias_aligned);
    const Tensor& a = ds.train[5].image;
    int n = cfg.image_size;
    std::array<double, 3> a00 = corner(a);
    std::size_t other = ((static_cast<std::size_t>(n) - 1) * n) * 3;  // bottom-left corner
    for (int c = 0; c < 3; ++c)
        CHECK(a.values()[other + static_cast<std::size_t>(c)] == a00[static_cast<std::size_t>(c)]);
    CHECK(corner(ds.train[6].image) != a00);

    // Zero jitter reproduces the palette color exactly (modulo f32 rounding).
    cfg.color_jitter = 0.0;
    BiasedDataset plain = generate_dataset(cfg, 23);
    std::array<double, 3> p00 = corner(plain.train[5].image);
    const auto& palette = class_palette()[0];
    for (int c = 0; c < 3; ++c)
        CHECK(p00[static_cast<std::size_t>(c)] ==
              static_cast<double>(static_cast<float>(palette[static_cast<std::size_t>(c)])));
}

TEST_CASE("train view strips the evaluation-only bias flag") {
    BiasedDataset ds = generate_dataset(small_cfg(), 13);
    std::vector<TrainSample> view = ds.train_view();
    REQUIRE(view.size() == ds.train.size());
    for (std::size_t i = 0; i < view.size(); ++i) {
        CHECK(view[i].id == ds.train[i].id);
        CHECK(view[i].label == ds.train[i].label);
        CHECK(view[i].image.data_ptr() == ds.train[i].image.data_ptr());
    }
}

TEST_CASE("dataset file round trip") {
    BiasedDataset ds = generate_dataset(small_cfg(), 17);
    const std::string path = "dataset_roundtrip.bin";
    save_dataset(ds, path);
    BiasedDataset back = load_dataset(path);
    CHECK(dataset_equal(ds, back));
    std::remove(path.c_str());
}

TEST_CASE("horizontal flip is an involution and actually flips") {
    BiasedDataset ds = generate_dataset(small_cfg(), 19);
    const Tensor& img = ds.train[5].image;
    Tensor once = flip_horizontal(img);
    CHECK(once.values() != img.values());
    CHECK(flip_horizontal(once).values() == img.values());
}

TEST_CASE("config validation rejects out-of-range settings") {
    DataConfig cfg = small_cfg();
    cfg.severity = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = small_cfg();
    cfg.severity = 0.6;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = small_cfg();
    cfg.classes = 3;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = small_cfg();
    cfg.per_class_count = 50;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = small_cfg();
    cfg.max_translation = 100;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = small_cfg();
    cfg.color_jitter = -0.1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = small_cfg();
    cfg.shape_scale = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = small_cfg();
    cfg.shape_scale = 2.0;  // 7*2 + 3 > 32/2 - 1: shape would leave the frame
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("mean color averages pixels") {
    Tensor img({1, 2, 3}, {1.0, 0.0, 0.5, 0.0, 1.0, 0.5});
    std::vector<double> m = mean_color(img);
    REQUIRE(m.size() == 3);
    CHECK(m[0] == doctest::Approx(0.5));
    CHECK(m[1] == doctest::Approx(0.5));
    CHECK(m[2] == doctest::Approx(0.5));
}
