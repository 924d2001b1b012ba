#include "ifg/data.hpp"

#include <algorithm>
#include <cmath>

#include "ifg/io.hpp"
#include "ifg/rng.hpp"

namespace ifg {

namespace {

constexpr char kDataMagic[9] = "IFGDATA1";
constexpr std::uint32_t kDataVersion = 2;

// Foreground is a fixed near-white for every class: only the geometry carries
// class information, only the background color carries the bias.
constexpr std::array<double, 3> kForeground = {0.95, 0.95, 0.92};

// Shape membership test for a pixel at offset (u, v) from the shape center,
// with the base footprint stretched by `s`.
bool shape_mask(int shape, double s, int u, int v) {
    double r2 = u * u + v * v;
    double au = std::abs(u), av = std::abs(v);
    switch (shape) {
        case 0: return r2 <= 49 * s * s;                                          // disk
        case 1: return (au <= 2 * s && av <= 7 * s) ||                            // cross
                       (av <= 2 * s && au <= 7 * s);
        case 2: return std::max(au, av) <= 6 * s;                                 // square
        case 3: return v >= -6 * s && v <= 6 * s && 12 * au <= 7 * (v + 6 * s);   // triangle
        case 4: return r2 >= 16 * s * s && r2 <= 49 * s * s;                      // ring
        case 5: return au + av <= 7 * s;                                          // diamond
        default: throw InputError("no shape defined for class " + std::to_string(shape));
    }
}

Tensor render(const DataConfig& cfg, int label, const std::array<double, 3>& bg, int dx, int dy,
              Rng& rng) {
    int n = cfg.image_size;
    int cx = n / 2 + dx;
    int cy = n / 2 + dy;
    std::vector<double> px(static_cast<std::size_t>(n) * n * 3);
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            const auto& base = shape_mask(label, cfg.shape_scale, x - cx, y - cy) ? kForeground : bg;
            std::size_t off = (static_cast<std::size_t>(y) * n + x) * 3;
            for (int c = 0; c < 3; ++c) {
                double v = base[static_cast<std::size_t>(c)] + rng.normal(0.0, cfg.noise_std);
                v = std::clamp(v, 0.0, 1.0);
                // Quantize to f32 so the on-disk f32 round trip is lossless.
                px[off + static_cast<std::size_t>(c)] = static_cast<double>(static_cast<float>(v));
            }
        }
    }
    return Tensor(Shape{n, n, 3}, std::move(px));
}

Sample make_sample(const DataConfig& cfg, int id, int label, bool aligned, Rng& rng) {
    int bg = label;
    if (!aligned) {
        // Uniform over the other classes' colors.
        int k = static_cast<int>(rng.uniform_int(0, cfg.classes - 2));
        bg = k >= label ? k + 1 : k;
    }
    std::array<double, 3> bg_color = class_palette()[static_cast<std::size_t>(bg)];
    // One color offset per sample, shared by every background pixel: unlike
    // the per-pixel noise it does not average out, so the bias attribute has
    // genuinely ambiguous stragglers the way real-world spurious cues do.
    if (cfg.color_jitter > 0.0)
        for (double& ch : bg_color) ch += rng.normal(0.0, cfg.color_jitter);
    int dx = static_cast<int>(rng.uniform_int(-cfg.max_translation, cfg.max_translation));
    int dy = static_cast<int>(rng.uniform_int(-cfg.max_translation, cfg.max_translation));
    Sample s;
    s.id = id;
    s.label = label;
    s.bias_aligned = aligned;
    s.image = render(cfg, label, bg_color, dx, dy, rng);
    return s;
}

}  // namespace

const std::vector<std::array<double, 3>>& class_palette() {
    static const std::vector<std::array<double, 3>> palette = {
        {0.92, 0.06, 0.06},  // red
        {0.06, 0.10, 0.92},  // blue
        {0.05, 0.80, 0.10},  // green
        {0.90, 0.85, 0.06},  // yellow
        {0.88, 0.08, 0.82},  // magenta
        {0.05, 0.82, 0.85},  // cyan
    };
    return palette;
}

void DataConfig::validate() const {
    if (classes != 2 && classes != 6)
        throw ConfigError("data classes must be 2 or 6, got " + std::to_string(classes));
    if (!(severity > 0.0 && severity <= 0.5))
        throw ConfigError("data severity must be in (0, 0.5], got " + std::to_string(severity));
    if (per_class_count < 100)
        throw ConfigError("data per_class_count must be >= 100, got " + std::to_string(per_class_count));
    if (test_per_class < 2)
        throw ConfigError("data test_per_class must be >= 2, got " + std::to_string(test_per_class));
    if (noise_std < 0.0) throw ConfigError("data noise_std must be >= 0");
    if (color_jitter < 0.0) throw ConfigError("data color_jitter must be >= 0");
    if (!(shape_scale > 0.0)) throw ConfigError("data shape_scale must be > 0");
    if (7.0 * shape_scale + max_translation > image_size / 2 - 1)
        throw ConfigError("data shape_scale " + std::to_string(shape_scale) +
                          " does not fit: need 7*scale + max_translation <= image_size/2 - 1");
    if (image_size < 16) throw ConfigError("data image_size must be >= 16, got " + std::to_string(image_size));
    if (max_translation < 0 || max_translation > image_size / 4)
        throw ConfigError("data max_translation must be in [0, image_size/4], got " +
                          std::to_string(max_translation));
}

BiasedDataset generate_dataset(const DataConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    BiasedDataset ds;
    ds.cfg = cfg;
    ds.seed = seed;
    Rng rng(seed);
    int id = 0;
    int bc_per_class = static_cast<int>(std::lround(cfg.severity * cfg.per_class_count));
    for (int label = 0; label < cfg.classes; ++label)
        for (int j = 0; j < cfg.per_class_count; ++j)
            ds.train.push_back(make_sample(cfg, id++, label, /*aligned=*/j >= bc_per_class, rng));
    for (int label = 0; label < cfg.classes; ++label)
        for (int j = 0; j < cfg.test_per_class; ++j)
            ds.test.push_back(make_sample(cfg, id++, label, /*aligned=*/j % 2 == 0, rng));
    return ds;
}

std::vector<TrainSample> BiasedDataset::train_view() const {
    std::vector<TrainSample> view;
    view.reserve(train.size());
    for (const Sample& s : train) view.push_back(TrainSample{s.id, s.label, s.image});
    return view;
}

bool dataset_equal(const BiasedDataset& a, const BiasedDataset& b) {
    auto samples_equal = [](const std::vector<Sample>& x, const std::vector<Sample>& y) {
        if (x.size() != y.size()) return false;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i].id != y[i].id || x[i].label != y[i].label || x[i].bias_aligned != y[i].bias_aligned)
                return false;
            if (x[i].image.values() != y[i].image.values()) return false;
        }
        return true;
    };
    return a.cfg == b.cfg && a.seed == b.seed && samples_equal(a.train, b.train) &&
           samples_equal(a.test, b.test);
}

void save_dataset(const BiasedDataset& ds, const std::string& path) {
    BinaryWriter w(path);
    w.magic(kDataMagic);
    w.u32(kDataVersion);
    w.u32(static_cast<std::uint32_t>(ds.cfg.classes));
    w.u32(static_cast<std::uint32_t>(ds.cfg.per_class_count));
    w.u32(static_cast<std::uint32_t>(ds.cfg.test_per_class));
    w.u32(static_cast<std::uint32_t>(ds.cfg.image_size));
    w.u32(static_cast<std::uint32_t>(ds.cfg.max_translation));
    w.f64(ds.cfg.severity);
    w.f64(ds.cfg.noise_std);
    w.f64(ds.cfg.color_jitter);
    w.f64(ds.cfg.shape_scale);
    w.u64(ds.seed);
    w.u32(static_cast<std::uint32_t>(ds.train.size()));
    w.u32(static_cast<std::uint32_t>(ds.test.size()));
    auto write_samples = [&w](const std::vector<Sample>& ss) {
        for (const Sample& s : ss) {
            w.u32(static_cast<std::uint32_t>(s.id));
            w.u16(static_cast<std::uint16_t>(s.label));
            w.u8(s.bias_aligned ? 1 : 0);
            for (double v : s.image.values()) w.f32(static_cast<float>(v));
        }
    };
    write_samples(ds.train);
    write_samples(ds.test);
    w.close();
}

BiasedDataset load_dataset(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic(kDataMagic);
    std::uint32_t version = r.u32();
    if (version != kDataVersion)
        throw FormatError("'" + path + "': dataset version " + std::to_string(version) +
                          " not supported (this build reads version " + std::to_string(kDataVersion) + ")");
    BiasedDataset ds;
    ds.cfg.classes = static_cast<int>(r.u32());
    ds.cfg.per_class_count = static_cast<int>(r.u32());
    ds.cfg.test_per_class = static_cast<int>(r.u32());
    ds.cfg.image_size = static_cast<int>(r.u32());
    ds.cfg.max_translation = static_cast<int>(r.u32());
    ds.cfg.severity = r.f64();
    ds.cfg.noise_std = r.f64();
    ds.cfg.color_jitter = r.f64();
    ds.cfg.shape_scale = r.f64();
    ds.seed = r.u64();
    std::uint32_t train_count = r.u32();
    std::uint32_t test_count = r.u32();
    ds.cfg.validate();
    int n = ds.cfg.image_size;
    auto read_samples = [&r, n, &ds, &path](std::vector<Sample>& out, std::uint32_t count) {
        out.reserve(count);
        for (std::uint32_t i = 0; i < count; ++i) {
            Sample s;
            s.id = static_cast<int>(r.u32());
            s.label = static_cast<int>(r.u16());
            if (s.label >= ds.cfg.classes)
                throw FormatError("'" + path + "': label " + std::to_string(s.label) +
                                  " out of range at byte offset " + std::to_string(r.offset() - 2));
            s.bias_aligned = r.u8() != 0;
            std::vector<double> px(static_cast<std::size_t>(n) * n * 3);
            for (double& v : px) v = static_cast<double>(r.f32());
            s.image = Tensor(Shape{n, n, 3}, std::move(px));
            out.push_back(std::move(s));
        }
    };
    read_samples(ds.train, train_count);
    read_samples(ds.test, test_count);
    if (!r.at_eof())
        throw FormatError("'" + path + "': trailing data at byte offset " + std::to_string(r.offset()));
    return ds;
}

Tensor flip_horizontal(const Tensor& image) {
    if (image.rank() != 3)
        throw InputError("flip_horizontal expects [h, w, c], got " + shape_str(image.shape()));
    int h = image.shape()[0], w = image.shape()[1], c = image.shape()[2];
    const double* in = image.values().data();
    std::vector<double> out(image.values().size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            std::size_t src = (static_cast<std::size_t>(y) * w + (w - 1 - x)) * c;
            std::size_t dst = (static_cast<std::size_t>(y) * w + x) * c;
            for (int ch = 0; ch < c; ++ch) out[dst + ch] = in[src + ch];
        }
    return Tensor(image.shape(), std::move(out));
}

std::vector<double> mean_color(const Tensor& image) {
    if (image.rank() != 3)
        throw InputError("mean_color expects [h, w, c], got " + shape_str(image.shape()));
    int hw = image.shape()[0] * image.shape()[1];
    int c = image.shape()[2];
    std::vector<double> mean(static_cast<std::size_t>(c), 0.0);
    const double* p = image.values().data();
    for (int i = 0; i < hw; ++i)
        for (int ch = 0; ch < c; ++ch) mean[static_cast<std::size_t>(ch)] += p[static_cast<std::size_t>(i) * c + ch];
    for (double& v : mean) v /= hw;
    return mean;
}

}  // namespace ifg
