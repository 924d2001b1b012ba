#include "ifg/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "ifg/rng.hpp"

namespace ifg {

namespace {

// Tracks which keys a section consumed so leftovers can be reported by path.
class SectionReader {
  public:
    SectionReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object())
            throw ConfigError("config: '" + (path_.empty() ? "top level" : path_) + "' must be an object");
    }

    std::string key_path(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    template <typename T>
    void read(const char* key, T& out, const char* type_name) {
        consumed_.insert(key);
        if (!j_.contains(key)) return;
        const nlohmann::json& v = j_.at(key);
        try {
            out = v.get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError("config: '" + key_path(key) + "' must be " + type_name);
        }
    }

    void read_int(const char* key, int& out) {
        consumed_.insert(key);
        if (!j_.contains(key)) return;
        const nlohmann::json& v = j_.at(key);
        if (!v.is_number_integer())
            throw ConfigError("config: '" + key_path(key) + "' must be an integer");
        out = v.get<int>();
    }

    void read_double(const char* key, double& out) {
        consumed_.insert(key);
        if (!j_.contains(key)) return;
        const nlohmann::json& v = j_.at(key);
        if (!v.is_number())
            throw ConfigError("config: '" + key_path(key) + "' must be a number");
        out = v.get<double>();
    }

    void read_bool(const char* key, bool& out) {
        consumed_.insert(key);
        if (!j_.contains(key)) return;
        const nlohmann::json& v = j_.at(key);
        if (!v.is_boolean()) throw ConfigError("config: '" + key_path(key) + "' must be a boolean");
        out = v.get<bool>();
    }

    void read_string(const char* key, std::string& out) {
        consumed_.insert(key);
        if (!j_.contains(key)) return;
        const nlohmann::json& v = j_.at(key);
        if (!v.is_string()) throw ConfigError("config: '" + key_path(key) + "' must be a string");
        out = v.get<std::string>();
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (consumed_.find(it.key()) == consumed_.end())
                throw ConfigError("config: unknown key '" + key_path(it.key()) + "'");
    }

    bool has(const char* key) const { return j_.contains(key); }
    const nlohmann::json& raw(const char* key) {
        consumed_.insert(key);
        return j_.at(key);
    }

  private:
    const nlohmann::json& j_;
    std::string path_;
    std::set<std::string> consumed_;
};

}  // namespace

ArchConfig ExperimentConfig::arch() const {
    ArchConfig a;
    a.input_h = data.image_size;
    a.input_w = data.image_size;
    a.input_ch = 3;
    a.conv_channels = model.conv_channels;
    a.kernel = model.kernel;
    a.stride = model.stride;
    a.classes = data.classes;
    return a;
}

void ExperimentConfig::validate() const {
    data.validate();
    ensemble.validate();
    train.validate();
    arch().validate();
    int train_total = data.classes * data.per_class_count;
    if (train.batch_size > train_total)
        throw ConfigError("train batch_size exceeds the training set size");
    if (ensemble.batch_size > train_total)
        throw ConfigError("ensemble batch_size exceeds the training set size");
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    SectionReader root(j, "");
    if (root.has("seed")) {
        const nlohmann::json& v = root.raw("seed");
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
            throw ConfigError("config: 'seed' must be a nonnegative integer");
        cfg.seed = v.get<std::uint64_t>();
    }
    if (root.has("data")) {
        SectionReader s(root.raw("data"), "data");
        s.read_int("classes", cfg.data.classes);
        s.read_int("per_class_count", cfg.data.per_class_count);
        s.read_int("test_per_class", cfg.data.test_per_class);
        double severity_pct = cfg.data.severity * 100.0;
        s.read_double("severity_pct", severity_pct);
        cfg.data.severity = severity_pct / 100.0;
        s.read_double("noise_std", cfg.data.noise_std);
        s.read_double("color_jitter", cfg.data.color_jitter);
        s.read_double("shape_scale", cfg.data.shape_scale);
        s.read_int("max_translation", cfg.data.max_translation);
        s.read_int("image_size", cfg.data.image_size);
        s.finish();
    }
    if (root.has("model")) {
        SectionReader s(root.raw("model"), "model");
        s.read("conv_channels", cfg.model.conv_channels, "an array of integers");
        s.read_int("kernel", cfg.model.kernel);
        s.read_int("stride", cfg.model.stride);
        s.finish();
    }
    if (root.has("ensemble")) {
        SectionReader s(root.raw("ensemble"), "ensemble");
        s.read_int("count", cfg.ensemble.count);
        s.read_int("iters", cfg.ensemble.iters);
        s.read_double("q", cfg.ensemble.q);
        s.read_double("threshold", cfg.ensemble.threshold);
        s.read_int("batch_size", cfg.ensemble.batch_size);
        s.read_double("lr", cfg.ensemble.lr);
        s.read_bool("augment_flip", cfg.ensemble.augment_flip);
        s.finish();
    }
    if (root.has("train")) {
        SectionReader s(root.raw("train"), "train");
        std::string mode = to_string(cfg.train.mode);
        std::string pair_source = to_string(cfg.train.pair_source);
        s.read_string("mode", mode);
        s.read_string("pair_source", pair_source);
        cfg.train.mode = train_mode_from_string(mode);
        cfg.train.pair_source = pair_source_from_string(pair_source);
        s.read_int("total_iters", cfg.train.total_iters);
        s.read_int("t1", cfg.train.t1);
        s.read_int("t2", cfg.train.t2);
        s.read_int("batch_size", cfg.train.batch_size);
        s.read_double("learning_rate", cfg.train.learning_rate);
        s.read_double("alpha_l", cfg.train.alpha_l);
        s.read_double("alpha_s", cfg.train.alpha_s);
        s.read_double("tau", cfg.train.tau);
        s.read_double("lambda_sim", cfg.train.lambda_sim);
        s.read_bool("augment_flip", cfg.train.augment_flip);
        s.read_bool("guide_loss", cfg.train.guide_loss_enabled);
        s.read_bool("bn_loss", cfg.train.bn_loss_enabled);
        s.read_bool("score_weight", cfg.train.score_weight_enabled);
        s.read_int("eval_every", cfg.train.eval_every);
        s.read_int("tracker_log_every", cfg.train.tracker_log_every);
        s.read_int("threads", cfg.train.threads);
        s.finish();
    }
    root.finish();
    return cfg;
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["seed"] = cfg.seed;
    j["data"] = {
        {"classes", cfg.data.classes},
        {"per_class_count", cfg.data.per_class_count},
        {"test_per_class", cfg.data.test_per_class},
        {"severity_pct", cfg.data.severity * 100.0},
        {"noise_std", cfg.data.noise_std},
        {"color_jitter", cfg.data.color_jitter},
        {"shape_scale", cfg.data.shape_scale},
        {"max_translation", cfg.data.max_translation},
        {"image_size", cfg.data.image_size},
    };
    j["model"] = {
        {"conv_channels", cfg.model.conv_channels},
        {"kernel", cfg.model.kernel},
        {"stride", cfg.model.stride},
    };
    j["ensemble"] = {
        {"count", cfg.ensemble.count},
        {"iters", cfg.ensemble.iters},
        {"q", cfg.ensemble.q},
        {"threshold", cfg.ensemble.threshold},
        {"batch_size", cfg.ensemble.batch_size},
        {"lr", cfg.ensemble.lr},
        {"augment_flip", cfg.ensemble.augment_flip},
    };
    j["train"] = {
        {"mode", to_string(cfg.train.mode)},
        {"pair_source", to_string(cfg.train.pair_source)},
        {"total_iters", cfg.train.total_iters},
        {"t1", cfg.train.t1},
        {"t2", cfg.train.t2},
        {"batch_size", cfg.train.batch_size},
        {"learning_rate", cfg.train.learning_rate},
        {"alpha_l", cfg.train.alpha_l},
        {"alpha_s", cfg.train.alpha_s},
        {"tau", cfg.train.tau},
        {"lambda_sim", cfg.train.lambda_sim},
        {"augment_flip", cfg.train.augment_flip},
        {"guide_loss", cfg.train.guide_loss_enabled},
        {"bn_loss", cfg.train.bn_loss_enabled},
        {"score_weight", cfg.train.score_weight_enabled},
        {"eval_every", cfg.train.eval_every},
        {"tracker_log_every", cfg.train.tracker_log_every},
        {"threads", cfg.train.threads},
    };
    return j;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

std::string hash_hex(const std::string& content) {
    std::uint64_t h = mix64(fnv1a64(content));
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace ifg
