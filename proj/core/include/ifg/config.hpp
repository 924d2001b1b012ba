#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "ifg/data.hpp"
#include "ifg/ensemble.hpp"
#include "ifg/model.hpp"
#include "ifg/trainer.hpp"

namespace ifg {

// Everything a run needs, straight from one JSON file plus flag overrides.
// Defaults follow the published hyperparameters where one exists (alpha_l
// 0.1, alpha_s 0.9, tau 2, lambda_sim 0.1, batch 64, GCE q 0.7, amplified
// threshold 0.99, 5 ensemble members) at the desk-scale schedule.
struct ExperimentConfig {
    std::uint64_t seed = 0;
    DataConfig data;
    struct ModelSection {
        std::vector<int> conv_channels = {16, 32, 32};
        int kernel = 3;
        int stride = 2;
        bool operator==(const ModelSection&) const = default;
    } model;
    EnsembleConfig ensemble;
    TrainConfig train;

    ArchConfig arch() const;  // assembled from data + model sections
    void validate() const;
    bool operator==(const ExperimentConfig&) const = default;
};

// Strict schema: unknown keys anywhere are an error naming the full key path;
// missing keys keep their defaults. Severity is given in percent, matching
// the CLI flag.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);  // canonical, sorted keys
ExperimentConfig load_config_file(const std::string& path);

// 16-hex-digit content hash of a canonical JSON dump; run and stage identity.
std::string hash_hex(const std::string& content);

}  // namespace ifg
