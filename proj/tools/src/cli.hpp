#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ifg/config.hpp"

namespace ifg::cli {

// Exit codes, one per error category. Messages go to stderr as
// "error[<category>]: <message>".
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitPrecondition = 3;
inline constexpr int kExitInput = 4;

// Everything one invocation resolved from the config file plus flag
// overrides: the effective config, the run directory, and whether stages may
// be skipped when their recorded hash already matches.
struct Invocation {
    ExperimentConfig cfg;
    std::string out_dir;
    bool force = false;
};

// Stage identity strings. A stage's hash covers its own inputs plus the hash
// of the stage it consumes, so any upstream change invalidates the chain.
std::string generate_stage_hash(const ExperimentConfig& cfg);
std::string pretrain_stage_hash(const ExperimentConfig& cfg);
std::string train_stage_hash(const ExperimentConfig& cfg);
std::string evaluate_stage_hash(const ExperimentConfig& cfg);

// Parses argv (excluding the program name) and runs one subcommand.
// Returns a process exit code; never throws.
int run(const std::vector<std::string>& args);

}  // namespace ifg::cli
