#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ifg/data.hpp"
#include "ifg/ensemble.hpp"
#include "ifg/model.hpp"
#include "ifg/rng.hpp"
#include "ifg/tracker.hpp"

namespace ifg {

enum class TrainMode { full, vanilla, reweight_only };
enum class PairSource { dbn, cand, d };

std::string to_string(TrainMode m);
std::string to_string(PairSource p);
TrainMode train_mode_from_string(const std::string& s);
PairSource pair_source_from_string(const std::string& s);

struct TrainConfig {
    TrainMode mode = TrainMode::full;
    int total_iters = 5000;
    int t1 = 200;   // step from which loss references freeze
    int t2 = 1000;  // first guided step; t2 == total_iters disables guidance entirely
    int batch_size = 64;
    double learning_rate = 1e-2;
    double alpha_l = 0.1;
    double alpha_s = 0.9;
    double tau = 2.0;
    double lambda_sim = 0.1;
    bool augment_flip = true;
    bool guide_loss_enabled = true;    // --no-guide-loss drops L_guide (both parts)
    bool bn_loss_enabled = true;       // --no-bn-loss drops the auxiliary pair CE
    bool score_weight_enabled = true;  // --no-score-weight fixes s_w = 1
    PairSource pair_source = PairSource::dbn;
    int eval_every = 250;
    int tracker_log_every = 100;
    int threads = 1;

    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

// One logged training step. Loss fields are means over the batch; the pair
// fields identify the first batch element's auxiliary sample (-1 when the
// step was unguided). `lambda` is the main-loss weight used in the
// recomposition total = lambda*main + guide + bn; unguided steps log 1.
struct StepRecord {
    int step = 0;
    double main = 0.0;
    double guide_sim = 0.0;
    double guide_cls = 0.0;
    double bn = 0.0;
    double total = 0.0;
    double lambda = 1.0;
    double w_mean = 0.0;
    double s_w_mean = 0.0;
    int pair_x = -1;
    int pair_x_bn = -1;
    int pair_tier = -1;
    int degenerate_w_count = 0;  // batch members whose ce_b == ce_d == 0
};

struct TrackerLogRow {
    int step = 0;
    int sample_id = 0;
    int label = 0;
    double l = 0.0;
    double s = 0.0;
};

struct TrainHooks {
    // Called with the current debiased model every eval_every steps and at the
    // final step. Installed by the CLI so that bias-flag-aware evaluation
    // stays outside the training path.
    std::function<void(int step, const ConvNet& f_d)> on_eval;
};

struct TrainResult {
    ConvNet f_d;
    ConvNet f_b;  // default-constructed in vanilla mode
    std::vector<StepRecord> steps;
    std::vector<TrackerLogRow> tracker_rows;
    std::vector<int> final_dbn;
    std::vector<TrackerEntry> final_entries;  // tracker snapshot (empty in vanilla mode)
    std::vector<TrackerIncident> incidents;
};

// Uniform same-label pair sampling with fallback: dbn -> cand -> full train
// set (excluding x itself when possible). The *_by_class vectors index sample
// ids per label; tier records which set supplied the pair.
struct PairChoice {
    int id = -1;
    int tier = -1;
};
PairChoice sample_pair(int x_id, int label, const std::vector<std::vector<int>>& dbn_by_class,
                       const std::vector<std::vector<int>>& cand_by_class,
                       const std::vector<std::vector<int>>& d_by_class, Rng& rng);

// Algorithm: per iteration, draw a batch; track the biased model's per-sample
// losses over the candidate set; train f_b with CE on the batch's amplified
// members; before t2 train f_d on the reweighted CE alone; from t2 on, refresh
// the dynamic bias-negative set, draw one same-label pair per element, and
// descend the composite guided objective. Deterministic for (config, seed).
// `partitions` may be null only in vanilla mode.
TrainResult train(const TrainConfig& cfg, const std::vector<TrainSample>& train_set,
                  const ArchConfig& arch, const PartitionSet* partitions, std::uint64_t seed,
                  const TrainHooks& hooks = {});

}  // namespace ifg
