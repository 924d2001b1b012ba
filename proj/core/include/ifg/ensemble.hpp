#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ifg/data.hpp"
#include "ifg/model.hpp"

namespace ifg {

struct EnsembleConfig {
    int count = 5;            // ensemble members; must be odd for majority voting
    int iters = 300;          // GCE pretraining steps per member
    double q = 0.7;           // GCE exponent
    double threshold = 0.99;  // true-label probability bound for the amplified set
    int batch_size = 64;
    double lr = 1e-2;
    bool augment_flip = true;

    void validate() const;
    bool operator==(const EnsembleConfig&) const = default;
};

struct ModelEnsemble {
    std::vector<ConvNet> members;
};

// Sample-id partitions derived from ensemble votes. The two sets are built by
// different rules and may overlap; both are subsets of the train ids.
struct PartitionSet {
    std::vector<int> amplified;   // ids: majority assigns >= threshold prob to the true label
    std::vector<int> candidates;  // ids: majority misclassifies (argmax != label)
};

// One forward pass per (member, sample), shared by both partition rules.
struct EnsembleVotes {
    std::vector<int> ids;                              // sample ids, in train order
    std::vector<int> labels;
    std::vector<std::vector<double>> true_label_prob;  // [sample][member]
    std::vector<std::vector<int>> prediction;          // [sample][member], argmax ties to lowest
};

// Vote rules, exposed for table-driven tests. Majority is strict: > count/2.
bool amplified_vote(const std::vector<double>& true_label_probs, double threshold);
bool candidate_vote(const std::vector<int>& predictions, int label);

// Trains `count` independently initialized members for `iters` steps of
// mini-batch SGD on the generalized cross entropy loss over all of `train`.
// Deterministic for (cfg, seed). Members train one after another; per-batch
// sample work fans out over `threads`.
ModelEnsemble pretrain_biased(const std::vector<TrainSample>& train, const ArchConfig& arch,
                              const EnsembleConfig& cfg, std::uint64_t seed, int threads = 1);

EnsembleVotes compute_votes(const ModelEnsemble& ensemble, const std::vector<TrainSample>& train,
                            int threads = 1);

// May legitimately be empty (the caller should warn: f_b training degenerates).
std::vector<int> build_amplified(const EnsembleVotes& votes, double threshold);

// Throws InputError when empty: guidance cannot run without candidates.
std::vector<int> build_candidates(const EnsembleVotes& votes);

PartitionSet build_partitions(const ModelEnsemble& ensemble, const std::vector<TrainSample>& train,
                              double threshold, int threads = 1);

// Text lines `sample_id,partition` with partition in {amplified, candidate}.
void save_partitions(const PartitionSet& p, const std::string& path);
PartitionSet load_partitions(const std::string& path);

}  // namespace ifg
