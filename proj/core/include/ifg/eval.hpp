#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ifg/data.hpp"
#include "ifg/ensemble.hpp"
#include "ifg/model.hpp"
#include "ifg/tracker.hpp"

namespace ifg {

// Accuracies are percentages in [0, 100]. ba/bc split the test set by the
// evaluation-only bias flag; bn_auc stays NaN until filled from tracker
// scores (it needs a trained biased model, not the test set).
struct Metrics {
    double overall = 0.0;
    std::vector<double> per_class;
    double class_avg = 0.0;
    double ba = 0.0;
    double bc = 0.0;
    double bn_auc;

    Metrics();
};

Metrics evaluate(const ConvNet& net, const std::vector<Sample>& test, int threads = 1);

// Counting core, separated so vote/metric logic is table-testable.
Metrics metrics_from_predictions(const std::vector<int>& predictions, const std::vector<Sample>& test);

// Mann-Whitney AUC with average ranks for ties; NaN when either class is
// empty. `positive` marks the class the score is supposed to rank higher.
double roc_auc(const std::vector<double>& scores, const std::vector<char>& positive);

// AUC of the final BN score separating bias-conflicting candidates (positive)
// from bias-aligned ones.
double bn_auc_from_entries(const std::vector<TrackerEntry>& entries, const BiasedDataset& ds);

// Table of who survived the BN-score filter, split by the hidden bias flag.
struct DbnComposition {
    int cand_ba = 0;
    int cand_bc = 0;
    int retained_ba = 0;  // in the final dynamic set
    int retained_bc = 0;
    int excluded_ba() const { return cand_ba - retained_ba; }
    int excluded_bc() const { return cand_bc - retained_bc; }
    // Share of the full training set's BA/BC samples that the final set keeps.
    double retained_ba_pct_of_d = 0.0;
    double retained_bc_pct_of_d = 0.0;
    // BA share inside each set; the filter should push this down.
    double ba_fraction_cand = 0.0;
    double ba_fraction_dbn = 0.0;
};

DbnComposition dbn_composition(const PartitionSet& partitions, const std::vector<int>& dbn_final,
                               const BiasedDataset& ds);

// How well majority misclassification finds the true bias-conflicting set.
struct CandidateQuality {
    int cand_count = 0;
    int cand_bc = 0;
    int total_bc = 0;
    double bc_recall = 0.0;         // cand_bc / total_bc
    double ba_contamination = 0.0;  // (cand_count - cand_bc) / cand_count
};

CandidateQuality candidate_quality(const PartitionSet& partitions, const BiasedDataset& ds);

// One row of metrics.csv. Accuracy fields hold the best-over-training values
// (the evaluation protocol); final_* the last checkpoint's, for comparison.
struct MetricsRow {
    std::string mode;
    std::uint64_t seed = 0;
    double severity_pct = 0.0;
    double overall = 0.0;
    double class_avg = 0.0;
    double ba = 0.0;
    double bc = 0.0;
    double bn_auc;
    int best_step = -1;
    double final_overall = 0.0;
    double final_class_avg = 0.0;
    double final_ba = 0.0;
    double final_bc = 0.0;

    MetricsRow();
};

// Rewrites the file with the row inserted or replaced (key: mode, seed,
// severity), rows sorted by key — identical inputs give identical bytes.
void upsert_metrics_row(const std::string& path, const MetricsRow& row);
std::vector<MetricsRow> read_metrics_csv(const std::string& path);

}  // namespace ifg
