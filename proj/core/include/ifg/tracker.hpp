#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ifg/errors.hpp"

namespace ifg {

// Per-candidate view of the biased model's loss history. `l` is an EMA of the
// cross entropy, seeded with the first observed value; `l_ref` freezes that
// EMA at the sample's first appearance at or after step T1; `s` accumulates
// how far the loss has moved above the reference since then. A sample whose
// biased-model loss keeps sinking below its reference ends up with s <= 0.
struct TrackerEntry {
    int sample_id = 0;
    int label = 0;
    double l = 0.0;
    std::optional<double> l_ref;
    double s = 0.0;
    bool seen = false;  // whether any loss was ever observed
};

struct TrackerIncident {
    int step = -1;
    int sample_id = 0;
    double value = 0.0;  // the rejected (non-finite) loss
};

// Tracks candidate samples only; single-writer (the training loop). All
// updates happen only when a sample appears in the current mini-batch.
class BnState {
  public:
    BnState(const std::vector<int>& candidate_ids, const std::vector<int>& labels, double alpha_l,
            double alpha_s, int t1);

    // l <- alpha_l*ce + (1-alpha_l)*l_prev (first observation: l <- ce).
    // A non-finite ce leaves the entry untouched, logs an incident, and
    // returns false so the caller can skip the rest of this step's updates.
    bool update_loss_ema(int sample_id, double ce, int step = -1);

    // l_ref <- l at the first call at or after T1; later calls are no-ops.
    void set_reference(int sample_id, int step);

    // s <- alpha_s*(l - l_ref) + (1-alpha_s)*s_prev. Requires l_ref set.
    void update_bn_score(int sample_id);

    // Full per-appearance sequence for one mini-batch member.
    bool step_update(int sample_id, double ce, int step);

    // Ids with strictly positive score, ascending.
    std::vector<int> current_dbn() const;

    // clip(s, 0) / max over same-class entries of clip(s, 0); 0 when the
    // class-wide maximum is <= eps.
    double loss_weight(int sample_id) const;

    bool is_tracked(int sample_id) const { return entries_.count(sample_id) != 0; }
    const TrackerEntry& entry(int sample_id) const;
    const std::map<int, TrackerEntry>& entries() const { return entries_; }
    const std::vector<TrackerIncident>& incidents() const { return incidents_; }
    int t1() const { return t1_; }

  private:
    TrackerEntry& mutable_entry(int sample_id);

    std::map<int, TrackerEntry> entries_;
    std::vector<TrackerIncident> incidents_;
    double alpha_l_;
    double alpha_s_;
    int t1_;
};

}  // namespace ifg
