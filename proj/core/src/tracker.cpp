#include "ifg/tracker.hpp"

#include <cmath>

namespace ifg {

namespace {
constexpr double kEps = 1e-12;
}

BnState::BnState(const std::vector<int>& candidate_ids, const std::vector<int>& labels, double alpha_l,
                 double alpha_s, int t1)
    : alpha_l_(alpha_l), alpha_s_(alpha_s), t1_(t1) {
    if (!(alpha_l > 0.0 && alpha_l <= 1.0)) throw ConfigError("tracker alpha_l must be in (0, 1]");
    if (!(alpha_s > 0.0 && alpha_s <= 1.0)) throw ConfigError("tracker alpha_s must be in (0, 1]");
    if (t1 < 0) throw ConfigError("tracker t1 must be >= 0");
    if (candidate_ids.size() != labels.size())
        throw InputError("tracker: candidate id and label lists differ in length");
    if (candidate_ids.empty()) throw InputError("tracker: empty candidate set");
    for (std::size_t i = 0; i < candidate_ids.size(); ++i) {
        TrackerEntry e;
        e.sample_id = candidate_ids[i];
        e.label = labels[i];
        if (!entries_.emplace(e.sample_id, e).second)
            throw InputError("tracker: duplicate candidate id " + std::to_string(e.sample_id));
    }
}

TrackerEntry& BnState::mutable_entry(int sample_id) {
    auto it = entries_.find(sample_id);
    if (it == entries_.end())
        throw ContractViolation("tracker: sample " + std::to_string(sample_id) + " is not a candidate");
    return it->second;
}

const TrackerEntry& BnState::entry(int sample_id) const {
    auto it = entries_.find(sample_id);
    if (it == entries_.end())
        throw ContractViolation("tracker: sample " + std::to_string(sample_id) + " is not a candidate");
    return it->second;
}

bool BnState::update_loss_ema(int sample_id, double ce, int step) {
    TrackerEntry& e = mutable_entry(sample_id);
    if (!std::isfinite(ce)) {
        incidents_.push_back(TrackerIncident{step, sample_id, ce});
        return false;
    }
    e.l = e.seen ? alpha_l_ * ce + (1.0 - alpha_l_) * e.l : ce;
    e.seen = true;
    return true;
}

void BnState::set_reference(int sample_id, int step) {
    if (step < t1_)
        throw ContractViolation("tracker: set_reference at step " + std::to_string(step) + " before T1=" +
                                std::to_string(t1_));
    TrackerEntry& e = mutable_entry(sample_id);
    if (e.l_ref) return;  // idempotent
    e.l_ref = e.l;
}

void BnState::update_bn_score(int sample_id) {
    TrackerEntry& e = mutable_entry(sample_id);
    if (!e.l_ref)
        throw ContractViolation("tracker: update_bn_score for sample " + std::to_string(sample_id) +
                                " before its reference loss is set");
    e.s = alpha_s_ * (e.l - *e.l_ref) + (1.0 - alpha_s_) * e.s;
}

bool BnState::step_update(int sample_id, double ce, int step) {
    if (!update_loss_ema(sample_id, ce, step)) return false;
    TrackerEntry& e = mutable_entry(sample_id);
    if (step >= t1_ && !e.l_ref) set_reference(sample_id, step);
    if (e.l_ref) update_bn_score(sample_id);
    return true;
}

std::vector<int> BnState::current_dbn() const {
    std::vector<int> out;
    for (const auto& [id, e] : entries_)
        if (e.s > 0.0) out.push_back(id);
    return out;
}

double BnState::loss_weight(int sample_id) const {
    const TrackerEntry& e = entry(sample_id);
    double class_max = 0.0;
    for (const auto& [id, other] : entries_)
        if (other.label == e.label) class_max = std::max(class_max, std::max(other.s, 0.0));
    if (class_max <= kEps) return 0.0;
    return std::max(e.s, 0.0) / class_max;
}

}  // namespace ifg
