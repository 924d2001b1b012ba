#pragma once

#include "ifg/model.hpp"
#include "ifg/tensor.hpp"

namespace ifg {

struct RelativeDifficulty {
    double w = 0.5;
    bool degenerate = false;  // both losses were zero; w defaulted to 0.5
};

// w = ce_b / (ce_b + ce_d), treating both cross entropies as constants.
// Upweights samples the biased model finds hard relative to the debiased one.
RelativeDifficulty relative_difficulty(double ce_b, double ce_d);

// Linear ramp of the main-loss weight over the guided phase:
// (t - t2) / (total - t2), clipped to [0, 1].
double lambda_main(int t, int t2, int total);

// w * CE(logits, y)
Tensor loss_main(double w, const Tensor& logits_d, int label);

// s_w * || GAP(z) - GAP(g) ||_1
Tensor loss_guide_sim(double s_w, const Tensor& z, const Tensor& g);

// w * CE(classify(g), y), through the net's classification head
Tensor loss_guide_cls(double w, const TapedNet& net, const Tensor& g, int label);

// lambda_sim * sim + cls
Tensor loss_guide(const Tensor& sim, const Tensor& cls, double lambda_sim);

// s_w * CE(logits, y) for the auxiliary pair sample
Tensor loss_bn(double s_w, const Tensor& logits_d_bn, int label_bn);

}  // namespace ifg
