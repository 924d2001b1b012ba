#include "ifg/losses.hpp"

#include <algorithm>
#include <cmath>

namespace ifg {

RelativeDifficulty relative_difficulty(double ce_b, double ce_d) {
    if (!std::isfinite(ce_b) || !std::isfinite(ce_d) || ce_b < 0.0 || ce_d < 0.0)
        throw InputError("relative_difficulty needs finite nonnegative losses, got ce_b=" +
                         std::to_string(ce_b) + " ce_d=" + std::to_string(ce_d));
    if (ce_b == 0.0 && ce_d == 0.0) return RelativeDifficulty{0.5, true};
    return RelativeDifficulty{ce_b / (ce_b + ce_d), false};
}

double lambda_main(int t, int t2, int total) {
    if (total <= t2)
        throw ContractViolation("lambda_main needs total > t2 (the guided phase has zero length)");
    if (t < t2)
        throw ContractViolation("lambda_main queried at step " + std::to_string(t) + " before t2=" +
                                std::to_string(t2));
    double v = static_cast<double>(t - t2) / static_cast<double>(total - t2);
    return std::clamp(v, 0.0, 1.0);
}

Tensor loss_main(double w, const Tensor& logits_d, int label) {
    return scale(cross_entropy(logits_d, label), w);
}

Tensor loss_guide_sim(double s_w, const Tensor& z, const Tensor& g) {
    return scale(l1_distance(global_avg_pool(z), global_avg_pool(g)), s_w);
}

Tensor loss_guide_cls(double w, const TapedNet& net, const Tensor& g, int label) {
    return scale(cross_entropy(net.classify(g), label), w);
}

Tensor loss_guide(const Tensor& sim, const Tensor& cls, double lambda_sim) {
    return add(scale(sim, lambda_sim), cls);
}

Tensor loss_bn(double s_w, const Tensor& logits_d_bn, int label_bn) {
    return scale(cross_entropy(logits_d_bn, label_bn), s_w);
}

}  // namespace ifg
