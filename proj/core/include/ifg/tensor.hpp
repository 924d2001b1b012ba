#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ifg/errors.hpp"

namespace ifg {

using Shape = std::vector<int>;

std::string shape_str(const Shape& s);
int shape_size(const Shape& s);

class Tape;

// Immutable dense f64 tensor. A tensor is either detached (plain values) or
// attached to a Tape node, in which case gradients can be pulled out after
// Tape::backward. Copies are cheap: the buffer is shared and never mutated.
class Tensor {
  public:
    Tensor() = default;
    Tensor(Shape shape, std::shared_ptr<const std::vector<double>> data);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double value);
    static Tensor scalar(double value);

    const Shape& shape() const { return shape_; }
    int size() const { return size_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    const std::vector<double>& values() const { return *data_; }
    const std::shared_ptr<const std::vector<double>>& data_ptr() const { return data_; }
    double operator[](int i) const { return (*data_)[static_cast<std::size_t>(i)]; }
    double item() const;

    Tape* tape() const { return tape_; }
    int node() const { return node_; }
    bool attached() const { return tape_ != nullptr; }
    Tensor detached() const { return Tensor(shape_, data_); }

  private:
    friend class Tape;
    Tensor(Shape shape, std::shared_ptr<const std::vector<double>> data, Tape* tape, int node);

    Shape shape_;
    std::shared_ptr<const std::vector<double>> data_;
    int size_ = 0;
    Tape* tape_ = nullptr;
    int node_ = -1;
};

// Gradient tape. Ops append nodes in execution order; backward() walks the
// nodes in reverse, visiting each node's pull function at most once, and
// accumulates df/dnode for every node the output depends on. A tape runs
// backward exactly once; build a fresh tape per training step.
class Tape {
  public:
    using PullFn = std::function<void(std::span<const double> out_grad, std::span<std::span<double>> parent_grads)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Registers a leaf whose gradient can be queried later. Values are shared
    // with the source tensor; the source's own tape attachment (if any) is
    // ignored.
    Tensor watch(const Tensor& t);

    // Appends an op result node. `parents` lists the node ids of attached
    // inputs, -1 for detached ones; `pull` receives parent gradient buffers in
    // the same order (empty span for detached slots) and must accumulate.
    Tensor record(Shape shape, std::shared_ptr<const std::vector<double>> data, std::vector<int> parents,
                  PullFn pull);

    // Seeds d(out)/d(out) = 1 for a scalar output and back-propagates through
    // every recorded node. A second call on the same tape throws.
    void backward(const Tensor& out);

    // Gradient of the backward output w.r.t. t. Zero if the output did not
    // depend on t. Only valid after backward().
    Tensor grad(const Tensor& t) const;

    bool backward_done() const { return backward_done_; }
    int node_count() const { return static_cast<int>(nodes_.size()); }

  private:
    struct Node {
        Shape shape;
        std::shared_ptr<const std::vector<double>> data;  // keeps parent values alive for pulls
        std::vector<int> parents;
        PullFn pull;  // null for leaves
    };

    std::vector<Node> nodes_;
    std::vector<std::vector<double>> grads_;
    bool backward_done_ = false;
};

enum class Padding { valid, same };

// All ops run in f64 and work on attached or detached tensors alike; the
// result is attached iff any input is. Mixing inputs from two different live
// tapes is a contract violation.

Tensor relu(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double k);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor select(const Tensor& x, int flat_index);

// 2-D convolution, NHWC-less single image: x is [h, w, in_ch], kernel is
// [kh, kw, in_ch, out_ch], bias is [out_ch]. `same` padding keeps
// ceil(h/stride) x ceil(w/stride); `valid` uses only full windows.
Tensor conv2d(const Tensor& x, const Tensor& kernel, const Tensor& bias, int stride, Padding padding);

// w is [out, in], x is [in], bias is [out].
Tensor linear(const Tensor& w, const Tensor& x, const Tensor& bias);

// [h, w, c] -> [c], mean over spatial positions.
Tensor global_avg_pool(const Tensor& x);

// Reduces one axis by max; gradient flows to the first maximal element along
// the axis (ties broken by lowest index).
Tensor max_over_axis(const Tensor& x, int axis);

Tensor softmax(const Tensor& logits);

// -log softmax(logits)[label]; logits rank 1, label in [0, C).
Tensor cross_entropy(const Tensor& logits, int label);

// Generalized cross entropy (1 - p_label^q) / q with q in (0, 1]; approaches
// plain cross entropy as q -> 0.
Tensor gce_loss(const Tensor& logits, int label, double q);

// sum |a - b|; subgradient at a == b is 0.
Tensor l1_distance(const Tensor& a, const Tensor& b);

}  // namespace ifg
