#include "ifg/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace ifg {

std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

int shape_size(const Shape& s) {
    int n = 1;
    for (int d : s) n *= d;
    return n;
}

namespace {

void check_shape(const Shape& s) {
    if (s.empty()) throw ConfigError("tensor shape must have at least one dim");
    for (int d : s)
        if (d < 1) throw ConfigError("tensor shape dims must be positive, got " + shape_str(s));
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw ConfigError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                          shape_str(b.shape()));
}

Tape* merge_tapes(std::initializer_list<const Tensor*> xs) {
    Tape* tape = nullptr;
    for (const Tensor* x : xs) {
        if (!x->attached()) continue;
        if (tape == nullptr)
            tape = x->tape();
        else if (tape != x->tape())
            throw ContractViolation("op inputs are attached to different tapes");
    }
    return tape;
}

// Node id of an input if it lives on `tape`, else -1 (constant w.r.t. it).
int parent_id(Tape* tape, const Tensor& x) { return (tape && x.tape() == tape) ? x.node() : -1; }

Tensor emit(Tape* tape, Shape shape, std::vector<double> data, std::vector<int> parents, Tape::PullFn pull) {
    auto shared = std::make_shared<const std::vector<double>>(std::move(data));
    if (!tape) return Tensor(std::move(shape), std::move(shared));
    return tape->record(std::move(shape), std::move(shared), std::move(parents), std::move(pull));
}

}  // namespace

Tensor::Tensor(Shape shape, std::shared_ptr<const std::vector<double>> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(shape_);
    size_ = shape_size(shape_);
    if (!data_ || static_cast<int>(data_->size()) != size_)
        throw ConfigError("tensor data size " + std::to_string(data_ ? data_->size() : 0) +
                          " does not match shape " + shape_str(shape_));
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : Tensor(std::move(shape), std::make_shared<const std::vector<double>>(std::move(data))) {}

Tensor::Tensor(Shape shape, std::shared_ptr<const std::vector<double>> data, Tape* tape, int node)
    : Tensor(std::move(shape), std::move(data)) {
    tape_ = tape;
    node_ = node;
}

Tensor Tensor::zeros(Shape shape) {
    check_shape(shape);
    int n = shape_size(shape);
    return Tensor(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), 0.0));
}

Tensor Tensor::full(Shape shape, double value) {
    check_shape(shape);
    int n = shape_size(shape);
    return Tensor(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), value));
}

Tensor Tensor::scalar(double value) { return Tensor(Shape{1}, std::vector<double>{value}); }

double Tensor::item() const {
    if (size_ != 1) throw InputError("item() on non-scalar tensor of shape " + shape_str(shape_));
    return (*data_)[0];
}

Tensor Tape::watch(const Tensor& t) {
    if (backward_done_) throw ContractViolation("tape already consumed by backward");
    nodes_.push_back(Node{t.shape(), t.data_ptr(), {}, nullptr});
    return Tensor(t.shape(), t.data_ptr(), this, static_cast<int>(nodes_.size()) - 1);
}

Tensor Tape::record(Shape shape, std::shared_ptr<const std::vector<double>> data, std::vector<int> parents,
                    PullFn pull) {
    if (backward_done_) throw ContractViolation("tape already consumed by backward");
    for (int p : parents)
        if (p >= static_cast<int>(nodes_.size()))
            throw ContractViolation("tape node recorded before its parent");
    nodes_.push_back(Node{shape, data, std::move(parents), std::move(pull)});
    return Tensor(std::move(shape), std::move(data), this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::backward(const Tensor& out) {
    if (out.tape() != this) throw ContractViolation("backward target is not on this tape");
    if (backward_done_) throw ContractViolation("backward already ran on this tape; build a fresh tape");
    if (out.size() != 1)
        throw InputError("backward requires a scalar output, got shape " + shape_str(out.shape()));

    grads_.assign(nodes_.size(), {});
    grads_[static_cast<std::size_t>(out.node())] = {1.0};

    std::vector<std::span<double>> parent_bufs;
    for (int j = out.node(); j >= 0; --j) {
        auto& gj = grads_[static_cast<std::size_t>(j)];
        if (gj.empty()) continue;  // output does not depend on this node
        const Node& node = nodes_[static_cast<std::size_t>(j)];
        if (!node.pull) continue;  // leaf
        parent_bufs.clear();
        for (int p : node.parents) {
            if (p < 0) {
                parent_bufs.emplace_back();
                continue;
            }
            auto& gp = grads_[static_cast<std::size_t>(p)];
            if (gp.empty()) gp.assign(nodes_[static_cast<std::size_t>(p)].data->size(), 0.0);
            parent_bufs.emplace_back(gp);
        }
        node.pull(std::span<const double>(gj), std::span<std::span<double>>(parent_bufs));
    }
    backward_done_ = true;
}

Tensor Tape::grad(const Tensor& t) const {
    if (t.tape() != this) throw ContractViolation("grad queried for a tensor on a different tape");
    if (!backward_done_) throw ContractViolation("grad queried before backward");
    const auto& g = grads_[static_cast<std::size_t>(t.node())];
    if (g.empty()) return Tensor::zeros(t.shape());
    return Tensor(t.shape(), g);
}

Tensor relu(const Tensor& x) {
    const auto& xv = x.values();
    std::vector<double> out(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
    Tape* tape = merge_tapes({&x});
    return emit(tape, x.shape(), std::move(out), {parent_id(tape, x)},
                [xd = x.data_ptr()](std::span<const double> g, std::span<std::span<double>> pg) {
                    auto gx = pg[0];
                    if (gx.empty()) return;
                    const auto& xv = *xd;
                    for (std::size_t i = 0; i < xv.size(); ++i)
                        if (xv[i] > 0.0) gx[i] += g[i];
                });
}

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape("add", a, b);
    const auto& av = a.values();
    const auto& bv = b.values();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
    Tape* tape = merge_tapes({&a, &b});
    return emit(tape, a.shape(), std::move(out), {parent_id(tape, a), parent_id(tape, b)},
                [](std::span<const double> g, std::span<std::span<double>> pg) {
                    for (auto& gx : pg) {
                        if (gx.empty()) continue;
                        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                    }
                });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape("sub", a, b);
    const auto& av = a.values();
    const auto& bv = b.values();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] - bv[i];
    Tape* tape = merge_tapes({&a, &b});
    return emit(tape, a.shape(), std::move(out), {parent_id(tape, a), parent_id(tape, b)},
                [](std::span<const double> g, std::span<std::span<double>> pg) {
                    if (!pg[0].empty())
                        for (std::size_t i = 0; i < g.size(); ++i) pg[0][i] += g[i];
                    if (!pg[1].empty())
                        for (std::size_t i = 0; i < g.size(); ++i) pg[1][i] -= g[i];
                });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape("mul", a, b);
    const auto& av = a.values();
    const auto& bv = b.values();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
    Tape* tape = merge_tapes({&a, &b});
    return emit(tape, a.shape(), std::move(out), {parent_id(tape, a), parent_id(tape, b)},
                [ad = a.data_ptr(), bd = b.data_ptr()](std::span<const double> g, std::span<std::span<double>> pg) {
                    if (!pg[0].empty())
                        for (std::size_t i = 0; i < g.size(); ++i) pg[0][i] += g[i] * (*bd)[i];
                    if (!pg[1].empty())
                        for (std::size_t i = 0; i < g.size(); ++i) pg[1][i] += g[i] * (*ad)[i];
                });
}

Tensor scale(const Tensor& x, double k) {
    const auto& xv = x.values();
    std::vector<double> out(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] * k;
    Tape* tape = merge_tapes({&x});
    return emit(tape, x.shape(), std::move(out), {parent_id(tape, x)},
                [k](std::span<const double> g, std::span<std::span<double>> pg) {
                    auto gx = pg[0];
                    if (gx.empty()) return;
                    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * k;
                });
}

Tensor sum(const Tensor& x) {
    double s = 0.0;
    for (double v : x.values()) s += v;
    Tape* tape = merge_tapes({&x});
    return emit(tape, Shape{1}, {s}, {parent_id(tape, x)},
                [](std::span<const double> g, std::span<std::span<double>> pg) {
                    auto gx = pg[0];
                    if (gx.empty()) return;
                    for (double& v : gx) v += g[0];
                });
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / x.size()); }

Tensor select(const Tensor& x, int flat_index) {
    if (flat_index < 0 || flat_index >= x.size())
        throw InputError("select index " + std::to_string(flat_index) + " out of range for shape " +
                         shape_str(x.shape()));
    Tape* tape = merge_tapes({&x});
    return emit(tape, Shape{1}, {x[flat_index]}, {parent_id(tape, x)},
                [flat_index](std::span<const double> g, std::span<std::span<double>> pg) {
                    auto gx = pg[0];
                    if (gx.empty()) return;
                    gx[static_cast<std::size_t>(flat_index)] += g[0];
                });
}

namespace {

struct ConvDims {
    int h, w, ci, kh, kw, co, oh, ow, stride, pad_top, pad_left;
};

ConvDims conv_dims(const Tensor& x, const Tensor& k, const Tensor& b, int stride, Padding padding) {
    if (x.rank() != 3)
        throw ConfigError("conv2d input must be [h, w, ch], got " + shape_str(x.shape()));
    if (k.rank() != 4)
        throw ConfigError("conv2d kernel must be [kh, kw, in_ch, out_ch], got " + shape_str(k.shape()));
    if (b.rank() != 1) throw ConfigError("conv2d bias must be rank 1, got " + shape_str(b.shape()));
    ConvDims d{};
    d.h = x.shape()[0];
    d.w = x.shape()[1];
    d.ci = x.shape()[2];
    d.kh = k.shape()[0];
    d.kw = k.shape()[1];
    d.co = k.shape()[3];
    d.stride = stride;
    if (k.shape()[2] != d.ci)
        throw ConfigError("conv2d channel mismatch: input " + shape_str(x.shape()) + " vs kernel " +
                          shape_str(k.shape()));
    if (b.shape()[0] != d.co)
        throw ConfigError("conv2d bias size " + std::to_string(b.shape()[0]) + " does not match out_ch " +
                          std::to_string(d.co));
    if (stride < 1) throw ConfigError("conv2d stride must be >= 1, got " + std::to_string(stride));
    if (padding == Padding::valid) {
        if (d.h < d.kh || d.w < d.kw)
            throw ConfigError("conv2d valid padding needs input >= kernel, got " + shape_str(x.shape()) +
                              " vs " + shape_str(k.shape()));
        d.oh = (d.h - d.kh) / stride + 1;
        d.ow = (d.w - d.kw) / stride + 1;
        d.pad_top = 0;
        d.pad_left = 0;
    } else {
        d.oh = (d.h + stride - 1) / stride;
        d.ow = (d.w + stride - 1) / stride;
        int pad_h = std::max((d.oh - 1) * stride + d.kh - d.h, 0);
        int pad_w = std::max((d.ow - 1) * stride + d.kw - d.w, 0);
        d.pad_top = pad_h / 2;
        d.pad_left = pad_w / 2;
    }
    return d;
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& kernel, const Tensor& bias, int stride, Padding padding) {
    ConvDims d = conv_dims(x, kernel, bias, stride, padding);
    const double* xp = x.values().data();
    const double* kp = kernel.values().data();
    const double* bp = bias.values().data();
    std::vector<double> out(static_cast<std::size_t>(d.oh) * d.ow * d.co);
    double* op = out.data();
    for (int oy = 0; oy < d.oh; ++oy) {
        for (int ox = 0; ox < d.ow; ++ox) {
            double* orow = op + (static_cast<std::size_t>(oy) * d.ow + ox) * d.co;
            for (int oc = 0; oc < d.co; ++oc) orow[oc] = bp[oc];
            for (int ky = 0; ky < d.kh; ++ky) {
                int iy = oy * d.stride - d.pad_top + ky;
                if (iy < 0 || iy >= d.h) continue;
                for (int kx = 0; kx < d.kw; ++kx) {
                    int ix = ox * d.stride - d.pad_left + kx;
                    if (ix < 0 || ix >= d.w) continue;
                    const double* xrow = xp + (static_cast<std::size_t>(iy) * d.w + ix) * d.ci;
                    const double* krow = kp + (static_cast<std::size_t>(ky) * d.kw + kx) * d.ci * d.co;
                    for (int ic = 0; ic < d.ci; ++ic) {
                        double xv = xrow[ic];
                        const double* kcol = krow + static_cast<std::size_t>(ic) * d.co;
                        for (int oc = 0; oc < d.co; ++oc) orow[oc] += xv * kcol[oc];
                    }
                }
            }
        }
    }
    Tape* tape = merge_tapes({&x, &kernel, &bias});
    auto pull = [d, xd = x.data_ptr(), kd = kernel.data_ptr()](std::span<const double> g,
                                                               std::span<std::span<double>> pg) {
        auto gx = pg[0];
        auto gk = pg[1];
        auto gb = pg[2];
        const double* xp = xd->data();
        const double* kp = kd->data();
        for (int oy = 0; oy < d.oh; ++oy) {
            for (int ox = 0; ox < d.ow; ++ox) {
                const double* grow = g.data() + (static_cast<std::size_t>(oy) * d.ow + ox) * d.co;
                if (!gb.empty())
                    for (int oc = 0; oc < d.co; ++oc) gb[static_cast<std::size_t>(oc)] += grow[oc];
                for (int ky = 0; ky < d.kh; ++ky) {
                    int iy = oy * d.stride - d.pad_top + ky;
                    if (iy < 0 || iy >= d.h) continue;
                    for (int kx = 0; kx < d.kw; ++kx) {
                        int ix = ox * d.stride - d.pad_left + kx;
                        if (ix < 0 || ix >= d.w) continue;
                        std::size_t xoff = (static_cast<std::size_t>(iy) * d.w + ix) * d.ci;
                        std::size_t koff = (static_cast<std::size_t>(ky) * d.kw + kx) * d.ci * d.co;
                        for (int ic = 0; ic < d.ci; ++ic) {
                            const double* kcol = kp + koff + static_cast<std::size_t>(ic) * d.co;
                            double xv = xp[xoff + static_cast<std::size_t>(ic)];
                            double acc = 0.0;
                            if (!gk.empty()) {
                                double* gkcol = gk.data() + koff + static_cast<std::size_t>(ic) * d.co;
                                for (int oc = 0; oc < d.co; ++oc) {
                                    double gv = grow[oc];
                                    gkcol[oc] += xv * gv;
                                    acc += kcol[oc] * gv;
                                }
                            } else {
                                for (int oc = 0; oc < d.co; ++oc) acc += kcol[oc] * grow[oc];
                            }
                            if (!gx.empty()) gx[xoff + static_cast<std::size_t>(ic)] += acc;
                        }
                    }
                }
            }
        }
    };
    return emit(tape, Shape{d.oh, d.ow, d.co}, std::move(out),
                {parent_id(tape, x), parent_id(tape, kernel), parent_id(tape, bias)}, std::move(pull));
}

Tensor linear(const Tensor& w, const Tensor& x, const Tensor& bias) {
    if (w.rank() != 2) throw ConfigError("linear weight must be [out, in], got " + shape_str(w.shape()));
    if (x.rank() != 1) throw ConfigError("linear input must be rank 1, got " + shape_str(x.shape()));
    if (bias.rank() != 1) throw ConfigError("linear bias must be rank 1, got " + shape_str(bias.shape()));
    int out_dim = w.shape()[0];
    int in_dim = w.shape()[1];
    if (x.shape()[0] != in_dim)
        throw ConfigError("linear shape mismatch: weight " + shape_str(w.shape()) + " vs input " +
                          shape_str(x.shape()));
    if (bias.shape()[0] != out_dim)
        throw ConfigError("linear bias size " + std::to_string(bias.shape()[0]) + " does not match out dim " +
                          std::to_string(out_dim));
    const double* wp = w.values().data();
    const double* xp = x.values().data();
    std::vector<double> out(static_cast<std::size_t>(out_dim));
    for (int o = 0; o < out_dim; ++o) {
        double acc = bias[o];
        const double* wrow = wp + static_cast<std::size_t>(o) * in_dim;
        for (int i = 0; i < in_dim; ++i) acc += wrow[i] * xp[i];
        out[static_cast<std::size_t>(o)] = acc;
    }
    Tape* tape = merge_tapes({&w, &x, &bias});
    auto pull = [out_dim, in_dim, wd = w.data_ptr(), xd = x.data_ptr()](std::span<const double> g,
                                                                        std::span<std::span<double>> pg) {
        auto gw = pg[0];
        auto gx = pg[1];
        auto gb = pg[2];
        const double* wp = wd->data();
        const double* xp = xd->data();
        for (int o = 0; o < out_dim; ++o) {
            double gv = g[static_cast<std::size_t>(o)];
            if (!gb.empty()) gb[static_cast<std::size_t>(o)] += gv;
            std::size_t row = static_cast<std::size_t>(o) * in_dim;
            if (!gw.empty())
                for (int i = 0; i < in_dim; ++i) gw[row + static_cast<std::size_t>(i)] += gv * xp[i];
            if (!gx.empty())
                for (int i = 0; i < in_dim; ++i) gx[static_cast<std::size_t>(i)] += gv * wp[row + static_cast<std::size_t>(i)];
        }
    };
    return emit(tape, Shape{out_dim}, std::move(out),
                {parent_id(tape, w), parent_id(tape, x), parent_id(tape, bias)}, std::move(pull));
}

Tensor global_avg_pool(const Tensor& x) {
    if (x.rank() != 3)
        throw InputError("global_avg_pool input must be [h, w, ch], got " + shape_str(x.shape()));
    int hw = x.shape()[0] * x.shape()[1];
    int c = x.shape()[2];
    const double* xp = x.values().data();
    std::vector<double> out(static_cast<std::size_t>(c), 0.0);
    for (int p = 0; p < hw; ++p)
        for (int ch = 0; ch < c; ++ch) out[static_cast<std::size_t>(ch)] += xp[static_cast<std::size_t>(p) * c + ch];
    double inv = 1.0 / hw;
    for (double& v : out) v *= inv;
    Tape* tape = merge_tapes({&x});
    return emit(tape, Shape{c}, std::move(out), {parent_id(tape, x)},
                [hw, c, inv](std::span<const double> g, std::span<std::span<double>> pg) {
                    auto gx = pg[0];
                    if (gx.empty()) return;
                    for (int p = 0; p < hw; ++p)
                        for (int ch = 0; ch < c; ++ch)
                            gx[static_cast<std::size_t>(p) * c + ch] += g[static_cast<std::size_t>(ch)] * inv;
                });
}

Tensor max_over_axis(const Tensor& x, int axis) {
    if (axis < 0 || axis >= x.rank())
        throw InputError("max_over_axis axis " + std::to_string(axis) + " out of range for shape " +
                         shape_str(x.shape()));
    const Shape& s = x.shape();
    int outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= s[i];
    for (int i = axis + 1; i < x.rank(); ++i) inner *= s[i];
    int n = s[static_cast<std::size_t>(axis)];
    Shape out_shape;
    for (int i = 0; i < x.rank(); ++i)
        if (i != axis) out_shape.push_back(s[static_cast<std::size_t>(i)]);
    if (out_shape.empty()) out_shape.push_back(1);

    const double* xp = x.values().data();
    std::vector<double> out(static_cast<std::size_t>(outer) * inner);
    std::vector<int> argmax(out.size());
    for (int o = 0; o < outer; ++o) {
        for (int in = 0; in < inner; ++in) {
            std::size_t best_pos = (static_cast<std::size_t>(o) * n) * inner + static_cast<std::size_t>(in);
            double best = xp[best_pos];
            for (int j = 1; j < n; ++j) {
                std::size_t pos = (static_cast<std::size_t>(o) * n + j) * inner + static_cast<std::size_t>(in);
                if (xp[pos] > best) {
                    best = xp[pos];
                    best_pos = pos;
                }
            }
            std::size_t oi = static_cast<std::size_t>(o) * inner + static_cast<std::size_t>(in);
            out[oi] = best;
            argmax[oi] = static_cast<int>(best_pos);
        }
    }
    Tape* tape = merge_tapes({&x});
    return emit(tape, std::move(out_shape), std::move(out), {parent_id(tape, x)},
                [am = std::move(argmax)](std::span<const double> g, std::span<std::span<double>> pg) {
                    auto gx = pg[0];
                    if (gx.empty()) return;
                    for (std::size_t i = 0; i < am.size(); ++i) gx[static_cast<std::size_t>(am[i])] += g[i];
                });
}

namespace {

// Numerically stable softmax of a rank-1 tensor's values.
std::vector<double> softmax_values(const Tensor& logits, const char* op) {
    if (logits.rank() != 1)
        throw InputError(std::string(op) + " expects rank-1 logits, got " + shape_str(logits.shape()));
    const auto& lv = logits.values();
    double m = *std::max_element(lv.begin(), lv.end());
    std::vector<double> p(lv.size());
    double s = 0.0;
    for (std::size_t i = 0; i < lv.size(); ++i) {
        p[i] = std::exp(lv[i] - m);
        s += p[i];
    }
    for (double& v : p) v /= s;
    return p;
}

void check_label(const Tensor& logits, int label, const char* op) {
    int c = logits.size();
    if (c < 2) throw InputError(std::string(op) + " needs at least 2 classes, got " + std::to_string(c));
    if (label < 0 || label >= c)
        throw InputError(std::string(op) + " label " + std::to_string(label) + " out of range [0, " +
                         std::to_string(c) + ")");
}

}  // namespace

Tensor softmax(const Tensor& logits) {
    std::vector<double> p = softmax_values(logits, "softmax");
    std::vector<double> pcopy = p;
    Tape* tape = merge_tapes({&logits});
    return emit(tape, logits.shape(), std::move(pcopy), {parent_id(tape, logits)},
                [p = std::move(p)](std::span<const double> g, std::span<std::span<double>> pg) {
                    auto gx = pg[0];
                    if (gx.empty()) return;
                    double dot = 0.0;
                    for (std::size_t i = 0; i < p.size(); ++i) dot += g[i] * p[i];
                    for (std::size_t i = 0; i < p.size(); ++i) gx[i] += p[i] * (g[i] - dot);
                });
}

Tensor cross_entropy(const Tensor& logits, int label) {
    check_label(logits, label, "cross_entropy");
    const auto& lv = logits.values();
    double m = *std::max_element(lv.begin(), lv.end());
    double s = 0.0;
    for (double v : lv) s += std::exp(v - m);
    double loss = m + std::log(s) - lv[static_cast<std::size_t>(label)];
    std::vector<double> p = softmax_values(logits, "cross_entropy");
    Tape* tape = merge_tapes({&logits});
    return emit(tape, Shape{1}, {loss}, {parent_id(tape, logits)},
                [p = std::move(p), label](std::span<const double> g, std::span<std::span<double>> pg) {
                    auto gx = pg[0];
                    if (gx.empty()) return;
                    for (std::size_t i = 0; i < p.size(); ++i)
                        gx[i] += g[0] * (p[i] - (static_cast<int>(i) == label ? 1.0 : 0.0));
                });
}

Tensor gce_loss(const Tensor& logits, int label, double q) {
    if (!(q > 0.0 && q <= 1.0))
        throw ConfigError("gce q must be in (0, 1], got " + std::to_string(q));
    check_label(logits, label, "gce_loss");
    std::vector<double> p = softmax_values(logits, "gce_loss");
    double py = p[static_cast<std::size_t>(label)];
    double pyq = std::pow(py, q);
    double loss = (1.0 - pyq) / q;
    Tape* tape = merge_tapes({&logits});
    return emit(tape, Shape{1}, {loss}, {parent_id(tape, logits)},
                [p = std::move(p), label, pyq](std::span<const double> g, std::span<std::span<double>> pg) {
                    auto gx = pg[0];
                    if (gx.empty()) return;
                    // d/dx_i (1 - p_y^q)/q = p_y^q * (p_i - [i == y])
                    for (std::size_t i = 0; i < p.size(); ++i)
                        gx[i] += g[0] * pyq * (p[i] - (static_cast<int>(i) == label ? 1.0 : 0.0));
                });
}

Tensor l1_distance(const Tensor& a, const Tensor& b) {
    check_same_shape("l1_distance", a, b);
    const auto& av = a.values();
    const auto& bv = b.values();
    double s = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) s += std::abs(av[i] - bv[i]);
    Tape* tape = merge_tapes({&a, &b});
    return emit(tape, Shape{1}, {s}, {parent_id(tape, a), parent_id(tape, b)},
                [ad = a.data_ptr(), bd = b.data_ptr()](std::span<const double> g, std::span<std::span<double>> pg) {
                    const auto& av = *ad;
                    const auto& bv = *bd;
                    for (std::size_t i = 0; i < av.size(); ++i) {
                        double sgn = av[i] > bv[i] ? 1.0 : (av[i] < bv[i] ? -1.0 : 0.0);
                        if (!pg[0].empty()) pg[0][i] += g[0] * sgn;
                        if (!pg[1].empty()) pg[1][i] -= g[0] * sgn;
                    }
                });
}

}  // namespace ifg
