#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ifg/tensor.hpp"

namespace ifg {

// Stride-2 conv stack: each block halves (rounds up) the spatial size with
// `same` padding, so the embedding shape is fully determined here.
struct ArchConfig {
    int input_h = 32;
    int input_w = 32;
    int input_ch = 3;
    std::vector<int> conv_channels = {16, 32, 32};
    int kernel = 3;
    int stride = 2;
    int classes = 2;

    int embed_h() const;
    int embed_w() const;
    int embed_ch() const { return conv_channels.back(); }
    void validate() const;

    bool operator==(const ArchConfig&) const = default;
};

// Parameter layout shared by init, checkpoints, and the taped training graph:
// conv0.w [k,k,ci,co], conv0.b [co], conv1.w, conv1.b, ..., fc.w [C,c], fc.b [C].
std::vector<Shape> param_shapes(const ArchConfig& arch);
std::vector<std::string> param_names(const ArchConfig& arch);

// Forward graph pieces, usable with watched (trainable) or detached params.
Tensor run_embed(const ArchConfig& arch, const std::vector<Tensor>& params, const Tensor& image);
Tensor run_classify(const ArchConfig& arch, const std::vector<Tensor>& params, const Tensor& z);

// Small convolutional classifier split into an embedding head (conv+relu
// blocks, output z of shape [h, w, c]) and a classification head
// (global-average-pool + linear). Parameters are immutable tensors; training
// installs updated ones via with_params.
class ConvNet {
  public:
    ConvNet() = default;

    // Deterministic uniform fan-in initialization: every weight and bias of a
    // layer is drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)) in layout order.
    static ConvNet init(const ArchConfig& arch, std::uint64_t seed);

    const ArchConfig& arch() const { return arch_; }
    const std::vector<Tensor>& params() const { return params_; }
    ConvNet with_params(std::vector<Tensor> params) const;

    Tensor embed(const Tensor& image) const { return run_embed(arch_, params_, image); }
    Tensor classify(const Tensor& z) const { return run_classify(arch_, params_, z); }
    Tensor forward(const Tensor& image) const { return classify(embed(image)); }
    int predict(const Tensor& image) const;  // argmax logit, ties to lowest index

    std::uint64_t param_hash() const;

    void save(const std::string& path) const;
    static ConvNet load(const std::string& path);

  private:
    ArchConfig arch_;
    std::vector<Tensor> params_;
};

// Training-step view of a net: the same parameters watched on a tape so that
// Tape::grad can be queried per parameter after backward.
struct TapedNet {
    ArchConfig arch;
    std::vector<Tensor> params;

    Tensor embed(const Tensor& image) const { return run_embed(arch, params, image); }
    Tensor classify(const Tensor& z) const { return run_classify(arch, params, z); }
    Tensor forward(const Tensor& image) const { return classify(embed(image)); }
};

TapedNet watch_net(const ConvNet& net, Tape& tape);

int argmax(const std::vector<double>& v);  // lowest index on ties

}  // namespace ifg
