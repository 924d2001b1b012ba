#include "ifg/model.hpp"

#include <cmath>

#include "ifg/io.hpp"
#include "ifg/rng.hpp"

namespace ifg {

namespace {

int halved(int dim, int stride, int blocks) {
    for (int i = 0; i < blocks; ++i) dim = (dim + stride - 1) / stride;
    return dim;
}

constexpr char kModelMagic[9] = "IFGMDL01";
constexpr std::uint32_t kModelVersion = 1;

}  // namespace

int ArchConfig::embed_h() const { return halved(input_h, stride, static_cast<int>(conv_channels.size())); }
int ArchConfig::embed_w() const { return halved(input_w, stride, static_cast<int>(conv_channels.size())); }

void ArchConfig::validate() const {
    if (input_h < 1 || input_w < 1 || input_ch < 1)
        throw ConfigError("arch input dims must be positive");
    if (conv_channels.empty()) throw ConfigError("arch needs at least one conv block");
    for (int c : conv_channels)
        if (c < 1) throw ConfigError("arch conv channel counts must be positive");
    if (kernel < 1 || kernel % 2 == 0)
        throw ConfigError("arch kernel must be odd and positive, got " + std::to_string(kernel));
    if (stride < 1) throw ConfigError("arch stride must be >= 1");
    if (classes < 2) throw ConfigError("arch needs at least 2 classes, got " + std::to_string(classes));
    if (embed_h() < 2 || embed_w() < 2)
        throw ConfigError("degenerate arch: embedding spatial size " + std::to_string(embed_h()) + "x" +
                          std::to_string(embed_w()) + " is below 2x2");
}

std::vector<Shape> param_shapes(const ArchConfig& arch) {
    std::vector<Shape> shapes;
    int ci = arch.input_ch;
    for (int co : arch.conv_channels) {
        shapes.push_back({arch.kernel, arch.kernel, ci, co});
        shapes.push_back({co});
        ci = co;
    }
    shapes.push_back({arch.classes, arch.embed_ch()});
    shapes.push_back({arch.classes});
    return shapes;
}

std::vector<std::string> param_names(const ArchConfig& arch) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < arch.conv_channels.size(); ++i) {
        names.push_back("conv" + std::to_string(i) + ".w");
        names.push_back("conv" + std::to_string(i) + ".b");
    }
    names.push_back("fc.w");
    names.push_back("fc.b");
    return names;
}

Tensor run_embed(const ArchConfig& arch, const std::vector<Tensor>& params, const Tensor& image) {
    if (image.shape() != Shape{arch.input_h, arch.input_w, arch.input_ch})
        throw InputError("embed input shape " + shape_str(image.shape()) + " does not match arch input [" +
                         std::to_string(arch.input_h) + ", " + std::to_string(arch.input_w) + ", " +
                         std::to_string(arch.input_ch) + "]");
    Tensor x = image;
    for (std::size_t i = 0; i < arch.conv_channels.size(); ++i)
        x = relu(conv2d(x, params[2 * i], params[2 * i + 1], arch.stride, Padding::same));
    return x;
}

Tensor run_classify(const ArchConfig& arch, const std::vector<Tensor>& params, const Tensor& z) {
    if (z.shape() != Shape{arch.embed_h(), arch.embed_w(), arch.embed_ch()})
        throw InputError("classify input shape " + shape_str(z.shape()) + " does not match embedding [" +
                         std::to_string(arch.embed_h()) + ", " + std::to_string(arch.embed_w()) + ", " +
                         std::to_string(arch.embed_ch()) + "]");
    std::size_t fc = 2 * arch.conv_channels.size();
    return linear(params[fc], global_avg_pool(z), params[fc + 1]);
}

ConvNet ConvNet::init(const ArchConfig& arch, std::uint64_t seed) {
    arch.validate();
    ConvNet net;
    net.arch_ = arch;
    Rng rng(seed);
    std::vector<Shape> shapes = param_shapes(arch);
    // Shapes come in (weight, bias) pairs; both use the weight's fan-in bound.
    for (std::size_t i = 0; i < shapes.size(); i += 2) {
        const Shape& ws = shapes[i];
        double fan_in = ws.size() == 4 ? static_cast<double>(ws[0]) * ws[1] * ws[2] : static_cast<double>(ws[1]);
        double bound = 1.0 / std::sqrt(fan_in);
        for (std::size_t j = i; j < i + 2; ++j) {
            std::vector<double> data(static_cast<std::size_t>(shape_size(shapes[j])));
            for (double& v : data) v = rng.uniform(-bound, bound);
            net.params_.emplace_back(shapes[j], std::move(data));
        }
    }
    return net;
}

ConvNet ConvNet::with_params(std::vector<Tensor> params) const {
    std::vector<Shape> expected = param_shapes(arch_);
    if (params.size() != expected.size())
        throw ContractViolation("with_params: expected " + std::to_string(expected.size()) +
                                " tensors, got " + std::to_string(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i)
        if (params[i].shape() != expected[i])
            throw ContractViolation("with_params: tensor " + std::to_string(i) + " has shape " +
                                    shape_str(params[i].shape()) + ", expected " + shape_str(expected[i]));
    ConvNet net;
    net.arch_ = arch_;
    net.params_.reserve(params.size());
    for (auto& p : params) net.params_.push_back(p.detached());
    return net;
}

int argmax(const std::vector<double>& v) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.size()); ++i)
        if (v[static_cast<std::size_t>(i)] > v[static_cast<std::size_t>(best)]) best = i;
    return best;
}

int ConvNet::predict(const Tensor& image) const { return argmax(forward(image).values()); }

std::uint64_t ConvNet::param_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const Tensor& p : params_) {
        for (double v : p.values()) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, 8);
            h = mix64(h ^ bits);
        }
    }
    return h;
}

void ConvNet::save(const std::string& path) const {
    BinaryWriter w(path);
    w.magic(kModelMagic);
    w.u32(kModelVersion);
    w.u32(static_cast<std::uint32_t>(arch_.input_h));
    w.u32(static_cast<std::uint32_t>(arch_.input_w));
    w.u32(static_cast<std::uint32_t>(arch_.input_ch));
    w.u32(static_cast<std::uint32_t>(arch_.kernel));
    w.u32(static_cast<std::uint32_t>(arch_.stride));
    w.u32(static_cast<std::uint32_t>(arch_.classes));
    w.u32(static_cast<std::uint32_t>(arch_.conv_channels.size()));
    for (int c : arch_.conv_channels) w.u32(static_cast<std::uint32_t>(c));
    std::uint64_t count = 0;
    for (const Tensor& p : params_) count += static_cast<std::uint64_t>(p.size());
    w.u64(count);
    for (const Tensor& p : params_)
        for (double v : p.values()) w.f64(v);
    w.close();
}

ConvNet ConvNet::load(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic(kModelMagic);
    std::uint32_t version = r.u32();
    if (version != kModelVersion)
        throw FormatError("'" + path + "': checkpoint version " + std::to_string(version) +
                          " not supported (this build reads version " + std::to_string(kModelVersion) + ")");
    ArchConfig arch;
    arch.input_h = static_cast<int>(r.u32());
    arch.input_w = static_cast<int>(r.u32());
    arch.input_ch = static_cast<int>(r.u32());
    arch.kernel = static_cast<int>(r.u32());
    arch.stride = static_cast<int>(r.u32());
    arch.classes = static_cast<int>(r.u32());
    std::uint32_t blocks = r.u32();
    if (blocks == 0 || blocks > 64)
        throw FormatError("'" + path + "': implausible conv block count " + std::to_string(blocks) +
                          " at byte offset " + std::to_string(r.offset() - 4));
    arch.conv_channels.clear();
    for (std::uint32_t i = 0; i < blocks; ++i) arch.conv_channels.push_back(static_cast<int>(r.u32()));
    arch.validate();

    std::uint64_t count = r.u64();
    std::uint64_t expected = 0;
    std::vector<Shape> shapes = param_shapes(arch);
    for (const Shape& s : shapes) expected += static_cast<std::uint64_t>(shape_size(s));
    if (count != expected)
        throw FormatError("'" + path + "': parameter count " + std::to_string(count) + " does not match arch (" +
                          std::to_string(expected) + ")");

    ConvNet net;
    net.arch_ = arch;
    for (const Shape& s : shapes) {
        std::vector<double> data(static_cast<std::size_t>(shape_size(s)));
        for (double& v : data) v = r.f64();
        net.params_.emplace_back(s, std::move(data));
    }
    if (!r.at_eof())
        throw FormatError("'" + path + "': trailing data at byte offset " + std::to_string(r.offset()));
    return net;
}

TapedNet watch_net(const ConvNet& net, Tape& tape) {
    TapedNet t;
    t.arch = net.arch();
    t.params.reserve(net.params().size());
    for (const Tensor& p : net.params()) t.params.push_back(tape.watch(p));
    return t;
}

}  // namespace ifg
