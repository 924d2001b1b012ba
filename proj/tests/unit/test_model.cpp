#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "ifg/errors.hpp"
#include "ifg/io.hpp"
#include "ifg/model.hpp"
#include "ifg/rng.hpp"
#include "ifg/tensor.hpp"

using namespace ifg;

namespace {

Tensor random_image(const ArchConfig& arch, Rng& rng) {
    std::vector<double> v(static_cast<std::size_t>(arch.input_h) * arch.input_w * arch.input_ch);
    for (double& x : v) x = rng.uniform(0.0, 1.0);
    return Tensor({arch.input_h, arch.input_w, arch.input_ch}, std::move(v));
}

std::string slurp(const std::string& path) { return read_text_file(path); }

void spit(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("initialization is deterministic per seed") {
    ArchConfig arch;
    CHECK(ConvNet::init(arch, 7).param_hash() == ConvNet::init(arch, 7).param_hash());
    CHECK(ConvNet::init(arch, 7).param_hash() != ConvNet::init(arch, 8).param_hash());
}

TEST_CASE("parameter layout matches the documented shapes and names") {
    ArchConfig arch;  // 32x32x3 -> {16,32,32}, 2 classes
    std::vector<Shape> shapes = param_shapes(arch);
    std::vector<std::string> names = param_names(arch);
    REQUIRE(shapes.size() == 8);
    REQUIRE(names.size() == 8);
    CHECK(shapes[0] == Shape{3, 3, 3, 16});
    CHECK(shapes[1] == Shape{16});
    CHECK(shapes[2] == Shape{3, 3, 16, 32});
    CHECK(shapes[3] == Shape{32});
    CHECK(shapes[4] == Shape{3, 3, 32, 32});
    CHECK(shapes[5] == Shape{32});
    CHECK(shapes[6] == Shape{2, 32});
    CHECK(shapes[7] == Shape{2});
    CHECK(names[0] == "conv0.w");
    CHECK(names[5] == "conv2.b");
    CHECK(names[6] == "fc.w");
    CHECK(names[7] == "fc.b");
}

TEST_CASE("embedding has the documented spatial chain") {
    ArchConfig arch;
    CHECK(arch.embed_h() == 4);
    CHECK(arch.embed_w() == 4);
    CHECK(arch.embed_ch() == 32);
    ConvNet net = ConvNet::init(arch, 3);
    Rng rng(5);
    Tensor z = net.embed(random_image(arch, rng));
    CHECK(z.shape() == Shape{4, 4, 32});
}

TEST_CASE("all-zero body reduces the net to its classifier bias") {
    ArchConfig arch;
    std::vector<Tensor> params;
    for (const Shape& s : param_shapes(arch)) params.push_back(Tensor::zeros(s));
    params.back() = Tensor({2}, {0.3, -0.2});
    ConvNet net = ConvNet::init(arch, 1).with_params(params);
    Rng rng(6);
    Tensor logits = net.forward(random_image(arch, rng));
    CHECK(logits[0] == 0.3);
    CHECK(logits[1] == -0.2);
    CHECK(net.predict(random_image(arch, rng)) == 0);
}

TEST_CASE("bias-free net is exactly homogeneous under doubling") {
    ArchConfig arch;
    ConvNet base = ConvNet::init(arch, 11);
    std::vector<Tensor> params = base.params();
    for (std::size_t i = 1; i < params.size(); i += 2) params[i] = Tensor::zeros(params[i].shape());
    ConvNet net = base.with_params(params);

    Rng rng(12);
    Tensor img = random_image(arch, rng);
    std::vector<double> doubled(img.values());
    for (double& v : doubled) v *= 2.0;
    Tensor l1 = net.forward(img);
    Tensor l2 = net.forward(Tensor(img.shape(), std::move(doubled)));
    for (int i = 0; i < l1.size(); ++i) CHECK(l2[i] == 2.0 * l1[i]);
}

TEST_CASE("classify equals a hand-rolled pool + affine map") {
    ArchConfig arch;
    ConvNet net = ConvNet::init(arch, 21);
    Rng rng(22);
    Tensor z({4, 4, 32}, [&] {
        std::vector<double> v(4 * 4 * 32);
        for (double& x : v) x = rng.uniform(-1.0, 1.0);
        return v;
    }());
    Tensor logits = net.classify(z);

    const Tensor& w = net.params()[6];
    const Tensor& b = net.params()[7];
    for (int cls = 0; cls < 2; ++cls) {
        double acc = 0.0;
        for (int ch = 0; ch < 32; ++ch) {
            double pooled = 0.0;
            for (int n = 0; n < 16; ++n) pooled += z[n * 32 + ch];
            pooled /= 16.0;
            acc += w[cls * 32 + ch] * pooled;
        }
        acc += b[cls];
        CHECK(logits[cls] == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("forward is classify of embed") {
    ArchConfig arch;
    ConvNet net = ConvNet::init(arch, 31);
    Rng rng(32);
    for (int i = 0; i < 5; ++i) {
        Tensor img = random_image(arch, rng);
        Tensor a = net.forward(img);
        Tensor b = net.classify(net.embed(img));
        CHECK(a.values() == b.values());
    }
}

TEST_CASE("classifier head carries gradient back into the embedding") {
    ArchConfig arch;
    ConvNet net = ConvNet::init(arch, 41);
    Rng rng(42);
    Tensor z = net.embed(random_image(arch, rng));
    Tape tape;
    Tensor zw = tape.watch(z);
    tape.backward(select(run_classify(arch, net.params(), zw), 0));
    Tensor gz = tape.grad(zw);
    const std::vector<double>& g = gz.values();
    bool any = false;
    for (double v : g) any = any || v != 0.0;
    CHECK(any);
}

TEST_CASE("checkpoint round trip preserves everything") {
    ArchConfig arch;
    arch.conv_channels = {4, 8};
    arch.input_h = arch.input_w = 16;
    ConvNet net = ConvNet::init(arch, 51);
    const std::string path = "model_roundtrip.ckpt";
    net.save(path);
    ConvNet back = ConvNet::load(path);
    CHECK(back.arch() == arch);
    CHECK(back.param_hash() == net.param_hash());
    std::remove(path.c_str());
}

TEST_CASE("checkpoint corruption is rejected with a format error") {
    ArchConfig arch;
    arch.conv_channels = {4};
    arch.input_h = arch.input_w = 8;
    ConvNet net = ConvNet::init(arch, 61);
    const std::string path = "model_corrupt.ckpt";
    net.save(path);
    std::string bytes = slurp(path);

    SUBCASE("bad magic") {
        bytes[0] = 'X';
        spit(path, bytes);
        CHECK_THROWS_AS(ConvNet::load(path), FormatError);
    }
    SUBCASE("unsupported version") {
        bytes[8] = 99;
        spit(path, bytes);
        CHECK_THROWS_AS(ConvNet::load(path), FormatError);
    }
    SUBCASE("truncated payload") {
        spit(path, bytes.substr(0, bytes.size() / 2));
        CHECK_THROWS_AS(ConvNet::load(path), FormatError);
    }
    SUBCASE("trailing garbage") {
        spit(path, bytes + "zz");
        CHECK_THROWS_AS(ConvNet::load(path), FormatError);
    }
    std::remove(path.c_str());
}

TEST_CASE("with_params validates the layout") {
    ArchConfig arch;
    ConvNet net = ConvNet::init(arch, 71);
    std::vector<Tensor> params = net.params();
    params.pop_back();
    CHECK_THROWS_AS(net.with_params(params), ContractViolation);
    params = net.params();
    params[0] = Tensor::zeros({1, 1, 3, 16});
    CHECK_THROWS_AS(net.with_params(params), ContractViolation);
}

TEST_CASE("forward rejects wrong input shapes") {
    ArchConfig arch;
    ConvNet net = ConvNet::init(arch, 81);
    CHECK_THROWS_AS(net.forward(Tensor::zeros({16, 16, 3})), InputError);
    CHECK_THROWS_AS(net.classify(Tensor::zeros({4, 4, 16})), InputError);
}

TEST_CASE("argmax breaks ties toward the lowest index") {
    CHECK(argmax({1.0, 3.0, 3.0}) == 1);
    CHECK(argmax({2.0, 1.0}) == 0);
    CHECK(argmax({5.0}) == 0);
}
