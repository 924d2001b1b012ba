#include <benchmark/benchmark.h>

#include <vector>

#include "ifg/guidance.hpp"
#include "ifg/model.hpp"
#include "ifg/rng.hpp"
#include "ifg/tensor.hpp"
#include "ifg/tracker.hpp"

namespace {

using namespace ifg;

Tensor random_image(Rng& rng, int h, int w, int c) {
    std::vector<double> v(static_cast<std::size_t>(h) * w * c);
    for (double& x : v) x = rng.uniform();
    return Tensor({h, w, c}, std::move(v));
}

ArchConfig bench_arch() {
    ArchConfig arch;
    arch.input_h = arch.input_w = 32;
    arch.input_ch = 3;
    arch.conv_channels = {16, 32, 32};
    return arch;
}

void BM_EmbedForward(benchmark::State& state) {
    ArchConfig arch = bench_arch();
    ConvNet net = ConvNet::init(arch, 1);
    Rng rng(2);
    Tensor img = random_image(rng, 32, 32, 3);
    for (auto _ : state) benchmark::DoNotOptimize(net.embed(img));
}
BENCHMARK(BM_EmbedForward);

void BM_ForwardBackward(benchmark::State& state) {
    ArchConfig arch = bench_arch();
    ConvNet net = ConvNet::init(arch, 1);
    Rng rng(2);
    Tensor img = random_image(rng, 32, 32, 3);
    for (auto _ : state) {
        Tape tape;
        TapedNet taped = watch_net(net, tape);
        Tensor loss = cross_entropy(taped.forward(img), 0);
        tape.backward(loss);
        benchmark::DoNotOptimize(tape.grad(taped.params[0]));
    }
}
BENCHMARK(BM_ForwardBackward);

void BM_GradCam(benchmark::State& state) {
    ArchConfig arch = bench_arch();
    ConvNet net = ConvNet::init(arch, 1);
    Rng rng(2);
    Tensor img = random_image(rng, 32, 32, 3);
    for (auto _ : state) {
        Tape tape;
        TapedNet taped = watch_net(net, tape);
        Tensor z = taped.embed(img);
        benchmark::DoNotOptimize(gradcam(net, z, 0));
    }
}
BENCHMARK(BM_GradCam);

void BM_GuidanceMaps(benchmark::State& state) {
    ArchConfig arch = bench_arch();
    ConvNet net = ConvNet::init(arch, 1);
    Rng rng(2);
    Tensor a = random_image(rng, 32, 32, 3);
    Tensor b = random_image(rng, 32, 32, 3);
    for (auto _ : state) {
        Tape tape;
        TapedNet taped = watch_net(net, tape);
        Tensor z = taped.embed(a);
        Tensor z_bn = taped.embed(b);
        benchmark::DoNotOptimize(compute_guidance(net, z, z_bn, 0, 2.0));
    }
}
BENCHMARK(BM_GuidanceMaps);

void BM_TrackerStep(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    std::vector<int> ids(static_cast<std::size_t>(n)), labels(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = i;
    BnState tracker(ids, labels, 0.1, 0.9, 1);
    Rng rng(3);
    int step = 1;
    for (auto _ : state) {
        for (int i = 0; i < n; ++i) tracker.step_update(i, rng.uniform(0.1, 2.0), step);
        ++step;
        benchmark::DoNotOptimize(tracker.current_dbn());
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_TrackerStep)->Arg(64)->Arg(512);

}  // namespace

BENCHMARK_MAIN();
