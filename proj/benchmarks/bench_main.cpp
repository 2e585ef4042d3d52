#include "pasc/baseline.hpp"
#include "pasc/codec.hpp"
#include "pasc/diffmask.hpp"
#include "pasc/harness.hpp"
#include "pasc/metrics.hpp"
#include "pasc/phy.hpp"
#include "pasc/scene.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace pasc;

namespace {

BitVector random_bits(std::size_t n, std::uint64_t seed) {
    BitVector b(n);
    std::mt19937_64 rng(seed);
    for (auto& x : b) x = static_cast<std::uint8_t>(rng() & 1);
    return b;
}

ScenarioSample scene() {
    WorldConfig w;
    w.world_seed = 3;
    w.dynamics_seed = 4;
    return make_scenario(w);
}

CodecConfig codec_cfg(int bits) {
    CodecConfig c;
    c.bits_out = bits;
    return c;
}

}  // namespace

static void BM_Encode(benchmark::State& state) {
    const auto cfg = codec_cfg(static_cast<int>(state.range(0)));
    const auto w = init_weights(cfg, 1);
    const auto x = scene().target;
    for (auto _ : state) benchmark::DoNotOptimize(encode(x, w, cfg));
}
BENCHMARK(BM_Encode)->Arg(1000)->Arg(16000)->Unit(benchmark::kMillisecond);

static void BM_Decode(benchmark::State& state) {
    const auto cfg = codec_cfg(static_cast<int>(state.range(0)));
    const auto w = init_weights(cfg, 1);
    const auto b = random_bits(cfg.bits_out, 2);
    for (auto _ : state) benchmark::DoNotOptimize(decode(b, w, cfg));
}
BENCHMARK(BM_Decode)->Arg(1000)->Arg(16000)->Unit(benchmark::kMillisecond);

static void BM_TrainEpoch(benchmark::State& state) {
    const auto cfg = codec_cfg(static_cast<int>(state.range(0)));
    const auto data = make_training_set(CodecVariant::JSCC, 16, 1, cfg.height, cfg.width);
    OptimizerParams opt;
    opt.epochs = 1;
    for (auto _ : state) benchmark::DoNotOptimize(train(data, cfg, 0.01, opt, 1));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data.size()));
}
BENCHMARK(BM_TrainEpoch)->Arg(1000)->Arg(16000)->Unit(benchmark::kMillisecond);

static void BM_TransmitFrame(benchmark::State& state) {
    const OfdmConfig cfg;
    const auto b = random_bits(static_cast<std::size_t>(cfg.bits_per_frame()), 3);
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(transmit_bits(b, cfg, ChannelProfile::sui5(), 10.0, ++seed));
    state.SetItemsProcessed(state.iterations() * cfg.bits_per_frame());
}
BENCHMARK(BM_TransmitFrame)->Unit(benchmark::kMicrosecond);

static void BM_Viterbi(benchmark::State& state) {
    const auto coded = chan_encode(random_bits(static_cast<std::size_t>(state.range(0)), 4));
    for (auto _ : state) benchmark::DoNotOptimize(chan_decode(coded));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Viterbi)->Arg(1000)->Arg(20000)->Unit(benchmark::kMicrosecond);

static void BM_SourceEncode(benchmark::State& state) {
    const auto p = scene().target;
    for (auto _ : state) benchmark::DoNotOptimize(source_encode(p, kDefaultQuality));
}
BENCHMARK(BM_SourceEncode)->Unit(benchmark::kMicrosecond);

static void BM_Ssim(benchmark::State& state) {
    const auto s = scene();
    for (auto _ : state) benchmark::DoNotOptimize(ssim(s.target, s.synth));
}
BENCHMARK(BM_Ssim)->Unit(benchmark::kMicrosecond);

static void BM_RenderScenario(benchmark::State& state) {
    WorldConfig w;
    for (auto _ : state) {
        ++w.world_seed;
        benchmark::DoNotOptimize(make_scenario(w));
    }
}
BENCHMARK(BM_RenderScenario)->Unit(benchmark::kMicrosecond);
BENCHMARK_MAIN();
