#include <benchmark/benchmark.h>

#include <random>

#include "nomaosd/de.hpp"
#include "nomaosd/sosd.hpp"

using namespace nomaosd;

namespace {

std::vector<double> sample_llrs(std::size_t n, double sigma2, Rng& rng) {
    std::normal_distribution<double> noise(0.0, std::sqrt(sigma2));
    std::vector<double> llr(n);
    for (auto& v : llr) v = 2.0 * (1.0 + noise(rng)) / sigma2;
    return llr;
}

const LinearCode& code64() {
    static const LinearCode code = load_code(code_fixture_path("ebch_64_30_14.txt"));
    return code;
}

}  // namespace

static void BM_OrderAndReduce(benchmark::State& state) {
    Rng rng(1);
    const auto llr = sample_llrs(64, 0.5, rng);
    for (auto _ : state) {
        auto ctx = order_and_reduce(llr, code64());
        benchmark::DoNotOptimize(ctx);
    }
}
BENCHMARK(BM_OrderAndReduce);

static void BM_OsdDecode(benchmark::State& state) {
    Rng rng(2);
    const auto llr = sample_llrs(64, 0.5, rng);
    const auto order = static_cast<std::uint32_t>(state.range(0));
    for (auto _ : state) {
        auto res = osd_decode(llr, code64(), order);
        benchmark::DoNotOptimize(res);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(TepEnumerator::total_count(30, order)));
}
BENCHMARK(BM_OsdDecode)->Arg(1)->Arg(2)->Arg(3);

static void BM_SosdExtrinsic(benchmark::State& state) {
    Rng rng(3);
    const auto llr = sample_llrs(64, 0.5, rng);
    for (auto _ : state) {
        auto res = sosd_extrinsic(llr, code64(), 3);
        benchmark::DoNotOptimize(res);
    }
}
BENCHMARK(BM_SosdExtrinsic);

static void BM_DualSample(benchmark::State& state) {
    Rng rng(4);
    const auto llr = sample_llrs(64, 1.0, rng);
    const auto ctx = build_dual_context(llr, code64(), 17);
    const auto p = dual_order_pair(30, 3, 3);
    for (auto _ : state) {
        auto s = dual_osd_sample(ctx, p.n0, p.n1);
        benchmark::DoNotOptimize(s);
    }
}
BENCHMARK(BM_DualSample);

static void BM_Convolve(benchmark::State& state) {
    const auto n = static_cast<std::uint32_t>(state.range(0));
    const GridSpec g{-256.0, 256.0, n};
    const auto a = GridDensity::gaussian(2.0, 4.0, g);
    const auto b = GridDensity::gaussian(-1.0, 2.0, g);
    for (auto _ : state) {
        auto c = convolve(a, b);
        benchmark::DoNotOptimize(c);
    }
}
BENCHMARK(BM_Convolve)->Arg(512)->Arg(4096)->Arg(16384);

static void BM_DsOffDensity(benchmark::State& state) {
    const auto ch = UserChannel::from_snr_db({1.225, 0.707}, 10.0);
    const auto t = static_cast<int>(state.range(0));
    for (auto _ : state) {
        auto d = ds_off_density(ch, t);
        benchmark::DoNotOptimize(d);
    }
}
BENCHMARK(BM_DsOffDensity)->Arg(1)->Arg(3);

BENCHMARK_MAIN();
