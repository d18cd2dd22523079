#include <benchmark/benchmark.h>

#include "qpon/qkdlink.hpp"
#include "qpon/raman.hpp"
#include "qpon/scenario.hpp"

using namespace qpon;

namespace {

const ScenarioConfig& ngpon2() {
    static const ScenarioConfig cfg = load_preset("ngpon2");
    return cfg;
}

void BM_InbandRaman(benchmark::State& state) {
    const auto in = ngpon2().link_inputs();
    const CountingReceiver rx{in.detector.efficiency, in.interferometer.insertion_loss_db};
    for (auto _ : state)
        benchmark::DoNotOptimize(inband_raman_counts(in.topology, in.plan, in.raman, rx, in.raman_options));
}
BENCHMARK(BM_InbandRaman);

void BM_AnalyticLink(benchmark::State& state) {
    const auto in = ngpon2().link_inputs();
    for (auto _ : state) benchmark::DoNotOptimize(simulate_link(in));
}
BENCHMARK(BM_AnalyticLink);

void BM_SecureFraction(benchmark::State& state) {
    double e = 0.0182;
    for (auto _ : state) {
        benchmark::DoNotOptimize(secure_fraction(e, 0.1, 1.1));
        benchmark::ClobberMemory();
    }
}
BENCHMARK(BM_SecureFraction);

void BM_MonteCarlo(benchmark::State& state) {
    const auto in = ngpon2().link_inputs();
    McOptions opt;
    opt.pulses = static_cast<std::uint64_t>(state.range(0));
    opt.threads = 1;
    for (auto _ : state) benchmark::DoNotOptimize(monte_carlo_link(in, opt));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MonteCarlo)->Arg(1 << 20)->Arg(1 << 24)->Unit(benchmark::kMillisecond);

void BM_Calibration(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(run_calibration(data_dir() + "/anchors.yaml"));
}
BENCHMARK(BM_Calibration)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
