#include <benchmark/benchmark.h>

#include "motrims/analysis.hpp"
#include "motrims/apparatus.hpp"
#include "motrims/ensemble.hpp"
#include "motrims/strongfield.hpp"

using namespace motrims;

namespace {

const strongfield::SpectrumMap& cube() {
  static const auto map = strongfield::spectrum({}, strongfield::InitialState::rb_5s(),
                                                strongfield::MomentumGrid::cube(0.35, 21));
  return map;
}

std::vector<apparatus::DetectorEvent> events(std::size_t n) {
  const auto ions = ensemble::generate_ionization_events(ensemble::TargetEnsemble::mot3d(), {}, {&cube(), nullptr}, n, 1);
  return apparatus::simulate_events({}, {}, apparatus::IonSpecies::rb85(), ions, 1).events;
}

void BM_Amplitude(benchmark::State& state) {
  const strongfield::AmplitudeEngine engine({}, strongfield::InitialState::rb_5s());
  double pz = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(engine.evaluate({0.05, 0.0, pz}).value);
    pz += 1e-6;
  }
}
BENCHMARK(BM_Amplitude);

void BM_SpectrumPlane(benchmark::State& state) {
  const auto grid = strongfield::MomentumGrid::plane_zx(0.5, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(strongfield::spectrum({}, strongfield::InitialState::rb_5s(), grid, {}, 1).values.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(grid.size()));
}
BENCHMARK(BM_SpectrumPlane)->Arg(21)->Arg(41)->Unit(benchmark::kMillisecond);

void BM_GenerateAndSimulate(benchmark::State& state) {
  cube();
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(events(n).data());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GenerateAndSimulate)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_Reconstruct(benchmark::State& state) {
  const auto ev = events(static_cast<std::size_t>(state.range(0)));
  const apparatus::SpectrometerGeometry g;
  const auto rb = apparatus::IonSpecies::rb85();
  const analysis::Reconstructor rec(g, rb, analysis::calibration_from_geometry(g, rb, {}));
  for (auto _ : state) benchmark::DoNotOptimize(analysis::reconstruct_all(ev, rec, 1).data());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Reconstruct)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_Histogram(benchmark::State& state) {
  const auto ev = events(10000);
  const apparatus::SpectrometerGeometry g;
  const auto rb = apparatus::IonSpecies::rb85();
  const analysis::Reconstructor rec(g, rb, analysis::calibration_from_geometry(g, rb, {}));
  const auto recs = analysis::reconstruct_all(ev, rec, 1);
  const analysis::HistAxis ax{analysis::Component::kPz, -0.5, 0.5, 100};
  for (auto _ : state) benchmark::DoNotOptimize(analysis::histogram(recs, ax, analysis::Slice::cylinder(0.1)).counts.data());
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(recs.size()));
}
BENCHMARK(BM_Histogram);

}  // namespace
BENCHMARK_MAIN();
