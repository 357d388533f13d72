#include <benchmark/benchmark.h>

#include "pllsync/analysis.hpp"
#include "pllsync/dynamics.hpp"
#include "pllsync/math.hpp"
#include "pllsync/scenarios.hpp"
#include "pllsync/signals.hpp"

namespace {

using namespace pllsync;

const double kGamma = kClarkeGain;
const double kOmega = 100.0 * kPi;

signals::GridModel constant_grid() {
  signals::GridModel grid;
  grid.profile = signals::ConstantFrequency{kOmega};
  return grid;
}

void ClarkePark(benchmark::State& state) {
  const auto grid = constant_grid();
  double t = 0.0;
  for (auto _ : state) {
    const auto s = signals::three_phase_voltage(grid, t);
    const auto ab = signals::clarke_transform(s);
    const auto dq = signals::park_transform(s, 0.3);
    benchmark::DoNotOptimize(ab);
    benchmark::DoNotOptimize(dq);
    t += 1e-5;
  }
}
BENCHMARK(ClarkePark);

void ClosedLoopPolar(benchmark::State& state) {
  const auto grid = constant_grid();
  const auto cfg = pll::PllConfig::atan(200.0, 1e3, kGamma);
  dynamics::IntegratorConfig icfg;
  icfg.dt = 1e-5;
  icfg.t_end = state.range(0) * 1e-3;
  icfg.record_stride = 1 << 30;
  for (auto _ : state) {
    auto traj = dynamics::simulate_closed_loop(
        grid, cfg, dynamics::Representation::Polar, icfg, {1.0, kOmega});
    benchmark::DoNotOptimize(traj);
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<long>(icfg.t_end / icfg.dt));
}
BENCHMARK(ClosedLoopPolar)->Arg(10)->Arg(100);

void ClosedLoopDq(benchmark::State& state) {
  const auto grid = constant_grid();
  const auto cfg = pll::PllConfig::srf(200.0, 1e3, kGamma);
  dynamics::IntegratorConfig icfg;
  icfg.dt = 1e-5;
  icfg.t_end = state.range(0) * 1e-3;
  icfg.record_stride = 1 << 30;
  for (auto _ : state) {
    auto traj = dynamics::simulate_closed_loop(
        grid, cfg, dynamics::Representation::Dq, icfg, {1.0, kOmega});
    benchmark::DoNotOptimize(traj);
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<long>(icfg.t_end / icfg.dt));
}
BENCHMARK(ClosedLoopDq)->Arg(10)->Arg(100);

void RoaValidate(benchmark::State& state) {
  const auto est = analysis::roa_inner_estimate(
      pll::Family::gAtan, 0, 200.0, 1e3, kGamma,
      analysis::RoaKind::DerivedSublevel);
  const auto cfg = pll::PllConfig::atan(200.0, 1e3, kGamma);
  analysis::RoaValidationOptions opts;
  opts.t_end = 1.0;
  opts.jobs = 1;
  for (auto _ : state) {
    auto result = analysis::roa_validate(est, cfg, 16, 7, opts);
    benchmark::DoNotOptimize(result);
  }
}
BENCHMARK(RoaValidate)->Unit(benchmark::kMillisecond);

void UltimateBoundOptimizer(benchmark::State& state) {
  for (auto _ : state) {
    auto bound = analysis::ultimate_bound(200.0, 1e3, 1.6 * kPi,
                                          analysis::BoundVariant::DerivedKhalil);
    benchmark::DoNotOptimize(bound);
  }
}
BENCHMARK(UltimateBoundOptimizer)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
