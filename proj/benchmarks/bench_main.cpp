#include <benchmark/benchmark.h>

#include "beamlab/beams.hpp"
#include "beamlab/geometry.hpp"
#include "beamlab/harness.hpp"
#include "beamlab/linearization.hpp"
#include "beamlab/verify.hpp"

using namespace beamlab;

namespace {

WarpedMetric perturbed() {
  Bump b;
  b.center = {0.45, 0.5, 0.5};
  b.width = 0.4;
  b.amplitude = 0.1;
  return WarpedMetric::lapse_bump(3, b);
}

Vec point3(double t, double x, double y) {
  Vec p(3);
  p << t, x, y;
  return p;
}

FermiChart chart_for(const WarpedMetric& g, const Vec& p) {
  Vec dir(2);
  dir << 1.0, 0.0;
  return build_fermi_chart(g, trace_null_geodesic(g, p, null_covector(g, p, dir), Direction::forward));
}

void BM_Riccati(benchmark::State& st) {
  const auto g = perturbed();
  const auto ch = chart_for(g, point3(0.3, 0.2, 0.5));
  const CMat H0 = cplx(0.0, 1.0) * CMat::Identity(2, 2);
  RiccatiOptions o;
  o.step = 1e-3;
  for (auto _ : st) benchmark::DoNotOptimize(solve_riccati(ch, H0, CMat::Identity(2, 2), o).c0_drift());
}
BENCHMARK(BM_Riccati)->Unit(benchmark::kMillisecond);

void BM_LinearSolve(benchmark::State& st) {
  const auto g = perturbed();
  const auto grid = SpacetimeGrid::with_courant(g, static_cast<int>(st.range(0)), 1.0, 0.8);
  PulseSpec p;
  const auto f = pulse(grid, p);
  for (auto _ : st) benchmark::DoNotOptimize(solve_linear(g, grid, nullptr, f).trace.l2());
  st.SetItemsProcessed(st.iterations() * static_cast<int64_t>(grid.field_size()));
}
BENCHMARK(BM_LinearSolve)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_BeamSource(benchmark::State& st) {
  const auto g = WarpedMetric::minkowski(3);
  const auto ch = chart_for(g, point3(0.3, 0.2, 0.5));
  const auto r = solve_riccati(ch, cplx(0.0, 1.0) * CMat::Identity(2, 2), CMat::Identity(2, 2));
  const auto ph = build_phase(ch, r, 2);
  const auto am = build_amplitude(ph, r);
  const auto beam = assemble_beam(ph, am, static_cast<double>(st.range(0)), 1.0, 0.6);
  const auto grid = SpacetimeGrid::with_courant(g, 48, 1.0, 0.8);
  SourceOptions so;
  so.margin = -1.0;
  for (auto _ : st) benchmark::DoNotOptimize(beam_neumann_source(beam, g, grid, so).source.max_abs());
}
BENCHMARK(BM_BeamSource)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Cascade(benchmark::State& st) {
  const auto g = WarpedMetric::minkowski(3);
  const SpacetimeGrid grid(g, 24, 48, 1.0);
  NonlinearityProfile H;
  H.set(2, {CompactBump{{0.55, 0.3, 0.3}, 0.35, 1.0}});
  H.set(3, {CompactBump{{0.55, 0.3, 0.3}, 0.35, 2.0}});
  std::vector<NeumannSource> src;
  for (double t0 : {0.15, 0.2, 0.25}) {
    PulseSpec p;
    p.faces = {0, 2};
    p.t0 = t0;
    p.width2 = 0.006;
    src.push_back(pulse(grid, p));
  }
  for (auto _ : st) benchmark::DoNotOptimize(cascade_solve(g, grid, H, src, {1, 1, 1}).field.trace.l2());
}
BENCHMARK(BM_Cascade)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
