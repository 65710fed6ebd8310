#include <cmath>

#include "beamlab/error.hpp"
#include "beamlab/wave_solver.hpp"
#include "doctest.h"

using namespace beamlab;

namespace {

WarpedMetric lapse_metric() {
  Bump b;
  b.center = {0.4, 0.5, 0.5};
  b.width = 0.3;
  b.amplitude = 0.2;
  return WarpedMetric::lapse_bump(3, b);
}

WarpedMetric conformal_metric() {
  Bump b;
  b.center = {0.3, 0.45, 0.55};
  b.width = 0.25;
  b.amplitude = 0.15;
  return WarpedMetric::conformal_bump(3, b);
}

NeumannSource pulse(const SpacetimeGrid& grid, double y0, double t0) {
  auto f = sample_source(grid, [&](int face, const Vec& x) {
    if (face != 0) return 0.0;
    const double r2 = (x[2] - y0) * (x[2] - y0) + (x[0] - t0) * (x[0] - t0);
    return std::exp(-r2 / 0.01);
  });
  return f;
}

// standing mode cos(pi x) cos(pi y) cos(sqrt2 pi t) with homogeneous Neumann data
double standing_error(int cells) {
  const auto g = WarpedMetric::minkowski(3);
  const double T = 0.5;
  const SpacetimeGrid grid(g, cells, 2 * cells, T);
  InitialData init;
  init.u0.resize(grid.spatial_nodes());
  init.u1.assign(grid.spatial_nodes(), 0.0);
  for (size_t i = 0; i < grid.spatial_nodes(); ++i) {
    const Vec p = grid.point(i, 0);
    init.u0[i] = std::cos(kPi * p[1]) * std::cos(kPi * p[2]);
  }
  const auto sol = solve_linear(g, grid, nullptr, NeumannSource::zero(grid), TimeMode::forward, &init);
  double err = 0.0;
  const int k = grid.steps();
  for (size_t i = 0; i < grid.spatial_nodes(); ++i) {
    const Vec p = grid.point(i, k);
    const double ex = std::cos(kPi * p[1]) * std::cos(kPi * p[2]) * std::cos(std::sqrt(2.0) * kPi * p[0]);
    err = std::max(err, std::abs(sol.at(grid, k, i) - ex));
  }
  return err;
}

}  // namespace

TEST_CASE("cfl violation is rejected") {
  const auto g = WarpedMetric::minkowski(3);
  CHECK_THROWS_AS(SpacetimeGrid(g, 20, 5, 1.0), DomainError);
  CHECK_NOTHROW(SpacetimeGrid(g, 20, 40, 1.0));
  const auto grid = SpacetimeGrid::with_courant(g, 20, 1.0, 0.8);
  CHECK(grid.dt() <= cfl_limit(g, 20, 1.0, 0.8) + 1e-15);
}

TEST_CASE("standing mode converges at second order") {
  const double e1 = standing_error(16), e2 = standing_error(32);
  CHECK(e2 < 0.02);
  CHECK(std::log2(e1 / e2) == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("zero source gives zero field") {
  const auto g = lapse_metric();
  const SpacetimeGrid grid(g, 12, 30, 1.0);
  const auto sol = solve_linear(g, grid, nullptr, NeumannSource::zero(grid));
  double m = 0.0;
  for (double v : sol.u) m = std::max(m, std::abs(v));
  CHECK(m == 0.0);
}

TEST_CASE("discrete energy is conserved on a static metric") {
  const auto g = WarpedMetric::minkowski(3);
  const SpacetimeGrid grid(g, 20, 60, 1.0);
  InitialData init;
  init.u0.resize(grid.spatial_nodes());
  init.u1.assign(grid.spatial_nodes(), 0.0);
  for (size_t i = 0; i < grid.spatial_nodes(); ++i) {
    const Vec p = grid.point(i, 0);
    init.u0[i] = std::exp(-((p[1] - 0.5) * (p[1] - 0.5) + (p[2] - 0.4) * (p[2] - 0.4)) / 0.02);
  }
  const auto sol = solve_linear(g, grid, nullptr, NeumannSource::zero(grid), TimeMode::forward, &init);
  const double e0 = discrete_energy(g, grid, sol.u, 0);
  for (int k = 1; k < grid.steps(); k += 7) CHECK(discrete_energy(g, grid, sol.u, k) == doctest::Approx(e0).epsilon(1e-10));
}

TEST_CASE("discrete Green identity is exact with the trapezoid face rule") {
  for (const auto& g : {lapse_metric(), conformal_metric()}) {
    const SpacetimeGrid grid(g, 14, 40, 1.0);
    auto f = pulse(grid, 0.5, 0.3);
    auto h = pulse(grid, 0.4, 0.7);
    std::vector<double> F(grid.field_size()), G(grid.field_size());
    for (size_t p = 0; p < F.size(); ++p) {
      const size_t i = p % grid.spatial_nodes();
      const int k = static_cast<int>(p / grid.spatial_nodes());
      const Vec x = grid.point(i, k);
      F[p] = std::exp(-((x[0] - 0.4) * (x[0] - 0.4) + (x[1] - 0.5) * (x[1] - 0.5)) / 0.02);
      G[p] = std::sin(3 * x[0]) * x[1] * x[2];
    }
    const auto u = solve_linear(g, grid, &F, f, TimeMode::forward);
    const auto v = solve_linear(g, grid, &G, h, TimeMode::backward);
    // int (F v - u G) dV = int (f v - u h) dS
    const double lhs = volume_pairing(g, grid, F, v.u) - volume_pairing(g, grid, u.u, G);
    const double rhs = boundary_pairing(g, grid, f.values, v.trace.values, FaceRule::trapezoid) -
                       boundary_pairing(g, grid, u.trace.values, h.values, FaceRule::trapezoid);
    CHECK(std::abs(lhs - rhs) <= 1e-11 * (std::abs(lhs) + std::abs(rhs) + 1e-3));
  }
}

TEST_CASE("z norm of a constant field") {
  const auto g = WarpedMetric::minkowski(3);
  const SpacetimeGrid grid(g, 8, 20, 1.0);
  std::vector<double> u(grid.field_size(), 2.0);
  CHECK(z_norm(grid, u, 1) == doctest::Approx(4.0));
  CHECK(z_norm(grid, u, 2) == doctest::Approx(4.0));
  CHECK_THROWS_AS(z_norm(grid, u, 50), DomainError);
}

TEST_CASE("picard iteration contracts for small data and reports ratios") {
  const auto g = WarpedMetric::minkowski(3);
  const SpacetimeGrid grid(g, 12, 30, 1.0);
  NonlinearityProfile H;
  H.set(2, {CompactBump{{0.6, 0.5, 0.5}, 0.3, 1.0}});
  H.set(3, {CompactBump{{0.6, 0.4, 0.5}, 0.3, 0.5}});
  auto f = pulse(grid, 0.5, 0.3).scaled(0.05);
  SemilinearOptions opt;
  const auto r = solve_semilinear(g, grid, H, f, opt);
  CHECK(r.iterations >= 2);
  CHECK(r.max_ratio() < 0.5);
  CHECK(r.distances.back() <= std::max(opt.tol, 1e-14 * std::sqrt(z_norm(grid, r.solution.u, 1))));
}

TEST_CASE("eps0 is enforced") {
  const auto g = WarpedMetric::minkowski(3);
  const SpacetimeGrid grid(g, 10, 25, 1.0);
  NonlinearityProfile H;
  H.set(2, {CompactBump{{0.6, 0.5, 0.5}, 0.3, 1.0}});
  SemilinearOptions opt;
  opt.eps0 = 1e-3;
  CHECK_THROWS_AS(solve_semilinear(g, grid, H, pulse(grid, 0.5, 0.3), opt), DomainError);
}

TEST_CASE("large data diverges with a numerical error") {
  const auto g = WarpedMetric::minkowski(3);
  const SpacetimeGrid grid(g, 10, 25, 1.0);
  NonlinearityProfile H;
  H.set(2, {CompactBump{{0.6, 0.5, 0.5}, 0.4, 50.0}});
  CHECK_THROWS_AS(solve_semilinear(g, grid, H, pulse(grid, 0.5, 0.3).scaled(200.0)), NumericalError);
}
