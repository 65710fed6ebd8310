#include <cmath>
#include <random>

#include "beamlab/error.hpp"
#include "beamlab/linearization.hpp"
#include "doctest.h"

using namespace beamlab;

namespace {

// independent oracle: derivative of prod eps_i^{a_i} at 0 is beta! if a == beta, else 0
double monomial_derivative(const MultiIndex& a, const MultiIndex& beta) {
  return a == beta ? multi_factorial(beta) : 0.0;
}

double rel_l2(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

struct Setup {
  WarpedMetric g = WarpedMetric::minkowski(3);
  SpacetimeGrid grid{g, 24, 48, 1.0};
  std::vector<NeumannSource> sources;

  Setup() {
    const double ys[3] = {0.3, 0.5, 0.7};
    const double ts[3] = {0.15, 0.2, 0.25};
    for (int i = 0; i < 3; ++i)
      sources.push_back(sample_source(grid, [&, i](int face, const Vec& x) {
        if (face != 0 && face != 2) return 0.0;
        const double s = face == 0 ? x[2] : x[1];
        const double r2 = (s - ys[i]) * (s - ys[i]) + (x[0] - ts[i]) * (x[0] - ts[i]);
        return std::exp(-r2 / 0.006);
      }));
  }
};

NonlinearityProfile central_profile(double a2, double a3) {
  NonlinearityProfile H;
  if (a2 != 0.0) H.set(2, {CompactBump{{0.55, 0.3, 0.3}, 0.35, a2}});
  if (a3 != 0.0) H.set(3, {CompactBump{{0.55, 0.3, 0.3}, 0.35, a3}});
  return H;
}

}  // namespace

TEST_CASE("central rules reproduce derivatives of monomials") {
  for (int n = 0; n <= 4; ++n) {
    const auto rule = central_rule(n);
    for (int q = 0; q <= n + 1; ++q) {
      double s = 0.0;
      for (auto [x, w] : rule) s += w * std::pow(static_cast<double>(x), q);
      const double expect = q == n ? std::tgamma(n + 1.0) : 0.0;
      CHECK(s == doctest::Approx(expect).epsilon(1e-12).scale(1.0));
    }
  }
}

TEST_CASE("stencil is exact on polynomials below the remainder order") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (const MultiIndex& beta : {MultiIndex{1, 1, 1}, MultiIndex{1, 1, 2}, MultiIndex{2, 1, 1}, MultiIndex{1, 1}}) {
    const auto st = make_stencil(beta, 0.1);
    // random polynomial with all monomials of degree <= |beta| + 1 in each variable up to beta_i + 1
    std::vector<std::pair<MultiIndex, double>> poly;
    MultiIndex a(beta.size(), 0);
    while (true) {
      bool ok = true;
      for (size_t i = 0; i < a.size(); ++i) ok = ok && a[i] <= beta[i] + 1;
      int extra = 0;
      for (size_t i = 0; i < a.size(); ++i) extra += std::max(0, a[i] - beta[i]);
      if (ok && extra == 0) poly.emplace_back(a, U(rng));
      size_t i = 0;
      while (i < a.size() && ++a[i] > beta[i] + 1) a[i++] = 0;
      if (i == a.size()) break;
    }
    double exact = 0.0;
    for (const auto& [m, c] : poly) exact += c * monomial_derivative(m, beta);
    const double approx = st.apply([&](const std::vector<double>& e) {
      double s = 0.0;
      for (const auto& [m, c] : poly) {
        double t = c;
        for (size_t i = 0; i < m.size(); ++i) t *= std::pow(e[i], m[i]);
        s += t;
      }
      return s;
    });
    CHECK(std::abs(approx - exact) < 1e-12 * std::max(1.0, std::abs(exact)) * 1e2);
  }
}

TEST_CASE("stencil table dumps to json") {
  const auto st = make_stencil({1, 1, 1}, 1e-3);
  CHECK(st.nodes.size() == 8);
  const auto j = st.to_json();
  CHECK(j["nodes"].size() == 8);
  CHECK(j["orders"][2] == 1);
}

TEST_CASE("forcing recipe constants from formal differentiation") {
  SUBCASE("h2 only: U12 forcing is -2 h2 v1 v2") {
    const auto r = forcing_recipe({1, 1}, 2);
    REQUIRE(r.size() == 1);
    CHECK(r[0].k == 2);
    CHECK(r[0].coefficient == doctest::Approx(-2.0));
  }
  SUBCASE("order (1,1,1)") {
    const auto r = forcing_recipe({1, 1, 1}, 3);
    int n2 = 0;
    for (const auto& t : r) {
      if (t.k == 3) CHECK(t.coefficient == doctest::Approx(-6.0));
      if (t.k == 2) {
        ++n2;
        CHECK(t.coefficient == doctest::Approx(-2.0));
      }
    }
    CHECK(n2 == 3);
  }
  SUBCASE("order (1,1,2) with h4 carries -24") {
    const auto r = forcing_recipe({1, 1, 2}, 4);
    bool found = false;
    for (const auto& t : r)
      if (t.k == 4) {
        found = true;
        CHECK(t.coefficient == doctest::Approx(-24.0));
      }
    CHECK(found);
  }
  SUBCASE("u^2 with u = eps^2: (2) from h2 has coefficient -2") {
    const auto r = forcing_recipe({2}, 2);
    REQUIRE(r.size() == 1);
    CHECK(r[0].coefficient == doctest::Approx(-2.0));
  }
  CHECK(recipe_to_json({1, 1}, forcing_recipe({1, 1}, 2))["terms"].size() == 1);
}

TEST_CASE("second derivative vanishes for the linear map") {
  Setup s;
  NonlinearityProfile H;
  std::vector<NeumannSource> two = {s.sources[0], s.sources[1]};
  const auto r = mixed_derivative_ndmap(s.g, s.grid, H, two, make_stencil({1, 1}, 1e-3));
  double m = 0.0;
  for (double v : r.trace.values) m = std::max(m, std::abs(v));
  CHECK(m < 1e-9);
}

TEST_CASE("first derivative equals the linear solve") {
  Setup s;
  const auto H = central_profile(1.0, 0.0);
  const auto r = mixed_derivative_ndmap(s.g, s.grid, H, {s.sources[0]}, make_stencil({1}, 1e-3));
  const auto lin = solve_linear(s.g, s.grid, nullptr, s.sources[0]);
  CHECK(rel_l2(r.trace.values, lin.trace.values) < 1e-5);
}

TEST_CASE("finite differences agree with the cascade at order (1,1,1)") {
  Setup s;
  const auto H = central_profile(1.0, 2.0);
  const auto fd = mixed_derivative_ndmap(s.g, s.grid, H, s.sources, make_stencil({1, 1, 1}, 1e-3));
  const auto cs = cascade_solve(s.g, s.grid, H, s.sources, {1, 1, 1});
  CHECK(rel_l2(fd.trace.values, cs.field.trace.values) < 0.05);
}

TEST_CASE("finite differences agree with the cascade at order (1,2)") {
  Setup s;
  const auto H = central_profile(1.5, 1.0);
  std::vector<NeumannSource> two = {s.sources[0], s.sources[1]};
  const auto fd = mixed_derivative_ndmap(s.g, s.grid, H, two, make_stencil({1, 2}, 2e-3));
  const auto cs = cascade_solve(s.g, s.grid, H, two, {1, 2});
  CHECK(rel_l2(fd.trace.values, cs.field.trace.values) < 0.05);
}

TEST_CASE("cascade terms vanish before the sources switch on") {
  Setup s;
  const auto H = central_profile(1.0, 1.0);
  const auto series = cascade_series(s.g, s.grid, H, s.sources, {1, 1, 1});
  // sources are negligible (< 1e-16) before t = 0.15 - sqrt(0.006 * 37) ~ -0.32, so check support of the
  // nonlinear terms instead: they only live in the causal future of the bump support, t >= 0.2
  for (const auto& t : series.terms) {
    if (total_order(t.index) < 2) continue;
    double m = 0.0;
    for (int k = 0; k * s.grid.dt() < 0.19; ++k)
      for (size_t i = 0; i < s.grid.spatial_nodes(); ++i) m = std::max(m, std::abs(t.field.at(s.grid, k, i)));
    CHECK(m == 0.0);
  }
}

TEST_CASE("disjoint sources give vanishing cascade terms") {
  const auto g = WarpedMetric::minkowski(3);
  // short horizon keeps the numerical domain of dependence (speed dx/dt) away from the bump
  const SpacetimeGrid grid(g, 16, 10, 0.3);
  // compactly supported in time with non-overlapping windows far from the nonlinearity
  auto window = [&](double t0) {
    return sample_source(grid, [=](int face, const Vec& x) {
      if (face != 0) return 0.0;
      const double r = std::abs(x[0] - t0) / 0.05;
      return r < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - r * r)) : 0.0;
    });
  };
  NonlinearityProfile H;
  H.set(2, {CompactBump{{0.2, 0.9, 0.9}, 0.08, 1.0}});
  const auto t = cascade_solve(g, grid, H, {window(0.07), window(0.2)}, {1, 1});
  double m = 0.0;
  for (double v : t.field.u) m = std::max(m, std::abs(v));
  CHECK(m == 0.0);
}

TEST_CASE("correction term matches the two-run difference") {
  Setup s;
  const auto full = central_profile(1.0, 1.0);
  NonlinearityProfile h2;
  h2.set(2, full.h[2]);
  const auto f0 = sample_source(s.grid, [](int face, const Vec& x) {
    if (face != 0) return 0.0;
    return std::exp(-((x[2] - 0.3) * (x[2] - 0.3) + (x[0] - 0.85) * (x[0] - 0.85)) / 0.01);
  });
  const auto v0 = solve_linear(s.g, s.grid, nullptr, f0, TimeMode::backward);
  const auto fd_full = mixed_derivative_ndmap(s.g, s.grid, full, s.sources, make_stencil({1, 1, 1}, 1e-3));
  const auto fd_h3 = mixed_derivative_ndmap(s.g, s.grid, full.without(2), s.sources, make_stencil({1, 1, 1}, 1e-3));
  const double diff = boundary_pairing(s.g, s.grid, fd_full.trace.values, f0.values, FaceRule::trapezoid) -
                      boundary_pairing(s.g, s.grid, fd_h3.trace.values, f0.values, FaceRule::trapezoid);
  const double corr = correction_term(s.g, s.grid, h2, s.sources, v0.u);
  CHECK(corr != 0.0);
  CHECK(std::abs(corr - diff) <= 0.1 * std::abs(diff));
  CHECK(correction_term(s.g, s.grid, NonlinearityProfile{}, s.sources, v0.u) == 0.0);
}

TEST_CASE("higher correction requires all lower coefficients") {
  Setup s;
  NonlinearityProfile known;
  known.set(2, central_profile(1.0, 0.0).h[2]);
  std::vector<double> v0(s.grid.field_size(), 0.0);
  CHECK_THROWS_AS(higher_correction_term(s.g, s.grid, known, s.sources, {1, 1, 2}, v0), DomainError);
  NonlinearityProfile zero;
  zero.h.resize(4);
  CHECK(higher_correction_term(s.g, s.grid, zero, s.sources, {1, 1, 2}, v0) == 0.0);
}
