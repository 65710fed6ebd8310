#include <cmath>

#include "beamlab/covector.hpp"
#include "beamlab/error.hpp"
#include "doctest.h"

using namespace beamlab;

namespace {

double mink(const Vec& a, const Vec& b) {
  double s = -a[0] * b[0];
  for (int i = 1; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST_CASE("perturbed covectors are null and match the closed form") {
  const auto xi = perturbed_covectors(0.1);
  CHECK(xi[0][0] == -1.0);
  CHECK(xi[0][1] == doctest::Approx(std::sqrt(0.99)).epsilon(1e-15));
  CHECK(xi[0][2] == doctest::Approx(0.1));
  CHECK(xi[0][3] == 0.0);
  CHECK(std::abs(mink(xi[0], xi[0])) < 1e-15);
  CHECK(std::abs(mink(xi[1], xi[1])) < 1e-15);
  // sum of the two is timelike
  CHECK(mink(xi[0] + xi[1], xi[0] + xi[1]) < 0.0);
  // continuity towards xi1 as varsigma -> 0
  const auto small = perturbed_covectors(1e-8);
  CHECK((small[0] - xi1_canonical(4)).norm() < 1e-7);
  CHECK((small[1] - xi1_canonical(4)).norm() < 1e-7);
}

TEST_CASE("alpha coefficients decompose xi0") {
  const auto a = alpha_coefficients(0.0, 0.1);
  // independent evaluation of the displayed alpha_1
  const double s = std::sqrt(1.0 - 0.01);
  CHECK(a[0] == doctest::Approx((-s - 1.0) / (1.0 - s)).epsilon(1e-12));
  CHECK(a[0] == doctest::Approx(-398.0).epsilon(1e-3));
  CHECK(a[1] == doctest::Approx(199.5).epsilon(1e-3));
  CHECK(a[1] == a[2]);
  for (double r0 : {-0.9, -0.3, 0.0, 0.3, 0.6, 0.9, 1.0})
    for (double vs : {1e-3, 1e-2, 0.1, 0.5}) {
      const auto f = make_null_frame(r0, vs, 4);
      CHECK(f.decomposition_residual() < 1e-12);
    }
  CHECK_THROWS_AS(alpha_coefficients(0.0, 0.0), DomainError);
}

TEST_CASE("alpha_2 varsigma^2 tends to a positive limit") {
  double prev = 0.0;
  for (double vs : {1e-2, 1e-3, 1e-4}) {
    const double v = alpha_coefficients(0.3, vs)[1] * vs * vs;
    CHECK(v > 0.0);
    if (prev > 0.0) CHECK(std::abs(v - prev) < 0.05 * v);
    prev = v;
  }
}

TEST_CASE("interaction sum follows 3 / (4 b^2)") {
  for (double r0 : {0.0, 0.3, 0.6, 0.9}) {
    const auto f = make_null_frame(r0, 1e-3, 4);
    const double b = 1.0 + std::sqrt(1.0 - r0 * r0);
    CHECK(f.b == doctest::Approx(b));
    CHECK(interaction_sum(f) / 1e-6 == doctest::Approx(3.0 / (4.0 * b * b)).epsilon(0.01));
    // pairwise expansions
    const auto p = pairwise_norms(f);
    CHECK(p[0] * 1e-6 == doctest::Approx(2.0 * b * b).epsilon(0.01));
    CHECK(p[1] * 1e-6 == doctest::Approx(2.0 * b * b).epsilon(0.01));
    CHECK(p[2] * 1e-6 == doctest::Approx(-4.0 * b * b).epsilon(0.01));
  }
  CHECK(make_null_frame(0.0, 1e-3, 3).b == doctest::Approx(2.0));
  for (double r0 = -1.0; r0 <= 1.0; r0 += 0.25)
    for (double vs : {1e-3, 1e-2, 0.05, 0.1}) CHECK(interaction_sum(make_null_frame(r0, vs, 4)) > 0.0);
}

TEST_CASE("interaction sum converges at rate O(varsigma)") {
  const double target = 3.0 / 16.0;
  const double e1 = std::abs(interaction_sum(make_null_frame(0.3, 2e-2, 4)) / 4e-4 - 3.0 / (4.0 * std::pow(b_of(0.3), 2)));
  const double e2 = std::abs(interaction_sum(make_null_frame(0.3, 1e-2, 4)) / 1e-4 - 3.0 / (4.0 * std::pow(b_of(0.3), 2)));
  CHECK(std::log2(e1 / e2) > 0.8);
  CHECK(b_of(0.0) == 2.0);
  CHECK(target == 3.0 / (4.0 * b_of(0.0) * b_of(0.0)));
}

TEST_CASE("canonical frame on Minkowski is the identity") {
  const auto g = WarpedMetric::minkowski(3);
  Vec q(3), x0(3), x1(3);
  q << 0.5, 0.5, 0.5;
  x0 << -1, -1, 0;
  x1 << -1, 1, 0;
  const auto fr = canonical_frame(g, q, x0, x1);
  CHECK(fr.r0 == doctest::Approx(0.0).scale(1.0));
  CHECK((fr.L - Mat::Identity(3, 3)).norm() < 1e-12);
}

TEST_CASE("canonical frame on a perturbed metric") {
  Bump b;
  b.center = {0.5, 0.5, 0.5};
  b.width = 0.3;
  b.amplitude = 0.3;
  const auto g = WarpedMetric::conformal_bump(3, b);
  Vec q(3);
  q << 0.55, 0.45, 0.5;
  const Mat gi = g.inverse(q);
  // two null covectors in working coordinates
  auto null_cov = [&](double a, double c) {
    Vec xi(3);
    xi << 0.0, a, c;
    // solve g^{00} xi0^2 + g^{ii}(a^2 + c^2) = 0 with xi0 < 0
    xi[0] = -std::sqrt(gi(1, 1) * (a * a + c * c) / -gi(0, 0));
    return xi;
  };
  const Vec x0 = null_cov(-0.9, 0.3), x1 = null_cov(1.0, 0.2);
  const auto fr = canonical_frame(g, q, x0, x1);
  const Mat G = fr.L.transpose() * g.metric(q) * fr.L;
  Mat eta = Mat::Identity(3, 3);
  eta(0, 0) = -1.0;
  CHECK((G - eta).cwiseAbs().maxCoeff() < 1e-12);
  const auto f = make_null_frame(g, q, x0, x1, 0.05);
  for (const Vec& w : f.working_covectors()) CHECK(std::abs(w.dot(gi * w)) < 1e-10);
  CHECK(f.decomposition_residual() < 1e-12);
  CHECK_THROWS_AS(canonical_frame(g, q, x0, 2.0 * x0), DomainError);
}

TEST_CASE("four-wave kappas") {
  const auto f = make_null_frame(0.3, 0.1, 4);
  const auto k = four_wave_kappas(f.xi);
  CHECK(k.relation_dim == 1);
  CHECK(k.kappa[0] == doctest::Approx(1.0));
  for (int j = 0; j < 3; ++j) CHECK(k.kappa[j + 1] == doctest::Approx(-f.alpha[j]).epsilon(1e-10));
  CHECK(k.residual < 1e-12);
  // generic quadruple in 1+2: least-squares oracle
  std::array<Vec, 4> q;
  for (int j = 0; j < 4; ++j) {
    const double th = 0.4 + 1.3 * j;
    q[j] = Vec(3);
    q[j] << -1.0, std::cos(th), std::sin(th);
  }
  const auto kg = four_wave_kappas(q);
  Mat A(3, 3);
  for (int j = 0; j < 3; ++j) A.col(j) = q[j + 1];
  const Vec sol = A.colPivHouseholderQr().solve(-q[0]);
  for (int j = 0; j < 3; ++j) CHECK(kg.kappa[j + 1] == doctest::Approx(sol[j]).epsilon(1e-10));
}
