#include <cmath>
#include <cstdio>
#include <filesystem>

#include "beamlab/error.hpp"
#include "beamlab/recovery.hpp"
#include "doctest.h"

using namespace beamlab;

namespace {

Vec point(double t, double x, double y) {
  Vec p(3);
  p << t, x, y;
  return p;
}

// coarse desk configuration: seconds per sweep
RecoveryTask coarse_task() {
  RecoveryTask t;
  t.q0 = point(0.9, 0.5, 0.5);
  t.cells = 40;
  t.rhos = {4, 6, 8};
  t.workers = 1;
  return t;
}

const WarpedMetric& flat() {
  static const auto g = WarpedMetric::minkowski(3);
  return g;
}

const PairingSweep& coarse_sweep() {
  static const auto sw = prepare_sweep(flat(), coarse_task());
  return sw;
}

NonlinearityProfile h3_bump(double amplitude, const Vec& c, double radius = 0.3) {
  NonlinearityProfile H;
  H.set(3, {CompactBump{{c[0], c[1], c[2]}, radius, amplitude}});
  return H;
}

}  // namespace

TEST_CASE("rho sweep fit") {
  const std::vector<double> r{10, 20, 30, 40};
  const auto c = rho_sweep_fit(r, {2.5, 2.5, 2.5, 2.5});
  CHECK(c.A == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(std::abs(c.B) < 1e-12);
  std::vector<double> I;
  for (double x : r) I.push_back(0.7 - 3.0 / x);
  const auto f = rho_sweep_fit(r, I);
  CHECK(std::abs(f.A - 0.7) < 1e-12);
  CHECK(std::abs(f.B + 3.0) < 1e-12);
  CHECK(f.residual < 1e-13);
  CHECK_THROWS_AS(rho_sweep_fit({10, 10, 20}, {1, 1, 1}), DomainError);
  CHECK_THROWS_AS(rho_sweep_fit({10, 20}, {1, 1}), DomainError);
  CHECK_THROWS_AS(rho_sweep_fit({1e9, 1e9 + 1e-3, 1e9 + 2e-3}, {1, 1, 1}), NumericalError);
}

TEST_CASE("aimed beams are phase matched at q0") {
  const auto& sw = coarse_sweep();
  const auto& bs = sw.beams;
  REQUIRE(bs.beams.size() == 4);
  CHECK(bs.beta() == MultiIndex{1, 1, 1});
  CHECK(bs.beams[0].backward);
  CHECK(std::abs(*bs.phase_sum(bs.q0)) < 1e-12);
  CHECK(bs.phase_sum_gradient().norm() < 1e-8);
  CHECK(std::abs(bs.a0_product() - 1.0) < 1e-10);
  // Im S >= c d^2 near q0
  double cmin = 1e300;
  for (double r : {0.03, 0.08, 0.15})
    for (int a = 0; a < 12; ++a)
      for (int b = 0; b < 6; ++b) {
        const double th = kPi * a / 6.0, ph = kPi * (b + 0.5) / 6.0;
        Vec x = bs.q0;
        x[0] += r * std::cos(ph);
        x[1] += r * std::sin(ph) * std::cos(th);
        x[2] += r * std::sin(ph) * std::sin(th);
        const auto S = bs.phase_sum(x);
        REQUIRE(S.has_value());
        cmin = std::min(cmin, S->imag() / (r * r));
      }
  CHECK(cmin > 0.0);
  // beam 3 is split for k = 4
  RecoveryTask t4 = coarse_task();
  t4.k = 4;
  const auto b4 = aim_beams(flat(), t4);
  CHECK(b4.beta() == MultiIndex{1, 1, 2});
  CHECK(b4.beams[3].kappa == doctest::Approx(0.5 * bs.beams[3].kappa));
  CHECK(std::abs(*b4.phase_sum(b4.q0 + Vec::Constant(3, 0.01)) - *bs.phase_sum(bs.q0 + Vec::Constant(3, 0.01))) < 1e-12);
}

TEST_CASE("aiming rejects unreachable targets") {
  RecoveryTask t = coarse_task();
  t.q0 = point(0.25, 0.5, 0.5);  // sources would have to start before t = 0
  CHECK_THROWS_AS(aim_beams(flat(), t), DomainError);
  t.q0 = point(0.9, 1.2, 0.5);
  CHECK_THROWS_AS(aim_beams(flat(), t), DomainError);
  t = coarse_task();
  t.rhos = {4, 4, 8};
  CHECK_THROWS_AS(aim_beams(flat(), t), DomainError);
}

TEST_CASE("linearized pairing: zero medium, linearity, FD agreement") {
  const auto& sw = coarse_sweep();
  const auto t = coarse_task();
  const auto z = linearized_pairing(flat(), t, sw, 0, NonlinearityProfile{});
  CHECK(z.value == 0.0);
  const auto p1 = linearized_pairing(flat(), t, sw, 1, h3_bump(1.0, t.q0));
  const auto p2 = linearized_pairing(flat(), t, sw, 1, h3_bump(2.0, t.q0));
  CHECK(p1.correction == 0.0);
  CHECK(std::abs(p1.value) > 0.0);
  CHECK(p2.value == doctest::Approx(2.0 * p1.value).epsilon(1e-10));
  CHECK(p1.value == doctest::Approx(std::pow(6.0, 1.5) * p1.measured).epsilon(1e-14));
  // finite differences of the ND map against the cascade pairing
  RecoveryTask tf = t;
  tf.pairing = PairingMethod::finite_difference;
  const auto pf = linearized_pairing(flat(), tf, sw, 1, h3_bump(1.0, t.q0));
  CHECK(pf.value == doctest::Approx(p1.value).epsilon(0.02));
}

TEST_CASE("calibration reproduces the reference and scales linearly") {
  const auto& sw = coarse_sweep();
  const auto t = coarse_task();
  const std::vector<CompactBump> ref{CompactBump{{0.9, 0.5, 0.5}, 0.2, 1.0}};
  const auto cal = calibrate(flat(), t, sw, ref);
  CHECK(cal.fingerprint == sw.fingerprint);
  CHECK(cal.h_ref == doctest::Approx(1.0));
  NonlinearityProfile Href;
  Href.set(3, ref);
  const auto back = recover_coefficient(flat(), t, sw, cal, Href, 1.0);
  CHECK(back.value == doctest::Approx(1.0).epsilon(1e-12));
  // calibrating at amplitude 2 gives the same constant
  const auto cal2 = calibrate(flat(), t, sw, {CompactBump{{0.9, 0.5, 0.5}, 0.2, 2.0}});
  CHECK(cal2.constant == doctest::Approx(cal.constant).epsilon(1e-10));
  const auto r2 = recover_coefficient(flat(), t, sw, cal, h3_bump(2.0, t.q0));
  const auto r1 = recover_coefficient(flat(), t, sw, cal, h3_bump(1.0, t.q0));
  CHECK(r2.value == doctest::Approx(2.0 * r1.value).epsilon(1e-10));
  const auto zero = recover_coefficient(flat(), t, sw, cal, NonlinearityProfile{});
  CHECK(zero.value == 0.0);
  // serialized profile round trip
  const auto cal_rt = CalibrationProfile::from_json(nlohmann::json::parse(cal.to_json().dump()));
  CHECK(cal_rt.constant == cal.constant);
  CHECK(cal_rt.fingerprint == cal.fingerprint);
  CHECK(cal_rt.samples.size() == cal.samples.size());
  // a different configuration is rejected
  RecoveryTask other = t;
  other.rhos = {4, 6, 10};
  const auto sw_other = prepare_sweep(flat(), other);
  CHECK(sw_other.fingerprint != sw.fingerprint);
  CHECK_THROWS_AS(recover_coefficient(flat(), other, sw_other, cal, Href), DomainError);
  CHECK_THROWS_AS(calibrate(flat(), t, sw, {CompactBump{{0.9, 0.5, 0.95}, 0.2, 1.0}}), DomainError);
}

TEST_CASE("known corrections are subtracted exactly") {
  // with the true lower coefficients known, the h_4 sample matches the h_4-only medium
  RecoveryTask t = coarse_task();
  t.k = 4;
  const CompactBump h2{{0.9, 0.45, 0.55}, 0.35, 0.5}, h3{{0.9, 0.55, 0.5}, 0.35, 1.0}, h4{{0.9, 0.5, 0.5}, 0.3, 1.0};
  t.known.set(2, {h2});
  t.known.set(3, {h3});
  const auto sw = prepare_sweep(flat(), t);
  NonlinearityProfile full = t.known, only4;
  full.set(4, {h4});
  only4.set(4, {h4});
  const auto a = linearized_pairing(flat(), t, sw, 2, full);
  RecoveryTask bare = t;
  bare.known = NonlinearityProfile{};
  const auto b = linearized_pairing(flat(), bare, sw, 2, only4);
  CHECK(a.correction != 0.0);
  CHECK(a.value == doctest::Approx(b.value).epsilon(1e-8));
  RecoveryTask bad = t;
  bad.known.set(4, {h4});
  CHECK_THROWS_AS(prepare_sweep(flat(), bad), DomainError);
}

TEST_CASE("radial basis field interpolates the samples") {
  const std::vector<Vec> pts{point(0.9, 0.4, 0.5), point(0.9, 0.5, 0.5), point(0.9, 0.6, 0.5)};
  const std::vector<double> vals{0.8, 1.0, 0.7};
  const auto field = rbf_field(pts, vals, 0.35);
  for (size_t i = 0; i < pts.size(); ++i) {
    double s = 0.0;
    for (const auto& b : field) s += b.value(pts[i]);
    CHECK(s == doctest::Approx(vals[i]).epsilon(1e-10));
  }
  CHECK_THROWS_AS(rbf_field({pts[0], pts[0]}, {1.0, 2.0}, 0.35), NumericalError);
  CHECK_THROWS_AS(rbf_field({}, {}, 0.35), DomainError);
}

TEST_CASE("ladder on a zero medium reports zeros") {
  RecoveryTask t = coarse_task();
  LadderOptions lo;
  lo.k_max = 4;
  const auto reps = recovery_ladder(flat(), t, NonlinearityProfile{}, NonlinearityProfile{}, lo);
  REQUIRE(reps.size() == 2);
  CHECK(reps[0].k == 3);
  CHECK(reps[1].k == 4);
  for (const auto& r : reps) CHECK(std::abs(r.value) < 1e-12);
}

TEST_CASE("task and table serialization") {
  RecoveryTask t = coarse_task();
  t.known.set(2, {CompactBump{{0.9, 0.5, 0.5}, 0.3, 0.25}});
  const auto j = t.to_json();
  const auto u = RecoveryTask::from_json(j);
  CHECK(u.to_json() == j);
  CHECK_THROWS_AS(RecoveryTask::from_json(nlohmann::json{{"k", 3}}), ConfigError);
  CHECK_THROWS_AS(pairing_method_from_name("spectral"), ConfigError);

  std::vector<PairingSample> ss{{4, 1e-3, 0.0, 0.008, 0.1}, {6, 2e-3, 0.0, 0.03, 0.2}};
  const auto tab = samples_csv(ss);
  const auto path = (std::filesystem::temp_directory_path() / "beamlab_rho_sweep.csv").string();
  tab.write(path);
  const auto back = CsvTable::read(path);
  CHECK(back.schema == "rho_sweep");
  CHECK(back.version == 1);
  CHECK(back.columns == tab.columns);
  REQUIRE(back.rows.size() == 2);
  CHECK(back.rows[1][3] == 0.03);
  std::remove(path.c_str());
  CHECK(content_fingerprint(j) == content_fingerprint(RecoveryTask::from_json(j).to_json()));
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}
