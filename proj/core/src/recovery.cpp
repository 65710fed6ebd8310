#include "beamlab/recovery.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>

#include "beamlab/error.hpp"
#include "beamlab/geometry.hpp"
#include "beamlab/parallel.hpp"

namespace beamlab {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::vector<double> vec_of(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vec vec_from(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

double profile_value(const std::vector<CompactBump>& bumps, const Vec& x) {
  double s = 0.0;
  for (const auto& b : bumps) s += b.value(x);
  return s;
}

// canonical covector expressed in working coordinates, for a diagonal metric at q0
Vec to_working(const WarpedMetric& g, const Vec& q0, const Vec& xi_can) {
  const Mat G = g.metric(q0);
  Vec w = xi_can;
  for (int i = 0; i < w.size(); ++i) w[i] *= std::sqrt(std::abs(G(i, i)));
  return w;
}

double spatial_norm(const Vec& xi) { return xi.tail(xi.size() - 1).norm(); }

std::string sweep_fingerprint(const WarpedMetric& g, const RecoveryTask& t, const SpacetimeGrid& grid) {
  nlohmann::json j{{"metric", metric_to_json(g)},
                   {"grid", grid_to_json(grid)},
                   {"q0", vec_of(t.q0)},
                   {"k", t.k},
                   {"r0", t.r0},
                   {"varsigma", t.varsigma},
                   {"beam_order", t.beam_order},
                   {"delta", t.delta},
                   {"focus", t.focus},
                   {"rhos", t.rhos},
                   {"ramp_width", t.ramp_width},
                   {"kappa_scale", t.kappa_scale}};
  return content_fingerprint(j);
}

}  // namespace

const char* pairing_method_name(PairingMethod m) {
  return m == PairingMethod::cascade ? "cascade" : "finite_difference";
}

PairingMethod pairing_method_from_name(const std::string& s) {
  if (s == "cascade") return PairingMethod::cascade;
  if (s == "finite_difference" || s == "fd") return PairingMethod::finite_difference;
  throw ConfigError("unknown pairing method '" + s + "' (cascade | finite_difference)");
}

void RecoveryTask::validate(const WarpedMetric& g) const {
  const int d = g.dim();
  if (q0.size() != d) throw DomainError("recovery: q0 has " + std::to_string(q0.size()) + " components, metric has dim " + std::to_string(d));
  if (!(q0[0] > 0.0 && q0[0] < horizon)) throw DomainError("recovery: q0 time must lie in (0, T)");
  for (int i = 1; i < d; ++i)
    if (!(q0[i] > 0.0 && q0[i] < 1.0)) throw DomainError("recovery: q0 must lie inside the spatial box");
  if (k < 3 || k > kMaxCascadeOrder) throw DomainError("recovery: k must lie in 3 .. " + std::to_string(kMaxCascadeOrder));
  if (!(varsigma > 0.0 && varsigma <= 1.0)) throw DomainError("recovery: varsigma must lie in (0, 1]");
  if (!(r0 >= -1.0 && r0 <= 1.0)) throw DomainError("recovery: r0 must lie in [-1, 1]");
  if (beam_order < 2) throw DomainError("recovery: beam order must be >= 2");
  if (!(delta > 0.0) || !(focus > 0.0)) throw DomainError("recovery: delta and focus must be positive");
  std::set<double> distinct;
  for (double r : rhos) {
    if (!(r > 0.0)) throw DomainError("recovery: rho values must be positive");
    distinct.insert(r);
  }
  if (distinct.size() < 3) throw DomainError("recovery: the rho sweep needs at least 3 distinct values");
  if (cells < 0 || !(points_per_wavelength > 0.0)) throw DomainError("recovery: bad grid resolution settings");
  if (!(ramp_width > 0.0) || !(fd_step > 0.0) || !(fit_tolerance > 0.0)) throw DomainError("recovery: ramp, fd step and fit tolerance must be positive");
  for (double s : kappa_scale)
    if (!(s > 0.0)) throw DomainError("recovery: kappa scales must be positive");
  for (int j = k; j <= known.max_order(); ++j)
    if (!known.h[j].empty()) throw DomainError("recovery: known coefficients must stop below h_k");
}

int RecoveryTask::grid_cells(const std::array<double, 4>& omega) const {
  if (cells > 0) return cells;
  const double rmax = *std::max_element(rhos.begin(), rhos.end());
  const double w = *std::max_element(omega.begin(), omega.end());
  return std::max(16, static_cast<int>(std::ceil(points_per_wavelength * w * rmax / (2.0 * kPi))));
}

nlohmann::json RecoveryTask::to_json() const {
  return {{"q0", vec_of(q0)},
          {"k", k},
          {"r0", r0},
          {"varsigma", varsigma},
          {"beam_order", beam_order},
          {"delta", delta},
          {"focus", focus},
          {"rhos", rhos},
          {"known", profile_to_json(known)},
          {"cells", cells},
          {"points_per_wavelength", points_per_wavelength},
          {"horizon", horizon},
          {"courant", courant},
          {"ramp_width", ramp_width},
          {"kappa_scale", kappa_scale},
          {"pairing", pairing_method_name(pairing)},
          {"fd_step", fd_step},
          {"fit_tolerance", fit_tolerance},
          {"correction_guard", correction_guard}};
}

RecoveryTask RecoveryTask::from_json(const nlohmann::json& j) {
  RecoveryTask t;
  if (!j.contains("q0")) throw ConfigError("recovery task needs q0");
  t.q0 = vec_from(j.at("q0").get<std::vector<double>>());
  t.k = j.value("k", t.k);
  t.r0 = j.value("r0", t.r0);
  t.varsigma = j.value("varsigma", t.varsigma);
  t.beam_order = j.value("beam_order", t.beam_order);
  t.delta = j.value("delta", t.delta);
  t.focus = j.value("focus", t.focus);
  t.rhos = j.value("rhos", t.rhos);
  if (j.contains("known")) t.known = profile_from_json(j.at("known"));
  t.cells = j.value("cells", t.cells);
  t.points_per_wavelength = j.value("points_per_wavelength", t.points_per_wavelength);
  t.horizon = j.value("horizon", t.horizon);
  t.courant = j.value("courant", t.courant);
  t.ramp_width = j.value("ramp_width", t.ramp_width);
  t.kappa_scale = j.value("kappa_scale", t.kappa_scale);
  t.pairing = pairing_method_from_name(j.value("pairing", std::string("cascade")));
  t.fd_step = j.value("fd_step", t.fd_step);
  t.fit_tolerance = j.value("fit_tolerance", t.fit_tolerance);
  t.correction_guard = j.value("correction_guard", t.correction_guard);
  t.workers = j.value("workers", t.workers);
  return t;
}

MultiIndex BeamSet::beta() const {
  MultiIndex b;
  for (size_t j = 1; j < beams.size(); ++j) b.push_back(beams[j].multiplicity);
  return b;
}

cplx BeamSet::a0_product() const {
  cplx p = 1.0;
  for (const auto& b : beams) p *= std::pow(b.a0, b.multiplicity);
  return p;
}

std::optional<cplx> BeamSet::phase_sum(const Vec& x) const {
  cplx S = 0.0;
  for (const auto& b : beams) {
    double tau;
    Vec z;
    if (!b.phase.chart().inverse(x, tau, z)) return std::nullopt;
    if (tau < b.phase.tau_min() || tau > b.phase.tau_max()) return std::nullopt;
    cplx psi;
    try {
      psi = b.phase.value(tau, z);
    } catch (const DomainError&) {
      return std::nullopt;
    }
    if (b.kappa < 0.0) psi = std::conj(psi);
    S += static_cast<double>(b.multiplicity) * b.kappa * psi;
  }
  return S;
}

CVec BeamSet::phase_sum_gradient(double h) const {
  CVec grad(q0.size());
  for (int i = 0; i < q0.size(); ++i) {
    Vec p = q0, m = q0;
    p[i] += h;
    m[i] -= h;
    const auto sp = phase_sum(p), sm = phase_sum(m);
    if (!sp || !sm) throw DomainError("phase_sum_gradient: q0 is not inside every chart");
    grad[i] = (*sp - *sm) / (2.0 * h);
  }
  return grad;
}

namespace {

// Geodesic axes may only meet near q0: away from it they must separate at a fixed rate.
void check_overlap(const BeamSet& set, const WarpedMetric& g, double horizon) {
  const double r_near = 0.2, rate = 0.1;
  std::vector<std::vector<Vec>> pts(set.beams.size());
  for (size_t j = 0; j < set.beams.size(); ++j) {
    const auto& ch = set.beams[j].phase.chart();
    for (double tau = ch.tau_min(); tau <= ch.tau_max(); tau += 0.01) {
      const Vec x = ch.axis_point(tau);
      if (g.in_box(x) && x[0] >= 0.0 && x[0] <= horizon) pts[j].push_back(x);
    }
  }
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j)
      for (const Vec& x : pts[i]) {
        const double s = (x - set.q0).norm();
        if (s < r_near) continue;
        double dmin = 1e300;
        for (const Vec& y : pts[j]) dmin = std::min(dmin, (x - y).norm());
        if (dmin < rate * s)
          throw DomainError("aim_beams: axes of beams " + std::to_string(i) + " and " + std::to_string(j) +
                            " come close away from q0");
      }
}

}  // namespace

BeamSet aim_beams(const WarpedMetric& g, const RecoveryTask& task) {
  task.validate(g);
  const int d = g.dim(), m = d - 1;
  BeamSet set;
  set.q0 = task.q0;
  set.frame = make_null_frame(g, task.q0, to_working(g, task.q0, xi0_canonical(task.r0, d)),
                              to_working(g, task.q0, xi1_canonical(d)), task.varsigma);
  const auto xs = set.frame.working_covectors();
  set.kappas = four_wave_kappas(xs);
  if (set.kappas.relation_dim != 1) throw DomainError("aim_beams: the four covectors admit no unique relation");

  CMat H0 = CMat::Identity(m, m) * cplx(0.0, 1.0);
  H0(0, 0) = cplx(0.0, task.focus);
  const CMat Y0 = CMat::Identity(m, m);
  for (int j = 0; j < 4; ++j) {
    // sources of beams 1..3 sit before q0 in time, the source of beam 0 after it
    const Direction dir = j == 0 ? Direction::forward : Direction::backward;
    const auto gam = trace_null_geodesic(g, task.q0, xs[j], dir);
    const auto hit = gam.first_exit();
    if (!hit) throw DomainError("aim_beams: geodesic " + std::to_string(j) + " misses the lateral boundary");
    const double te = hit->point[0];
    if (te <= task.ramp_width || te >= task.horizon - task.ramp_width)
      throw DomainError("aim_beams: geodesic " + std::to_string(j) + " reaches the boundary at t = " + std::to_string(te) +
                        ", outside the source window");
    const auto ch = build_fermi_chart(g, gam);
    const auto ric = solve_riccati(ch, H0, Y0);
    auto phase = build_phase(ch, ric, task.beam_order);
    auto amp = build_amplitude(phase, ric);
    const int mult = j == 3 ? task.k - 2 : 1;
    double kappa = set.kappas.kappa[j] * task.kappa_scale[j] / mult;
    cplx a0 = amp.a00(0.0);
    if (kappa < 0.0) a0 = std::conj(a0);
    set.beams.push_back(AimedBeam{std::move(phase), std::move(amp), kappa, mult, j == 0, te, a0});
  }
  check_overlap(set, g, task.horizon);
  return set;
}

PairingSweep prepare_sweep(const WarpedMetric& g, const RecoveryTask& task) {
  PairingSweep sw;
  sw.beams = aim_beams(g, task);
  const auto xs = sw.beams.frame.working_covectors();
  std::array<double, 4> omega{};
  for (int j = 0; j < 4; ++j) omega[j] = std::abs(sw.beams.beams[j].kappa) * spatial_norm(xs[j]);
  sw.grid = SpacetimeGrid::with_courant(g, task.grid_cells(omega), task.horizon, task.courant);
  sw.fingerprint = sweep_fingerprint(g, task, sw.grid);
  sw.levels.resize(task.rhos.size());
  parallel_for(
      task.rhos.size(),
      [&](size_t i) {
        const auto t0 = Clock::now();
        SweepLevel& L = sw.levels[i];
        L.rho = task.rhos[i];
        for (const auto& b : sw.beams.beams) {
          const auto beam = assemble_beam(b.phase, b.amplitude, L.rho, b.kappa, task.delta);
          SourceOptions so;
          so.backward = b.backward;
          so.ramp_width = task.ramp_width;
          // Gaussian tails reach the time ends at desk scale; the ramp handles them
          so.margin = -std::numeric_limits<double>::infinity();
          NeumannSource f = beam_neumann_source(beam, g, sw.grid, so).source;
          f.imag.clear();
          if (b.backward)
            L.f0 = std::move(f);
          else
            L.sources.push_back(std::move(f));
        }
        L.v0 = solve_linear(g, sw.grid, nullptr, L.f0, TimeMode::backward).u;
        L.seconds = since(t0);
      },
      task.workers);
  return sw;
}

PairingSample linearized_pairing(const WarpedMetric& g, const RecoveryTask& task, const PairingSweep& sweep,
                                 size_t level, const NonlinearityProfile& medium) {
  if (level >= sweep.levels.size()) throw DomainError("linearized_pairing: no such sweep level");
  const auto t0 = Clock::now();
  const SweepLevel& L = sweep.levels[level];
  const MultiIndex beta = sweep.beams.beta();
  PairingSample s;
  s.rho = L.rho;
  if (!medium.empty()) {
    if (task.pairing == PairingMethod::cascade) {
      s.measured = known_correction(g, sweep.grid, medium, L.sources, beta, L.v0);
    } else {
      MixedDerivativeOptions mo;
      mo.workers = 1;
      mo.max_order = kMaxCascadeOrder;
      const auto fd = mixed_derivative_ndmap(g, sweep.grid, medium, L.sources, make_stencil(beta, task.fd_step), mo);
      s.measured = boundary_pairing(g, sweep.grid, fd.trace.values, L.f0.values, FaceRule::trapezoid);
    }
  }
  if (!task.known.empty()) s.correction = known_correction(g, sweep.grid, task.known, L.sources, beta, L.v0);
  const double main = s.measured - s.correction;
  if (task.correction_guard > 0.0 && s.correction != 0.0 && std::abs(s.correction) > task.correction_guard * std::abs(main))
    throw NumericalError("linearized_pairing: correction dominates the main term at rho = " +
                         std::to_string(L.rho) + " (beams poorly aimed?)");
  s.value = std::pow(L.rho, 0.5 * g.dim()) * main;
  s.seconds = since(t0);
  return s;
}

std::vector<PairingSample> pairing_samples(const WarpedMetric& g, const RecoveryTask& task, const PairingSweep& sweep,
                                           const NonlinearityProfile& medium) {
  return parallel_map<PairingSample>(
      sweep.levels.size(), [&](size_t i) { return linearized_pairing(g, task, sweep, i, medium); }, task.workers);
}

RhoFit rho_sweep_fit(const std::vector<double>& rho, const std::vector<double>& I) {
  if (rho.size() != I.size()) throw DomainError("rho_sweep_fit: size mismatch");
  if (std::set<double>(rho.begin(), rho.end()).size() < 3) throw DomainError("rho_sweep_fit: needs at least 3 distinct rho");
  const auto n = static_cast<Eigen::Index>(rho.size());
  Mat M(n, 2);
  Vec y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(rho[i] > 0.0)) throw DomainError("rho_sweep_fit: rho must be positive");
    M(i, 0) = 1.0;
    M(i, 1) = 1.0 / rho[i];
    y[i] = I[i];
  }
  // column scaling so the condition number reflects the spread of 1/rho only
  Vec scale = M.colwise().norm().transpose();
  const Mat Ms = M * scale.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Mat> svd(Ms, Eigen::ComputeThinU | Eigen::ComputeThinV);
  RhoFit f;
  const auto sv = svd.singularValues();
  f.condition = sv[0] / sv[1];
  if (!(f.condition < 1e8)) throw NumericalError("rho_sweep_fit: ill-conditioned (condition " + std::to_string(f.condition) + ")");
  const Vec c = svd.solve(y).cwiseQuotient(scale);
  f.A = c[0];
  f.B = c[1];
  f.residual = std::sqrt((M * c - y).squaredNorm() / static_cast<double>(n));
  return f;
}

RhoFit rho_sweep_fit(const std::vector<PairingSample>& samples) {
  std::vector<double> r, v;
  for (const auto& s : samples) {
    r.push_back(s.rho);
    v.push_back(s.value);
  }
  return rho_sweep_fit(r, v);
}

CsvTable samples_csv(const std::vector<PairingSample>& samples) {
  CsvTable t;
  t.schema = "rho_sweep";
  // timings stay out of the CSV so identical runs give identical files
  t.columns = {"rho", "measured", "correction", "I"};
  for (const auto& s : samples) t.add_row({s.rho, s.measured, s.correction, s.value});
  return t;
}


namespace {

nlohmann::json samples_json(const std::vector<PairingSample>& samples) {
  auto a = nlohmann::json::array();
  for (const auto& s : samples)
    a.push_back({{"rho", s.rho}, {"measured", s.measured}, {"correction", s.correction}, {"I", s.value}, {"seconds", s.seconds}});
  return a;
}

nlohmann::json fit_json(const RhoFit& f) {
  return {{"A", f.A}, {"B", f.B}, {"residual", f.residual}, {"condition", f.condition}};
}

// fit residual is judged against the larger of |A| and a tenth of the reference limit
void check_fit(const RhoFit& f, double reference, double tol, const char* who) {
  const double scale = std::max(std::abs(f.A), 0.1 * std::abs(reference));
  if (f.residual > tol * scale)
    throw NumericalError(std::string(who) + ": fit residual " + std::to_string(f.residual) + " exceeds " +
                         std::to_string(tol) + " of the limit scale " + std::to_string(scale));
}

}  // namespace

nlohmann::json CalibrationProfile::to_json() const {
  auto ref = nlohmann::json::array();
  for (const auto& b : reference) ref.push_back(bump_to_json(b));
  return {{"k", k},         {"constant", constant}, {"A_ref", A_ref},     {"h_ref", h_ref},
          {"a0_product", a0_product}, {"fit", fit_json(fit)}, {"samples", samples_json(samples)},
          {"reference", ref}, {"config", config}, {"fingerprint", fingerprint}};
}

CalibrationProfile CalibrationProfile::from_json(const nlohmann::json& j) {
  CalibrationProfile c;
  c.k = j.at("k").get<int>();
  c.constant = j.at("constant").get<double>();
  c.A_ref = j.value("A_ref", 0.0);
  c.h_ref = j.value("h_ref", 0.0);
  c.a0_product = j.value("a0_product", 1.0);
  if (j.contains("fit")) {
    const auto& f = j.at("fit");
    c.fit = RhoFit{f.value("A", 0.0), f.value("B", 0.0), f.value("residual", 0.0), f.value("condition", 0.0)};
  }
  if (j.contains("samples"))
    for (const auto& s : j.at("samples"))
      c.samples.push_back(PairingSample{s.at("rho").get<double>(), s.value("measured", 0.0), s.value("correction", 0.0),
                                        s.value("I", 0.0), s.value("seconds", 0.0)});
  if (j.contains("reference"))
    for (const auto& b : j.at("reference")) c.reference.push_back(bump_from_json(b));
  c.config = j.value("config", nlohmann::json::object());
  c.fingerprint = j.at("fingerprint").get<std::string>();
  return c;
}

CalibrationProfile calibrate(const WarpedMetric& g, const RecoveryTask& task, const PairingSweep& sweep,
                             const std::vector<CompactBump>& reference) {
  CalibrationProfile c;
  c.k = task.k;
  c.reference = reference;
  c.h_ref = profile_value(reference, task.q0);
  if (std::abs(c.h_ref) < 1e-12) throw DomainError("calibrate: the reference coefficient vanishes at q0");
  NonlinearityProfile medium = task.known;
  medium.set(task.k, reference);
  c.samples = pairing_samples(g, task, sweep, medium);
  c.fit = rho_sweep_fit(c.samples);
  c.A_ref = c.fit.A;
  if (!(std::abs(c.A_ref) > 3.0 * c.fit.residual) || std::abs(c.A_ref) < 1e-300)
    throw NumericalError("calibrate: the reference limit is below the noise floor");
  check_fit(c.fit, c.A_ref, task.fit_tolerance, "calibrate");
  c.a0_product = sweep.beams.a0_product().real();
  c.constant = c.A_ref / (c.h_ref * c.a0_product);
  c.config = {{"task", task.to_json()}, {"metric", metric_to_json(g)}, {"grid", grid_to_json(sweep.grid)}};
  c.fingerprint = sweep.fingerprint;
  return c;
}

CalibrationProfile calibrate(const WarpedMetric& g, const RecoveryTask& task, const std::vector<CompactBump>& reference) {
  return calibrate(g, task, prepare_sweep(g, task), reference);
}

nlohmann::json RecoveryReport::to_json() const {
  nlohmann::json j{{"q0", vec_of(q0)},
                   {"k", k},
                   {"value", value},
                   {"fit", fit_json(fit)},
                   {"samples", samples_json(samples)},
                   {"max_correction", max_correction},
                   {"calibration_fingerprint", calibration_fingerprint},
                   {"seconds", seconds}};
  if (truth) j["truth"] = *truth;
  if (relative_error) j["relative_error"] = *relative_error;
  return j;
}

RecoveryReport recover_coefficient(const WarpedMetric& g, const RecoveryTask& task, const PairingSweep& sweep,
                                   const CalibrationProfile& cal, const NonlinearityProfile& medium,
                                   std::optional<double> truth) {
  const auto t0 = Clock::now();
  if (cal.k != task.k || cal.fingerprint != sweep.fingerprint)
    throw DomainError("recover_coefficient: calibration fingerprint " + cal.fingerprint + " does not match task " +
                      sweep.fingerprint);
  RecoveryReport r;
  r.q0 = task.q0;
  r.k = task.k;
  r.samples = pairing_samples(g, task, sweep, medium);
  r.fit = rho_sweep_fit(r.samples);
  check_fit(r.fit, cal.A_ref, task.fit_tolerance, "recover_coefficient");
  r.value = r.fit.A / (cal.constant * sweep.beams.a0_product().real());
  for (const auto& s : r.samples)
    r.max_correction = std::max(r.max_correction, std::abs(s.correction) * std::pow(s.rho, 0.5 * g.dim()));
  r.truth = truth;
  if (truth) r.relative_error = std::abs(r.value - *truth) / std::max(std::abs(*truth), 1e-300);
  r.calibration_fingerprint = cal.fingerprint;
  r.seconds = since(t0);
  return r;
}

RecoveryReport recover_coefficient(const WarpedMetric& g, const RecoveryTask& task, const CalibrationProfile& cal,
                                   const NonlinearityProfile& medium, std::optional<double> truth) {
  return recover_coefficient(g, task, prepare_sweep(g, task), cal, medium, truth);
}

std::vector<CompactBump> rbf_field(const std::vector<Vec>& points, const std::vector<double>& values, double radius) {
  if (points.size() != values.size() || points.empty()) throw DomainError("rbf_field: need matching, non-empty points and values");
  if (!(radius > 0.0)) throw DomainError("rbf_field: radius must be positive");
  const auto n = static_cast<Eigen::Index>(points.size());
  std::vector<CompactBump> bumps(points.size());
  for (size_t i = 0; i < points.size(); ++i) bumps[i] = CompactBump{vec_of(points[i]), radius, 1.0};
  Mat Phi(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) Phi(i, j) = bumps[j].value(points[i]);
  const Vec a = Phi.fullPivLu().solve(vec_from(values));
  if (!((Phi * a - vec_from(values)).norm() <= 1e-8 * (1.0 + vec_from(values).norm())))
    throw NumericalError("rbf_field: singular interpolation system (coincident points?)");
  for (Eigen::Index i = 0; i < n; ++i) bumps[i].amplitude = a[i];
  return bumps;
}

std::vector<RecoveryReport> recovery_ladder(const WarpedMetric& g, const RecoveryTask& base,
                                            const NonlinearityProfile& known_h2, const NonlinearityProfile& medium,
                                            const LadderOptions& opt) {
  if (opt.k_max < 3) throw DomainError("recovery_ladder: k_max must be >= 3");
  for (int j = 3; j <= known_h2.max_order(); ++j)
    if (!known_h2.h[j].empty()) throw DomainError("recovery_ladder: the supplied profile may only hold h2");
  const std::vector<Vec> support = opt.support.empty() ? std::vector<Vec>{base.q0} : opt.support;
  NonlinearityProfile known = known_h2;
  std::vector<RecoveryReport> reports;
  for (int k = 3; k <= opt.k_max; ++k) {
    std::vector<double> values;
    for (size_t i = 0; i < support.size(); ++i) {
      RecoveryTask t = base;
      t.q0 = support[i];
      t.k = k;
      t.known = known;
      const auto sweep = prepare_sweep(g, t);
      const auto cal = calibrate(g, t, sweep, {CompactBump{vec_of(t.q0), opt.reference_radius, 1.0}});
      auto rep = recover_coefficient(g, t, sweep, cal, medium, medium.value(k, t.q0));
      values.push_back(rep.value);
      if (i == 0) reports.push_back(std::move(rep));
    }
    known.set(k, rbf_field(support, values, opt.field_radius));
  }
  return reports;
}

}  // namespace beamlab
