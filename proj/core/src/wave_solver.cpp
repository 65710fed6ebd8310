#include "beamlab/wave_solver.hpp"

#include <algorithm>
#include <cstring>
#include <limits>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

#include "beamlab/error.hpp"

namespace beamlab {

namespace {

// Metric coefficients of the divergence form on one time level:
// s = sqrt|g|, A = s / beta (time), B = s / c (space), dS = sqrt(beta c^{sdim-1}) (boundary density).
struct LevelCoeffs {
  std::vector<double> s, A, B, dS;
};

class Coefficients {
 public:
  Coefficients(const WarpedMetric& g, const SpacetimeGrid& grid) : g_(g), grid_(grid), flat_(g.is_flat()) {}

  bool flat() const { return flat_; }

  void fill(double t, LevelCoeffs& c) const {
    const size_t n = grid_.spatial_nodes();
    c.s.resize(n);
    c.A.resize(n);
    c.B.resize(n);
    c.dS.resize(n);
    if (flat_) {
      std::fill(c.s.begin(), c.s.end(), 1.0);
      std::fill(c.A.begin(), c.A.end(), 1.0);
      std::fill(c.B.begin(), c.B.end(), 1.0);
      std::fill(c.dS.begin(), c.dS.end(), 1.0);
      return;
    }
    const int sd = grid_.sdim();
    Vec x(grid_.dim());
    x[0] = t;
    for (size_t i = 0; i < n; ++i) {
      for (int a = 0; a < sd; ++a) x[1 + a] = grid_.coord(i, a) * grid_.dx();
      const double b = g_.lapse(x.data()), cc = g_.conformal(x.data());
      const double s = std::sqrt(b * std::pow(cc, sd));
      c.s[i] = s;
      c.A[i] = s / b;
      c.B[i] = s / cc;
      c.dS[i] = std::sqrt(b * std::pow(cc, sd - 1));
    }
  }

 private:
  const WarpedMetric& g_;
  const SpacetimeGrid& grid_;
  bool flat_;
};

// Edge lists per axis and inverse nodal widths, shared by the operator and the energy.
struct Stencil {
  std::vector<std::vector<size_t>> lower;  // nodes with coord < n along each axis
  std::vector<std::vector<double>> invw;   // 1 / (omega_i dx) along each axis

  explicit Stencil(const SpacetimeGrid& grid) {
    const int sd = grid.sdim();
    const size_t n = grid.spatial_nodes();
    lower.resize(sd);
    invw.resize(sd);
    for (int a = 0; a < sd; ++a) {
      invw[a].resize(n);
      for (size_t i = 0; i < n; ++i) {
        const int c = grid.coord(i, a);
        if (c < grid.cells()) lower[a].push_back(i);
        invw[a][i] = (c == 0 || c == grid.cells()) ? 2.0 / grid.dx() : 1.0 / grid.dx();
      }
    }
  }
};

// L u (interior fluxes) plus the Neumann flux term for level k.
void apply_operator(const SpacetimeGrid& grid, const Stencil& st, const LevelCoeffs& c, bool flat,
                    const double* u, const NeumannSource& f, int k, std::vector<double>& Lu) {
  const size_t n = grid.spatial_nodes();
  std::fill(Lu.begin(), Lu.end(), 0.0);
  const double idx2 = 1.0 / grid.dx();
  for (int a = 0; a < grid.sdim(); ++a) {
    const size_t s = grid.stride(a);
    const auto& iw = st.invw[a];
    for (size_t i : st.lower[a]) {
      const double Bf = flat ? 1.0 : 0.5 * (c.B[i] + c.B[i + s]);
      const double flux = Bf * (u[i + s] - u[i]) * idx2;
      Lu[i] += flux * iw[i];
      Lu[i + s] -= flux * iw[i + s];
    }
  }
  if (f.values.empty()) return;
  const size_t fn = grid.face_nodes();
  const size_t nb = grid.boundary_nodes();
  const double* fk = &f.values[static_cast<size_t>(k) * nb];
  const double half = 2.0 / grid.dx();
  for (int face = 0; face < grid.faces(); ++face)
    for (size_t j = 0; j < fn; ++j) {
      const double v = fk[face * fn + j];
      if (v == 0.0) continue;
      const size_t i = grid.face_to_spatial(face, j);
      Lu[i] += c.dS[i] * v * half;
    }
  (void)n;
}

void check_finite(const double* u, size_t n, int k) {
  for (size_t i = 0; i < n; ++i)
    if (!std::isfinite(u[i])) {
      std::ostringstream os;
      os << "solve_linear: non-finite value at level " << k << " (instability)";
      throw NumericalError(os.str());
    }
}

}  // namespace

FieldSolution solve_linear(const WarpedMetric& g, const SpacetimeGrid& grid, const std::vector<double>* F,
                           const NeumannSource& f, TimeMode mode, const InitialData* init) {
  if (g.dim() != grid.dim()) throw DomainError("solve_linear: metric and grid dimension differ");
  if (!f.values.empty() && f.values.size() != grid.boundary_size())
    throw DomainError("solve_linear: Neumann source does not match the grid");
  if (F && !F->empty() && F->size() != grid.field_size()) throw DomainError("solve_linear: forcing size mismatch");
  const size_t n = grid.spatial_nodes();
  const int nt = grid.steps();
  const double dt = grid.dt();
  FieldSolution sol;
  sol.u.assign(grid.field_size(), 0.0);
  const bool fwd = mode == TimeMode::forward;
  auto level = [&](int l) { return fwd ? l : nt - l; };
  const bool have_F = F && !F->empty();

  Coefficients coeffs(g, grid);
  const Stencil st(grid);
  LevelCoeffs cur, midA, prevA;
  std::vector<double> Lu(n);

  // start: u at level 0 and 1 of the marching order
  const int k0 = level(0), k1 = level(1);
  double* u0 = &sol.u[static_cast<size_t>(k0) * n];
  double* u1 = &sol.u[static_cast<size_t>(k1) * n];
  if (init && !init->u0.empty()) std::copy(init->u0.begin(), init->u0.end(), u0);
  coeffs.fill(grid.time(k0), cur);
  coeffs.fill(0.5 * (grid.time(k0) + grid.time(k1)), prevA);
  apply_operator(grid, st, cur, coeffs.flat(), u0, f, k0, Lu);
  for (size_t i = 0; i < n; ++i) {
    double acc = Lu[i];
    if (have_F) acc -= cur.s[i] * (*F)[static_cast<size_t>(k0) * n + i];
    // half-cell equation at the first level keeps the scheme self-adjoint
    double v = u0[i] + 0.5 * dt * dt * acc / prevA.A[i];
    if (init && !init->u1.empty()) v += (fwd ? dt : -dt) * init->u1[i];
    u1[i] = v;
  }

  for (int l = 1; l < nt; ++l) {
    const int km = level(l - 1), k = level(l), kp = level(l + 1);
    const double* um = &sol.u[static_cast<size_t>(km) * n];
    const double* uc = &sol.u[static_cast<size_t>(k) * n];
    double* up = &sol.u[static_cast<size_t>(kp) * n];
    if (!coeffs.flat() || l == 1) coeffs.fill(grid.time(k), cur);
    if (!coeffs.flat() || l == 1) coeffs.fill(0.5 * (grid.time(k) + grid.time(kp)), midA);
    apply_operator(grid, st, cur, coeffs.flat(), uc, f, k, Lu);
    const double* Fk = have_F ? &(*F)[static_cast<size_t>(k) * n] : nullptr;
    for (size_t i = 0; i < n; ++i) {
      double acc = Lu[i];
      if (Fk) acc -= cur.s[i] * Fk[i];
      up[i] = uc[i] + (prevA.A[i] * (uc[i] - um[i]) + dt * dt * acc) / midA.A[i];
    }
    if (!coeffs.flat()) std::swap(prevA, midA);
    if (l % 16 == 0 || l == nt - 1) check_finite(up, n, kp);
  }

  // boundary trace
  const size_t fnn = grid.face_nodes();
  const size_t nb = grid.boundary_nodes();
  sol.trace.values.resize(grid.boundary_size());
  for (int k = 0; k <= nt; ++k)
    for (int face = 0; face < grid.faces(); ++face)
      for (size_t j = 0; j < fnn; ++j)
        sol.trace.values[k * nb + face * fnn + j] = sol.u[static_cast<size_t>(k) * n + grid.face_to_spatial(face, j)];
  return sol;
}

double SemilinearResult::max_ratio() const {
  double m = 0.0;
  for (double r : ratios) m = std::max(m, r);
  return m;
}

namespace {

std::vector<double> nonlinear_forcing(const SpacetimeGrid& grid, const std::vector<SampledCoefficient>& Hs,
                                      const std::vector<double>& u) {
  std::vector<double> F(grid.field_size(), 0.0);
  for (size_t k = 2; k < Hs.size(); ++k) {
    const auto& h = Hs[k];
    for (size_t q = 0; q < h.index.size(); ++q) {
      const size_t i = h.index[q];
      F[i] -= h.value[q] * std::pow(u[i], static_cast<int>(k));
    }
  }
  return F;
}

bool has_terms(const std::vector<SampledCoefficient>& Hs) {
  for (const auto& h : Hs)
    if (!h.index.empty()) return true;
  return false;
}

}  // namespace

SemilinearResult solve_semilinear(const WarpedMetric& g, const SpacetimeGrid& grid,
                                  const std::vector<SampledCoefficient>& Hs, const NeumannSource& f,
                                  const SemilinearOptions& opt) {
  if (opt.eps0 >= 0.0 && f.max_abs() > opt.eps0) {
    std::ostringstream os;
    os << "solve_semilinear: source amplitude " << f.max_abs() << " exceeds smallness threshold " << opt.eps0;
    throw DomainError(os.str());
  }
  SemilinearResult res;
  res.solution = solve_linear(g, grid, nullptr, f);
  if (!has_terms(Hs)) return res;
  std::vector<double> diff(grid.field_size());
  for (int it = 1; it <= opt.max_iterations; ++it) {
    const auto F = nonlinear_forcing(grid, Hs, res.solution.u);
    FieldSolution next = solve_linear(g, grid, &F, f);
    for (size_t i = 0; i < diff.size(); ++i) diff[i] = next.u[i] - res.solution.u[i];
    const double dist = std::sqrt(z_norm(grid, diff, 1));
    const double size = std::sqrt(z_norm(grid, next.u, 1));
    // ratios taken at the round-off floor carry no contraction information
    if (!res.distances.empty() && res.distances.back() > 1e3 * opt.rel_floor * size)
      res.ratios.push_back(dist / res.distances.back());
    res.distances.push_back(dist);
    res.solution = std::move(next);
    res.iterations = it;
    if (!std::isfinite(dist)) throw NumericalError("solve_semilinear: Picard iteration produced non-finite values");
    const bool converged = dist <= opt.tol || dist <= opt.rel_floor * size;
    if (converged && it >= opt.min_iterations) return res;
    const size_t nr = res.ratios.size();
    if (nr >= 3 && res.ratios[nr - 1] > 1.0 && res.ratios[nr - 2] > 1.0 && res.ratios[nr - 3] > 1.0 &&
        dist > opt.rel_floor * size * 1e3) {
      std::ostringstream os;
      os << "solve_semilinear: Picard iteration diverges; ratios:";
      for (double r : res.ratios) os << ' ' << r;
      throw NumericalError(os.str());
    }
  }
  if (!opt.require_convergence) return res;
  std::ostringstream os;
  os << "solve_semilinear: no convergence after " << opt.max_iterations << " iterations; ratios:";
  for (double r : res.ratios) os << ' ' << r;
  throw NumericalError(os.str());
}

SemilinearResult solve_semilinear(const WarpedMetric& g, const SpacetimeGrid& grid, const NonlinearityProfile& H,
                                  const NeumannSource& f, const SemilinearOptions& opt) {
  return solve_semilinear(g, grid, sample_nonlinearity(grid, H), f, opt);
}

BoundaryTrace nd_map(const WarpedMetric& g, const SpacetimeGrid& grid, const NonlinearityProfile& H,
                     const NeumannSource& f, const SemilinearOptions& opt) {
  return solve_semilinear(g, grid, H, f, opt).solution.trace;
}

namespace {

// sum over multi-indices |beta| <= q of ||D^beta w||^2 with forward differences
double sobolev_sq(const SpacetimeGrid& grid, const std::vector<double>& w, int q) {
  const int sd = grid.sdim();
  const size_t n = grid.spatial_nodes();
  double total = 0.0;
  for (size_t i = 0; i < n; ++i) total += grid.node_weight(i) * w[i] * w[i];
  if (q == 0) return total;
  const double vol = std::pow(grid.dx(), sd);
  // first differences along each axis, then recurse
  for (int a = 0; a < sd; ++a) {
    const size_t s = grid.stride(a);
    std::vector<double> dw(n, 0.0);
    for (size_t i = 0; i < n; ++i)
      if (grid.coord(i, a) < grid.cells()) dw[i] = (w[i + s] - w[i]) / grid.dx();
    if (q == 1) {
      for (double v : dw) total += vol * v * v;
    } else {
      total += sobolev_sq(grid, dw, q - 1) - 0.0;
    }
  }
  return total;
}

}  // namespace

double z_norm(const SpacetimeGrid& grid, const std::vector<double>& u, int m) {
  if (m < 0) throw DomainError("z_norm: order must be nonnegative");
  if (m > grid.steps() || m > grid.cells()) throw DomainError("z_norm: order too large for the grid");
  if (u.size() != grid.field_size()) throw DomainError("z_norm: field size mismatch");
  const size_t n = grid.spatial_nodes();
  const int nt = grid.steps();
  double best = 0.0;
  if (m == 1) {
    // fast path: ||u||^2 + ||grad u||^2 + ||u_t||^2
    const double vol = std::pow(grid.dx(), grid.sdim());
    std::vector<double> w(n);
    for (size_t i = 0; i < n; ++i) w[i] = grid.node_weight(i);
    for (int k = 0; k <= nt; ++k) {
      const double* uk = &u[static_cast<size_t>(k) * n];
      const int ka = k < nt ? k : k - 1;
      const double* ua = &u[static_cast<size_t>(ka) * n];
      const double* ub = &u[static_cast<size_t>(ka + 1) * n];
      double s = 0.0;
      for (size_t i = 0; i < n; ++i) {
        const double ut = (ub[i] - ua[i]) / grid.dt();
        s += w[i] * (uk[i] * uk[i] + ut * ut);
      }
      for (int a = 0; a < grid.sdim(); ++a) {
        const size_t st = grid.stride(a);
        for (size_t i = 0; i < n; ++i)
          if (grid.coord(i, a) < grid.cells()) {
            const double g = (uk[i + st] - uk[i]) / grid.dx();
            s += vol * g * g;
          }
      }
      best = std::max(best, s);
    }
    return best;
  }
  std::vector<double> w(n), tmp(n);
  for (int k = 0; k + m <= nt; ++k) {
    double s = 0.0;
    for (int j = 0; j <= m; ++j) {
      // forward difference of order j in time at level k
      std::fill(w.begin(), w.end(), 0.0);
      double binom = 1.0;
      for (int i = 0; i <= j; ++i) {
        const double sign = ((j - i) % 2 == 0) ? 1.0 : -1.0;
        const double* ui = &u[static_cast<size_t>(k + i) * n];
        for (size_t p = 0; p < n; ++p) w[p] += sign * binom * ui[p];
        binom = binom * (j - i) / (i + 1);
      }
      const double sc = std::pow(grid.dt(), -j);
      for (auto& v : w) v *= sc;
      s += sobolev_sq(grid, w, m - j);
    }
    best = std::max(best, s);
  }
  return best;
}

double boundary_pairing(const WarpedMetric& g, const SpacetimeGrid& grid, const std::vector<double>& a,
                        const std::vector<double>& b, FaceRule rule) {
  if (a.size() != grid.boundary_size() || b.size() != grid.boundary_size())
    throw DomainError("boundary_pairing: grid mismatch");
  const size_t fn = grid.face_nodes();
  const size_t nb = grid.boundary_nodes();
  const int nt = grid.steps();
  const int fd = grid.sdim() - 1;  // face dimension
  const int np = grid.cells() + 1;
  const bool flat = g.is_flat();
  double total = 0.0;
  for (int k = 0; k <= nt; ++k) {
    const double wt = (k == 0 || k == nt) ? 0.5 * grid.dt() : grid.dt();
    double sk = 0.0;
    for (int face = 0; face < grid.faces(); ++face) {
      const double* ak = &a[k * nb + face * fn];
      const double* bk = &b[k * nb + face * fn];
      if (rule == FaceRule::trapezoid) {
        for (size_t j = 0; j < fn; ++j) {
          if (ak[j] == 0.0 || bk[j] == 0.0) continue;
          double dS = 1.0;
          if (!flat) {
            const Vec x = grid.boundary_point(face, j, k);
            dS = std::sqrt(g.lapse(x.data()) * std::pow(g.conformal(x.data()), grid.sdim() - 1));
          }
          sk += grid.face_weight(j) * dS * ak[j] * bk[j];
        }
      } else {
        // cells of the face grid; corner values averaged to the cell centre
        size_t cells = 1;
        for (int q = 0; q < fd; ++q) cells *= static_cast<size_t>(np - 1);
        const double area = std::pow(grid.dx(), fd);
        for (size_t c = 0; c < cells; ++c) {
          std::vector<int> ci(fd);
          size_t r = c;
          for (int q = 0; q < fd; ++q) {
            ci[q] = static_cast<int>(r % (np - 1));
            r /= (np - 1);
          }
          double am = 0.0, bm = 0.0;
          const int corners = 1 << fd;
          for (int mask = 0; mask < corners; ++mask) {
            size_t j = 0, st = 1;
            for (int q = 0; q < fd; ++q) {
              j += static_cast<size_t>(ci[q] + ((mask >> q) & 1)) * st;
              st *= np;
            }
            am += ak[j];
            bm += bk[j];
          }
          am /= corners;
          bm /= corners;
          if (am == 0.0 || bm == 0.0) continue;
          double dS = 1.0;
          if (!flat) {
            size_t j0 = 0, st = 1;
            for (int q = 0; q < fd; ++q) {
              j0 += static_cast<size_t>(ci[q]) * st;
              st *= np;
            }
            Vec x = grid.boundary_point(face, j0, k);
            // shift to the cell centre along the face axes
            int q = 0;
            for (int ax = 0; ax < grid.sdim(); ++ax) {
              if (ax == face / 2) continue;
              x[1 + ax] += 0.5 * grid.dx();
              ++q;
            }
            dS = std::sqrt(g.lapse(x.data()) * std::pow(g.conformal(x.data()), grid.sdim() - 1));
          }
          sk += area * dS * am * bm;
        }
      }
    }
    total += wt * sk;
  }
  return total;
}

double boundary_pairing(const WarpedMetric& g, const SpacetimeGrid& grid, const BoundaryTrace& a,
                        const BoundaryTrace& b, FaceRule rule) {
  return boundary_pairing(g, grid, a.values, b.values, rule);
}

double volume_pairing(const WarpedMetric& g, const SpacetimeGrid& grid, const std::vector<double>& a,
                      const std::vector<double>& b) {
  if (a.size() != grid.field_size() || b.size() != grid.field_size())
    throw DomainError("volume_pairing: field size mismatch");
  const size_t n = grid.spatial_nodes();
  const int nt = grid.steps();
  std::vector<double> w(n);
  for (size_t i = 0; i < n; ++i) w[i] = grid.node_weight(i);
  double total = 0.0;
  for (int k = 0; k <= nt; ++k) {
    const double wt = (k == 0 || k == nt) ? 0.5 * grid.dt() : grid.dt();
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const size_t p = static_cast<size_t>(k) * n + i;
      if (a[p] == 0.0 || b[p] == 0.0) continue;
      double sq = 1.0;
      if (!g.is_flat()) sq = g.sqrt_abs_det(grid.point(i, k));
      s += w[i] * sq * a[p] * b[p];
    }
    total += wt * s;
  }
  return total;
}

double discrete_energy(const WarpedMetric& g, const SpacetimeGrid& grid, const std::vector<double>& u, int k) {
  if (k < 0 || k >= grid.steps()) throw DomainError("discrete_energy: level out of range");
  const size_t n = grid.spatial_nodes();
  Coefficients coeffs(g, grid);
  LevelCoeffs c, cm;
  coeffs.fill(grid.time(k), c);
  coeffs.fill(grid.time(k) + 0.5 * grid.dt(), cm);
  const double* u0 = &u[static_cast<size_t>(k) * n];
  const double* u1 = &u[static_cast<size_t>(k + 1) * n];
  double kin = 0.0, pot = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double ut = (u1[i] - u0[i]) / grid.dt();
    kin += grid.node_weight(i) * cm.A[i] * ut * ut;
  }
  for (int a = 0; a < grid.sdim(); ++a) {
    const size_t s = grid.stride(a);
    for (size_t i = 0; i < n; ++i) {
      if (grid.coord(i, a) >= grid.cells()) continue;
      double we = std::pow(grid.dx(), grid.sdim());
      for (int b = 0; b < grid.sdim(); ++b) {
        if (b == a) continue;
        const int cb = grid.coord(i, b);
        if (cb == 0 || cb == grid.cells()) we *= 0.5;
      }
      const double Bf = 0.5 * (c.B[i] + c.B[i + s]);
      pot += we * Bf * (u0[i + s] - u0[i]) * (u1[i + s] - u1[i]) / (grid.dx() * grid.dx());
    }
  }
  return 0.5 * (kin + pot);
}

namespace {

std::string fingerprint_of(const WarpedMetric& g, const SpacetimeGrid& grid, const NonlinearityProfile& H,
                           const NeumannSource& f, double target) {
  std::ostringstream os;
  os.precision(17);
  os << metric_preset_name(g.preset()) << ':' << g.bump().amplitude << ':' << g.bump().width << ':';
  for (double c : g.bump().center) os << c << ',';
  os << grid.describe() << ':' << target << ':';
  for (size_t k = 0; k < H.h.size(); ++k)
    for (const auto& b : H.h[k]) {
      os << k << '/' << b.amplitude << '/' << b.radius << '/';
      for (double c : b.center) os << c << ',';
    }
  // FNV-1a over the source samples
  unsigned long long h = 1469598103934665603ull;
  for (double v : f.values) {
    unsigned long long bits;
    std::memcpy(&bits, &v, sizeof bits);
    h = (h ^ bits) * 1099511628211ull;
  }
  os << ':' << h;
  return os.str();
}

double measured_ratio(const WarpedMetric& g, const SpacetimeGrid& grid, const std::vector<SampledCoefficient>& Hs,
                      const NeumannSource& f) {
  SemilinearOptions opt;
  opt.max_iterations = 4;
  opt.tol = 0.0;
  // keep the floor filter: ratios of round-off differences are noise near one
  opt.rel_floor = 1e-14;
  opt.min_iterations = 4;
  opt.require_convergence = false;
  try {
    return solve_semilinear(g, grid, Hs, f, opt).max_ratio();
  } catch (const NumericalError&) {
    return 1e300;
  }
}

}  // namespace

double smallness_threshold(const WarpedMetric& g, const SpacetimeGrid& grid, const NonlinearityProfile& H,
                           const NeumannSource& f_shape, double target_ratio) {
  static std::mutex mu;
  static std::map<std::string, double> cache;
  const std::string key = fingerprint_of(g, grid, H, f_shape, target_ratio);
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  const double fmax = f_shape.max_abs();
  if (fmax == 0.0) throw DomainError("smallness_threshold: zero source shape");
  const auto Hs = sample_nonlinearity(grid, H);
  double result;
  if (!has_terms(Hs)) {
    result = std::numeric_limits<double>::infinity();
  } else {
    auto ratio = [&](double a) { return measured_ratio(g, grid, Hs, f_shape.scaled(a)); };
    double lo = 1.0, hi = 1.0;
    if (ratio(1.0) <= target_ratio) {
      hi = 2.0;
      int guard = 0;
      while (ratio(hi) <= target_ratio && guard++ < 60) lo = hi, hi *= 2.0;
    } else {
      lo = 0.5;
      int guard = 0;
      while (ratio(lo) > target_ratio && guard++ < 60) hi = lo, lo *= 0.5;
    }
    for (int it = 0; it < 12; ++it) {
      const double mid = std::sqrt(lo * hi);
      if (ratio(mid) <= target_ratio)
        lo = mid;
      else
        hi = mid;
    }
    result = lo * fmax;
  }
  std::lock_guard<std::mutex> lock(mu);
  cache[key] = result;
  return result;
}

}  // namespace beamlab
