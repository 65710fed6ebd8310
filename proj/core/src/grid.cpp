#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "beamlab/error.hpp"
#include "beamlab/wave_solver.hpp"

namespace beamlab {

namespace {

// min over a coarse spacetime sample of sqrt(c / beta)
double min_slowness(const WarpedMetric& g, double horizon) {
  if (g.is_flat()) return 1.0;
  const int d = g.dim();
  const int ns = 12;
  double best = 1e300;
  Vec x(d);
  std::vector<int> idx(d, 0);
  size_t total = 1;
  for (int a = 0; a < d; ++a) total *= (ns + 1);
  for (size_t p = 0; p < total; ++p) {
    size_t r = p;
    for (int a = 0; a < d; ++a) {
      idx[a] = static_cast<int>(r % (ns + 1));
      r /= (ns + 1);
    }
    x[0] = horizon * idx[0] / ns;
    for (int a = 1; a < d; ++a) x[a] = static_cast<double>(idx[a]) / ns;
    best = std::min(best, std::sqrt(g.conformal(x.data()) / g.lapse(x.data())));
  }
  // bump metrics: also probe the bump centre, where the extremum sits
  const auto& c = g.bump().center;
  if (!c.empty()) {
    for (int a = 0; a < d; ++a) x[a] = c[a];
    x[0] = std::clamp(x[0], 0.0, horizon);
    for (int a = 1; a < d; ++a) x[a] = std::clamp(x[a], 0.0, 1.0);
    best = std::min(best, std::sqrt(g.conformal(x.data()) / g.lapse(x.data())));
  }
  return best;
}

}  // namespace

double cfl_limit(const WarpedMetric& g, int cells, double horizon, double courant) {
  const double dx = 1.0 / cells;
  return courant * dx * min_slowness(g, horizon) / std::sqrt(static_cast<double>(g.dim() - 1));
}

SpacetimeGrid::SpacetimeGrid(const WarpedMetric& g, int cells, int steps, double horizon, double courant)
    : d_(g.dim()), n_(cells), nt_(steps), T_(horizon), courant_(courant) {
  if (cells < 2 || steps < 2 || !(horizon > 0.0)) throw DomainError("SpacetimeGrid: invalid resolution");
  if (courant > 0.9) throw DomainError("SpacetimeGrid: courant factor must not exceed 0.9");
  dx_ = 1.0 / n_;
  dt_ = T_ / nt_;
  const double lim = cfl_limit(g, cells, horizon, courant);
  if (dt_ > lim * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "SpacetimeGrid: CFL violation, dt = " << dt_ << " exceeds " << lim << " (need at least "
       << static_cast<int>(std::ceil(T_ / lim)) << " steps)";
    throw DomainError(os.str());
  }
  const int s = sdim();
  strides_.resize(s);
  size_t st = 1;
  for (int a = 0; a < s; ++a) {
    strides_[a] = st;
    st *= static_cast<size_t>(n_ + 1);
  }
  nsp_ = st;
  fnodes_ = nsp_ / static_cast<size_t>(n_ + 1);
}

SpacetimeGrid SpacetimeGrid::with_courant(const WarpedMetric& g, int cells, double horizon, double courant) {
  const double lim = cfl_limit(g, cells, horizon, courant);
  const int steps = static_cast<int>(std::ceil(horizon / lim - 1e-9));
  return SpacetimeGrid(g, cells, std::max(steps, 2), horizon, 0.9);
}

Vec SpacetimeGrid::point(size_t idx, int k) const {
  Vec x(d_);
  x[0] = time(k);
  for (int a = 0; a < sdim(); ++a) x[1 + a] = coord(idx, a) * dx_;
  return x;
}

double SpacetimeGrid::node_weight(size_t idx) const {
  double w = 1.0;
  for (int a = 0; a < sdim(); ++a) {
    const int i = coord(idx, a);
    w *= (i == 0 || i == n_) ? 0.5 * dx_ : dx_;
  }
  return w;
}

size_t SpacetimeGrid::face_to_spatial(int face, size_t j) const {
  const int axis = face / 2;
  const int fixed = (face % 2 == 0) ? 0 : n_;
  size_t idx = 0;
  size_t r = j;
  for (int a = 0; a < sdim(); ++a) {
    if (a == axis) {
      idx += static_cast<size_t>(fixed) * strides_[a];
      continue;
    }
    idx += (r % static_cast<size_t>(n_ + 1)) * strides_[a];
    r /= static_cast<size_t>(n_ + 1);
  }
  return idx;
}

Vec SpacetimeGrid::boundary_point(int face, size_t j, int k) const { return point(face_to_spatial(face, j), k); }

double SpacetimeGrid::face_weight(size_t j) const {
  double w = 1.0;
  size_t r = j;
  for (int a = 0; a < sdim() - 1; ++a) {
    const int i = static_cast<int>(r % static_cast<size_t>(n_ + 1));
    r /= static_cast<size_t>(n_ + 1);
    w *= (i == 0 || i == n_) ? 0.5 * dx_ : dx_;
  }
  return w;
}

std::string SpacetimeGrid::describe() const {
  std::ostringstream os;
  os << "d=" << d_ << " cells=" << n_ << " steps=" << nt_ << " T=" << T_;
  return os.str();
}

double BoundaryTrace::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

double BoundaryTrace::l2() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

NeumannSource NeumannSource::zero(const SpacetimeGrid& grid) {
  NeumannSource f;
  f.values.assign(grid.boundary_size(), 0.0);
  return f;
}

bool NeumannSource::is_zero() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

double NeumannSource::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

NeumannSource NeumannSource::scaled(double s) const {
  NeumannSource r(*this);
  for (auto& v : r.values) v *= s;
  for (auto& v : r.imag) v *= s;
  return r;
}

NeumannSource NeumannSource::operator+(const NeumannSource& o) const {
  if (values.size() != o.values.size()) throw DomainError("NeumannSource: grid mismatch");
  NeumannSource r(*this);
  for (size_t i = 0; i < values.size(); ++i) r.values[i] += o.values[i];
  if (!imag.empty() || !o.imag.empty()) {
    r.imag.resize(values.size(), 0.0);
    for (size_t i = 0; i < o.imag.size(); ++i) r.imag[i] += o.imag[i];
  }
  r.compat_order = std::min(compat_order, o.compat_order);
  return r;
}

double smooth_ramp(double t, double width) {
  if (t <= 0.0) return 0.0;
  if (t >= width) return 1.0;
  const double s = t / width;
  const double a = std::exp(-1.0 / s), b = std::exp(-1.0 / (1.0 - s));
  return a / (a + b);
}

void apply_temporal_ramp(const SpacetimeGrid& grid, NeumannSource& f, double width, bool at_start) {
  const size_t nb = grid.boundary_nodes();
  for (int k = 0; k <= grid.steps(); ++k) {
    const double t = grid.time(k);
    const double r = at_start ? smooth_ramp(t, width) : smooth_ramp(grid.horizon() - t, width);
    if (r == 1.0) continue;
    for (size_t j = 0; j < nb; ++j) {
      f.values[k * nb + j] *= r;
      if (!f.imag.empty()) f.imag[k * nb + j] *= r;
    }
  }
}

double compatibility_defect(const SpacetimeGrid& grid, const NeumannSource& f, int order) {
  const size_t nb = grid.boundary_nodes();
  double worst = 0.0;
  for (int l = 0; l < order && l <= grid.steps(); ++l) {
    for (size_t j = 0; j < nb; ++j) {
      // forward difference of order l at t = 0
      double s = 0.0, binom = 1.0;
      for (int i = 0; i <= l; ++i) {
        const double sign = ((l - i) % 2 == 0) ? 1.0 : -1.0;
        s += sign * binom * f.values[i * nb + j];
        binom = binom * (l - i) / (i + 1);
      }
      worst = std::max(worst, std::abs(s) / std::pow(grid.dt(), l));
    }
  }
  return worst;
}

NeumannSource sample_source(const SpacetimeGrid& grid, const std::function<double(int, const Vec&)>& fn) {
  NeumannSource f = NeumannSource::zero(grid);
  const size_t fn_nodes = grid.face_nodes();
  const size_t nb = grid.boundary_nodes();
  for (int k = 0; k <= grid.steps(); ++k)
    for (int face = 0; face < grid.faces(); ++face)
      for (size_t j = 0; j < fn_nodes; ++j)
        f.values[k * nb + face * fn_nodes + j] = fn(face, grid.boundary_point(face, j, k));
  return f;
}

std::vector<double> FieldSolution::time_derivative(const SpacetimeGrid& grid, int k) const {
  const size_t n = grid.spatial_nodes();
  std::vector<double> r(n);
  const int nt = grid.steps();
  const int a = k == 0 ? 0 : (k == nt ? nt - 1 : k - 1);
  const int b = k == 0 ? 1 : (k == nt ? nt : k + 1);
  const double h = (b - a) * grid.dt();
  for (size_t i = 0; i < n; ++i) r[i] = (u[b * n + i] - u[a * n + i]) / h;
  return r;
}

double CompactBump::value(const Vec& x) const {
  double r2 = 0.0;
  for (size_t i = 0; i < center.size(); ++i) {
    const double dd = x[static_cast<int>(i)] - center[i];
    r2 += dd * dd;
  }
  r2 /= radius * radius;
  if (r2 >= 1.0) return 0.0;
  return amplitude * std::exp(1.0 - 1.0 / (1.0 - r2));
}

bool NonlinearityProfile::empty() const {
  for (const auto& v : h)
    for (const auto& b : v)
      if (b.amplitude != 0.0) return false;
  return true;
}

double NonlinearityProfile::value(int k, const Vec& x) const {
  if (k < 0 || k >= static_cast<int>(h.size())) return 0.0;
  double s = 0.0;
  for (const auto& b : h[k]) s += b.value(x);
  return s;
}

void NonlinearityProfile::set(int k, std::vector<CompactBump> bumps) {
  if (k < 2) throw DomainError("NonlinearityProfile: coefficients start at k = 2");
  if (static_cast<int>(h.size()) <= k) h.resize(k + 1);
  h[k] = std::move(bumps);
}

NonlinearityProfile NonlinearityProfile::without(int k) const {
  NonlinearityProfile r(*this);
  if (k < static_cast<int>(r.h.size())) r.h[k].clear();
  return r;
}

std::vector<SampledCoefficient> sample_nonlinearity(const SpacetimeGrid& grid, const NonlinearityProfile& H) {
  std::vector<SampledCoefficient> out(H.h.size());
  const size_t n = grid.spatial_nodes();
  const int d = grid.dim();
  for (size_t k = 2; k < H.h.size(); ++k) {
    std::map<size_t, double> acc;
    for (const auto& b : H.h[k]) {
      if (b.amplitude == 0.0) continue;
      if (static_cast<int>(b.center.size()) != d) throw DomainError("CompactBump: center dimension mismatch");
      // index box covering the support
      std::vector<int> lo(d), hi(d);
      const double h0 = grid.dt(), h1 = grid.dx();
      lo[0] = std::max(0, static_cast<int>(std::floor((b.center[0] - b.radius) / h0)));
      hi[0] = std::min(grid.steps(), static_cast<int>(std::ceil((b.center[0] + b.radius) / h0)));
      for (int a = 1; a < d; ++a) {
        lo[a] = std::max(0, static_cast<int>(std::floor((b.center[a] - b.radius) / h1)));
        hi[a] = std::min(grid.cells(), static_cast<int>(std::ceil((b.center[a] + b.radius) / h1)));
      }
      if (lo[0] > hi[0]) continue;
      std::vector<int> cur(lo);
      Vec x(d);
      while (true) {
        bool ok = true;
        for (int a = 0; a < d; ++a) ok = ok && lo[a] <= hi[a];
        if (!ok) break;
        x[0] = grid.time(cur[0]);
        size_t idx = 0;
        for (int a = 1; a < d; ++a) {
          x[a] = cur[a] * grid.dx();
          idx += static_cast<size_t>(cur[a]) * grid.stride(a - 1);
        }
        const double v = b.value(x);
        if (v != 0.0) acc[static_cast<size_t>(cur[0]) * n + idx] += v;
        int a = d - 1;
        while (a >= 0) {
          if (++cur[a] <= hi[a]) break;
          cur[a] = lo[a];
          --a;
        }
        if (a < 0) break;
      }
    }
    for (const auto& [idx, v] : acc) {
      out[k].index.push_back(idx);
      out[k].value.push_back(v);
    }
  }
  return out;
}

}  // namespace beamlab
