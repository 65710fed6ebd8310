#include <cmath>
#include <functional>

#include "beamlab/beams.hpp"
#include "beamlab/error.hpp"
#include "lagrange.hpp"

namespace beamlab {

int ChartTable::entry(int mu, int nu) const {
  if (mu > nu) std::swap(mu, nu);
  const int d = chart->dim();
  return mu * d - mu * (mu - 1) / 2 + (nu - mu);
}

void TableField::at(const ChartTable& T, double tau, Poly& p, Poly& pt, Poly& ptt) const {
  const double lo = T.tau(0), hi = T.tau(T.count() - 1);
  if (tau < lo - 1e-9 || tau > hi + 1e-9) throw DomainError("beam: tau outside the table window");
  const detail::Lagrange6 L((tau - lo) / T.s, T.count());
  p = L.value(v.data());
  pt = L.value(vt.data());
  ptt = L.value(vtt.data());
}

namespace {

using Field = std::vector<Poly>;

// chart-coordinate first derivatives: mu = 0 is tau
std::vector<Poly> grad(const Poly& f, const Poly& ft) {
  const int m = f.basis()->vars();
  std::vector<Poly> d{ft};
  for (int a = 0; a < m; ++a) d.push_back(f.derivative(a));
  return d;
}

Poly inner(const ChartTable& T, int idx, const std::vector<Poly>& df, const std::vector<Poly>& dg, int D) {
  const int d = T.chart->dim();
  Poly s(T.basis);
  for (int mu = 0; mu < d; ++mu)
    for (int nu = 0; nu < d; ++nu) {
      Poly p = df[mu] * dg[nu];
      s.add_product(T.g(idx, mu, nu), p.truncated(D));
    }
  return s.truncated(D);
}

// V^nu = d_mu G^{mu nu} + G^{mu nu} d_mu l
std::vector<Poly> first_order_coeffs(const ChartTable& T, int idx) {
  const int d = T.chart->dim();
  const int nl = static_cast<int>(T.G[idx].size()) - 1;
  const std::vector<Poly> dl = grad(T.G[idx][nl], T.Gt[idx][nl]);
  std::vector<Poly> V;
  for (int nu = 0; nu < d; ++nu) {
    Poly v(T.basis);
    for (int mu = 0; mu < d; ++mu) {
      v += mu == 0 ? T.gt(idx, 0, nu) : T.g(idx, mu, nu).derivative(mu - 1);
      v.add_product(T.g(idx, mu, nu), dl[mu]);
    }
    V.push_back(std::move(v));
  }
  return V;
}

Poly box(const ChartTable& T, int idx, const std::vector<Poly>& V, const Poly& f, const Poly& ft, const Poly& ftt,
         int D) {
  const int d = T.chart->dim();
  const auto df = grad(f, ft);
  Poly s(T.basis);
  for (int mu = 0; mu < d; ++mu)
    for (int nu = 0; nu < d; ++nu) {
      Poly second;
      if (mu == 0 && nu == 0)
        second = ftt;
      else if (mu == 0)
        second = ft.derivative(nu - 1);
      else if (nu == 0)
        second = ft.derivative(mu - 1);
      else
        second = f.derivative(mu - 1).derivative(nu - 1);
      s.add_product(T.g(idx, mu, nu), second.truncated(D));
    }
  for (int nu = 0; nu < d; ++nu) s.add_product(V[nu], df[nu].truncated(D));
  return s.truncated(D);
}

// RK4 on even table nodes from tau = 0 outward; rhs(idx, y) with idx a table index.
void integrate(const ChartTable& T, Field& y, const std::function<Poly(int, const Poly&)>& rhs) {
  const int n = T.count();
  const int i0 = -T.j_lo;
  const double h = 2.0 * T.s;
  for (int dir : {1, -1}) {
    const double hs = dir * h;
    for (int i = i0; dir > 0 ? i + 2 < n : i - 2 >= 0; i += 2 * dir) {
      const Poly& u = y[i];
      const Poly k1 = rhs(i, u);
      const Poly k2 = rhs(i + dir, u + k1 * cplx(0.5 * hs));
      const Poly k3 = rhs(i + dir, u + k2 * cplx(0.5 * hs));
      const Poly k4 = rhs(i + 2 * dir, u + k3 * cplx(hs));
      Poly next = u;
      next += k1 * cplx(hs / 6.0);
      next += k2 * cplx(hs / 3.0);
      next += k3 * cplx(hs / 3.0);
      next += k4 * cplx(hs / 6.0);
      y[i + 2 * dir] = std::move(next);
    }
  }
  // odd nodes by interpolation of the even ones
  std::vector<Poly> even;
  for (int i = 0; i < n; i += 2) even.push_back(y[i]);
  for (int i = 1; i < n; i += 2) {
    const detail::Lagrange6 L(0.5 * i, static_cast<int>(even.size()));
    y[i] = L.value(even.data());
  }
}

Field tau_derivative(const ChartTable& T, const Field& f) {
  Field out(f.size());
  for (int i = 0; i < T.count(); ++i) {
    const detail::Lagrange6 L(static_cast<double>(i), T.count());
    out[i] = L.derivative(f.data(), T.s);
  }
  return out;
}

std::shared_ptr<ChartTable> build_table(const FermiChart& chart, const RiccatiTrajectory& ric, int order,
                                        const BeamOptions& opt) {
  auto T = std::make_shared<ChartTable>();
  T->chart = std::make_shared<FermiChart>(chart);
  T->order = order;
  double hmax = 0.0;
  for (const auto& H : ric.H) hmax = std::max(hmax, H.norm());
  T->s = std::min(opt.table_step, opt.step_scale / std::max(hmax, 1e-12));
  T->basis = monomial_basis(chart.m(), order);
  double lo = std::max(chart.tau_min(), ric.tau_min());
  double hi = std::min(chart.tau_max(), ric.tau_max());
  if (!std::isnan(opt.tau_lo)) lo = std::max(lo, opt.tau_lo);
  if (!std::isnan(opt.tau_hi)) hi = std::min(hi, opt.tau_hi);
  const double h2 = 2.0 * T->s;
  T->j_lo = 2 * static_cast<int>(std::ceil(lo / h2 - 1e-9));
  T->j_hi = 2 * static_cast<int>(std::floor(hi / h2 + 1e-9));
  if (T->j_lo > 0 || T->j_hi < 0 || T->count() < 13) throw DomainError("beam: table window too short or misses tau = 0");
  T->G.resize(T->count());
  for (int i = 0; i < T->count(); ++i) T->G[i] = chart.taylor(T->tau(i), T->basis);
  const int nf = static_cast<int>(T->G[0].size());
  T->Gt.assign(T->count(), std::vector<Poly>(nf));
  for (int q = 0; q < nf; ++q) {
    Field col(T->count());
    for (int i = 0; i < T->count(); ++i) col[i] = T->G[i][q];
    const Field dcol = tau_derivative(*T, col);
    for (int i = 0; i < T->count(); ++i) T->Gt[i][q] = dcol[i];
  }
  return T;
}

Poly quadratic_form(const BasisPtr& b, const CMat& H) {
  Poly p(b);
  const int m = b->vars();
  std::vector<int> al(m);
  for (int a = 0; a < m; ++a)
    for (int c = a; c < m; ++c) {
      std::fill(al.begin(), al.end(), 0);
      al[a] += 1;
      al[c] += 1;
      p[b->index(al.data())] = a == c ? H(a, a) : H(a, c) + H(c, a);
    }
  return p;
}

}  // namespace

BeamPhase build_phase(const FermiChart& chart, const RiccatiTrajectory& riccati, int order, const BeamOptions& opt) {
  if (order < 2) throw DomainError("build_phase: order must be at least 2");
  auto T = build_table(chart, riccati, order, opt);
  const int n = T->count();
  const BasisPtr& b = T->basis;
  const int N = order;

  // P[k][idx], Pt[k][idx]
  std::vector<Field> P(N + 1, Field(n, Poly(b))), Pt(N + 1, Field(n, Poly(b)));
  for (int i = 0; i < n; ++i) P[2][i] = quadratic_form(b, riccati.H_at(T->tau(i)));

  // degree-k part of S phi with dP_k/dtau set to zero
  auto eik_rest = [&](int idx, int k, const Poly& Pk) {
    Poly phi = Poly::variable(b, 0);
    Poly phit(b);
    for (int j = 2; j < k; ++j) {
      phi += P[j][idx];
      phit += Pt[j][idx];
    }
    phi += Pk;
    const auto dphi = grad(phi, phit);
    const Poly S = inner(*T, idx, dphi, dphi, k);
    const cplx g01 = T->g(idx, 0, 1).constant_term();
    return S.degree_part(k) * (-1.0 / (2.0 * g01));
  };
  for (int i = 0; i < n; ++i) Pt[2][i] = eik_rest(i, 2, P[2][i]);
  for (int k = 3; k <= N; ++k) {
    integrate(*T, P[k], [&](int idx, const Poly& y) { return eik_rest(idx, k, y); });
    for (int i = 0; i < n; ++i) Pt[k][i] = eik_rest(i, k, P[k][i]);
  }

  BeamPhase ph;
  ph.table_ = T;
  ph.phi_.v.assign(n, Poly::variable(b, 0));
  ph.phi_.vt.assign(n, Poly(b));
  for (int i = 0; i < n; ++i)
    for (int k = 2; k <= N; ++k) {
      ph.phi_.v[i] += P[k][i];
      ph.phi_.vt[i] += Pt[k][i];
    }
  ph.phi_.vtt = tau_derivative(*T, ph.phi_.vt);
  return ph;
}

Poly BeamPhase::part(double tau, int k) const {
  Poly p, pt, ptt;
  phi_.at(*table_, tau, p, pt, ptt);
  return p.degree_part(k);
}

cplx BeamPhase::value(double tau, const Vec& z) const {
  Poly p, pt, ptt;
  phi_.at(*table_, tau, p, pt, ptt);
  return p.eval(z.data());
}

cplx BeamPhase::eikonal(double tau, const Vec& z) const {
  Poly p, pt, ptt;
  phi_.at(*table_, tau, p, pt, ptt);
  const auto d = grad(p, pt);
  const Mat Gi = chart().chart_inverse_metric(tau, z);
  const int dim = chart().dim();
  CVec dv(dim);
  for (int mu = 0; mu < dim; ++mu) dv[mu] = d[mu].eval(z.data());
  return dv.transpose() * Gi.cast<cplx>() * dv;
}

Poly BeamPhase::eikonal_taylor(int idx) const {
  const auto d = grad(phi_.v[idx], phi_.vt[idx]);
  return inner(*table_, idx, d, d, order());
}

Poly BeamPhase::box_taylor(int idx) const {
  const auto V = first_order_coeffs(*table_, idx);
  return box(*table_, idx, V, phi_.v[idx], phi_.vt[idx], phi_.vtt[idx], order());
}

BeamAmplitude build_amplitude(const BeamPhase& phase, const RiccatiTrajectory& riccati) {
  const auto T = phase.table_ptr();
  const int n = T->count();
  const int N = phase.order();
  const BasisPtr& b = T->basis;
  const int d = T->chart->dim();
  const int m = d - 1;
  const int K = (N - 2) / 2;
  const int D0 = N - 2;

  // per-node data of the transport operator: T a = 2 W a_tau + 2 sum_a B_a d_a a + (Box phi) a
  std::vector<Poly> Winv(n), boxphi(n);
  std::vector<std::vector<Poly>> B(n);
  std::vector<std::vector<Poly>> V(n);
  for (int i = 0; i < n; ++i) {
    V[i] = first_order_coeffs(*T, i);
    const auto dphi = grad(phase.field().v[i], phase.field().vt[i]);
    Poly W(b);
    for (int nu = 0; nu < d; ++nu) W.add_product(T->g(i, 0, nu), dphi[nu]);
    Winv[i] = series_inverse(W.truncated(D0)).truncated(D0);
    for (int a = 0; a < m; ++a) {
      Poly Ba(b);
      for (int nu = 0; nu < d; ++nu) Ba.add_product(T->g(i, a + 1, nu), dphi[nu]);
      B[i].push_back(Ba.truncated(D0));
    }
    boxphi[i] = box(*T, i, V[i], phase.field().v[i], phase.field().vt[i], phase.field().vtt[i], D0);
  }

  BeamAmplitude amp;
  amp.table_ = T;
  amp.phase_ = phase;
  amp.order_ = N;
  const cplx I(0.0, 1.0);
  std::vector<Poly> src(n, Poly(b));
  for (int k = 0; k <= K; ++k) {
    const int Dk = N - 2 - 2 * k;
    auto rhs = [&](int i, const Poly& a) {
      Poly r = boxphi[i] * a;
      for (int c = 0; c < m; ++c) r.add_product(B[i][c], a.derivative(c), cplx(2.0));
      r -= src[i] * I;
      r = r.truncated(Dk);
      return (Winv[i] * r).truncated(Dk) * cplx(-0.5);
    };
    TableField f;
    f.v.assign(n, Poly(b));
    if (k == 0) f.v[-T->j_lo] = Poly::constant(b, 1.0 / riccati.sqrt_det_at(0.0));
    integrate(*T, f.v, rhs);
    if (k == 0) {
      for (int i = 0; i < n; ++i) {
        const cplx exact = 1.0 / riccati.sqrt_det_at(T->tau(i));
        amp.a00_dev_ = std::max(amp.a00_dev_, std::abs(f.v[i][0] - exact) / std::abs(exact));
        f.v[i][0] = exact;
      }
    }
    f.vt.resize(n);
    for (int i = 0; i < n; ++i) f.vt[i] = rhs(i, f.v[i]);
    f.vtt = tau_derivative(*T, f.vt);
    // source of the next order: Box a_k
    for (int i = 0; i < n; ++i) src[i] = box(*T, i, V[i], f.v[i], f.vt[i], f.vtt[i], std::max(0, Dk - 2));
    amp.a_.push_back(std::move(f));
  }
  return amp;
}

cplx BeamAmplitude::a00(double tau) const {
  Poly p, pt, ptt;
  a_[0].at(*table_, tau, p, pt, ptt);
  return p.constant_term();
}

Poly BeamAmplitude::transport_taylor(int k, int idx) const {
  const int Dk = degree(k);
  const auto& T = *table_;
  const auto dphi = grad(phase_.field().v[idx], phase_.field().vt[idx]);
  const auto da = grad(a_[k].v[idx], a_[k].vt[idx]);
  const auto V = first_order_coeffs(T, idx);
  const Poly boxphi = box(T, idx, V, phase_.field().v[idx], phase_.field().vt[idx], phase_.field().vtt[idx], Dk);
  Poly t = inner(T, idx, dphi, da, Dk) * cplx(2.0);
  t += (boxphi * a_[k].v[idx]).truncated(Dk);
  t *= cplx(0.0, 1.0);
  if (k > 0) t += box(T, idx, V, a_[k - 1].v[idx], a_[k - 1].vt[idx], a_[k - 1].vtt[idx], Dk);
  return t.truncated(Dk);
}

}  // namespace beamlab
