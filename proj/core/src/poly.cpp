#include "beamlab/poly.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "beamlab/error.hpp"

namespace beamlab {

namespace {

int encode(const int* alpha, int m, int D) {
  int code = 0;
  for (int a = 0; a < m; ++a) code = code * (D + 1) + alpha[a];
  return code;
}

void enumerate(int m, int k, int a, std::vector<int>& cur, std::vector<int>& out) {
  if (a == m - 1) {
    cur[a] = k;
    out.insert(out.end(), cur.begin(), cur.end());
    return;
  }
  for (int e = k; e >= 0; --e) {
    cur[a] = e;
    enumerate(m, k - e, a + 1, cur, out);
  }
}

}  // namespace

MonomialBasis::MonomialBasis(int vars, int max_degree) : m_(vars), D_(max_degree) {
  if (m_ < 1 || D_ < 0) throw DomainError("MonomialBasis: need at least one variable and degree >= 0");
  std::vector<int> cur(m_);
  block_.push_back(0);
  for (int k = 0; k <= D_; ++k) {
    enumerate(m_, k, 0, cur, exps_);
    const int n = static_cast<int>(exps_.size()) / m_;
    deg_.resize(n, k);
    block_.push_back(n);
  }
  const int n = size();
  int cap = 1;
  for (int a = 0; a < m_; ++a) cap *= (D_ + 1);
  std::vector<int> lookup(cap, -1);
  for (int i = 0; i < n; ++i) lookup[encode(exponents(i), m_, D_)] = i;

  auto find = [&](const std::vector<int>& al) -> int {
    int s = 0;
    for (int e : al) {
      if (e < 0) return -1;
      s += e;
    }
    if (s > D_) return -1;
    return lookup[encode(al.data(), m_, D_)];
  };

  dindex_.assign(static_cast<size_t>(n) * m_, -1);
  sindex_.assign(static_cast<size_t>(n) * m_, -1);
  std::vector<int> al(m_);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < m_; ++a) {
      std::copy(exponents(i), exponents(i) + m_, al.begin());
      al[a] -= 1;
      dindex_[static_cast<size_t>(i) * m_ + a] = find(al);
      al[a] += 2;
      sindex_[static_cast<size_t>(i) * m_ + a] = find(al);
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (deg_[i] + deg_[j] > D_) continue;
      for (int a = 0; a < m_; ++a) al[a] = exponents(i)[a] + exponents(j)[a];
      products_.push_back({i, j, find(al)});
    }
}

int MonomialBasis::index(const int* alpha) const {
  int s = 0;
  for (int a = 0; a < m_; ++a) {
    if (alpha[a] < 0) return -1;
    s += alpha[a];
  }
  if (s > D_) return -1;
  for (int i = degree_begin(s); i < degree_end(s); ++i) {
    const int* e = exponents(i);
    bool eq = true;
    for (int a = 0; a < m_ && eq; ++a) eq = e[a] == alpha[a];
    if (eq) return i;
  }
  return -1;
}

BasisPtr monomial_basis(int vars, int max_degree) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, BasisPtr> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(vars, max_degree);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto b = std::make_shared<const MonomialBasis>(vars, max_degree);
  cache.emplace(key, b);
  return b;
}

Poly Poly::constant(BasisPtr b, cplx v) {
  Poly p(std::move(b));
  p.c_[0] = v;
  return p;
}

Poly Poly::variable(BasisPtr b, int a) {
  Poly p(b);
  if (b->max_degree() >= 1) p.c_[1 + a] = 1.0;
  return p;
}

Poly& Poly::operator+=(const Poly& o) {
  for (size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

Poly& Poly::operator-=(const Poly& o) {
  for (size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

Poly& Poly::operator*=(cplx s) {
  for (auto& v : c_) v *= s;
  return *this;
}

Poly Poly::operator*(const Poly& o) const {
  Poly r(basis_);
  r.add_product(*this, o);
  return r;
}

void Poly::add_product(const Poly& a, const Poly& b, cplx s) {
  for (const auto& t : basis_->products()) {
    const cplx x = a.c_[t.i];
    if (x == cplx(0)) continue;
    c_[t.k] += s * x * b.c_[t.j];
  }
}

Poly Poly::derivative(int a) const {
  Poly r(basis_);
  const int n = size();
  for (int i = 0; i < n; ++i) {
    const int j = basis_->deriv_index(i, a);
    if (j >= 0) r.c_[j] += c_[i] * static_cast<double>(basis_->exponents(i)[a]);
  }
  return r;
}

Poly Poly::degree_part(int k) const {
  Poly r(basis_);
  if (k > basis_->max_degree()) return r;
  for (int i = basis_->degree_begin(k); i < basis_->degree_end(k); ++i) r.c_[i] = c_[i];
  return r;
}

Poly Poly::truncated(int k) const {
  Poly r(*this);
  if (k >= basis_->max_degree()) return r;
  for (int i = basis_->degree_begin(k + 1); i < size(); ++i) r.c_[i] = 0.0;
  return r;
}

cplx Poly::eval(const cplx* z) const {
  const int m = basis_->vars();
  cplx s = 0.0;
  for (int i = 0; i < size(); ++i) {
    if (c_[i] == cplx(0)) continue;
    cplx t = c_[i];
    const int* e = basis_->exponents(i);
    for (int a = 0; a < m; ++a)
      for (int p = 0; p < e[a]; ++p) t *= z[a];
    s += t;
  }
  return s;
}

cplx Poly::eval(const double* z) const {
  std::vector<cplx> zc(z, z + basis_->vars());
  return eval(zc.data());
}

double Poly::max_abs() const {
  double m = 0.0;
  for (auto v : c_) m = std::max(m, std::abs(v));
  return m;
}

Poly series_inverse(const Poly& p) {
  const cplx c0 = p.constant_term();
  if (c0 == cplx(0)) throw NumericalError("series_inverse: zero constant term");
  // 1/p = (1/c0) * sum_k (-q)^k with q = p/c0 - 1
  const BasisPtr& b = p.basis();
  Poly q = p * (1.0 / c0);
  q[0] -= 1.0;
  Poly term = Poly::constant(b, 1.0);
  Poly sum = term;
  for (int k = 1; k <= b->max_degree(); ++k) {
    term = term * q;
    term *= -1.0;
    sum += term;
  }
  sum *= 1.0 / c0;
  return sum;
}

std::vector<Poly> cauchy_taylor(const BasisPtr& basis, int nfun,
                                const std::function<void(const cplx* z, cplx* out)>& f, double radius, int M) {
  const int m = basis->vars();
  const int D = basis->max_degree();
  if (M <= D) throw DomainError("cauchy_taylor: need more samples per variable than the degree");
  // sample on the torus; layout [j_0 ... j_{m-1}][fun]
  std::vector<int> ext(m, M);
  size_t total = 1;
  for (int a = 0; a < m; ++a) total *= M;
  std::vector<cplx> data(total * nfun);
  std::vector<cplx> roots(M);
  for (int j = 0; j < M; ++j) roots[j] = std::polar(1.0, 2.0 * kPi * j / M);
  std::vector<int> idx(m, 0);
  std::vector<cplx> z(m);
  for (size_t p = 0; p < total; ++p) {
    size_t rem = p;
    for (int a = m - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(rem % M);
      rem /= M;
    }
    for (int a = 0; a < m; ++a) z[a] = radius * roots[idx[a]];
    f(z.data(), &data[p * nfun]);
  }
  // separable transform, one variable at a time: index j_a -> alpha_a in 0..D
  for (int a = 0; a < m; ++a) {
    size_t outer = 1, inner = static_cast<size_t>(nfun);
    for (int b = 0; b < a; ++b) outer *= ext[b];
    for (int b = a + 1; b < m; ++b) inner *= ext[b];
    std::vector<cplx> out(outer * (D + 1) * inner, cplx(0));
    for (size_t o = 0; o < outer; ++o)
      for (int al = 0; al <= D; ++al) {
        cplx* dst = &out[(o * (D + 1) + al) * inner];
        for (int j = 0; j < ext[a]; ++j) {
          const cplx w = std::conj(roots[(static_cast<long>(al) * j) % M]) / static_cast<double>(M);
          const cplx* src = &data[(o * ext[a] + j) * inner];
          for (size_t i = 0; i < inner; ++i) dst[i] += w * src[i];
        }
      }
    data.swap(out);
    ext[a] = D + 1;
  }
  std::vector<Poly> res(nfun, Poly(basis));
  for (int i = 0; i < basis->size(); ++i) {
    const int* e = basis->exponents(i);
    size_t off = 0;
    for (int a = 0; a < m; ++a) off = off * (D + 1) + e[a];
    const double scale = std::pow(radius, -basis->degree(i));
    for (int q = 0; q < nfun; ++q) res[q][i] = data[off * nfun + q] * scale;
  }
  return res;
}

}  // namespace beamlab
