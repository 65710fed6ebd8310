#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "beamlab/types.hpp"

namespace beamlab {

// Monomials z^alpha in m variables with |alpha| <= D, graded (degree-major) order.
class MonomialBasis {
 public:
  MonomialBasis(int vars, int max_degree);

  int vars() const { return m_; }
  int max_degree() const { return D_; }
  int size() const { return static_cast<int>(deg_.size()); }
  int degree(int idx) const { return deg_[idx]; }
  const int* exponents(int idx) const { return &exps_[static_cast<size_t>(idx) * m_]; }
  // -1 if the degree exceeds D
  int index(const int* alpha) const;
  int degree_begin(int k) const { return block_[k]; }
  int degree_end(int k) const { return block_[k + 1]; }
  // index of alpha - e_a (or -1) and the factor alpha_a
  int deriv_index(int idx, int a) const { return dindex_[static_cast<size_t>(idx) * m_ + a]; }
  // index of alpha + e_a (or -1 beyond D)
  int shift_index(int idx, int a) const { return sindex_[static_cast<size_t>(idx) * m_ + a]; }

  struct Term {
    int i, j, k;
  };
  // all (i, j) with deg(i) + deg(j) <= D and their product index k
  const std::vector<Term>& products() const { return products_; }

 private:
  int m_, D_;
  std::vector<int> exps_, deg_, block_, dindex_, sindex_;
  std::vector<Term> products_;
};

using BasisPtr = std::shared_ptr<const MonomialBasis>;

// Shared, cached basis instance.
BasisPtr monomial_basis(int vars, int max_degree);

// Truncated polynomial with complex coefficients.
class Poly {
 public:
  Poly() = default;
  explicit Poly(BasisPtr b) : basis_(std::move(b)), c_(basis_->size(), cplx(0)) {}

  static Poly constant(BasisPtr b, cplx v);
  static Poly variable(BasisPtr b, int a);

  const BasisPtr& basis() const { return basis_; }
  int size() const { return static_cast<int>(c_.size()); }
  cplx& operator[](int i) { return c_[i]; }
  cplx operator[](int i) const { return c_[i]; }
  std::vector<cplx>& coeffs() { return c_; }
  const std::vector<cplx>& coeffs() const { return c_; }

  Poly& operator+=(const Poly& o);
  Poly& operator-=(const Poly& o);
  Poly& operator*=(cplx s);
  Poly operator+(const Poly& o) const { Poly r(*this); r += o; return r; }
  Poly operator-(const Poly& o) const { Poly r(*this); r -= o; return r; }
  Poly operator*(const Poly& o) const;
  Poly operator*(cplx s) const { Poly r(*this); r *= s; return r; }
  // this += s * a * b
  void add_product(const Poly& a, const Poly& b, cplx s = cplx(1));

  Poly derivative(int a) const;
  // keep only the homogeneous part of degree k
  Poly degree_part(int k) const;
  // drop everything above degree k
  Poly truncated(int k) const;
  cplx constant_term() const { return c_.empty() ? cplx(0) : c_[0]; }
  cplx eval(const cplx* z) const;
  cplx eval(const double* z) const;
  double max_abs() const;

 private:
  BasisPtr basis_;
  std::vector<cplx> c_;
};

inline Poly operator*(cplx s, const Poly& p) { return p * s; }

// Multiplicative inverse of a series with nonzero constant term, truncated at the basis degree.
Poly series_inverse(const Poly& p);

// Taylor coefficients of nfun analytic functions of z in C^m by sampling on the torus |z_a| = radius
// with M points per variable.  f(z, out) writes nfun values.
std::vector<Poly> cauchy_taylor(const BasisPtr& basis, int nfun,
                                const std::function<void(const cplx* z, cplx* out)>& f, double radius, int M);

}  // namespace beamlab
