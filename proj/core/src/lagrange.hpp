#pragma once

#include <algorithm>
#include <cmath>

namespace beamlab::detail {

// Six-point Lagrange weights at fractional index s on nodes 0..n-1 (n >= 6); dw is d/ds.
struct Lagrange6 {
  int i0 = 0;
  double w[6]{}, dw[6]{};

  Lagrange6(double s, int n) {
    i0 = std::clamp(static_cast<int>(std::floor(s)) - 2, 0, n - 6);
    for (int j = 0; j < 6; ++j) {
      double num = 1.0, den = 1.0, dsum = 0.0;
      for (int k = 0; k < 6; ++k) {
        if (k == j) continue;
        num *= s - (i0 + k);
        den *= static_cast<double>(j - k);
      }
      for (int l = 0; l < 6; ++l) {
        if (l == j) continue;
        double p = 1.0;
        for (int k = 0; k < 6; ++k)
          if (k != j && k != l) p *= s - (i0 + k);
        dsum += p;
      }
      w[j] = num / den;
      dw[j] = dsum / den;
    }
  }

  template <class T>
  T value(const T* data) const {
    T r = w[0] * data[i0];
    for (int j = 1; j < 6; ++j) r += w[j] * data[i0 + j];
    return r;
  }
  template <class T>
  T derivative(const T* data, double h) const {
    T r = (dw[0] / h) * data[i0];
    for (int j = 1; j < 6; ++j) r += (dw[j] / h) * data[i0 + j];
    return r;
  }
};

}  // namespace beamlab::detail
