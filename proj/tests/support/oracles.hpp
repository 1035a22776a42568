#pragma once

// Reference values computed independently of the library code paths.

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

/// Orthonormal probabilists' Hermite polynomials p_0..p_n at x
/// (He_{k+1} = x He_k - k He_{k-1}, normalized by sqrt(k!)).
inline std::vector<double> hermite_orthonormal(int n, double x) {
  std::vector<double> he(n + 1);
  he[0] = 1.0;
  if (n >= 1) he[1] = x;
  for (int k = 1; k < n; ++k) he[k + 1] = x * he[k] - k * he[k - 1];
  double fact = 1.0;
  for (int k = 0; k <= n; ++k) {
    if (k > 0) fact *= k;
    he[k] /= std::sqrt(fact);
  }
  return he;
}

/// Composite Simpson rule on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

/// Standard Gaussian density in one dimension.
inline double gauss1(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

/// Integral of f(x) * gauss1(x) over R by Simpson on [-12, 12].
inline double gauss_expect(const std::function<double(double)>& f, int n = 4000) {
  return simpson([&](double x) { return f(x) * gauss1(x); }, -12.0, 12.0, n);
}

}  // namespace oracle
