#include "polyflow/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace polyflow {

Rule1D gauss_legendre(int n, double lo, double hi) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  Rule1D rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double mid = 0.5 * (hi + lo);
  const double half = 0.5 * (hi - lo);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0;
      double p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      dp = n * (z * p1 - p2) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) {
        // refresh dp at the converged root
        p1 = 1.0;
        p2 = 0.0;
        for (int j = 1; j <= n; ++j) {
          const double p3 = p2;
          p2 = p1;
          p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
        }
        dp = n * (z * p1 - p2) / (z * z - 1.0);
        break;
      }
    }
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.nodes[i] = mid - half * z;
    rule.nodes[n - 1 - i] = mid + half * z;
    rule.weights[i] = half * w;
    rule.weights[n - 1 - i] = half * w;
  }
  return rule;
}

Recurrence stieltjes(const Rule1D& measure, int n) {
  const std::size_t k = measure.size();
  if (n < 1 || static_cast<std::size_t>(n) > k)
    throw std::invalid_argument("stieltjes: need 1 <= n <= number of discretization nodes");
  Recurrence rec;
  rec.a.assign(n, 0.0);
  rec.b.assign(n, 0.0);

  double mass = 0.0;
  for (double w : measure.weights) mass += w;
  rec.b[0] = mass;

  std::vector<double> prev(k, 0.0);
  std::vector<double> cur(k, 1.0 / std::sqrt(mass));
  std::vector<double> next(k);
  for (int j = 0; j < n; ++j) {
    double a = 0.0;
    for (std::size_t i = 0; i < k; ++i) a += measure.weights[i] * measure.nodes[i] * cur[i] * cur[i];
    rec.a[j] = a;
    if (j + 1 == n) break;
    const double sb = j == 0 ? 0.0 : std::sqrt(rec.b[j]);
    double norm2 = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      next[i] = (measure.nodes[i] - a) * cur[i] - sb * prev[i];
      norm2 += measure.weights[i] * next[i] * next[i];
    }
    rec.b[j + 1] = norm2;
    const double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t i = 0; i < k; ++i) next[i] *= inv;
    std::swap(prev, cur);
    std::swap(cur, next);
  }
  return rec;
}

Rule1D golub_welsch(const Recurrence& rec, int n) {
  if (n < 1 || n > rec.size()) throw std::invalid_argument("golub_welsch: recurrence too short");
  Eigen::VectorXd diag(n);
  Eigen::VectorXd sub(std::max(n - 1, 0));
  for (int i = 0; i < n; ++i) diag[i] = rec.a[i];
  for (int i = 0; i + 1 < n; ++i) sub[i] = std::sqrt(rec.b[i + 1]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  Rule1D rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = es.eigenvalues()[i];
    const double v0 = es.eigenvectors()(0, i);
    rule.weights[i] = rec.b[0] * v0 * v0;
  }
  return rule;
}

void eval_orthonormal(const Recurrence& rec, int deg, double x, std::span<double> p,
                      std::span<double> dp, std::span<double> d2p) {
  if (deg + 1 > rec.size()) throw std::invalid_argument("eval_orthonormal: recurrence too short");
  p[0] = 1.0 / std::sqrt(rec.b[0]);
  dp[0] = 0.0;
  d2p[0] = 0.0;
  for (int n = 0; n < deg; ++n) {
    const double sb_next = std::sqrt(rec.b[n + 1]);
    const double sb = n == 0 ? 0.0 : std::sqrt(rec.b[n]);
    const double pm = n == 0 ? 0.0 : p[n - 1];
    const double dpm = n == 0 ? 0.0 : dp[n - 1];
    const double d2pm = n == 0 ? 0.0 : d2p[n - 1];
    const double shift = x - rec.a[n];
    p[n + 1] = (shift * p[n] - sb * pm) / sb_next;
    dp[n + 1] = (shift * dp[n] + p[n] - sb * dpm) / sb_next;
    d2p[n + 1] = (shift * d2p[n] + 2.0 * dp[n] - sb * d2pm) / sb_next;
  }
}

}  // namespace polyflow
