#pragma once

#include <span>
#include <vector>

namespace polyflow {

/// One-dimensional quadrature rule: sum_k weights[k] * f(nodes[k]).
struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const noexcept { return nodes.size(); }
};

/// Three-term recurrence of orthonormal polynomials,
///   sqrt(b[n+1]) p_{n+1}(x) = (x - a[n]) p_n(x) - sqrt(b[n]) p_{n-1}(x),
/// with b[0] holding the total mass of the measure.
struct Recurrence {
  std::vector<double> a;
  std::vector<double> b;

  int size() const noexcept { return static_cast<int>(a.size()); }
};

/// Gauss-Legendre rule with n nodes on [lo, hi] (Newton iteration on P_n).
Rule1D gauss_legendre(int n, double lo, double hi);

/// Discretized Stieltjes procedure: the first n recurrence coefficients of the
/// measure represented by `measure` (nodes and positive weights).
Recurrence stieltjes(const Rule1D& measure, int n);

/// Golub-Welsch: n-point Gauss rule from the recurrence (needs rec.size() >= n).
Rule1D golub_welsch(const Recurrence& rec, int n);

/// Evaluates orthonormal polynomials p_0..p_deg at x together with their first
/// and second derivatives. Output spans must hold deg + 1 entries.
void eval_orthonormal(const Recurrence& rec, int deg, double x, std::span<double> p,
                      std::span<double> dp, std::span<double> d2p);

}  // namespace polyflow
