#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "polyflow/potential.hpp"
#include "polyflow/quadrature.hpp"

namespace polyflow {

/// Tensor quadrature in configuration space together with the basis values at
/// its nodes: sum_k weights[k] f(points.row(k)) approximates the integral of f M dq.
struct QRule {
  Eigen::MatrixXd points;  ///< nodes x dim_q
  Eigen::VectorXd weights;
  Eigen::MatrixXd values;  ///< nodes x N_b, basis function values

  int size() const noexcept { return static_cast<int>(weights.size()); }
};

/// Orthonormal polynomial basis of L^2(M dq) with total-degree truncation.
///
/// Basis function alpha is P_alpha(q) = prod_i p_{alpha_i}(q_i) where p_n are
/// the orthonormal polynomials of the one-dimensional factor m1. Index 0 is the
/// constant 1, indices 1..dim_q are the linear modes q_i, and so on by degree.
/// All operator matrices are Galerkin matrices <P_alpha, (op) P_beta>_M, so a
/// coefficient vector's Euclidean norm is the weighted L^2 norm.
class QBasis {
 public:
  using Index = std::array<int, 3>;

  const Potential& potential() const noexcept { return potential_; }
  int dim_q() const noexcept { return dim_q_; }
  int degree() const noexcept { return n_q_; }
  int size() const noexcept { return static_cast<int>(indices_.size()); }
  double thermal_scale() const noexcept { return potential_.thermal_scale(); }

  const std::vector<Index>& indices() const noexcept { return indices_; }
  int total_degree(int k) const;
  /// Position of a multi-index in the basis, or -1 if truncated away.
  int find(const Index& alpha) const;

  const Recurrence& recurrence() const noexcept { return rec_; }

  /// d/dq_i, multiply by q_i, multiply by dphi/dq_i and by q_i^2.
  const Eigen::MatrixXd& D(int i) const { return d_[i]; }
  const Eigen::MatrixXd& Q(int i) const { return q_[i]; }
  const Eigen::MatrixXd& A(int i) const { return a_[i]; }
  const Eigen::MatrixXd& S(int i) const { return s_[i]; }
  /// Galerkin matrix of L g = -(1/M) div_q (M grad_q g).
  const Eigen::MatrixXd& L() const noexcept { return l_; }
  /// <q>^2 = 1 + |q|^2 weight: |<q> h|^2_M = h^T W h for h in the span.
  const Eigen::MatrixXd& W() const noexcept { return w_; }
  /// Multiply by q_j dphi/dq_i (stretching source), and q_j d/dq_i (stretching drift).
  const Eigen::MatrixXd& B(int i, int j) const { return b_[i * dim_q_ + j]; }
  const Eigen::MatrixXd& T(int i, int j) const { return t_[i * dim_q_ + j]; }
  /// Coefficients of q_j dphi/dq_i, so that the integral of q_j dphi/dq_i g M dq
  /// is c(i, j) . g for g in the span.
  const Eigen::VectorXd& c(int i, int j) const { return c_[i * dim_q_ + j]; }

  /// One-dimensional Galerkin matrix of multiplication by f on degrees 0..N_q,
  /// computed on the fine reference quadrature.
  template <class F>
  Eigen::MatrixXd axis_multiplier(F&& f) const {
    const int n = n_q_ + 1;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < ref_values_.rows(); ++k) {
      const double w = ref_.weights[k] * f(ref_.nodes[k]);
      m.noalias() += w * ref_values_.row(k).transpose() * ref_values_.row(k);
    }
    return m;
  }
  /// Lifts per-axis one-dimensional matrices (nullptr = identity) to the basis.
  Eigen::MatrixXd lift(const std::array<const Eigen::MatrixXd*, 3>& per_axis) const;

  /// Gauss rule with N_q + 2 nodes per axis (positivity monitor, reconstruction).
  const QRule& reconstruction_rule() const noexcept { return recon_; }
  /// Rule for non-polynomial integrands (entropy, dissipation): the fine
  /// reference rule for dim_q = 1, tensor Gauss with N_q + 4 nodes otherwise.
  const QRule& diagnostic_rule() const noexcept { return diag_; }
  /// Fine one-dimensional reference discretization of the factor measure.
  const Rule1D& reference_rule() const noexcept { return ref_; }

  /// Largest deviation of the discrete Gram matrix from the identity.
  double orthonormality_error() const noexcept { return gram_error_; }

 private:
  friend QBasis build_basis(const Potential& p, int n_q);

  QRule tensor_rule(const Rule1D& r) const;

  Potential potential_;
  int dim_q_ = 1;
  int n_q_ = 0;
  std::vector<Index> indices_;
  Recurrence rec_;
  Rule1D ref_;
  Eigen::MatrixXd ref_values_;  // reference nodes x (N_q + 1)
  std::vector<Eigen::MatrixXd> d_, q_, a_, s_, b_, t_;
  std::vector<Eigen::VectorXd> c_;
  Eigen::MatrixXd l_, w_;
  QRule recon_, diag_;
  double gram_error_ = 0.0;
};

/// Builds the basis for a separable potential with total degree <= n_q (n_q >= 2).
QBasis build_basis(const Potential& p, int n_q);

/// <f, g>_M for coefficient vectors (Euclidean dot product by orthonormality).
double weighted_inner(const QBasis& b, const Eigen::VectorXd& f, const Eigen::VectorXd& g);

Eigen::VectorXd apply_L(const QBasis& b, const Eigen::VectorXd& g);

/// Lowest eigenvalues of L_G, ascending.
std::vector<double> lowest_eigenvalues(const QBasis& b, int count);

/// C = 1 / lambda_1 with lambda_1 the smallest eigenvalue of L_G on mean-zero vectors.
double poincare_constant(const QBasis& b);

struct PoincareRatios {
  static constexpr int kCount = 4;
  static constexpr std::array<const char*, kCount> kNames = {
      "|grad U g| / |grad g|", "|q g| / |grad g|", "|q| |grad U| g / |<q> grad g|",
      "|q|^2 g / |<q> grad g|"};
  std::array<double, kCount> max_ratio{};
  int trials = 0;
  int evaluated = 0;
  bool zero_input = false;

  std::string to_text() const;
};

/// Ratios of the weighted Poincare-type inequalities for the given mean-zero
/// coefficient vectors (each vector is projected to mean zero first).
PoincareRatios poincare_ratios(const QBasis& b, const std::vector<Eigen::VectorXd>& samples);

/// Same for `trials` random mean-zero vectors with decaying spectra.
PoincareRatios weighted_poincare_check(const QBasis& b, int trials, std::uint64_t seed = 1);

}  // namespace polyflow
