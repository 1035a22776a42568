#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "polyflow/quadrature.hpp"

namespace polyflow {

enum class PotentialKind { kHookean, kFene };

/// Configuration-space support: all of R^d, or the ball |q| < radius.
struct Support {
  bool bounded = false;
  double radius = 0.0;
};

struct FeneOptions {
  /// sigma * r of the model the potential is used with.
  double thermal_scale = 1.0;
  /// Reject k / theta <= 1, for which the moment of |grad U|^2 against M diverges.
  /// Disabled only to inspect such potentials with the assumption validator.
  bool enforce_moment_bound = true;
};

/// Elastic spring potential U(q) and its equilibrium density.
///
/// The Maxwellian is M(q) = exp(-U(q)/theta) / Z, the stationary density of the
/// configuration diffusion with drift -(1/r) grad U and diffusivity sigma, where
/// theta = sigma * r. All "reduced" quantities refer to phi = U / theta, so that
/// M = exp(-phi) / Z and grad log M = -grad phi.
///
/// Both supported potentials are separable: U(q) = sum_i u1(q_i). FENE is only
/// available with dim_q = 1.
class Potential {
 public:
  PotentialKind kind() const noexcept { return kind_; }
  std::string name() const;
  int dim_q() const noexcept { return dim_q_; }
  bool separable() const noexcept { return true; }
  Support support() const noexcept { return support_; }
  double thermal_scale() const noexcept { return theta_; }

  /// Spring stiffness (FENE k, 1 for Hookean) and maximal extension (FENE only).
  double stiffness() const noexcept { return k_; }
  double max_extension() const noexcept { return b0_; }

  /// Physical potential U, its gradient and Laplacian. Outside the support U = +inf.
  double energy(std::span<const double> q) const;
  void gradient(std::span<const double> q, std::span<double> out) const;
  double laplacian(std::span<const double> q) const;

  /// One-dimensional factor u1 and its derivatives (physical units).
  double factor(double x) const;
  double factor_d1(double x) const;
  double factor_d2(double x) const;

  /// Reduced factor phi1 = u1 / theta and derivatives.
  double reduced(double x) const { return factor(x) / theta_; }
  double reduced_d1(double x) const { return factor_d1(x) / theta_; }
  double reduced_d2(double x) const { return factor_d2(x) / theta_; }

  /// Bounded supports only: reduced derivatives and m1 at x = radius - gap,
  /// evaluated without cancellation as gap -> 0 (valid for 0 < gap < 2 radius).
  double reduced_d1_gap(double gap) const;
  double reduced_d2_gap(double gap) const;
  double factor_density_gap(double gap) const;

  /// Taylor coefficients phi1^(j)(x) / j!, j = 0..coeffs.size()-1. For bounded
  /// supports pass gap = radius - x (computed by the caller without cancellation).
  void reduced_taylor(double x, double gap, std::span<double> coeffs) const;

  /// Taylor coefficients of sqrt(m1) about x, same conventions as reduced_taylor.
  void sqrt_density_taylor(double x, double gap, std::span<double> coeffs) const;

  /// Z = integral of exp(-phi) over the support, and the 1-D factor Z1 (Z = Z1^d).
  double normalization() const noexcept { return z1_ == 0.0 ? 0.0 : std::pow(z1_, dim_q_); }
  double factor_normalization() const noexcept { return z1_; }

  /// Normalized Maxwellian M(q) and its 1-D factor m1(x).
  double maxwellian(std::span<const double> q) const;
  double factor_density(double x) const;

  /// Quadrature discretizing the 1-D factor measure m1(x) dx with n nodes.
  /// All-space supports are truncated where the density (times a polynomial of
  /// degree `poly_degree`) drops below 1e-16 of its peak; the ball uses the
  /// substitution x = b0 sin(t) so endpoint behaviour is resolved for any k.
  Rule1D reference_rule(int n, int poly_degree = 0) const;

  /// Radius R with m1(R) / m1(0) * (1 + R)^poly_degree <= tol (all-space only).
  double truncation_radius(double tol, int poly_degree = 0) const;

 private:
  friend Potential make_hookean(double sigma, double r, int dim_q);
  friend Potential make_fene(double k, double b0, FeneOptions options);

  void compute_normalization();

  PotentialKind kind_ = PotentialKind::kHookean;
  int dim_q_ = 1;
  Support support_{};
  double theta_ = 1.0;
  double k_ = 1.0;
  double b0_ = 0.0;
  double z1_ = 0.0;
};

/// U(q) = |q|^2 / 2 on R^dim_q with thermal scale theta = sigma * r.
Potential make_hookean(double sigma, double r, int dim_q);

/// U(q) = -k ln(1 - q^2 / b0^2) on (-b0, b0), dim_q = 1.
Potential make_fene(double k, double b0, FeneOptions options = {});

}  // namespace polyflow
