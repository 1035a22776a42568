#pragma once

#include <string>
#include <vector>

#include "polyflow/potential.hpp"

namespace polyflow {

/// Sampling plan for the structural checks on a potential.
///
/// Pointwise bounds are evaluated on an inner sample set and on an extended one
/// (radius doubled for all-space supports, boundary offset divided by
/// `boundary_shrink` for balls). A bound counts as satisfied when the measured
/// constant does not grow by more than `growth_factor` under the extension.
struct SampleSpec {
  double truncation_tol = 1e-14;  ///< all-space radius R: m1(R) / m1(0) <= tol
  int points_1d = 2001;
  int points_2d = 161;
  int points_3d = 33;
  double boundary_offset = 1e-3;  ///< ball: inner samples stop b0 * offset short
  double boundary_shrink = 100.0;
  double growth_factor = 1.5;
  double quad_tol = 1e-10;
  std::vector<double> delta_grid = {0.0,  0.05, 0.1,  0.15, 0.2,  0.25, 0.3,
                                    0.35, 0.4,  0.45, 0.5,  0.55, 0.6,  0.65,
                                    0.7,  0.75, 0.8,  0.85, 0.9,  0.95};
};

struct CheckResult {
  std::string name;
  std::string statement;
  bool pass = false;
  double value = 0.0;           ///< measured constant on the inner set (or converged integral)
  double extended_value = 0.0;  ///< same on the extended set (or finest quadrature level)
  std::vector<double> witness;  ///< maximizing sample point
  std::string note;
};

struct AssumptionReport {
  std::string potential;
  int dim_q = 1;
  std::string sample_description;
  double inner_extent = 0.0;
  double outer_extent = 0.0;
  std::string derivative_method;

  bool delta_found = false;
  double best_delta = 0.0;
  double best_c = 0.0;
  double grad_moment = 0.0;    ///< integral of |grad phi|^2 M
  double fourth_moment = 0.0;  ///< integral of |q|^4 M

  std::vector<CheckResult> checks;
  bool pass = false;

  const CheckResult* find(const std::string& name) const;
  std::string to_text() const;
  std::string to_key_value() const;
};

/// Checks the growth, Laplacian, moment and derivative conditions on the reduced
/// potential phi = U / theta (so that M = exp(-phi) / Z). Derivatives of order
/// 1..3 are exact Taylor-mode derivatives of the separable factors, so they stay
/// accurate in the boundary layer of the ball where difference quotients lose
/// all digits.
AssumptionReport validate_assumptions(const Potential& p, const SampleSpec& spec = {});

}  // namespace polyflow
