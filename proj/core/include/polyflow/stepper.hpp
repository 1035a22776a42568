#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "polyflow/dynamics.hpp"
#include "polyflow/error.hpp"

namespace polyflow {

enum class Scheme { kImex, kPicard };

struct StepConfig {
  double dt = 1e-2;
  double t_end = 1.0;
  Scheme scheme = Scheme::kImex;
  /// 1: IMEX Euler; 2: trapezoid on the stiff part, midpoint on the explicit part.
  int order = 1;
  double picard_tol = 1e-10;
  int picard_max_iter = 50;
  double cfl_safety = 0.5;
  bool audit = true;
  double eta = 0.1;
  /// Relative slack (times E(0)) before an increase of E counts as a violation.
  double monotone_tol = 1e-9;

  void validate() const;
  int steps() const;
};

/// Iterates of one Picard step: diffs[k] = E0(s^{k+1} - s^k), ratios[k] = diffs[k+1] / diffs[k].
struct PicardTrace {
  std::vector<double> diffs;
  std::vector<double> ratios;
  int iterations = 0;
  bool converged = false;
  std::string termination;
};

/// Linear stiff operator A (acoustic pair at (1, 0), viscosity, relaxation) and
/// the solves (I - h A) used by both schemes.
class ImplicitOperator {
 public:
  ImplicitOperator(const ModelParams& p, const QBasis& b, const TorusGrid& grid);
  /// Fluid block only; g is left untouched.
  ImplicitOperator(const ModelParams& p, const TorusGrid& grid);

  FlowState apply(const FlowState& s) const;
  /// (I - h A)^{-1} rhs.
  FlowState solve(const FlowState& rhs, double h) const;
  /// Only the (rho, u) block; rho and u are overwritten.
  void solve_fluid(Eigen::VectorXd& rho, Eigen::MatrixXd& u, double h) const;
  /// g (I + h rate L)^{-1}.
  Eigen::MatrixXd solve_micro(const Eigen::MatrixXd& g, double h) const;

 private:
  const Eigen::MatrixXd& micro_inverse(double h) const;

  ModelParams p_;
  const QBasis* b_;
  const TorusGrid* grid_;
  mutable std::mutex mutex_;
  mutable std::map<double, std::shared_ptr<Eigen::MatrixXd>> cache_;
};

/// Largest admissible dt: safety * min(dx / max|u|, 1 / (max|grad u| N_q)); +inf at rest.
double cfl_limit(const FlowState& s, const QBasis& b, const TorusGrid& grid, double safety);

/// One IMEX step of the given order; throws CflError if dt exceeds the CFL limit.
FlowState step_imex(const FlowState& s, const ModelParams& p, const QBasis& b,
                    const TorusGrid& grid, double dt, int order = 1, double cfl_safety = 0.5);

/// Appends E0(s^{k+1} - s^k) and its ratio to the trace. Throws NonContractionError
/// when the value is not finite or the last 3 ratios are all >= 1.
void record_picard_difference(PicardTrace& trace, double diff);

/// Backward-Euler step whose nonlinear system is solved by freezing coefficients at the
/// previous iterate. Throws NonContractionError after 3 consecutive ratios >= 1.
/// A non-positive cfl_safety skips the CFL precondition (exploration only).
std::pair<FlowState, PicardTrace> step_picard(const FlowState& s, const ModelParams& p,
                                              const QBasis& b, const TorusGrid& grid, double dt,
                                              double tol = 1e-10, int max_iter = 50,
                                              double cfl_safety = 0.5);

struct AuditResult {
  double residual = 0.0;
  double normalized = 0.0;
};

/// Discrete energy balance over one step: difference quotient of the total energy
/// plus the trapezoidal dissipation minus the trapezoidal defect.
AuditResult energy_audit(const EnergyReport& before, const EnergyReport& after, double dt);
AuditResult energy_audit(const FlowState& before, const FlowState& after, const ModelParams& p,
                         const QBasis& b, const TorusGrid& grid);

struct TrajectoryRecord {
  std::vector<EnergyReport> reports;  ///< report 0 is the initial state
  std::vector<PicardTrace> picard;
  std::string termination = "completed";
  std::optional<ExitCode> error;
  int monotonicity_violations = 0;
  double max_relative_increase = 0.0;
  bool positivity_lost = false;
  double max_energy_ratio = 1.0;  ///< max E(t) / E(0)
  double integral_D = 0.0;
  double integral_abs_residual = 0.0;
  double max_mass_drift = 0.0;

  bool completed() const { return !error.has_value(); }
};

struct SimulationInput {
  ModelParams params;
  const QBasis* basis = nullptr;
  const TorusGrid* grid = nullptr;
  StepConfig step;
  FlowState initial;
  /// Called after every accepted step (and once for the initial state) with the step index.
  std::function<void(int, const FlowState&, const EnergyReport&)> observer;
};

/// Advances to t_end. Step errors end the run and are recorded, not thrown.
TrajectoryRecord simulate(const SimulationInput& in);

}  // namespace polyflow
