#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>

#include "polyflow/qbasis.hpp"
#include "polyflow/xgrid.hpp"

namespace polyflow {

/// Physical parameters. Pressure law P(rho) = a rho^gamma; defaults 1 except gamma = 2.
struct ModelParams {
  double mu = 1.0;
  double xi = 1.0;
  double a = 1.0;
  double gamma = 2.0;
  double sigma = 1.0;
  double r = 1.0;
  double lambda = 1.0;
  double De = 1.0;
  double Ma = 1.0;

  /// Throws ParameterError naming the first violated constraint.
  void validate() const;

  double theta() const { return sigma * r; }
  /// Coupling of the polymer stress and weight of the entropy: lambda sigma / De.
  double kappa() const { return lambda * sigma / De; }
  /// Rate in front of L in the g equation.
  double relaxation_rate() const { return sigma / De; }
  /// Linearized sound speed squared P'(1) / Ma^2.
  double sound_speed_sq() const { return a * gamma / (Ma * Ma); }
  /// P'(1 + rho) / (Ma^2 (1 + rho)).
  double pressure_coefficient(double one_plus_rho) const;

  bool operator==(const ModelParams&) const = default;
};

/// Fluctuation (rho, u, g) around (1, 0, M) at time t.
///
/// rho: grid field; u: grid x dim_x (one column per component); g: grid x N_b,
/// row p holding the basis coefficients of g(x_p, .). Psi = M (1 + g).
struct FlowState {
  Eigen::VectorXd rho;
  Eigen::MatrixXd u;
  Eigen::MatrixXd g;
  double t = 0.0;

  static FlowState zero(const TorusGrid& grid, const QBasis& basis);
  /// Throws ParameterError unless the shapes match grid and basis.
  void check_shape(const TorusGrid& grid, const QBasis& basis) const;

  FlowState& operator+=(const FlowState& o);
  FlowState& operator*=(double s);
};

FlowState operator+(FlowState a, const FlowState& b);
FlowState operator-(FlowState a, const FlowState& b);
FlowState operator*(double s, FlowState a);

/// Functionals and diagnostics of one state (or of a step, for the audit fields).
struct EnergyReport {
  double t = 0.0;
  // E = rho_part + u_part + g_part
  double e_rho = 0.0, e_u = 0.0, e_g = 0.0, E = 0.0;
  // D = viscous + divergence + g_part
  double d_visc = 0.0, d_div = 0.0, d_g = 0.0, D = 0.0;
  double e_eta = 0.0, d_eta = 0.0, cross = 0.0;
  // energy law: relative total energy (total minus baseline), parts, dissipation
  double kinetic = 0.0, internal = 0.0, entropy = 0.0;
  double e_total = 0.0, baseline = 0.0;
  double d_total = 0.0, d_polymer = 0.0;
  /// -2 kappa int m div u: the right-hand side of the energy balance.
  double defect = 0.0;
  double audit_residual = 0.0, audit_normalized = 0.0;
  double min_one_plus_g = 1.0, min_one_plus_rho = 1.0;
  double max_abs_m = 0.0, mean_m = 0.0, mass = 0.0;
  int picard_iterations = 0;
  double picard_last_ratio = 0.0;
};

struct EnergyParts {
  double rho = 0.0, u = 0.0, g = 0.0;
  double total() const { return rho + u + g; }
};

/// |rho|^2_{H^s} + |u|^2_{H^s} + || <q> g ||^2 in the mixed H^s norm (s <= 3).
EnergyParts energy_E(const FlowState& s, const QBasis& b, const TorusGrid& grid, int order = 3);

struct DissipationParts {
  double visc = 0.0, div = 0.0, g = 0.0;
  double total() const { return visc + div + g; }
};

/// mu |grad u|^2_{H^s} + (mu + xi) |div u|^2_{H^s} + || <q> grad_q g ||^2 mixed H^s.
DissipationParts dissipation_D(const FlowState& s, const ModelParams& p, const QBasis& b,
                               const TorusGrid& grid, int order = 3);

struct EtaFunctionals {
  double E = 0.0, D = 0.0, cross = 0.0;
};

/// E_eta and D_eta with the eta-weighted mixed norm and the u / grad rho cross term.
EtaFunctionals energy_eta(const FlowState& s, const ModelParams& p, const QBasis& b,
                          const TorusGrid& grid, double eta);

struct TotalEnergy {
  double kinetic = 0.0, internal = 0.0, entropy = 0.0;
  /// Total energy minus its equilibrium value.
  double energy = 0.0;
  double baseline = 0.0;
  double d_viscous = 0.0, d_polymer = 0.0, dissipation = 0.0;
  double defect = 0.0;
};

/// Energy and dissipation of the primitive system evaluated on the fluctuation,
/// by grid sums in x and the diagnostic quadrature in q. gamma > 1 required.
TotalEnergy total_energy_and_dissipation(const FlowState& s, const ModelParams& p,
                                         const QBasis& b, const TorusGrid& grid);

/// m(x) = integral of g M dq, the constant-mode coefficient.
Eigen::VectorXd mean_in_q(const FlowState& s);

/// Minimum of 1 + g over grid points and reconstruction nodes.
double min_one_plus_g(const FlowState& s, const QBasis& b);

/// int int Psi dq dx.
double polymer_mass(const FlowState& s, const TorusGrid& grid);

/// Throws VacuumError if 1 + rho <= 0 somewhere.
void check_density(const FlowState& s);

/// Fills every state-only field of the report (everything but the audit and Picard data).
EnergyReport make_report(const FlowState& s, const ModelParams& p, const QBasis& b,
                         const TorusGrid& grid, double eta, bool with_total = true);

/// (1 + g) log(1 + g) - g, accurate for small g.
double entropy_density(double g);

}  // namespace polyflow
