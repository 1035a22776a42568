#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "polyflow/state.hpp"

namespace polyflow {

/// Time derivative of a FlowState (t is unused).
using Rhs = FlowState;

/// Velocity gradient fields A[i * dim_x + j] = d u_i / d x_j.
std::vector<Eigen::VectorXd> velocity_gradient(const Eigen::MatrixXd& u, const TorusGrid& grid);

/// Precomputed q-space coupling matrices of one basis restricted to the first
/// dim_x configuration axes (the flow acts on q through grad u only).
///
/// stretch(i, j) = T_ij - B_ij + 2 delta_ij I, so that the g-products of the
/// micro equation are sum_ij A_ij * g stretch(i, j)^T, and c(i, j) gives both the
/// stress and the g-independent stretching source.
class Coupling {
 public:
  Coupling(const QBasis& b, int dim_x);
  int dim_x() const noexcept { return dim_x_; }
  const Eigen::MatrixXd& stretch(int i, int j) const { return stretch_[i * dim_x_ + j]; }
  const Eigen::VectorXd& c(int i, int j) const { return c_[i * dim_x_ + j]; }
  /// Row 0 of T_ij: integral of q_j d_i g against M (alternative stress form).
  const Eigen::VectorXd& t0(int i, int j) const { return t0_[i * dim_x_ + j]; }

 private:
  int dim_x_;
  std::vector<Eigen::MatrixXd> stretch_;
  std::vector<Eigen::VectorXd> c_, t0_;
};

/// tau_ij = kappa * c_ij . g at every grid point; column i * dim_x + j.
Eigen::MatrixXd stress_tau(const FlowState& s, const ModelParams& p, const QBasis& b,
                           int dim_x);

struct StressDivergence {
  Eigen::MatrixXd div;  ///< grid x dim_x
  bool alternative_checked = false;
  double max_abs_m = 0.0;
  double gap = 0.0;  ///< max difference between the two forms when checked
  std::string note;
};

/// div_x tau (divergence over the second index). When max |m| < 1e-10 the form
/// kappa sum_j d_j (integral of q_j d_{q_i} g M dq) is evaluated as well and must agree.
StressDivergence stress_divergence(const FlowState& s, const ModelParams& p, const QBasis& b,
                                   const TorusGrid& grid);

/// sum_ij A_ij c_ij: the g-independent part of (1 + g) grad u q . grad phi.
Eigen::MatrixXd stretching_source(const std::vector<Eigen::VectorXd>& grad_u,
                                  const Coupling& cp, int n_points);

/// Dealiased u . grad g + sum_ij A_ij g stretch(i, j)^T (all g-products of the micro equation).
Eigen::MatrixXd micro_transport(const Eigen::MatrixXd& g, const Eigen::MatrixXd& u,
                                const std::vector<Eigen::VectorXd>& grad_u, const Coupling& cp,
                                const TorusGrid& grid);

/// Fluid part of the perturbation system given the stress divergence.
void fluid_rhs(const FlowState& s, const Eigen::MatrixXd& div_tau, const ModelParams& p,
               const TorusGrid& grid, Eigen::VectorXd& drho, Eigen::MatrixXd& du);

/// div Sigma(u) = mu Lap u + (mu + xi) grad div u, spectrally.
Eigen::MatrixXd viscous_divergence(const Eigen::MatrixXd& u, const ModelParams& p,
                                   const TorusGrid& grid);

/// Right-hand side of the perturbation system; all products dealiased.
Rhs rhs_perturbation(const FlowState& s, const ModelParams& p, const QBasis& b,
                     const TorusGrid& grid);
Rhs rhs_perturbation(const FlowState& s, const ModelParams& p, const QBasis& b,
                     const TorusGrid& grid, const Coupling& cp);

struct CancellationResult {
  double residual = 0.0;      ///< max over |alpha| = order of |T1 + T2| / (|T1| + |T2|)
  double stress_term = 0.0;   ///< T1 at the maximizing alpha
  double source_term = 0.0;   ///< T2 at the maximizing alpha
  bool degenerate = false;    ///< both terms vanish for every alpha
  double max_abs_m = 0.0;
};

/// Pairing of the stress divergence tested with u against the stretching source
/// tested with g, at derivative order |alpha| = order (unit coupling constants).
CancellationResult cancellation_residual(const FlowState& s, const QBasis& b,
                                         const TorusGrid& grid, int order);

}  // namespace polyflow
