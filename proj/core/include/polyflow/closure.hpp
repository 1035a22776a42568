#pragma once

#include <Eigen/Dense>
#include <vector>

#include "polyflow/stepper.hpp"

namespace polyflow {

/// Macroscopic state of the closed Hookean model.
///
/// C: grid x dim_q^2, column i * dim_q + j holding C_ij = integral of q_i q_j Psi dq.
/// n: integral of Psi dq. At equilibrium C = theta I and n = 1.
struct MomentState {
  Eigen::VectorXd rho;
  Eigen::MatrixXd u;
  Eigen::MatrixXd C;
  Eigen::VectorXd n;
  double t = 0.0;

  int dim_q() const;
  static MomentState equilibrium(const TorusGrid& grid, int dim_q, double theta);

  MomentState& operator+=(const MomentState& o);
  MomentState& operator*=(double s);
};

MomentState operator+(MomentState a, const MomentState& b);
MomentState operator-(MomentState a, const MomentState& b);
MomentState operator*(double s, MomentState a);

/// Throws UnsupportedError unless the potential is Hookean (the moment system is
/// not closed otherwise).
void require_closure(const Potential& potential);

/// Second moments and mass of the kinetic state (exact for g in the basis span).
MomentState moments_from_kinetic(const FlowState& s, const QBasis& b);

/// Columns i * dim_x + j of the polymer stress (lambda / (De r)) (C - theta I).
Eigen::MatrixXd moment_stress(const MomentState& ms, const ModelParams& p, int dim_x);

/// Pointwise part of the closed equation: A C + C A^T - tr(A) C + (2 sigma n I - (2 / r) C) / De
/// for a dim_q x dim_q velocity gradient a (zero beyond the spatial axes).
Eigen::MatrixXd local_moment_rate(const Eigen::MatrixXd& c, const Eigen::MatrixXd& a, double n,
                                  const ModelParams& p);

/// C_t = -div(u C) + A C + C A^T + (2 sigma n I - (2 / r) C) / De,  n_t = -div(u n),
/// with A_ij = d_j u_i acting on the first dim_x axes; fluid part as in dynamics.
MomentState closed_moment_rhs(const MomentState& ms, const ModelParams& p, const TorusGrid& grid);

/// IMEX step of the moment system matching step_imex: the moment image of the
/// relaxation solve is implicit in C, the acoustic-viscous pair as in the kinetic scheme.
MomentState step_moment_imex(const MomentState& ms, const ModelParams& p, const TorusGrid& grid,
                             double dt, int order = 1);

/// ||C_a - C_b||_F / ||C_b - theta I||_F over the grid (0 if both vanish).
double closure_deviation(const MomentState& kinetic, const MomentState& moment, double theta);

struct ClosureReport {
  std::vector<double> times;
  std::vector<double> deviation;
  double max_deviation = 0.0;
};

/// Runs the kinetic and the moment solver from the same data with the same scheme and
/// records the deviation of the conformation tensors at every step.
ClosureReport closure_compare(const FlowState& initial, const ModelParams& p, const QBasis& b,
                              const TorusGrid& grid, const StepConfig& step);

}  // namespace polyflow
