#include "polyflow/closure.hpp"

#include <cmath>
#include <limits>

#include "imex.hpp"

namespace polyflow {

namespace {

MultiIndex unit(int axis) {
  MultiIndex a{0, 0, 0};
  a[axis] = 1;
  return a;
}

int square_root(Eigen::Index cols) {
  const int d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(cols))));
  if (d * d != cols || d < 1 || d > 3) throw ParameterError("C must hold dim_q^2 columns");
  return d;
}

FlowState fluid_view(const MomentState& ms) {
  FlowState f;
  f.rho = ms.rho;
  f.u = ms.u;
  f.t = ms.t;
  return f;
}

}  // namespace

int MomentState::dim_q() const { return square_root(C.cols()); }

MomentState MomentState::equilibrium(const TorusGrid& grid, int dim_q, double theta) {
  MomentState ms;
  ms.rho = Eigen::VectorXd::Zero(grid.size());
  ms.u = Eigen::MatrixXd::Zero(grid.size(), grid.dim());
  ms.C = Eigen::MatrixXd::Zero(grid.size(), dim_q * dim_q);
  for (int i = 0; i < dim_q; ++i) ms.C.col(i * dim_q + i).setConstant(theta);
  ms.n = Eigen::VectorXd::Ones(grid.size());
  return ms;
}

MomentState& MomentState::operator+=(const MomentState& o) {
  rho += o.rho;
  u += o.u;
  C += o.C;
  n += o.n;
  return *this;
}

MomentState& MomentState::operator*=(double s) {
  rho *= s;
  u *= s;
  C *= s;
  n *= s;
  return *this;
}

MomentState operator+(MomentState a, const MomentState& b) { return a += b; }
MomentState operator-(MomentState a, const MomentState& b) { return a += (-1.0) * b; }
MomentState operator*(double s, MomentState a) { return a *= s; }

void require_closure(const Potential& potential) {
  if (potential.kind() != PotentialKind::kHookean)
    throw UnsupportedError("moment closure is exact only for the Hookean potential; " +
                           potential.name() + " has no closed second-moment equation");
}

MomentState moments_from_kinetic(const FlowState& s, const QBasis& b) {
  require_closure(b.potential());
  const int dq = b.dim_q();
  const double theta = b.thermal_scale();
  MomentState ms;
  ms.rho = s.rho;
  ms.u = s.u;
  ms.t = s.t;
  ms.C.resize(s.g.rows(), dq * dq);
  const Eigen::VectorXd e0 = Eigen::VectorXd::Unit(b.size(), 0);
  for (int i = 0; i < dq; ++i)
    for (int j = 0; j < dq; ++j) {
      // coefficients of q_i q_j in the orthonormal basis
      const Eigen::VectorXd w = b.Q(i) * (b.Q(j) * e0);
      ms.C.col(i * dq + j) = s.g * w;
      if (i == j) ms.C.col(i * dq + j).array() += theta;
    }
  ms.n = (1.0 + s.g.col(0).array()).matrix();
  return ms;
}

Eigen::MatrixXd moment_stress(const MomentState& ms, const ModelParams& p, int dim_x) {
  const int dq = ms.dim_q();
  const double scale = p.lambda / (p.De * p.r);
  Eigen::MatrixXd tau(ms.C.rows(), dim_x * dim_x);
  for (int i = 0; i < dim_x; ++i)
    for (int j = 0; j < dim_x; ++j) {
      tau.col(i * dim_x + j) = scale * ms.C.col(i * dq + j);
      if (i == j) tau.col(i * dim_x + j).array() -= scale * p.theta();
    }
  return tau;
}

Eigen::MatrixXd local_moment_rate(const Eigen::MatrixXd& c, const Eigen::MatrixXd& a, double n,
                                  const ModelParams& p) {
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(c.rows(), c.cols());
  return a * c + c * a.transpose() - a.trace() * c +
         (2.0 * p.sigma * n * id - (2.0 / p.r) * c) / p.De;
}

MomentState closed_moment_rhs(const MomentState& ms, const ModelParams& p, const TorusGrid& grid) {
  const int d = grid.dim();
  const int dq = ms.dim_q();
  const int npts = grid.size();
  if (dq < d) throw ParameterError("configuration dimension must be at least the spatial dimension");
  MomentState r;
  r.t = ms.t;

  const Eigen::MatrixXd tau = moment_stress(ms, p, d);
  const Eigen::MatrixXcd th = grid.forward_columns(tau);
  Eigen::MatrixXcd dh = Eigen::MatrixXcd::Zero(grid.spectral_size(), d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int s = 0; s < grid.spectral_size(); ++s)
        dh(s, i) += grid.derivative_symbol(s, unit(j)) * th(s, i * d + j);
  fluid_rhs(fluid_view(ms), grid.backward_columns(dh), p, grid, r.rho, r.u);

  const auto grad_u = velocity_gradient(ms.u, grid);
  Eigen::VectorXd div = Eigen::VectorXd::Zero(npts);
  for (int i = 0; i < d; ++i) div += grad_u[i * d + i];

  // transport of [C, n]
  Eigen::MatrixXd fields(npts, dq * dq + 1);
  fields.leftCols(dq * dq) = ms.C;
  fields.col(dq * dq) = ms.n;
  const Eigen::MatrixXcd fh = grid.forward_columns(fields);
  Eigen::MatrixXd prod = Eigen::MatrixXd::Zero(npts, dq * dq + 1);
  for (int a = 0; a < d; ++a) {
    Eigen::MatrixXcd h = fh;
    grid.apply_symbol(h, unit(a));
    prod.noalias() += ms.u.col(a).asDiagonal() * grid.backward_columns(h);
  }
  prod *= -1.0;
  prod.col(dq * dq) -= div.cwiseProduct(ms.n);
  // local rate, including -div u C; linear terms of retained fields pass the filter unchanged
  for (int x = 0; x < npts; ++x) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dq, dq);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) a(i, j) = grad_u[i * d + j][x];
    const Eigen::MatrixXd c = ms.C.row(x).reshaped(dq, dq).transpose();
    const Eigen::MatrixXd rate = local_moment_rate(c, a, ms.n[x], p);
    prod.row(x).head(dq * dq) += rate.transpose().reshaped().transpose();
  }
  const Eigen::MatrixXd dp = grid.dealias_columns(prod);
  r.C = dp.leftCols(dq * dq);
  r.n = dp.col(dq * dq);
  return r;
}

MomentState step_moment_imex(const MomentState& ms, const ModelParams& p, const TorusGrid& grid,
                             double dt, int order) {
  if (!(dt > 0.0)) throw ParameterError("dt must be positive");
  if (order != 1 && order != 2) throw ParameterError("order must be 1 or 2");
  const int dq = ms.dim_q();
  const ImplicitOperator op(p, grid);
  const double rate = 2.0 / (p.De * p.r);
  const double theta = p.theta();

  // relaxation image: A (C, n) = (-rate (C - theta n I), 0)
  const auto deviation = [&](const MomentState& s) {
    Eigen::MatrixXd dev = s.C;
    for (int i = 0; i < dq; ++i) dev.col(i * dq + i) -= theta * s.n;
    return dev;
  };
  const auto apply = [&](const MomentState& s) {
    const FlowState f = op.apply(fluid_view(s));
    MomentState a;
    a.t = s.t;
    a.rho = f.rho;
    a.u = f.u;
    a.C = -rate * deviation(s);
    a.n = Eigen::VectorXd::Zero(s.n.size());
    return a;
  };
  const auto solve = [&](const MomentState& rhs, double h) {
    MomentState y = rhs;
    op.solve_fluid(y.rho, y.u, h);
    y.C = deviation(rhs) / (1.0 + h * rate);
    for (int i = 0; i < dq; ++i) y.C.col(i * dq + i) += theta * rhs.n;
    return y;
  };
  const auto explicit_part = [&](const MomentState& s) {
    return closed_moment_rhs(s, p, grid) - apply(s);
  };
  return detail::imex_step(ms, dt, order, explicit_part, apply, solve);
}

double closure_deviation(const MomentState& kinetic, const MomentState& moment, double theta) {
  const int dq = moment.dim_q();
  Eigen::MatrixXd fluct = moment.C;
  for (int i = 0; i < dq; ++i) fluct.col(i * dq + i).array() -= theta;
  const double num = (kinetic.C - moment.C).norm();
  const double den = fluct.norm();
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return num / den;
}

ClosureReport closure_compare(const FlowState& initial, const ModelParams& p, const QBasis& b,
                              const TorusGrid& grid, const StepConfig& step) {
  require_closure(b.potential());
  p.validate();
  step.validate();
  initial.check_shape(grid, b);
  if (std::abs(b.thermal_scale() - p.theta()) > 1e-12 * p.theta())
    throw ParameterError("basis thermal scale does not match sigma * r");
  ClosureReport rep;
  FlowState kin = initial;
  MomentState mom = moments_from_kinetic(initial, b);
  const auto record = [&](double t) {
    const double dev = closure_deviation(moments_from_kinetic(kin, b), mom, p.theta());
    rep.times.push_back(t);
    rep.deviation.push_back(dev);
    rep.max_deviation = std::max(rep.max_deviation, dev);
  };
  record(initial.t);
  for (int n = 1; n <= step.steps(); ++n) {
    kin = step_imex(kin, p, b, grid, step.dt, step.order, step.cfl_safety);
    mom = step_moment_imex(mom, p, grid, step.dt, step.order);
    kin.t = mom.t = initial.t + n * step.dt;
    record(kin.t);
  }
  return rep;
}

}  // namespace polyflow
