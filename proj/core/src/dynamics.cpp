#include "polyflow/dynamics.hpp"

#include <cmath>
#include <numbers>

#include "polyflow/error.hpp"

namespace polyflow {

namespace {

MultiIndex unit(int axis) {
  MultiIndex a{0, 0, 0};
  a[axis] = 1;
  return a;
}

Eigen::MatrixXd dealiased_product_columns(const TorusGrid& grid, const Eigen::MatrixXd& f) {
  return grid.dealias_columns(f);
}

}  // namespace

std::vector<Eigen::VectorXd> velocity_gradient(const Eigen::MatrixXd& u, const TorusGrid& grid) {
  const int d = grid.dim();
  const Eigen::MatrixXcd uh = grid.forward_columns(u);
  std::vector<Eigen::VectorXd> a(d * d);
  Eigen::MatrixXcd work(grid.spectral_size(), d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int s = 0; s < grid.spectral_size(); ++s)
        work(s, i * d + j) = grid.derivative_symbol(s, unit(j)) * uh(s, i);
  const Eigen::MatrixXd real = grid.backward_columns(work);
  for (int k = 0; k < d * d; ++k) a[k] = real.col(k);
  return a;
}

Coupling::Coupling(const QBasis& b, int dim_x) : dim_x_(dim_x) {
  if (b.dim_q() < dim_x)
    throw ParameterError("configuration dimension must be at least the spatial dimension");
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(b.size(), b.size());
  for (int i = 0; i < dim_x; ++i)
    for (int j = 0; j < dim_x; ++j) {
      Eigen::MatrixXd k = b.T(i, j) - b.B(i, j);
      if (i == j) k += 2.0 * id;
      stretch_.push_back(k);
      c_.push_back(b.c(i, j));
      t0_.push_back(b.T(i, j).row(0).transpose());
    }
}

Eigen::MatrixXd stress_tau(const FlowState& s, const ModelParams& p, const QBasis& b, int dim_x) {
  Eigen::MatrixXd tau(s.g.rows(), dim_x * dim_x);
  for (int i = 0; i < dim_x; ++i)
    for (int j = 0; j < dim_x; ++j) tau.col(i * dim_x + j) = p.kappa() * (s.g * b.c(i, j));
  return tau;
}

StressDivergence stress_divergence(const FlowState& s, const ModelParams& p, const QBasis& b,
                                   const TorusGrid& grid) {
  s.check_shape(grid, b);
  const int d = grid.dim();
  StressDivergence out;
  const Eigen::MatrixXd tau = stress_tau(s, p, b, d);
  const Eigen::MatrixXcd th = grid.forward_columns(tau);
  Eigen::MatrixXcd dh = Eigen::MatrixXcd::Zero(grid.spectral_size(), d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int sidx = 0; sidx < grid.spectral_size(); ++sidx)
        dh(sidx, i) += grid.derivative_symbol(sidx, unit(j)) * th(sidx, i * d + j);
  out.div = grid.backward_columns(dh);
  out.max_abs_m = s.g.col(0).cwiseAbs().maxCoeff();

  if (out.max_abs_m < 1e-10) {
    // kappa sum_j d_j (T_ij g)_0 equals the primary form up to kappa d_i m
    Eigen::MatrixXd alt_cols(grid.size(), d * d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) alt_cols.col(i * d + j) = p.kappa() * (s.g * b.T(i, j).row(0).transpose());
    const Eigen::MatrixXcd ah = grid.forward_columns(alt_cols);
    Eigen::MatrixXcd adh = Eigen::MatrixXcd::Zero(grid.spectral_size(), d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int sidx = 0; sidx < grid.spectral_size(); ++sidx)
          adh(sidx, i) += grid.derivative_symbol(sidx, unit(j)) * ah(sidx, i * d + j);
    const Eigen::MatrixXd alt = grid.backward_columns(adh);
    out.alternative_checked = true;
    out.gap = (alt - out.div).cwiseAbs().maxCoeff();
    double grad_m = 0.0;
    for (int i = 0; i < d; ++i)
      grad_m = std::max(grad_m, grid.derivative(Eigen::VectorXd(s.g.col(0)), i).cwiseAbs().maxCoeff());
    const double scale = std::max(out.div.cwiseAbs().maxCoeff(), alt.cwiseAbs().maxCoeff());
    // roundoff floor: kappa |g| k_max per transform
    const double floor = 1e-13 * p.kappa() * s.g.cwiseAbs().maxCoeff() * grid.points_per_dim() *
                         (2.0 * std::numbers::pi / grid.length());
    const double allowed = 1e-8 * scale + p.kappa() * grad_m * (1.0 + 1e-8) + floor;
    if (out.gap > allowed)
      throw ConsistencyError("stress divergence forms disagree by " + std::to_string(out.gap) +
                             " (allowed " + std::to_string(allowed) + ")");
    out.note = "alternative form agrees";
  } else {
    out.note = "alternative form skipped: mean of g over q does not vanish";
  }
  return out;
}

Eigen::MatrixXd stretching_source(const std::vector<Eigen::VectorXd>& grad_u, const Coupling& cp,
                                  int n_points) {
  const int d = cp.dim_x();
  Eigen::MatrixXd src = Eigen::MatrixXd::Zero(n_points, cp.c(0, 0).size());
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) src.noalias() += grad_u[i * d + j] * cp.c(i, j).transpose();
  return src;
}

Eigen::MatrixXd micro_transport(const Eigen::MatrixXd& g, const Eigen::MatrixXd& u,
                                const std::vector<Eigen::VectorXd>& grad_u, const Coupling& cp,
                                const TorusGrid& grid) {
  const int d = grid.dim();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(g.rows(), g.cols());
  const Eigen::MatrixXcd gh = grid.forward_columns(g);
  for (int a = 0; a < d; ++a) {
    Eigen::MatrixXcd h = gh;
    grid.apply_symbol(h, unit(a));
    acc.noalias() += u.col(a).asDiagonal() * grid.backward_columns(h);
  }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const Eigen::VectorXd& aij = grad_u[i * d + j];
      if (aij.cwiseAbs().maxCoeff() == 0.0) continue;
      acc.noalias() += aij.asDiagonal() * (g * cp.stretch(i, j).transpose());
    }
  return dealiased_product_columns(grid, acc);
}

Eigen::MatrixXd viscous_divergence(const Eigen::MatrixXd& u, const ModelParams& p,
                                   const TorusGrid& grid) {
  const int d = grid.dim();
  const Eigen::MatrixXcd uh = grid.forward_columns(u);
  Eigen::MatrixXcd out(grid.spectral_size(), d);
  for (int s = 0; s < grid.spectral_size(); ++s) {
    double lap = 0.0;
    std::complex<double> div = 0.0;
    for (int j = 0; j < d; ++j) {
      MultiIndex a2{0, 0, 0};
      a2[j] = 2;
      lap += grid.derivative_symbol(s, a2).real();
      div += grid.derivative_symbol(s, unit(j)) * uh(s, j);
    }
    for (int i = 0; i < d; ++i)
      out(s, i) = p.mu * lap * uh(s, i) + (p.mu + p.xi) * grid.derivative_symbol(s, unit(i)) * div;
  }
  return grid.backward_columns(out);
}

void fluid_rhs(const FlowState& s, const Eigen::MatrixXd& div_tau, const ModelParams& p,
               const TorusGrid& grid, Eigen::VectorXd& drho, Eigen::MatrixXd& du) {
  const int d = grid.dim();
  const int n = grid.size();
  check_density(s);
  const Eigen::VectorXcd rh = grid.forward(s.rho);
  const Eigen::MatrixXcd uh = grid.forward_columns(s.u);
  // columns: grad rho (d), grad u_i (d * d)
  Eigen::MatrixXcd work(grid.spectral_size(), d + d * d);
  for (int j = 0; j < d; ++j)
    for (int sidx = 0; sidx < grid.spectral_size(); ++sidx) {
      const auto sym = grid.derivative_symbol(sidx, unit(j));
      work(sidx, j) = sym * rh[sidx];
      for (int i = 0; i < d; ++i) work(sidx, d + i * d + j) = sym * uh(sidx, i);
    }
  const Eigen::MatrixXd der = grid.backward_columns(work);
  Eigen::VectorXd div = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < d; ++j) div += der.col(d + j * d + j);
  const Eigen::MatrixXd visc = viscous_divergence(s.u, p, grid);

  // products, dealiased together: column 0 rho equation, 1..d momentum
  Eigen::MatrixXd prod(n, 1 + d);
  for (int x = 0; x < n; ++x) {
    const double one_rho = 1.0 + s.rho[x];
    double adv = 0.0;
    for (int j = 0; j < d; ++j) adv += s.u(x, j) * der(x, j);
    prod(x, 0) = adv + s.rho[x] * div[x];
    const double pc = p.pressure_coefficient(one_rho);
    for (int i = 0; i < d; ++i) {
      double ui = 0.0;
      for (int j = 0; j < d; ++j) ui += s.u(x, j) * der(x, d + i * d + j);
      prod(x, 1 + i) = ui + pc * der(x, i) - (visc(x, i) + div_tau(x, i)) / one_rho;
    }
  }
  const Eigen::MatrixXd dp = grid.dealias_columns(prod);
  drho = -dp.col(0) - div;
  du = -dp.rightCols(d);
}

Rhs rhs_perturbation(const FlowState& s, const ModelParams& p, const QBasis& b,
                     const TorusGrid& grid) {
  return rhs_perturbation(s, p, b, grid, Coupling(b, grid.dim()));
}

Rhs rhs_perturbation(const FlowState& s, const ModelParams& p, const QBasis& b,
                     const TorusGrid& grid, const Coupling& cp) {
  s.check_shape(grid, b);
  check_density(s);
  Rhs r;
  r.t = s.t;
  const StressDivergence sd = stress_divergence(s, p, b, grid);
  fluid_rhs(s, sd.div, p, grid, r.rho, r.u);

  const auto grad_u = velocity_gradient(s.u, grid);
  Eigen::VectorXd div = Eigen::VectorXd::Zero(grid.size());
  for (int i = 0; i < grid.dim(); ++i) div += grad_u[i * grid.dim() + i];
  r.g = -micro_transport(s.g, s.u, grad_u, cp, grid);
  r.g.noalias() -= p.relaxation_rate() * (s.g * b.L());
  r.g += stretching_source(grad_u, cp, grid.size());
  r.g.col(0) -= 2.0 * div;
  return r;
}

CancellationResult cancellation_residual(const FlowState& s, const QBasis& b,
                                         const TorusGrid& grid, int order) {
  if (order < 0 || order > 3) throw ParameterError("cancellation order must be between 0 and 3");
  s.check_shape(grid, b);
  const ModelParams unit_params;
  const Coupling cp(b, grid.dim());
  CancellationResult out;
  out.max_abs_m = s.g.col(0).cwiseAbs().maxCoeff();
  const Eigen::MatrixXd div_tau = stress_divergence(s, unit_params, b, grid).div;
  const Eigen::MatrixXd src = stretching_source(velocity_gradient(s.u, grid), cp, grid.size());

  struct Terms {
    double t1, t2;
  };
  std::vector<Terms> terms;
  for (const MultiIndex& alpha : multi_indices(grid.dim(), order)) {
    double t1 = 0.0;
    for (int i = 0; i < grid.dim(); ++i)
      t1 += grid.inner(grid.derivative(Eigen::VectorXd(div_tau.col(i)), alpha),
                       grid.derivative(Eigen::VectorXd(s.u.col(i)), alpha));
    const Eigen::MatrixXd ds = grid.backward_columns([&] {
      Eigen::MatrixXcd h = grid.forward_columns(src);
      grid.apply_symbol(h, alpha);
      return h;
    }());
    const Eigen::MatrixXd dg = grid.backward_columns([&] {
      Eigen::MatrixXcd h = grid.forward_columns(s.g);
      grid.apply_symbol(h, alpha);
      return h;
    }());
    terms.push_back({t1, grid.cell_volume() * ds.cwiseProduct(dg).sum()});
  }
  // multi-indices whose pairings are pure roundoff carry no information
  double scale = 0.0;
  for (const Terms& t : terms) scale = std::max(scale, std::abs(t.t1) + std::abs(t.t2));
  out.degenerate = true;
  for (const Terms& t : terms) {
    const double mag = std::abs(t.t1) + std::abs(t.t2);
    if (mag == 0.0 || mag <= 1e-12 * scale) continue;
    out.degenerate = false;
    const double res = std::abs(t.t1 + t.t2) / mag;
    if (res >= out.residual) {
      out.residual = res;
      out.stress_term = t.t1;
      out.source_term = t.t2;
    }
  }
  return out;
}

}  // namespace polyflow
