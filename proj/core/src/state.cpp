#include "polyflow/state.hpp"

#include <cmath>
#include <limits>

#include "polyflow/error.hpp"

namespace polyflow {

namespace {

// Product of D matrices for the q multi-index beta.
Eigen::MatrixXd q_derivative(const QBasis& b, const MultiIndex& beta) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(b.size(), b.size());
  for (int i = 0; i < b.dim_q(); ++i)
    for (int k = 0; k < beta[i]; ++k) m = b.D(i) * m;
  return m;
}

// Parseval factor times sum_s mult(s) weight(s) Re(h_s^* W h_s) over the rows of h.
double weighted_quadratic(const TorusGrid& grid, const Eigen::MatrixXcd& h,
                          const Eigen::MatrixXd* w, int sob_order) {
  Eigen::VectorXd row_energy;
  if (w)
    row_energy = (h * (*w)).cwiseProduct(h.conjugate()).real().rowwise().sum();
  else
    row_energy = h.cwiseAbs2().rowwise().sum();
  double acc = 0.0;
  for (int s = 0; s < grid.spectral_size(); ++s)
    acc += grid.multiplicity(s) * grid.sobolev_weight(s, sob_order) * row_energy[s];
  return grid.parseval_factor() * acc;
}

double scalar_sobolev(const TorusGrid& grid, const Eigen::VectorXcd& h, int order) {
  return grid.sobolev_norm_sq_spectral(h, order);
}

// sum_s mult w_order(s) |sum_j sym_j(s) u_j(s)|^2 (div) or sum_j |sym_j|^2 |u_i|^2 (grad).
double gradient_sobolev(const TorusGrid& grid, const Eigen::MatrixXcd& uh, int order) {
  double acc = 0.0;
  for (int s = 0; s < grid.spectral_size(); ++s) {
    double k2 = 0.0;
    for (int j = 0; j < grid.dim(); ++j) {
      MultiIndex a{0, 0, 0};
      a[j] = 1;
      k2 += std::norm(grid.derivative_symbol(s, a));
    }
    acc += grid.multiplicity(s) * grid.sobolev_weight(s, order) * k2 * uh.row(s).squaredNorm();
  }
  return grid.parseval_factor() * acc;
}

double divergence_sobolev(const TorusGrid& grid, const Eigen::MatrixXcd& uh, int order) {
  double acc = 0.0;
  for (int s = 0; s < grid.spectral_size(); ++s) {
    std::complex<double> d = 0.0;
    for (int j = 0; j < grid.dim(); ++j) {
      MultiIndex a{0, 0, 0};
      a[j] = 1;
      d += grid.derivative_symbol(s, a) * uh(s, j);
    }
    acc += grid.multiplicity(s) * grid.sobolev_weight(s, order) * std::norm(d);
  }
  return grid.parseval_factor() * acc;
}

Eigen::VectorXd divergence(const TorusGrid& grid, const Eigen::MatrixXd& u) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(grid.size());
  for (int j = 0; j < grid.dim(); ++j) d += grid.derivative(Eigen::VectorXd(u.col(j)), j);
  return d;
}

void check_order(int order) {
  if (order < 0 || order > 3) throw ParameterError("norm order must be between 0 and 3");
}

}  // namespace

void ModelParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw ParameterError(std::string(name) + " must be positive and finite");
  };
  if (!(2.0 * mu + xi > 0.0)) throw ParameterError("viscosities must satisfy 2 mu + xi > 0");
  if (!std::isfinite(mu) || !std::isfinite(xi)) throw ParameterError("viscosities must be finite");
  positive(a, "a");
  if (!(gamma >= 1.0) || !std::isfinite(gamma)) throw ParameterError("gamma must be >= 1");
  positive(sigma, "sigma");
  positive(r, "r");
  positive(lambda, "lambda");
  positive(De, "De");
  positive(Ma, "Ma");
}

double ModelParams::pressure_coefficient(double one_plus_rho) const {
  return a * gamma * std::pow(one_plus_rho, gamma - 2.0) / (Ma * Ma);
}

FlowState FlowState::zero(const TorusGrid& grid, const QBasis& basis) {
  FlowState s;
  s.rho = Eigen::VectorXd::Zero(grid.size());
  s.u = Eigen::MatrixXd::Zero(grid.size(), grid.dim());
  s.g = Eigen::MatrixXd::Zero(grid.size(), basis.size());
  return s;
}

void FlowState::check_shape(const TorusGrid& grid, const QBasis& basis) const {
  if (rho.size() != grid.size() || u.rows() != grid.size() || u.cols() != grid.dim() ||
      g.rows() != grid.size() || g.cols() != basis.size())
    throw ParameterError("state shape does not match grid and basis");
  if (basis.dim_q() < grid.dim())
    throw ParameterError("configuration dimension must be at least the spatial dimension");
}

FlowState& FlowState::operator+=(const FlowState& o) {
  rho += o.rho;
  u += o.u;
  g += o.g;
  return *this;
}

FlowState& FlowState::operator*=(double s) {
  rho *= s;
  u *= s;
  g *= s;
  return *this;
}

FlowState operator+(FlowState a, const FlowState& b) { return a += b; }
FlowState operator-(FlowState a, const FlowState& b) { return a += (-1.0) * b; }
FlowState operator*(double s, FlowState a) { return a *= s; }

void check_density(const FlowState& s) {
  for (Eigen::Index p = 0; p < s.rho.size(); ++p)
    if (!(1.0 + s.rho[p] > 0.0)) throw VacuumError(static_cast<std::size_t>(p), 1.0 + s.rho[p]);
}

EnergyParts energy_E(const FlowState& s, const QBasis& b, const TorusGrid& grid, int order) {
  check_order(order);
  s.check_shape(grid, b);
  check_density(s);
  EnergyParts e;
  e.rho = scalar_sobolev(grid, grid.forward(s.rho), order);
  e.u = weighted_quadratic(grid, grid.forward_columns(s.u), nullptr, order);
  const Eigen::MatrixXcd gh = grid.forward_columns(s.g);
  for (int ob = 0; ob <= order; ++ob)
    for (const MultiIndex& beta : multi_indices(b.dim_q(), ob)) {
      const Eigen::MatrixXcd h = gh * q_derivative(b, beta).transpose();
      e.g += weighted_quadratic(grid, h, &b.W(), order - ob);
    }
  return e;
}

DissipationParts dissipation_D(const FlowState& s, const ModelParams& p, const QBasis& b,
                               const TorusGrid& grid, int order) {
  check_order(order);
  s.check_shape(grid, b);
  check_density(s);
  DissipationParts d;
  const Eigen::MatrixXcd uh = grid.forward_columns(s.u);
  d.visc = p.mu * gradient_sobolev(grid, uh, order);
  d.div = (p.mu + p.xi) * divergence_sobolev(grid, uh, order);
  const Eigen::MatrixXcd gh = grid.forward_columns(s.g);
  for (int ob = 0; ob <= order; ++ob)
    for (const MultiIndex& beta : multi_indices(b.dim_q(), ob)) {
      const Eigen::MatrixXd db = q_derivative(b, beta);
      for (int i = 0; i < b.dim_q(); ++i) {
        const Eigen::MatrixXcd h = gh * (b.D(i) * db).transpose();
        d.g += weighted_quadratic(grid, h, &b.W(), order - ob);
      }
    }
  return d;
}

EtaFunctionals energy_eta(const FlowState& s, const ModelParams& p, const QBasis& b,
                          const TorusGrid& grid, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw ParameterError("eta must lie in (0, 1)");
  s.check_shape(grid, b);
  check_density(s);
  constexpr int kOrder = 3;
  EtaFunctionals out;
  const Eigen::VectorXcd rh = grid.forward(s.rho);
  const Eigen::MatrixXcd uh = grid.forward_columns(s.u);
  const Eigen::MatrixXcd gh = grid.forward_columns(s.g);

  // eta-weighted mixed norms of <q> g and <q> grad_q g
  double g_eta = 0.0, dg_eta = 0.0;
  for (int ob = 0; ob <= kOrder; ++ob) {
    const double w = (ob == 0) ? eta : std::pow(eta, ob);
    for (const MultiIndex& beta : multi_indices(b.dim_q(), ob)) {
      const Eigen::MatrixXd db = q_derivative(b, beta);
      g_eta += w * weighted_quadratic(grid, gh * db.transpose(), &b.W(), kOrder - ob);
      for (int i = 0; i < b.dim_q(); ++i)
        dg_eta += w * weighted_quadratic(grid, gh * (b.D(i) * db).transpose(), &b.W(), kOrder - ob);
    }
  }
  double g_plain = weighted_quadratic(grid, gh, nullptr, kOrder);
  double dg_plain = 0.0;
  for (int i = 0; i < b.dim_q(); ++i)
    dg_plain += weighted_quadratic(grid, gh * b.D(i).transpose(), nullptr, kOrder);

  // eta sum_{|alpha| <= 2} <d^alpha u_i, d_i d^alpha rho>
  double cross = 0.0;
  for (int sidx = 0; sidx < grid.spectral_size(); ++sidx) {
    std::complex<double> acc = 0.0;
    for (int i = 0; i < grid.dim(); ++i) {
      MultiIndex a{0, 0, 0};
      a[i] = 1;
      acc += std::conj(uh(sidx, i)) * grid.derivative_symbol(sidx, a) * rh[sidx];
    }
    cross += grid.multiplicity(sidx) * grid.sobolev_weight(sidx, 2) * acc.real();
  }
  cross *= grid.parseval_factor();

  const double rho_h3 = scalar_sobolev(grid, rh, kOrder);
  const double u_h3 = weighted_quadratic(grid, uh, nullptr, kOrder);
  // |grad rho|^2_{H^2}
  Eigen::MatrixXcd rh_col = rh;
  const double grad_rho_h2 = gradient_sobolev(grid, rh_col, 2);

  out.cross = eta * cross;
  out.E = rho_h3 + u_h3 + g_plain + g_eta + out.cross;
  out.D = p.mu * gradient_sobolev(grid, uh, kOrder) +
          (p.mu + p.xi) * divergence_sobolev(grid, uh, kOrder) + dg_plain + dg_eta +
          eta * grad_rho_h2;
  return out;
}

double entropy_density(double g) {
  if (std::abs(g) < 0.05) {
    // sum_{n >= 2} (-1)^n g^n / (n (n - 1))
    double term = g * g, acc = 0.0;
    for (int n = 2; n < 40; ++n) {
      const double add = term / (n * (n - 1.0));
      acc += (n % 2 == 0) ? add : -add;
      if (std::abs(add) < 1e-18 * std::abs(acc)) break;
      term *= g;
    }
    return acc;
  }
  return (1.0 + g) * std::log1p(g) - g;
}

TotalEnergy total_energy_and_dissipation(const FlowState& s, const ModelParams& p,
                                         const QBasis& b, const TorusGrid& grid) {
  if (!(p.gamma > 1.0))
    throw UnsupportedError("energy law needs gamma > 1 (the internal energy is singular at 1)");
  s.check_shape(grid, b);
  check_density(s);
  TotalEnergy te;
  const double cv = grid.cell_volume();
  const double pc = p.a / (p.Ma * p.Ma * (p.gamma - 1.0));
  const double kappa = p.kappa();
  const double log_z = std::log(b.potential().normalization());

  double kinetic = 0.0, internal = 0.0;
  for (int x = 0; x < grid.size(); ++x) {
    const double r = s.rho[x];
    kinetic += 0.5 * (1.0 + r) * s.u.row(x).squaredNorm();
    internal += std::expm1(p.gamma * std::log1p(r)) - p.gamma * r;
  }
  te.kinetic = cv * kinetic;
  te.internal = cv * pc * (internal + p.gamma * s.rho.sum());

  const QRule& rule = b.diagnostic_rule();
  const Eigen::MatrixXd vt = rule.values.transpose();
  const Eigen::MatrixXd gv = s.g * vt;
  std::vector<Eigen::MatrixXd> dgv;
  for (int i = 0; i < b.dim_q(); ++i) dgv.push_back(s.g * b.D(i).transpose() * vt);
  double ent = 0.0, dpol = 0.0;
  for (int x = 0; x < grid.size(); ++x)
    for (int k = 0; k < rule.size(); ++k) {
      const double gk = gv(x, k);
      if (!(1.0 + gk > 1e-12))
        throw PositivityError("1 + g = " + std::to_string(1.0 + gk) + " at grid point " +
                              std::to_string(x) + ", quadrature node " + std::to_string(k));
      ent += rule.weights[k] * entropy_density(gk);
      double grad2 = 0.0;
      for (int i = 0; i < b.dim_q(); ++i) grad2 += dgv[i](x, k) * dgv[i](x, k);
      dpol += rule.weights[k] * grad2 / (1.0 + gk);
    }
  te.entropy = kappa * cv * ent;
  const double int_m = cv * s.g.col(0).sum();
  te.baseline = grid.volume() * (pc - kappa * log_z);
  te.energy = te.kinetic + te.internal + te.entropy + kappa * (1.0 - log_z) * int_m;

  const Eigen::MatrixXcd uh = grid.forward_columns(s.u);
  te.d_viscous = p.mu * gradient_sobolev(grid, uh, 0) + (p.mu + p.xi) * divergence_sobolev(grid, uh, 0);
  te.d_polymer = p.lambda * p.sigma * p.sigma / (p.De * p.De) * cv * dpol;
  te.dissipation = te.d_viscous + te.d_polymer;
  te.defect = -2.0 * kappa * grid.inner(s.g.col(0), divergence(grid, s.u));
  return te;
}

Eigen::VectorXd mean_in_q(const FlowState& s) { return s.g.col(0); }

double min_one_plus_g(const FlowState& s, const QBasis& b) {
  if (s.g.size() == 0) return 1.0;
  const Eigen::MatrixXd v = s.g * b.reconstruction_rule().values.transpose();
  return 1.0 + v.minCoeff();
}

double polymer_mass(const FlowState& s, const TorusGrid& grid) {
  return grid.volume() + grid.integral(s.g.col(0));
}

EnergyReport make_report(const FlowState& s, const ModelParams& p, const QBasis& b,
                         const TorusGrid& grid, double eta, bool with_total) {
  EnergyReport r;
  r.t = s.t;
  const EnergyParts e = energy_E(s, b, grid);
  r.e_rho = e.rho;
  r.e_u = e.u;
  r.e_g = e.g;
  r.E = e.total();
  const DissipationParts d = dissipation_D(s, p, b, grid);
  r.d_visc = d.visc;
  r.d_div = d.div;
  r.d_g = d.g;
  r.D = d.total();
  if (eta > 0.0 && eta < 1.0) {
    const EtaFunctionals ef = energy_eta(s, p, b, grid, eta);
    r.e_eta = ef.E;
    r.d_eta = ef.D;
    r.cross = ef.cross;
  }
  if (with_total) {
    const TotalEnergy te = total_energy_and_dissipation(s, p, b, grid);
    r.kinetic = te.kinetic;
    r.internal = te.internal;
    r.entropy = te.entropy;
    r.e_total = te.energy;
    r.baseline = te.baseline;
    r.d_total = te.dissipation;
    r.d_polymer = te.d_polymer;
    r.defect = te.defect;
  }
  r.min_one_plus_g = min_one_plus_g(s, b);
  r.min_one_plus_rho = 1.0 + s.rho.minCoeff();
  const Eigen::VectorXd m = mean_in_q(s);
  r.max_abs_m = m.cwiseAbs().maxCoeff();
  r.mean_m = m.mean();
  r.mass = polymer_mass(s, grid);
  return r;
}

}  // namespace polyflow
