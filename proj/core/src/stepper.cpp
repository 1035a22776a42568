#include "polyflow/stepper.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "gmres.hpp"
#include "imex.hpp"

namespace polyflow {

namespace {

MultiIndex unit(int axis) {
  MultiIndex a{0, 0, 0};
  a[axis] = 1;
  return a;
}

MultiIndex second(int axis) {
  MultiIndex a{0, 0, 0};
  a[axis] = 2;
  return a;
}

// Explicit remainder rhs - A s shared by the IMEX variants.
FlowState explicit_part(const FlowState& s, const ModelParams& p, const QBasis& b,
                        const TorusGrid& grid, const Coupling& cp, const ImplicitOperator& op) {
  FlowState f = rhs_perturbation(s, p, b, grid, cp);
  const FlowState a = op.apply(s);
  f.rho -= a.rho;
  f.u -= a.u;
  f.g -= a.g;
  return f;
}

void check_cfl(const FlowState& s, const QBasis& b, const TorusGrid& grid, double dt,
               double safety) {
  const double lim = cfl_limit(s, b, grid, safety);
  if (dt > lim) throw CflError(dt, lim);
}

double low_energy(const FlowState& d, const QBasis& b, const TorusGrid& grid) {
  return energy_E(d, b, grid, 0).total();
}

}  // namespace

void StepConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ParameterError("dt must be positive");
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ParameterError("t_end must be positive");
  if (order != 1 && order != 2) throw ParameterError("order must be 1 or 2");
  if (!(picard_tol > 0.0)) throw ParameterError("picard tolerance must be positive");
  if (picard_max_iter < 2) throw ParameterError("picard max iterations must be at least 2");
  if (!(cfl_safety > 0.0 && cfl_safety <= 1.0))
    throw ParameterError("CFL safety factor must lie in (0, 1]");
  if (!(eta > 0.0 && eta < 1.0)) throw ParameterError("eta must lie in (0, 1)");
  if (!(monotone_tol >= 0.0)) throw ParameterError("monotonicity tolerance must be non-negative");
  const double n = t_end / dt;
  if (std::abs(n - std::round(n)) > 1e-9 * std::max(1.0, n))
    throw ParameterError("t_end must be an integer multiple of dt");
}

int StepConfig::steps() const { return static_cast<int>(std::llround(t_end / dt)); }

ImplicitOperator::ImplicitOperator(const ModelParams& p, const QBasis& b, const TorusGrid& grid)
    : p_(p), b_(&b), grid_(&grid) {}

ImplicitOperator::ImplicitOperator(const ModelParams& p, const TorusGrid& grid)
    : p_(p), b_(nullptr), grid_(&grid) {}

FlowState ImplicitOperator::apply(const FlowState& s) const {
  const TorusGrid& grid = *grid_;
  const int d = grid.dim();
  const double c2 = p_.sound_speed_sq();
  const Eigen::VectorXcd rh = grid.forward(s.rho);
  const Eigen::MatrixXcd uh = grid.forward_columns(s.u);
  Eigen::MatrixXcd out(grid.spectral_size(), 1 + d);
  for (int k = 0; k < grid.spectral_size(); ++k) {
    std::complex<double> div = 0.0;
    double lap = 0.0;
    for (int j = 0; j < d; ++j) {
      div += grid.derivative_symbol(k, unit(j)) * uh(k, j);
      lap += grid.derivative_symbol(k, second(j)).real();
    }
    out(k, 0) = -div;
    for (int i = 0; i < d; ++i) {
      const auto si = grid.derivative_symbol(k, unit(i));
      out(k, 1 + i) = -c2 * si * rh[k] + p_.mu * lap * uh(k, i) + (p_.mu + p_.xi) * si * div;
    }
  }
  const Eigen::MatrixXd real = grid.backward_columns(out);
  FlowState a;
  a.t = s.t;
  a.rho = real.col(0);
  a.u = real.rightCols(d);
  if (b_ != nullptr) a.g = -p_.relaxation_rate() * (s.g * b_->L());
  return a;
}

void ImplicitOperator::solve_fluid(Eigen::VectorXd& rho, Eigen::MatrixXd& u, double h) const {
  using Mat = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;
  using Vec = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, 1, 0, 4, 1>;
  const TorusGrid& grid = *grid_;
  const int d = grid.dim();
  const double c2 = p_.sound_speed_sq();
  const Eigen::VectorXcd rh = grid.forward(rho);
  const Eigen::MatrixXcd uh = grid.forward_columns(u);
  Eigen::MatrixXcd out(grid.spectral_size(), 1 + d);
#pragma omp parallel for schedule(static)
  for (int k = 0; k < grid.spectral_size(); ++k) {
    Mat m = Mat::Identity(1 + d, 1 + d);
    std::array<std::complex<double>, 3> sym{};
    double lap = 0.0;
    for (int j = 0; j < d; ++j) {
      sym[j] = grid.derivative_symbol(k, unit(j));
      lap += grid.derivative_symbol(k, second(j)).real();
    }
    for (int j = 0; j < d; ++j) {
      m(0, 1 + j) += h * sym[j];
      m(1 + j, 0) += h * c2 * sym[j];
      m(1 + j, 1 + j) -= h * p_.mu * lap;
      for (int i = 0; i < d; ++i) m(1 + i, 1 + j) -= h * (p_.mu + p_.xi) * sym[i] * sym[j];
    }
    Vec r(1 + d);
    r[0] = rh[k];
    for (int i = 0; i < d; ++i) r[1 + i] = uh(k, i);
    out.row(k) = m.partialPivLu().solve(r).transpose();
  }
  const Eigen::MatrixXd real = grid.backward_columns(out);
  rho = real.col(0);
  u = real.rightCols(d);
}

const Eigen::MatrixXd& ImplicitOperator::micro_inverse(double h) const {
  if (b_ == nullptr) throw ParameterError("implicit operator was built without a basis");
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = cache_.find(h);
  if (it == cache_.end()) {
    const int n = b_->size();
    const Eigen::MatrixXd k =
        Eigen::MatrixXd::Identity(n, n) + h * p_.relaxation_rate() * b_->L();
    auto inv = std::make_shared<Eigen::MatrixXd>(k.llt().solve(Eigen::MatrixXd::Identity(n, n)));
    it = cache_.emplace(h, std::move(inv)).first;
  }
  return *it->second;
}

Eigen::MatrixXd ImplicitOperator::solve_micro(const Eigen::MatrixXd& g, double h) const {
  return g * micro_inverse(h);  // the inverse is symmetric
}

FlowState ImplicitOperator::solve(const FlowState& rhs, double h) const {
  FlowState y = rhs;
  solve_fluid(y.rho, y.u, h);
  if (b_ != nullptr) y.g = solve_micro(rhs.g, h);
  return y;
}

double cfl_limit(const FlowState& s, const QBasis& b, const TorusGrid& grid, double safety) {
  const double inf = std::numeric_limits<double>::infinity();
  const double umax = s.u.rowwise().norm().maxCoeff();
  const auto grad = velocity_gradient(s.u, grid);
  Eigen::VectorXd gsq = Eigen::VectorXd::Zero(grid.size());
  for (const auto& a : grad) gsq += a.cwiseAbs2();
  const double gmax = std::sqrt(gsq.maxCoeff());
  const double transport = umax > 0.0 ? grid.spacing() / umax : inf;
  const double stretch = gmax > 0.0 ? 1.0 / (gmax * b.degree()) : inf;
  return safety * std::min(transport, stretch);
}

FlowState step_imex(const FlowState& s, const ModelParams& p, const QBasis& b,
                    const TorusGrid& grid, double dt, int order, double cfl_safety) {
  if (!(dt > 0.0)) throw ParameterError("dt must be positive");
  if (order != 1 && order != 2) throw ParameterError("order must be 1 or 2");
  s.check_shape(grid, b);
  check_cfl(s, b, grid, dt, cfl_safety);
  const ImplicitOperator op(p, b, grid);
  const Coupling cp(b, grid.dim());
  return detail::imex_step(
      s, dt, order, [&](const FlowState& x) { return explicit_part(x, p, b, grid, cp, op); },
      [&](const FlowState& x) { return op.apply(x); },
      [&](const FlowState& r, double h) { return op.solve(r, h); });
}

void record_picard_difference(PicardTrace& trace, double diff) {
  if (!std::isfinite(diff))
    throw NonContractionError("picard iterate diverged at iteration " +
                              std::to_string(trace.diffs.size() + 1));
  if (!trace.diffs.empty()) {
    const double prev = trace.diffs.back();
    trace.ratios.push_back(prev > 0.0 ? diff / prev : (diff > 0.0 ? 1.0 : 0.0));
  }
  trace.diffs.push_back(diff);
  const auto n = trace.ratios.size();
  if (n >= 3 && trace.ratios[n - 1] >= 1.0 && trace.ratios[n - 2] >= 1.0 &&
      trace.ratios[n - 3] >= 1.0)
    throw NonContractionError("picard iteration is not contracting: 3 consecutive ratios >= 1 "
                              "(last " + std::to_string(trace.ratios.back()) + ")");
}

std::pair<FlowState, PicardTrace> step_picard(const FlowState& s, const ModelParams& p,
                                              const QBasis& b, const TorusGrid& grid, double dt,
                                              double tol, int max_iter, double cfl_safety) {
  if (!(dt > 0.0)) throw ParameterError("dt must be positive");
  if (!(tol > 0.0)) throw ParameterError("picard tolerance must be positive");
  if (max_iter < 2) throw ParameterError("picard max iterations must be at least 2");
  s.check_shape(grid, b);
  if (cfl_safety > 0.0) check_cfl(s, b, grid, dt, cfl_safety);
  check_density(s);

  const int n = grid.size();
  const int d = grid.dim();
  const int nb = b.size();
  const ImplicitOperator op(p, b, grid);
  const Coupling cp(b, d);
  constexpr double kLinearTol = 1e-12;
  constexpr int kRestart = 40;
  constexpr int kLinearMaxIter = 600;

  PicardTrace trace;
  FlowState cur = s;
  for (int k = 0; k < max_iter; ++k) {
    check_density(cur);
    const auto grad_u = velocity_gradient(cur.u, grid);
    Eigen::VectorXd div = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < d; ++i) div += grad_u[i * d + i];

    // micro block with drift frozen at u^k
    Eigen::MatrixXd g_rhs = s.g + dt * stretching_source(grad_u, cp, n);
    g_rhs.col(0) -= 2.0 * dt * div;
    const auto g_apply = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
      const Eigen::Map<const Eigen::MatrixXd> gm(v.data(), n, nb);
      Eigen::MatrixXd r = gm + dt * micro_transport(gm, cur.u, grad_u, cp, grid);
      r.noalias() += dt * p.relaxation_rate() * (gm * b.L());
      return Eigen::Map<const Eigen::VectorXd>(r.data(), r.size());
    };
    const auto g_pre = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
      const Eigen::Map<const Eigen::MatrixXd> gm(v.data(), n, nb);
      const Eigen::MatrixXd r = op.solve_micro(gm, dt);
      return Eigen::Map<const Eigen::VectorXd>(r.data(), r.size());
    };
    Eigen::VectorXd gx = Eigen::Map<const Eigen::VectorXd>(cur.g.data(), cur.g.size());
    const auto gres = detail::gmres(
        g_apply, g_pre, Eigen::Map<const Eigen::VectorXd>(g_rhs.data(), g_rhs.size()), gx,
        kLinearTol, kRestart, kLinearMaxIter);
    if (!gres.converged)
      throw ConvergenceError("micro solve did not converge (relative residual " +
                             std::to_string(gres.residual) + ")");
    FlowState next;
    next.t = s.t + dt;
    next.g = Eigen::Map<const Eigen::MatrixXd>(gx.data(), n, nb);

    // fluid block with coefficients frozen at (rho^k, u^k), stress from g^{k+1}
    FlowState with_g = cur;
    with_g.g = next.g;
    const Eigen::MatrixXd div_tau = stress_divergence(with_g, p, b, grid).div;
    Eigen::VectorXd one_rho = (1.0 + cur.rho.array()).matrix();
    Eigen::VectorXd pc(n);
    for (int x = 0; x < n; ++x) pc[x] = p.pressure_coefficient(one_rho[x]);
    Eigen::VectorXd f_rhs(n * (1 + d));
    f_rhs.head(n) = s.rho;
    {
      Eigen::MatrixXd force(n, d);
      for (int i = 0; i < d; ++i) force.col(i) = div_tau.col(i).cwiseQuotient(one_rho);
      const Eigen::MatrixXd fd = grid.dealias_columns(force);
      for (int i = 0; i < d; ++i) f_rhs.segment(n * (1 + i), n) = s.u.col(i) + dt * fd.col(i);
    }
    const auto f_apply = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
      const Eigen::VectorXd rho = v.head(n);
      const Eigen::Map<const Eigen::MatrixXd> u(v.data() + n, n, d);
      Eigen::MatrixXcd work(grid.spectral_size(), d + d * d);
      const Eigen::VectorXcd rh = grid.forward(rho);
      const Eigen::MatrixXcd uh = grid.forward_columns(u);
      for (int j = 0; j < d; ++j)
        for (int q = 0; q < grid.spectral_size(); ++q) {
          const auto sym = grid.derivative_symbol(q, unit(j));
          work(q, j) = sym * rh[q];
          for (int i = 0; i < d; ++i) work(q, d + i * d + j) = sym * uh(q, i);
        }
      const Eigen::MatrixXd der = grid.backward_columns(work);
      const Eigen::MatrixXd visc = viscous_divergence(u, p, grid);
      Eigen::MatrixXd prod(n, 1 + d);
      for (int x = 0; x < n; ++x) {
        double adv = 0.0, dv = 0.0;
        for (int j = 0; j < d; ++j) {
          adv += cur.u(x, j) * der(x, j);
          dv += der(x, d + j * d + j);
        }
        prod(x, 0) = adv + one_rho[x] * dv;
        for (int i = 0; i < d; ++i) {
          double ui = 0.0;
          for (int j = 0; j < d; ++j) ui += cur.u(x, j) * der(x, d + i * d + j);
          prod(x, 1 + i) = ui + pc[x] * der(x, i) - visc(x, i) / one_rho[x];
        }
      }
      const Eigen::MatrixXd dp = grid.dealias_columns(prod);
      Eigen::VectorXd out(v.size());
      out.head(n) = rho + dt * dp.col(0);
      for (int i = 0; i < d; ++i) out.segment(n * (1 + i), n) = u.col(i) + dt * dp.col(1 + i);
      return out;
    };
    const auto f_pre = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
      Eigen::VectorXd rho = v.head(n);
      Eigen::MatrixXd u = Eigen::Map<const Eigen::MatrixXd>(v.data() + n, n, d);
      op.solve_fluid(rho, u, dt);
      Eigen::VectorXd out(v.size());
      out.head(n) = rho;
      out.tail(n * d) = Eigen::Map<const Eigen::VectorXd>(u.data(), u.size());
      return out;
    };
    Eigen::VectorXd fx(n * (1 + d));
    fx.head(n) = cur.rho;
    fx.tail(n * d) = Eigen::Map<const Eigen::VectorXd>(cur.u.data(), cur.u.size());
    const auto fres = detail::gmres(f_apply, f_pre, f_rhs, fx, kLinearTol, kRestart, kLinearMaxIter);
    if (!fres.converged)
      throw ConvergenceError("fluid solve did not converge (relative residual " +
                             std::to_string(fres.residual) + ")");
    next.rho = fx.head(n);
    next.u = Eigen::Map<const Eigen::MatrixXd>(fx.data() + n, n, d);

    const double diff = low_energy(next - cur, b, grid);
    trace.iterations = k + 1;
    cur = std::move(next);
    record_picard_difference(trace, diff);
    if (diff == 0.0 || diff <= tol * low_energy(cur, b, grid)) {
      trace.converged = true;
      trace.termination = "converged";
      return {cur, trace};
    }
  }
  trace.termination = "max_iter";
  return {cur, trace};
}

AuditResult energy_audit(const EnergyReport& before, const EnergyReport& after, double dt) {
  if (!(dt > 0.0)) throw ParameterError("audit needs a positive time increment");
  AuditResult a;
  a.residual = (after.e_total - before.e_total) / dt + 0.5 * (before.d_total + after.d_total) -
               0.5 * (before.defect + after.defect);
  const double d_mid = 0.5 * (before.d_total + after.d_total);
  a.normalized = std::abs(a.residual) / (std::abs(d_mid) + 1e-14);
  return a;
}

AuditResult energy_audit(const FlowState& before, const FlowState& after, const ModelParams& p,
                         const QBasis& b, const TorusGrid& grid) {
  const auto fill = [&](const FlowState& s) {
    const TotalEnergy t = total_energy_and_dissipation(s, p, b, grid);
    EnergyReport r;
    r.e_total = t.energy;
    r.d_total = t.dissipation;
    r.defect = t.defect;
    return r;
  };
  return energy_audit(fill(before), fill(after), after.t - before.t);
}

TrajectoryRecord simulate(const SimulationInput& in) {
  if (in.basis == nullptr || in.grid == nullptr)
    throw ParameterError("simulation needs a basis and a grid");
  in.params.validate();
  in.step.validate();
  const QBasis& b = *in.basis;
  const TorusGrid& grid = *in.grid;
  const ModelParams& p = in.params;
  const StepConfig& cfg = in.step;
  in.initial.check_shape(grid, b);
  const bool with_total = cfg.audit && p.gamma > 1.0;

  TrajectoryRecord rec;
  FlowState s = in.initial;
  EnergyReport prev;
  try {
    prev = make_report(s, p, b, grid, cfg.eta, with_total);
  } catch (const Error& e) {
    rec.termination = e.what();
    rec.error = e.code();
    rec.positivity_lost = e.code() == ExitCode::kPositivity;
    return rec;
  }
  rec.reports.push_back(prev);
  if (in.observer) in.observer(0, s, prev);
  const double e0 = prev.E;

  const int steps = cfg.steps();
  for (int n = 1; n <= steps; ++n) {
    try {
      FlowState next;
      PicardTrace trace;
      if (cfg.scheme == Scheme::kImex) {
        next = step_imex(s, p, b, grid, cfg.dt, cfg.order, cfg.cfl_safety);
      } else {
        auto res = step_picard(s, p, b, grid, cfg.dt, cfg.picard_tol, cfg.picard_max_iter,
                               cfg.cfl_safety);
        next = std::move(res.first);
        trace = std::move(res.second);
      }
      next.t = in.initial.t + n * cfg.dt;
      EnergyReport rep = make_report(next, p, b, grid, cfg.eta, with_total);
      if (rep.min_one_plus_g <= 1e-12) {
        rec.positivity_lost = true;
        throw PositivityError("1 + g lost positivity at t = " + std::to_string(next.t));
      }
      if (with_total) {
        const AuditResult a = energy_audit(prev, rep, cfg.dt);
        rep.audit_residual = a.residual;
        rep.audit_normalized = a.normalized;
        rec.integral_abs_residual += std::abs(a.residual) * cfg.dt;
      }
      if (cfg.scheme == Scheme::kPicard) {
        rep.picard_iterations = trace.iterations;
        rep.picard_last_ratio = trace.ratios.empty() ? 0.0 : trace.ratios.back();
        rec.picard.push_back(trace);
      }
      rec.integral_D += 0.5 * cfg.dt * (prev.D + rep.D);
      rec.max_mass_drift = std::max(rec.max_mass_drift, std::abs(rep.mass - prev.mass));
      if (e0 > 0.0) {
        const double increase = (rep.E - prev.E) / e0;
        if (increase > cfg.monotone_tol) ++rec.monotonicity_violations;
        rec.max_relative_increase = std::max(rec.max_relative_increase, increase);
        rec.max_energy_ratio = std::max(rec.max_energy_ratio, rep.E / e0);
      } else if (rep.E > 0.0) {
        ++rec.monotonicity_violations;
        rec.max_energy_ratio = std::numeric_limits<double>::infinity();
      }
      rec.reports.push_back(rep);
      if (in.observer) in.observer(n, next, rep);
      prev = rep;
      s = std::move(next);
    } catch (const Error& e) {
      rec.termination = "step " + std::to_string(n) + ": " + e.what();
      rec.error = e.code();
      if (e.code() == ExitCode::kPositivity) rec.positivity_lost = true;
      break;
    }
  }
  return rec;
}

}  // namespace polyflow
