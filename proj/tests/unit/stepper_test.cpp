#include <gtest/gtest.h>

#include <cmath>

#include "polyflow/error.hpp"
#include "polyflow/stepper.hpp"
#include "states.hpp"

using namespace polyflow;
using testutil::random_state;
using testutil::sample;

namespace {

double max_abs(const FlowState& s) {
  return std::max({s.rho.cwiseAbs().maxCoeff(), s.u.cwiseAbs().maxCoeff(),
                   s.g.cwiseAbs().maxCoeff()});
}

FlowState dealiased(FlowState s, const TorusGrid& grid) {
  s.rho = grid.dealias(s.rho);
  s.u = grid.dealias_columns(s.u);
  s.g = grid.dealias_columns(s.g);
  return s;
}

double distance(const FlowState& a, const FlowState& b, const QBasis& basis,
                const TorusGrid& grid) {
  return std::sqrt(energy_E(a - b, basis, grid, 3).total());
}

FlowState run_imex(FlowState s, const ModelParams& p, const QBasis& b, const TorusGrid& grid,
                   double dt, int steps, int order) {
  for (int n = 0; n < steps; ++n) s = step_imex(s, p, b, grid, dt, order);
  return s;
}

}  // namespace

TEST(Stepper, ConfigValidation) {
  StepConfig c;
  EXPECT_NO_THROW(c.validate());
  c.picard_max_iter = 1;
  EXPECT_THROW(c.validate(), ParameterError);
  c = StepConfig{};
  c.dt = 0.03;
  EXPECT_THROW(c.validate(), ParameterError);  // 1 / 0.03 is not an integer
  c = StepConfig{};
  c.dt = -1;
  EXPECT_THROW(c.validate(), ParameterError);
  c = StepConfig{};
  c.t_end = 0.5;
  c.dt = 0.1;
  EXPECT_EQ(c.steps(), 5);
}

TEST(Stepper, ZeroStateIsFixedPoint) {
  TorusGrid grid(1, 16);
  QBasis b = build_basis(make_hookean(1, 1, 1), 6);
  const FlowState z = FlowState::zero(grid, b);
  for (int order : {1, 2}) EXPECT_EQ(max_abs(step_imex(z, ModelParams{}, b, grid, 0.7, order)), 0.0);
  auto [next, trace] = step_picard(z, ModelParams{}, b, grid, 0.7);
  EXPECT_EQ(max_abs(next), 0.0);
  EXPECT_EQ(trace.iterations, 1);
  ASSERT_EQ(trace.diffs.size(), 1u);
  EXPECT_EQ(trace.diffs[0], 0.0);
  EXPECT_TRUE(trace.converged);
}

TEST(Stepper, ImplicitEulerOnEigenmode) {
  TorusGrid grid(1, 16);
  ModelParams p;
  p.sigma = 0.5;
  p.r = 2.0;
  p.De = 3.0;
  QBasis b = build_basis(make_hookean(p.sigma, p.r, 1), 6);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b.L());
  const double dt = 0.25;
  for (int k : {1, 2, 4}) {
    FlowState s = FlowState::zero(grid, b);
    s.g = sample(grid, [](auto x) { return 1e-2 * std::cos(x[0]); }) *
          es.eigenvectors().col(k).transpose();
    const FlowState next = step_imex(s, p, b, grid, dt, 1);
    const double lam = p.relaxation_rate() * es.eigenvalues()[k];
    EXPECT_LE((next.g - s.g / (1.0 + dt * lam)).cwiseAbs().maxCoeff(), 1e-15) << k;
  }
}

TEST(Stepper, SelfConvergenceOrder) {
  TorusGrid grid(1, 16);
  QBasis b = build_basis(make_hookean(1, 1, 1), 6);
  const ModelParams p;
  const FlowState s0 = dealiased(random_state(grid, b, 1e-2, 5), grid);
  const double t = 0.2;
  for (int order : {1, 2}) {
    const FlowState a = run_imex(s0, p, b, grid, t / 10, 10, order);
    const FlowState c = run_imex(s0, p, b, grid, t / 20, 20, order);
    const FlowState e = run_imex(s0, p, b, grid, t / 40, 40, order);
    const double ratio = distance(a, c, b, grid) / distance(c, e, b, grid);
    EXPECT_NEAR(std::log2(ratio), order, 0.15) << "order " << order;
  }
}

TEST(Stepper, PureMicroEnergyNonIncreasing) {
  // modes orthogonal to the stress coefficients keep u = 0 exactly
  TorusGrid grid(1, 16);
  QBasis b = build_basis(make_hookean(1, 1, 1), 8);
  const ModelParams p;
  FlowState s = FlowState::zero(grid, b);
  std::mt19937 rng(3);
  for (int k = 0; k < b.size(); ++k) {
    if (b.c(0, 0)[k] != 0.0 || k == 0) continue;
    s.g.col(k) = 1e-2 * grid.dealias(testutil::smooth_field(grid, rng));
  }
  double prev = s.g.squaredNorm();
  for (int n = 0; n < 20; ++n) {
    s = step_imex(s, p, b, grid, 0.1, 1);
    EXPECT_EQ(s.u.cwiseAbs().maxCoeff(), 0.0);
    const double cur = s.g.squaredNorm();
    EXPECT_LE(cur, prev);
    prev = cur;
  }
}

TEST(Stepper, MassIsConserved) {
  TorusGrid grid(2, 12);
  QBasis b = build_basis(make_hookean(1, 1, 2), 4);
  const ModelParams p;
  FlowState s = dealiased(random_state(grid, b, 1e-2, 8), grid);
  for (int order : {1, 2}) {
    FlowState x = s;
    double m0 = polymer_mass(x, grid);
    for (int n = 0; n < 10; ++n) {
      x = step_imex(x, p, b, grid, 0.02, order);
      const double m1 = polymer_mass(x, grid);
      EXPECT_LE(std::abs(m1 - m0), 1e-12);
      m0 = m1;
    }
  }
  auto [next, trace] = step_picard(s, p, b, grid, 0.02);
  EXPECT_LE(std::abs(polymer_mass(next, grid) - polymer_mass(s, grid)), 1e-12);
}

TEST(Stepper, CflViolationSuggestsStep) {
  TorusGrid grid(1, 16);
  QBasis b = build_basis(make_hookean(1, 1, 1), 4);
  FlowState s = FlowState::zero(grid, b);
  s.u.col(0) = sample(grid, [](auto x) { return 2.0 * std::sin(x[0]); });
  const double lim = cfl_limit(s, b, grid, 0.5);
  EXPECT_NEAR(lim, 0.5 * std::min(grid.spacing() / 2.0, 1.0 / (2.0 * 4)), 1e-12);
  try {
    step_imex(s, ModelParams{}, b, grid, 2 * lim);
    FAIL() << "expected CflError";
  } catch (const CflError& e) {
    EXPECT_NEAR(e.suggested_dt(), lim, 1e-15);
  }
  EXPECT_THROW(step_picard(s, ModelParams{}, b, grid, 2 * lim), CflError);
}

TEST(Stepper, PicardContractsForSmallData) {
  TorusGrid grid(1, 16);
  QBasis b = build_basis(make_hookean(1, 1, 1), 6);
  const ModelParams p;
  const FlowState s = dealiased(random_state(grid, b, 1e-3, 21), grid);
  auto [next, trace] = step_picard(s, p, b, grid, 0.05);
  EXPECT_TRUE(trace.converged);
  ASSERT_GE(trace.ratios.size(), 2u);
  for (double r : trace.ratios) EXPECT_LT(r, 1.0);
  EXPECT_EQ(trace.diffs.size(), trace.ratios.size() + 1);
}

TEST(Stepper, PicardIsFirstOrder) {
  TorusGrid grid(1, 16);
  QBasis b = build_basis(make_hookean(1, 1, 1), 6);
  const ModelParams p;
  const FlowState s = dealiased(random_state(grid, b, 1e-3, 21), grid);
  const double t = 0.05;
  const FlowState ref = run_imex(s, p, b, grid, t / 400, 400, 2);
  auto picard = [&](int n) {
    FlowState x = s;
    for (int i = 0; i < n; ++i) x = step_picard(x, p, b, grid, t / n).first;
    return std::sqrt(energy_E(x - ref, b, grid, 0).total());
  };
  EXPECT_NEAR(std::log2(picard(2) / picard(4)), 1.0, 0.15);
}

TEST(Stepper, NonContractionRule) {
  PicardTrace t;
  record_picard_difference(t, 1.0);
  record_picard_difference(t, 2.0);
  record_picard_difference(t, 4.0);
  record_picard_difference(t, 1.0);  // breaks the run of ratios >= 1
  record_picard_difference(t, 1.0);
  record_picard_difference(t, 3.0);
  EXPECT_THROW(record_picard_difference(t, 3.0), NonContractionError);
  PicardTrace u;
  record_picard_difference(u, 1.0);
  EXPECT_THROW(record_picard_difference(u, std::nan("")), NonContractionError);
  PicardTrace z;
  record_picard_difference(z, 0.0);
  record_picard_difference(z, 0.0);
  EXPECT_EQ(z.ratios[0], 0.0);
}

TEST(Stepper, PicardAtCflStepContractsForUnitData) {
  // the CFL step shrinks like 1 / eps, which keeps the frozen iteration contracting
  TorusGrid grid(1, 16);
  QBasis b = build_basis(make_hookean(1, 1, 1), 6);
  const ModelParams p;
  FlowState s = FlowState::zero(grid, b);
  s.u.col(0) = sample(grid, [](auto x) { return std::sin(x[0]); });
  s.rho = sample(grid, [](auto x) { return 0.5 * std::cos(x[0]); });
  const double dt = cfl_limit(s, b, grid, 0.5);
  auto [next, trace] = step_picard(s, p, b, grid, dt);
  EXPECT_TRUE(trace.converged);
  for (double r : trace.ratios) EXPECT_LT(r, 1.0);
}

TEST(Stepper, AuditOfZeroPairVanishes) {
  TorusGrid grid(1, 8);
  QBasis b = build_basis(make_hookean(1, 1, 1), 4);
  FlowState z = FlowState::zero(grid, b), z1 = z;
  z1.t = 0.1;
  const AuditResult a = energy_audit(z, z1, ModelParams{}, b, grid);
  EXPECT_EQ(a.residual, 0.0);
  EXPECT_EQ(a.normalized, 0.0);
}

TEST(Stepper, AuditMatchesViscousDecay) {
  // shear u_2 = eps sin x_1 under the implicit viscous solve: u_2 scales by 1 / (1 + mu dt)
  TorusGrid grid(2, 8);
  QBasis b = build_basis(make_hookean(1, 1, 2), 3);
  ModelParams p;
  p.mu = 0.7;
  const ImplicitOperator op(p, b, grid);
  const double eps = 1e-2;
  for (double dt : {0.1, 0.05}) {
    FlowState s = FlowState::zero(grid, b);
    s.u.col(1) = sample(grid, [&](auto x) { return eps * std::sin(x[0]); });
    FlowState next = s;
    op.solve_fluid(next.rho, next.u, dt);
    next.t = dt;
    const double f = 1.0 / (1.0 + p.mu * dt);
    // kinetic energy (pi^2) eps^2 a^2 and dissipation mu 2 pi^2 eps^2 a^2 on [0, 2pi)^2
    const double c = std::numbers::pi * std::numbers::pi * eps * eps;
    const double expected = c * (f * f - 1.0) / dt + p.mu * c * (1.0 + f * f);
    const AuditResult a = energy_audit(s, next, p, b, grid);
    EXPECT_NEAR(a.residual, expected, 1e-12 * c) << dt;
  }
}

TEST(Stepper, SimulateRecordsZeroTrajectory) {
  TorusGrid grid(1, 16);
  QBasis b = build_basis(make_hookean(1, 1, 1), 6);
  SimulationInput in;
  in.basis = &b;
  in.grid = &grid;
  in.initial = FlowState::zero(grid, b);
  in.step.dt = 0.1;
  in.step.t_end = 1.0;
  for (Scheme sc : {Scheme::kImex, Scheme::kPicard}) {
    in.step.scheme = sc;
    const TrajectoryRecord rec = simulate(in);
    EXPECT_TRUE(rec.completed());
    ASSERT_EQ(rec.reports.size(), 11u);
    for (size_t i = 1; i < rec.reports.size(); ++i) {
      EXPECT_GT(rec.reports[i].t, rec.reports[i - 1].t);
      EXPECT_EQ(rec.reports[i].E, 0.0);
      EXPECT_EQ(rec.reports[i].e_total, 0.0);
      EXPECT_EQ(rec.reports[i].audit_residual, 0.0);
    }
    EXPECT_EQ(rec.monotonicity_violations, 0);
  }
}

TEST(Stepper, SimulateRecordsStepErrors) {
  TorusGrid grid(1, 16);
  QBasis b = build_basis(make_hookean(1, 1, 1), 4);
  SimulationInput in;
  in.basis = &b;
  in.grid = &grid;
  in.initial = FlowState::zero(grid, b);
  in.initial.u.col(0) = sample(grid, [](auto x) { return std::sin(x[0]); });
  in.step.dt = 0.5;
  in.step.t_end = 1.0;
  const TrajectoryRecord rec = simulate(in);
  EXPECT_FALSE(rec.completed());
  EXPECT_EQ(*rec.error, ExitCode::kCfl);
  EXPECT_EQ(rec.reports.size(), 1u);
}
