#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "oracles.hpp"
#include "polyflow/dynamics.hpp"
#include "polyflow/error.hpp"
#include "states.hpp"

using namespace polyflow;
using testutil::random_state;
using testutil::sample;

namespace {

double max_abs(const Rhs& r) {
  return std::max({r.rho.cwiseAbs().maxCoeff(), r.u.cwiseAbs().maxCoeff(), r.g.cwiseAbs().maxCoeff()});
}

}  // namespace

TEST(Dynamics, ZeroStateIsStationary) {
  for (int d = 1; d <= 2; ++d) {
    TorusGrid grid(d, 8);
    QBasis b = build_basis(make_hookean(1, 1, d), 4);
    const Rhs r = rhs_perturbation(FlowState::zero(grid, b), ModelParams{}, b, grid);
    EXPECT_EQ(max_abs(r), 0.0);
  }
}

TEST(Dynamics, EigenmodeRelaxes) {
  TorusGrid grid(1, 16);
  QBasis b = build_basis(make_hookean(1, 1, 1), 6);
  ModelParams p;
  p.sigma = 0.5;
  p.r = 2.0;
  p.De = 2.0;
  QBasis bt = build_basis(make_hookean(p.sigma, p.r, 1), 6);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(bt.L());
  const int k = 3;
  const double lam = es.eigenvalues()[k];
  FlowState s = FlowState::zero(grid, bt);
  const Eigen::VectorXd profile = sample(grid, [](auto x) { return 1e-3 * std::sin(x[0]); });
  s.g = profile * es.eigenvectors().col(k).transpose();
  const Rhs r = rhs_perturbation(s, p, bt, grid);
  EXPECT_LE((r.g + p.relaxation_rate() * lam * s.g).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(r.rho.cwiseAbs().maxCoeff(), 0.0);
  const StressDivergence sd = stress_divergence(s, p, bt, grid);
  EXPECT_LE((r.u - sd.div).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Dynamics, NonlinearRemainderIsQuadratic) {
  TorusGrid grid(2, 12);
  QBasis b = build_basis(make_hookean(1, 1, 2), 4);
  ModelParams p;
  const FlowState dir = random_state(grid, b, 1.0, 11);
  auto remainder = [&](double eps) {
    const Rhs full = rhs_perturbation(eps * dir, p, b, grid);
    const Rhs half = rhs_perturbation(0.5 * eps * dir, p, b, grid);
    return max_abs(full - 2.0 * half);
  };
  const double r1 = remainder(1e-2), r2 = remainder(5e-3);
  EXPECT_NEAR(r1 / r2, 4.0, 0.1);
}

TEST(Dynamics, UniformVelocityAdvectsDensity) {
  TorusGrid grid(2, 16);
  QBasis b = build_basis(make_hookean(1, 1, 2), 3);
  ModelParams p;
  p.mu = 0.0;
  p.xi = 0.0;
  FlowState s = FlowState::zero(grid, b);
  s.u.col(0).setConstant(0.3);
  s.u.col(1).setConstant(-0.2);
  s.rho = sample(grid, [](auto x) { return 1e-2 * std::sin(x[0]) * std::cos(2 * x[1]); });
  const Rhs r = rhs_perturbation(s, p, b, grid);
  const Eigen::VectorXd expect = -0.3 * grid.derivative(s.rho, 0) + 0.2 * grid.derivative(s.rho, 1);
  EXPECT_LE((r.rho - expect).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Dynamics, MeanOfGSatisfiesContinuityBalance) {
  for (bool fene : {false, true}) {
    TorusGrid grid(1, 16);
    QBasis b = fene ? build_basis(make_fene(3.0, 1.0), 8) : build_basis(make_hookean(1, 1, 1), 8);
    FlowState s = random_state(grid, b, 0.05, 3);
    const Rhs r = rhs_perturbation(s, ModelParams{}, b, grid);
    const Eigen::VectorXd m = s.g.col(0);
    const Eigen::VectorXd u = s.u.col(0);
    const Eigen::VectorXd dm = grid.derivative(m, 0), du = grid.derivative(u, 0);
    const Eigen::VectorXd expect =
        -grid.dealias(Eigen::VectorXd(u.cwiseProduct(dm) + m.cwiseProduct(du))) - du;
    EXPECT_LE((r.g.col(0) - expect).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(grid.integral(r.g.col(0)), 0.0, 1e-14);
    EXPECT_NEAR(grid.integral(r.rho), 0.0, 1e-14);
  }
}

TEST(Dynamics, StressOfZeroAndOfEquilibrium) {
  QBasis b = build_basis(make_hookean(1, 1, 2), 4);
  TorusGrid grid(2, 4);
  FlowState s = FlowState::zero(grid, b);
  EXPECT_EQ(stress_tau(s, ModelParams{}, b, 2).cwiseAbs().maxCoeff(), 0.0);
  // Psi = M: the full stress integral of q (x) q M is the identity
  s.g.col(0).setConstant(1.0);
  const Eigen::MatrixXd tau = stress_tau(s, ModelParams{}, b, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      EXPECT_NEAR(tau(0, i * 2 + j), i == j ? 1.0 : 0.0, 1e-12);
}

TEST(Dynamics, HookeanStressMatchesQuadrature) {
  QBasis b = build_basis(make_hookean(1, 1, 2), 3);
  TorusGrid grid(2, 4);
  FlowState s = FlowState::zero(grid, b);
  std::mt19937 rng(2);
  std::normal_distribution<double> n;
  Eigen::VectorXd coeff(b.size());
  for (auto& v : coeff) v = n(rng);
  s.g.row(0) = coeff.transpose();
  const Eigen::MatrixXd tau = stress_tau(s, ModelParams{}, b, 2);
  auto gval = [&](double q1, double q2) {
    const auto h1 = oracle::hermite_orthonormal(3, q1), h2 = oracle::hermite_orthonormal(3, q2);
    double v = 0.0;
    for (int k = 0; k < b.size(); ++k) v += coeff[k] * h1[b.indices()[k][0]] * h2[b.indices()[k][1]];
    return v;
  };
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double ref = oracle::gauss_expect([&](double q1) {
        return oracle::gauss_expect([&](double q2) {
          const double qi = i == 0 ? q1 : q2, qj = j == 0 ? q1 : q2;
          return qi * qj * gval(q1, q2);
        }, 1000);
      }, 1000);
      EXPECT_NEAR(tau(0, i * 2 + j), ref, 1e-9);
    }
  EXPECT_NEAR(tau(0, 1), tau(0, 2), 1e-12);
}

TEST(Dynamics, HookeanStressIsSymmetric) {
  TorusGrid grid(3, 4);
  QBasis b = build_basis(make_hookean(1.3, 0.8, 3), 4);
  const FlowState s = random_state(grid, b, 1.0, 9);
  const Eigen::MatrixXd tau = stress_tau(s, ModelParams{}, b, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < i; ++j)
      EXPECT_LE((tau.col(i * 3 + j) - tau.col(j * 3 + i)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Dynamics, StressDivergenceForms) {
  TorusGrid grid(2, 12);
  QBasis b = build_basis(make_hookean(1, 1, 2), 5);
  FlowState s = FlowState::zero(grid, b);
  EXPECT_EQ(stress_divergence(s, ModelParams{}, b, grid).div.cwiseAbs().maxCoeff(), 0.0);
  // separable, mean zero in q
  const Eigen::VectorXd prof = sample(grid, [](auto x) { return std::sin(x[0]) + std::cos(2 * x[1]); });
  s.g.col(4) = prof;
  s.g.col(7) = -0.5 * prof;
  StressDivergence sd = stress_divergence(s, ModelParams{}, b, grid);
  EXPECT_TRUE(sd.alternative_checked);
  EXPECT_LE(sd.gap, 1e-10);
  EXPECT_GT(sd.div.cwiseAbs().maxCoeff(), 0.1);
  s.g.col(0) = 1e-3 * prof;
  sd = stress_divergence(s, ModelParams{}, b, grid);
  EXPECT_FALSE(sd.alternative_checked);
  EXPECT_NE(sd.note.find("skipped"), std::string::npos);
}

TEST(Dynamics, CancellationIdentity) {
  TorusGrid grid(1, 32);
  QBasis b = build_basis(make_hookean(1, 1, 1), 8);
  for (unsigned seed = 0; seed < 5; ++seed) {
    const FlowState s = random_state(grid, b, 0.1, 50 + seed, true);
    for (int order = 0; order <= 3; ++order) {
      const CancellationResult c = cancellation_residual(s, b, grid, order);
      EXPECT_FALSE(c.degenerate);
      EXPECT_LT(c.residual, 1e-9);
      EXPECT_GT(std::abs(c.stress_term), 0.0);
    }
  }
  TorusGrid g2(2, 12);
  QBasis b2 = build_basis(make_hookean(1, 1, 2), 4);
  const FlowState s2 = random_state(g2, b2, 0.1, 77, true);
  for (int order = 0; order <= 3; ++order) EXPECT_LT(cancellation_residual(s2, b2, g2, order).residual, 1e-8);
  const CancellationResult z = cancellation_residual(FlowState::zero(grid, b), b, grid, 2);
  EXPECT_TRUE(z.degenerate);
  EXPECT_EQ(z.residual, 0.0);
}

TEST(Dynamics, VacuumIsReported) {
  TorusGrid grid(1, 8);
  QBasis b = build_basis(make_hookean(1, 1, 1), 3);
  FlowState s = FlowState::zero(grid, b);
  s.rho[5] = -1.0;
  try {
    rhs_perturbation(s, ModelParams{}, b, grid);
    FAIL();
  } catch (const VacuumError& e) {
    EXPECT_EQ(e.point(), 5u);
  }
}
