#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "polyflow/error.hpp"
#include "polyflow/state.hpp"

using namespace polyflow;

namespace {

constexpr double kPi = std::numbers::pi;

struct Setup {
  TorusGrid grid;
  QBasis basis;
  ModelParams params;
};

Setup setup_1d(int nx = 16, int nq = 8) {
  return {TorusGrid(1, nx), build_basis(make_hookean(1, 1, 1), nq), ModelParams{}};
}

Eigen::VectorXd sample(const TorusGrid& g, auto&& f) {
  Eigen::VectorXd v(g.size());
  for (int p = 0; p < g.size(); ++p) {
    std::array<double, 3> x{0, 0, 0};
    for (int a = 0; a < g.dim(); ++a) x[a] = g.coordinate(p, a);
    v[p] = f(x);
  }
  return v;
}

// Smooth random state with low wavenumbers and decaying basis coefficients.
FlowState random_state(const TorusGrid& grid, const QBasis& b, double amp, unsigned seed,
                       bool mean_zero_g = false) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> n;
  auto field = [&]() {
    std::array<double, 3> c{};
    std::array<double, 3> ph{};
    for (auto& v : c) v = n(rng);
    for (auto& v : ph) v = n(rng);
    return sample(grid, [&](auto x) {
      double s = c[0];
      for (int a = 0; a < grid.dim(); ++a) s += c[1] * std::sin(x[a] + ph[a]) + c[2] * std::cos(2 * x[a] + ph[1]);
      return s;
    });
  };
  FlowState s = FlowState::zero(grid, b);
  s.rho = amp * field();
  for (int i = 0; i < grid.dim(); ++i) s.u.col(i) = amp * field();
  for (int k = mean_zero_g ? 1 : 0; k < b.size(); ++k)
    s.g.col(k) = amp / (1.0 + b.total_degree(k) * b.total_degree(k)) * field();
  return s;
}

double hermite_mode_norm(int n, bool with_gradient) {
  // sum_{beta <= 3} int (1 + q^2) (d^beta d^grad p_n)^2 M, derivatives via p_n' = sqrt(n) p_{n-1}
  double acc = 0.0;
  const int shift = with_gradient ? 1 : 0;
  for (int beta = 0; beta <= 3; ++beta) {
    const int order = beta + shift;
    if (order > n) break;
    double factor = 1.0;
    for (int k = 0; k < order; ++k) factor *= (n - k);
    const int m = n - order;
    acc += factor * oracle::gauss_expect([&](double q) {
      const double p = oracle::hermite_orthonormal(n, q)[m];
      return (1 + q * q) * p * p;
    });
  }
  return acc;
}

}  // namespace

TEST(ModelParams, DefaultsAndValidation) {
  ModelParams p;
  EXPECT_EQ(p.gamma, 2.0);
  EXPECT_NO_THROW(p.validate());
  p.gamma = 0.5;
  EXPECT_THROW(p.validate(), ParameterError);
  p = {};
  p.mu = 1;
  p.xi = -2.5;
  EXPECT_THROW(p.validate(), ParameterError);
  p = {};
  p.De = 0;
  EXPECT_THROW(p.validate(), ParameterError);
  EXPECT_NEAR(ModelParams{}.pressure_coefficient(1.0), 2.0, 1e-15);
}

TEST(State, ZeroStateHasZeroFunctionals) {
  auto [grid, b, p] = setup_1d();
  FlowState s = FlowState::zero(grid, b);
  EXPECT_EQ(energy_E(s, b, grid).total(), 0.0);
  EXPECT_EQ(dissipation_D(s, p, b, grid).total(), 0.0);
  const EtaFunctionals ef = energy_eta(s, p, b, grid, 0.1);
  EXPECT_EQ(ef.E, 0.0);
  EXPECT_EQ(ef.D, 0.0);
  const TotalEnergy te = total_energy_and_dissipation(s, p, b, grid);
  EXPECT_EQ(te.dissipation, 0.0);
  EXPECT_EQ(te.energy, 0.0);
  EXPECT_NEAR(te.baseline, 2 * kPi * (1.0 - std::log(std::sqrt(2 * kPi))), 1e-12);
  EXPECT_EQ(mean_in_q(s).cwiseAbs().maxCoeff(), 0.0);
}

TEST(State, DensityModeEnergyMatchesParseval) {
  auto [grid, b, p] = setup_1d(32);
  const double eps = 1e-2;
  for (int k : {1, 3}) {
    FlowState s = FlowState::zero(grid, b);
    s.rho = sample(grid, [&](auto x) { return eps * std::sin(k * x[0]); });
    double expect = 0.0;
    for (int j = 0; j <= 3; ++j) expect += std::pow(k, 2 * j);
    expect *= eps * eps * kPi;
    EXPECT_NEAR(energy_E(s, b, grid).total(), expect, 1e-12 * expect);
  }
}

TEST(State, SingleBasisModeEnergyMatchesQuadrature) {
  auto [grid, b, p] = setup_1d(8, 8);
  const double eps = 1e-3;
  for (int n : {1, 2, 5}) {
    FlowState s = FlowState::zero(grid, b);
    s.g.col(n).setConstant(eps);
    const double vol = grid.volume();
    EXPECT_NEAR(energy_E(s, b, grid).g, eps * eps * vol * hermite_mode_norm(n, false),
                1e-10 * eps * eps * vol * hermite_mode_norm(n, false));
    EXPECT_NEAR(dissipation_D(s, p, b, grid).g, eps * eps * vol * hermite_mode_norm(n, true),
                1e-10 * eps * eps * vol * hermite_mode_norm(n, true));
    if (n == 1) EXPECT_NEAR(energy_E(s, b, grid).g, 6 * eps * eps * vol, 1e-12);
    EXPECT_LE(mean_in_q(s).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(State, VelocityModeDissipationMatchesMultipliers) {
  auto [grid, b, p] = setup_1d(32);
  p.mu = 0.7;
  p.xi = 0.4;
  const double eps = 1e-2;
  const int k = 2;
  FlowState s = FlowState::zero(grid, b);
  s.u.col(0) = sample(grid, [&](auto x) { return eps * std::sin(k * x[0]); });
  double h3 = 0.0;
  for (int j = 0; j <= 3; ++j) h3 += std::pow(k, 2 * j);
  const DissipationParts d = dissipation_D(s, p, b, grid);
  EXPECT_NEAR(d.visc, p.mu * eps * eps * k * k * h3 * kPi, 1e-12);
  EXPECT_NEAR(d.div, (p.mu + p.xi) * eps * eps * k * k * h3 * kPi, 1e-12);
  EXPECT_EQ(d.g, 0.0);
}

TEST(State, FunctionalsNonnegativeOnRandomStates) {
  TorusGrid grid(2, 8);
  QBasis b = build_basis(make_hookean(1, 1, 2), 4);
  ModelParams p;
  for (unsigned seed = 0; seed < 10; ++seed) {
    FlowState s = random_state(grid, b, 0.05, seed);
    EXPECT_GE(energy_E(s, b, grid).total(), 0.0);
    EXPECT_GE(dissipation_D(s, p, b, grid).total(), 0.0);
    const EtaFunctionals ef = energy_eta(s, p, b, grid, 0.3);
    EXPECT_GE(ef.E, 0.0);
    EXPECT_GE(ef.D, 0.0);
  }
}

TEST(State, EtaEquivalence) {
  TorusGrid grid(1, 16);
  QBasis b = build_basis(make_hookean(1, 1, 1), 6);
  ModelParams p;
  for (double eta : {0.5, 0.1, 0.01})
    for (unsigned seed = 0; seed < 20; ++seed) {
      FlowState s = random_state(grid, b, 0.1, 100 + seed);
      const double e = energy_E(s, b, grid).total();
      const EtaFunctionals ef = energy_eta(s, p, b, grid, eta);
      EXPECT_LE(std::pow(eta, 3) * e, ef.E);
      EXPECT_LE(ef.E, 2 * e);
      EXPECT_LE(std::pow(eta, 3) * dissipation_D(s, p, b, grid).total(), ef.D);
    }
  FlowState s = FlowState::zero(grid, b);
  EXPECT_THROW(energy_eta(s, p, b, grid, 1.0), ParameterError);
  EXPECT_THROW(energy_eta(s, p, b, grid, 0.0), ParameterError);
}

TEST(State, UniformVelocityKineticEnergy) {
  auto [grid, b, p] = setup_1d();
  FlowState s = FlowState::zero(grid, b);
  s.u.setConstant(1e-3);
  const TotalEnergy te = total_energy_and_dissipation(s, p, b, grid);
  EXPECT_NEAR(te.energy, 0.5 * grid.volume() * 1e-6, 1e-18);
  EXPECT_EQ(te.dissipation, 0.0);
}

TEST(State, EntropyOfSmallModeIsPositive) {
  auto [grid, b, p] = setup_1d();
  FlowState s = FlowState::zero(grid, b);
  s.g.col(2).setConstant(1e-3);
  const TotalEnergy te = total_energy_and_dissipation(s, p, b, grid);
  EXPECT_GT(te.entropy, 0.0);
  // leading order kappa vol eps^2 / 2
  EXPECT_NEAR(te.entropy, 0.5 * grid.volume() * 1e-6, 1e-3 * 0.5 * grid.volume() * 1e-6);
  // dissipation kappa sigma / De vol |grad g|^2 to leading order: p_2' = sqrt 2 p_1
  EXPECT_NEAR(te.d_polymer, 2 * grid.volume() * 1e-6, 1e-2 * 2 * grid.volume() * 1e-6);
}

TEST(State, EntropyDensityIsContinuous) {
  for (double g : {0.0499999, 0.0500001, -0.0499999, -0.0500001, 1e-8, 0.3}) {
    const double direct = (1 + g) * std::log1p(g) - g;
    EXPECT_NEAR(entropy_density(g), direct, 1e-15 + 1e-12 * std::abs(direct));
  }
  EXPECT_NEAR(entropy_density(1e-6), 0.5e-12 - 1e-18 / 6 + 1e-24 / 12, 1e-28);
}

TEST(State, PositivityAndVacuumErrors) {
  auto [grid, b, p] = setup_1d();
  FlowState s = FlowState::zero(grid, b);
  s.g.col(1).setConstant(2.0);  // 1 + 2q < 0 for q < -1/2
  EXPECT_LT(min_one_plus_g(s, b), 0.0);
  EXPECT_THROW(total_energy_and_dissipation(s, p, b, grid), PositivityError);
  s = FlowState::zero(grid, b);
  s.rho[3] = -1.5;
  EXPECT_THROW(energy_E(s, b, grid), VacuumError);
  p.gamma = 1.0;
  EXPECT_THROW(total_energy_and_dissipation(FlowState::zero(grid, b), p, b, grid), UnsupportedError);
}

TEST(State, MassAndMeanDiagnostics) {
  auto [grid, b, p] = setup_1d();
  FlowState s = FlowState::zero(grid, b);
  EXPECT_NEAR(polymer_mass(s, grid), grid.volume(), 1e-14);
  s.g.col(0).setConstant(0.01);
  EXPECT_NEAR(polymer_mass(s, grid), 1.01 * grid.volume(), 1e-13);
  const EnergyReport r = make_report(s, p, b, grid, 0.1);
  EXPECT_NEAR(r.max_abs_m, 0.01, 1e-15);
  EXPECT_NEAR(r.min_one_plus_g, 1.01, 1e-12);
}

TEST(State, QAndXDerivativesCommute) {
  TorusGrid grid(1, 16);
  QBasis b = build_basis(make_hookean(1, 1, 1), 6);
  FlowState s = random_state(grid, b, 1.0, 5);
  const Eigen::MatrixXd qx = grid.backward_columns([&] {
    Eigen::MatrixXcd h = grid.forward_columns(s.g * b.D(0).transpose());
    grid.apply_symbol(h, {1, 0, 0});
    return h;
  }());
  Eigen::MatrixXcd h = grid.forward_columns(s.g);
  grid.apply_symbol(h, {1, 0, 0});
  const Eigen::MatrixXd xq = grid.backward_columns(h) * b.D(0).transpose();
  EXPECT_LE((qx - xq).cwiseAbs().maxCoeff(), 1e-12);
}
