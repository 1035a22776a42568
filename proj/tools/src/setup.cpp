#include "polyflow/cli/setup.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "polyflow/error.hpp"
#include "polyflow/snapshot.hpp"

namespace polyflow::cli {

namespace {

template <class F>
Eigen::VectorXd sample(const TorusGrid& grid, F&& f) {
  Eigen::VectorXd v(grid.size());
  for (int p = 0; p < grid.size(); ++p) {
    std::array<double, 3> x{0, 0, 0};
    for (int a = 0; a < grid.dim(); ++a) x[a] = grid.coordinate(p, a);
    v[p] = f(x);
  }
  return v;
}

std::array<int, 3> wave_vector(const RunConfig& c) {
  std::array<int, 3> k{0, 0, 0};
  for (int a = 0; a < c.grid.dim_x; ++a)
    k[a] = c.initial.modes.size() == 1 ? c.initial.modes[0] : c.initial.modes[a];
  return k;
}

Eigen::VectorXd wave(const TorusGrid& grid, const std::array<int, 3>& k, double phase) {
  const double scale = 2.0 * std::numbers::pi / grid.length();
  return sample(grid, [&](const std::array<double, 3>& x) {
    double arg = phase;
    for (int a = 0; a < grid.dim(); ++a) arg += scale * k[a] * x[a];
    return std::cos(arg);
  });
}

Eigen::VectorXd smooth_field(const TorusGrid& grid, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::array<double, 8> c{};
  for (auto& v : c) v = normal(rng);
  const double scale = 2.0 * std::numbers::pi / grid.length();
  return sample(grid, [&](const std::array<double, 3>& x) {
    double s = c[0], diag = 0.0;
    for (int a = 0; a < grid.dim(); ++a) {
      const double y = scale * x[a];
      s += c[1 + a] * std::sin(y + c[4]) + c[4 + a] * std::cos(2 * y + c[1]);
      diag += y;
    }
    if (grid.dim() > 1) s += c[7] * std::sin(diag + c[2]);
    return s;
  });
}

}  // namespace

Potential make_potential(const RunConfig& c, bool enforce_moment_bound) {
  if (c.potential.kind == "fene") {
    FeneOptions opt;
    opt.thermal_scale = c.model.theta();
    opt.enforce_moment_bound = enforce_moment_bound;
    return make_fene(c.potential.fene_k, c.potential.fene_b0, opt);
  }
  return make_hookean(c.model.sigma, c.model.r, c.basis.dim_q);
}

Problem build_problem(const RunConfig& c) {
  c.model.validate();
  auto basis = std::make_shared<const QBasis>(build_basis(make_potential(c), c.basis.n_q));
  return Problem{c.model, TorusGrid(c.grid.dim_x, c.grid.n, c.grid.length), std::move(basis)};
}

FlowState random_state(const TorusGrid& grid, const QBasis& b, double amplitude,
                       std::uint64_t seed, bool mean_zero_g) {
  std::mt19937_64 rng(seed);
  FlowState s = FlowState::zero(grid, b);
  s.rho = amplitude * grid.dealias(smooth_field(grid, rng));
  for (int i = 0; i < grid.dim(); ++i) s.u.col(i) = amplitude * grid.dealias(smooth_field(grid, rng));
  for (int k = mean_zero_g ? 1 : 0; k < b.size(); ++k) {
    const double deg = b.total_degree(k);
    s.g.col(k) = amplitude / (1.0 + deg * deg) * grid.dealias(smooth_field(grid, rng));
  }
  return s;
}

FlowState initial_state(const RunConfig& c, const Problem& problem) {
  const TorusGrid& grid = problem.grid;
  const QBasis& b = *problem.basis;
  const std::string& family = c.initial.family;
  const double eps = c.initial.epsilon;
  if (family == "zero") return FlowState::zero(grid, b);
  if (family == "random") return random_state(grid, b, eps, c.initial.seed, false);
  if (family == "snapshot") return load_snapshot(c.initial.path, grid, b);

  FlowState s = FlowState::zero(grid, b);
  const std::array<int, 3> k = wave_vector(c);
  if (family == "shear") {
    std::array<int, 3> kt{0, 0, 0};
    const int axis = grid.dim() - 1;
    kt[axis] = k[axis] != 0 ? k[axis] : k[0];
    s.u.col(0) = eps * grid.dealias(wave(grid, kt, -0.5 * std::numbers::pi));
    return s;
  }
  if (family != "modal" && family != "quadratic")
    throw ConfigError("initial-data", "family", "unknown family '" + family + "'");
  const Eigen::VectorXd cosine = grid.dealias(wave(grid, k, 0.0));
  s.rho = eps * cosine;
  for (int i = 0; i < grid.dim(); ++i)
    s.u.col(i) = eps * grid.dealias(wave(grid, k, -0.5 * std::numbers::pi));
  for (int m = 1; m < b.size(); ++m) {
    const int deg = b.total_degree(m);
    if (deg == 2) s.g.col(m) = eps * cosine;
    if (family == "quadratic" && (deg == 1 || deg == 2))
      s.g.col(m) += eps * grid.dealias(wave(grid, k, 0.7 * m));
  }
  return s;
}

}  // namespace polyflow::cli
