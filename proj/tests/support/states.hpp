#pragma once

#include <array>
#include <cmath>
#include <random>

#include "polyflow/state.hpp"

namespace testutil {

inline Eigen::VectorXd sample(const polyflow::TorusGrid& g, auto&& f) {
  Eigen::VectorXd v(g.size());
  for (int p = 0; p < g.size(); ++p) {
    std::array<double, 3> x{0, 0, 0};
    for (int a = 0; a < g.dim(); ++a) x[a] = g.coordinate(p, a);
    v[p] = f(x);
  }
  return v;
}

// Smooth random field with wavenumbers 0..2 per axis.
inline Eigen::VectorXd smooth_field(const polyflow::TorusGrid& grid, std::mt19937& rng) {
  std::normal_distribution<double> n;
  std::array<double, 8> c{};
  for (auto& v : c) v = n(rng);
  return sample(grid, [&](auto x) {
    double s = c[0], diag = 0.0;
    for (int a = 0; a < grid.dim(); ++a) {
      s += c[1 + a] * std::sin(x[a] + c[4]) + c[4 + a] * std::cos(2 * x[a] + c[1]);
      diag += x[a];
    }
    if (grid.dim() > 1) s += c[7] * std::sin(diag + c[2]);
    return s;
  });
}

inline polyflow::FlowState random_state(const polyflow::TorusGrid& grid,
                                        const polyflow::QBasis& b, double amp, unsigned seed,
                                        bool mean_zero_g = false) {
  std::mt19937 rng(seed);
  polyflow::FlowState s = polyflow::FlowState::zero(grid, b);
  s.rho = amp * smooth_field(grid, rng);
  for (int i = 0; i < grid.dim(); ++i) s.u.col(i) = amp * smooth_field(grid, rng);
  for (int k = mean_zero_g ? 1 : 0; k < b.size(); ++k) {
    const double deg = b.total_degree(k);
    s.g.col(k) = amp / (1.0 + deg * deg) * smooth_field(grid, rng);
  }
  return s;
}

}  // namespace testutil
