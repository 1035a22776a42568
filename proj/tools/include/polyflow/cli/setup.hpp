#pragma once

#include <cstdint>
#include <memory>

#include "polyflow/cli/run_config.hpp"
#include "polyflow/qbasis.hpp"
#include "polyflow/xgrid.hpp"

namespace polyflow::cli {

/// Potential of the configuration. With enforce_moment_bound = false FENE springs
/// too soft for the moment condition can still be built (for the validator).
Potential make_potential(const RunConfig& c, bool enforce_moment_bound = true);

/// Grid, basis and parameters of one run; the basis is shared by pointer so the
/// problem can be copied between jobs cheaply.
struct Problem {
  ModelParams params;
  TorusGrid grid;
  std::shared_ptr<const QBasis> basis;
};

Problem build_problem(const RunConfig& c);

/// Initial state of the configured family:
///   zero:      rho = u = g = 0
///   modal:     rho = eps cos(k.x), u_i = eps sin(k.x), every degree-2 mode of g = eps cos(k.x)
///   shear:     u_1 = eps sin(k x_last) (x_last = x_1 when dim_x = 1), rho = g = 0
///   quadratic: as modal, plus every mode of degree 1 and 2 with its own phase
///   random:    smooth random fields of amplitude eps (seeded)
///   snapshot:  read from initial-data.path
/// All fields pass the dealiasing filter.
FlowState initial_state(const RunConfig& c, const Problem& problem);

/// Smooth random state with wavenumbers up to 2 per axis and spectra decaying in the
/// q-degree; g has zero mean in q when mean_zero_g is set.
FlowState random_state(const TorusGrid& grid, const QBasis& b, double amplitude,
                       std::uint64_t seed, bool mean_zero_g);

}  // namespace polyflow::cli
