#pragma once

#include <string>

#include "polyflow/state.hpp"

namespace polyflow {

/// Grid and basis description stored alongside the fields.
struct SnapshotMeta {
  int dim_x = 1;
  int n = 0;
  double length = 0.0;
  std::string potential;  ///< "hookean" or "fene"
  int dim_q = 1;
  int n_q = 0;
  int basis_size = 0;
  double thermal_scale = 1.0;
  double stiffness = 1.0;
  double max_extension = 0.0;
  double t = 0.0;

  static SnapshotMeta describe(const FlowState& s, const TorusGrid& grid, const QBasis& b);
};

/// Layout: the 8 bytes "PFSNAP1\n", a little-endian uint64 byte count, a JSON header
/// (meta, dtype "f64le", and name/shape of each field), then rho, u, g as row-major
/// little-endian doubles.
void write_snapshot(const std::string& path, const FlowState& s, const TorusGrid& grid,
                    const QBasis& b);

struct Snapshot {
  SnapshotMeta meta;
  FlowState state;
};

/// Throws IoError on unreadable or malformed files.
Snapshot read_snapshot(const std::string& path);

/// Reads a snapshot and checks that it was written with this grid and basis.
FlowState load_snapshot(const std::string& path, const TorusGrid& grid, const QBasis& b);

}  // namespace polyflow
