#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "polyflow/state.hpp"
#include "polyflow/stepper.hpp"

namespace polyflow::cli {

struct PotentialSpec {
  std::string kind = "hookean";  ///< hookean | fene
  double fene_k = 2.0;
  double fene_b0 = 2.0;

  bool operator==(const PotentialSpec&) const = default;
};

struct GridSpec {
  int dim_x = 1;
  int n = 32;
  double length = 6.283185307179586;

  bool operator==(const GridSpec&) const = default;
};

struct BasisSpec {
  int dim_q = 1;
  int n_q = 6;

  bool operator==(const BasisSpec&) const = default;
};

struct InitialSpec {
  /// zero | modal | shear | quadratic | random | snapshot
  std::string family = "zero";
  double epsilon = 1e-3;
  std::vector<int> modes = {1};
  std::string path;
  std::uint64_t seed = 1;

  bool operator==(const InitialSpec&) const = default;
};

struct OutputSpec {
  std::string csv;
  std::string snapshot_dir;
  int snapshot_every = 0;
  std::string report;

  bool operator==(const OutputSpec&) const = default;
};

struct DiagnosticsSpec {
  std::uint64_t seed = 1;
  int samples = 20;
  int max_order = 3;
  double cancellation_tol = 1e-8;
  int eigenvalues = 10;
  int refinements = 1;
  double audit_ratio_tol = 0.15;
  double closure_tol = 1e-6;

  bool operator==(const DiagnosticsSpec&) const = default;
};

/// Runs `simulate` once per value, overriding `key` ("section.key").
struct SweepSpec {
  std::string key;
  std::vector<std::string> values;

  bool empty() const { return key.empty(); }
  bool operator==(const SweepSpec&) const = default;
};

struct RunConfig {
  ModelParams model;
  PotentialSpec potential;
  GridSpec grid;
  BasisSpec basis;
  StepConfig stepper;
  InitialSpec initial;
  OutputSpec output;
  DiagnosticsSpec diagnostics;
  SweepSpec sweep;

  /// Cross-field checks; throws ConfigError naming the offending key.
  void validate() const;
  bool operator==(const RunConfig& o) const;
};

/// Sectioned `key = value` text; `#` and `;` start comment lines. Unknown sections or
/// keys, malformed values and violated constraints raise ConfigError.
/// `base_dir` resolves relative paths.
RunConfig parse_config(const std::string& text, const std::string& base_dir = "");
RunConfig load_config(const std::string& path);

/// Text that parse_config maps back to an identical RunConfig.
std::string serialize_config(const RunConfig& c);

/// Applies one "section.key = value" assignment (used by sweeps).
void set_value(RunConfig& c, const std::string& dotted_key, const std::string& value);

}  // namespace polyflow::cli
