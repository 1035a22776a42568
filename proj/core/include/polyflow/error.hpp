#pragma once

#include <stdexcept>
#include <string>

namespace polyflow {

/// Process exit codes. Each error class below maps to exactly one code.
enum class ExitCode : int {
  kOk = 0,
  kUnexpected = 1,
  kUsage = 2,
  kParameter = 3,
  kCheckFailed = 4,
  kPositivity = 5,
  kVacuum = 6,
  kCfl = 7,
  kNonConvergence = 8,
  kNonContraction = 9,
  kUnsupported = 10,
  kConsistency = 11,
  kIo = 12,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& what) : Error(ExitCode::kParameter, what) {}
};

/// Configuration problems carry the offending section/key.
class ConfigError : public Error {
 public:
  ConfigError(std::string section, std::string key, const std::string& what)
      : Error(ExitCode::kUsage, "[" + section + "] " + key + ": " + what),
        section_(std::move(section)),
        key_(std::move(key)) {}
  const std::string& section() const noexcept { return section_; }
  const std::string& key() const noexcept { return key_; }

 private:
  std::string section_;
  std::string key_;
};

class PositivityError : public Error {
 public:
  explicit PositivityError(const std::string& what) : Error(ExitCode::kPositivity, what) {}
};

class VacuumError : public Error {
 public:
  VacuumError(std::size_t point, double value)
      : Error(ExitCode::kVacuum, "vacuum: 1 + rho = " + std::to_string(value) +
                                     " at grid point " + std::to_string(point)),
        point_(point) {}
  std::size_t point() const noexcept { return point_; }

 private:
  std::size_t point_;
};

class CflError : public Error {
 public:
  CflError(double dt, double suggested)
      : Error(ExitCode::kCfl, "CFL violation: dt = " + std::to_string(dt) +
                                  " exceeds bound, suggested dt = " + std::to_string(suggested)),
        suggested_(suggested) {}
  double suggested_dt() const noexcept { return suggested_; }

 private:
  double suggested_;
};

class ConvergenceError : public Error {
 public:
  explicit ConvergenceError(const std::string& what) : Error(ExitCode::kNonConvergence, what) {}
};

class NonContractionError : public Error {
 public:
  explicit NonContractionError(const std::string& what) : Error(ExitCode::kNonContraction, what) {}
};

class UnsupportedError : public Error {
 public:
  explicit UnsupportedError(const std::string& what) : Error(ExitCode::kUnsupported, what) {}
};

class ConsistencyError : public Error {
 public:
  explicit ConsistencyError(const std::string& what) : Error(ExitCode::kConsistency, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ExitCode::kIo, what) {}
};

class CheckFailed : public Error {
 public:
  explicit CheckFailed(const std::string& what) : Error(ExitCode::kCheckFailed, what) {}
};

}  // namespace polyflow
