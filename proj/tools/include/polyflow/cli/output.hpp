#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "polyflow/state.hpp"

namespace polyflow::cli {

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

/// Column names of the time-series CSV, in order.
const std::vector<std::string>& report_columns();
std::string report_header();
std::string report_row(int step, const EnergyReport& r);

/// Minimal CSV file: header written on open, rows appended as given.
class CsvFile {
 public:
  CsvFile() = default;
  /// Empty path: every call is a no-op.
  CsvFile(const std::string& path, const std::string& header);
  bool active() const { return out_.is_open(); }
  void row(const std::string& line);

 private:
  std::string path_;
  std::ofstream out_;
};

/// Writes key = value lines (the --report-out file).
void write_key_values(const std::string& path,
                      const std::vector<std::pair<std::string, std::string>>& entries);

}  // namespace polyflow::cli
