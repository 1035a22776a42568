#include "polyflow/cli/output.hpp"

#include <charconv>
#include <functional>
#include <utility>

#include "polyflow/error.hpp"

namespace polyflow::cli {

namespace {

using Getter = std::function<double(const EnergyReport&)>;

const std::vector<std::pair<std::string, Getter>>& report_fields() {
  static const std::vector<std::pair<std::string, Getter>> f = {
      {"t", [](const EnergyReport& r) { return r.t; }},
      {"E", [](const EnergyReport& r) { return r.E; }},
      {"E_rho", [](const EnergyReport& r) { return r.e_rho; }},
      {"E_u", [](const EnergyReport& r) { return r.e_u; }},
      {"E_g", [](const EnergyReport& r) { return r.e_g; }},
      {"D", [](const EnergyReport& r) { return r.D; }},
      {"D_visc", [](const EnergyReport& r) { return r.d_visc; }},
      {"D_div", [](const EnergyReport& r) { return r.d_div; }},
      {"D_g", [](const EnergyReport& r) { return r.d_g; }},
      {"E_eta", [](const EnergyReport& r) { return r.e_eta; }},
      {"D_eta", [](const EnergyReport& r) { return r.d_eta; }},
      {"cross", [](const EnergyReport& r) { return r.cross; }},
      {"kinetic", [](const EnergyReport& r) { return r.kinetic; }},
      {"internal", [](const EnergyReport& r) { return r.internal; }},
      {"entropy", [](const EnergyReport& r) { return r.entropy; }},
      {"E_total", [](const EnergyReport& r) { return r.e_total; }},
      {"D_total", [](const EnergyReport& r) { return r.d_total; }},
      {"D_polymer", [](const EnergyReport& r) { return r.d_polymer; }},
      {"defect", [](const EnergyReport& r) { return r.defect; }},
      {"audit_residual", [](const EnergyReport& r) { return r.audit_residual; }},
      {"audit_normalized", [](const EnergyReport& r) { return r.audit_normalized; }},
      {"min_one_plus_g", [](const EnergyReport& r) { return r.min_one_plus_g; }},
      {"min_one_plus_rho", [](const EnergyReport& r) { return r.min_one_plus_rho; }},
      {"max_abs_m", [](const EnergyReport& r) { return r.max_abs_m; }},
      {"mean_m", [](const EnergyReport& r) { return r.mean_m; }},
      {"mass", [](const EnergyReport& r) { return r.mass; }},
      {"picard_iterations", [](const EnergyReport& r) { return double(r.picard_iterations); }},
      {"picard_last_ratio", [](const EnergyReport& r) { return r.picard_last_ratio; }},
  };
  return f;
}

}  // namespace

std::string format_double(double v) {
  if (v == 0.0) v = 0.0;  // no "-0" in output
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c = {"step"};
    for (const auto& [name, get] : report_fields()) c.push_back(name);
    return c;
  }();
  return cols;
}

std::string report_header() {
  std::string h;
  for (const auto& c : report_columns()) h += (h.empty() ? "" : ",") + c;
  return h;
}

std::string report_row(int step, const EnergyReport& r) {
  std::string line = std::to_string(step);
  for (const auto& [name, get] : report_fields()) line += "," + format_double(get(r));
  return line;
}

CsvFile::CsvFile(const std::string& path, const std::string& header) : path_(path) {
  if (path.empty()) return;
  out_.open(path, std::ios::trunc);
  if (!out_) throw IoError("cannot open CSV for writing: " + path);
  out_ << header << '\n';
}

void CsvFile::row(const std::string& line) {
  if (!out_.is_open()) return;
  out_ << line << '\n';
  if (!out_) throw IoError("write failed: " + path_);
}

void write_key_values(const std::string& path,
                      const std::vector<std::pair<std::string, std::string>>& entries) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open report for writing: " + path);
  for (const auto& [k, v] : entries) out << k << " = " << v << '\n';
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace polyflow::cli
