#include "polyflow/cli/run_config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "polyflow/error.hpp"

namespace polyflow::cli {

namespace {

namespace fs = std::filesystem;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

template <class T>
T parse_number(const std::string& text) {
  const std::string s = trim(text);
  T v{};
  const char* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || p != end)
    throw std::invalid_argument("'" + s + "' is not a valid number");
  return v;
}

template <class T>
std::string format_number(T v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

// Value codecs: text <-> typed field.
template <class T>
struct Codec;

template <>
struct Codec<double> {
  static double parse(const std::string& s) {
    const double v = parse_number<double>(s);
    if (!std::isfinite(v)) throw std::invalid_argument("value must be finite");
    return v;
  }
  static std::string format(double v) { return format_number(v); }
};

template <>
struct Codec<int> {
  static int parse(const std::string& s) { return parse_number<int>(s); }
  static std::string format(int v) { return format_number(v); }
};

template <>
struct Codec<std::uint64_t> {
  static std::uint64_t parse(const std::string& s) { return parse_number<std::uint64_t>(s); }
  static std::string format(std::uint64_t v) { return format_number(v); }
};

template <>
struct Codec<bool> {
  static bool parse(const std::string& text) {
    const std::string s = trim(text);
    if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
    if (s == "false" || s == "no" || s == "off" || s == "0") return false;
    throw std::invalid_argument("'" + s + "' is not a boolean (true/false)");
  }
  static std::string format(bool v) { return v ? "true" : "false"; }
};

template <>
struct Codec<std::string> {
  static std::string parse(const std::string& s) { return trim(s); }
  static std::string format(const std::string& v) { return v; }
};

template <>
struct Codec<Scheme> {
  static Scheme parse(const std::string& text) {
    const std::string s = trim(text);
    if (s == "imex") return Scheme::kImex;
    if (s == "picard") return Scheme::kPicard;
    throw std::invalid_argument("'" + s + "' is not a scheme (imex | picard)");
  }
  static std::string format(Scheme v) { return v == Scheme::kImex ? "imex" : "picard"; }
};

template <>
struct Codec<std::vector<int>> {
  static std::vector<int> parse(const std::string& s) {
    std::vector<int> out;
    for (const auto& item : split_list(s)) out.push_back(parse_number<int>(item));
    return out;
  }
  static std::string format(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_number(v[i]);
    return out;
  }
};

template <>
struct Codec<std::vector<std::string>> {
  static std::vector<std::string> parse(const std::string& s) { return split_list(s); }
  static std::string format(const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + v[i];
    return out;
  }
};

struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
  // Returns an error message for an invalid value, empty when fine.
  std::function<std::string(const RunConfig&)> check;
};

template <class Acc>
Field field(const char* section, const char* key, Acc acc,
            std::function<std::string(const std::remove_reference_t<
                                      decltype(acc(std::declval<RunConfig&>()))>&)>
                check = {}) {
  using T = std::remove_reference_t<decltype(acc(std::declval<RunConfig&>()))>;
  Field f;
  f.section = section;
  f.key = key;
  f.get = [acc](const RunConfig& c) { return Codec<T>::format(acc(const_cast<RunConfig&>(c))); };
  f.set = [acc](RunConfig& c, const std::string& v) { acc(c) = Codec<T>::parse(v); };
  f.check = [acc, check](const RunConfig& c) {
    return check ? check(acc(const_cast<RunConfig&>(c))) : std::string();
  };
  return f;
}

std::string positive(const double& v) { return v > 0.0 ? "" : "must be positive"; }
std::string non_negative(const double& v) { return v >= 0.0 ? "" : "must be >= 0"; }
auto int_range(int lo, int hi) {
  return [lo, hi](const int& v) {
    return v >= lo && v <= hi
               ? std::string()
               : "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]";
  };
}
auto one_of(std::set<std::string> allowed) {
  return [allowed](const std::string& v) {
    if (allowed.count(v)) return std::string();
    std::string msg = "'" + v + "' is not one of";
    for (const auto& a : allowed) msg += " " + a;
    return msg;
  };
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> t;
    // [model]
    t.push_back(field("model", "mu", [](RunConfig& c) -> auto& { return c.model.mu; }));
    t.push_back(field("model", "xi", [](RunConfig& c) -> auto& { return c.model.xi; }));
    t.push_back(field("model", "a", [](RunConfig& c) -> auto& { return c.model.a; }, positive));
    t.push_back(field("model", "gamma", [](RunConfig& c) -> auto& { return c.model.gamma; },
                      [](const double& v) { return v >= 1.0 ? "" : std::string("must be >= 1 (gamma-law pressure)"); }));
    t.push_back(field("model", "sigma", [](RunConfig& c) -> auto& { return c.model.sigma; }, positive));
    t.push_back(field("model", "r", [](RunConfig& c) -> auto& { return c.model.r; }, positive));
    t.push_back(field("model", "lambda", [](RunConfig& c) -> auto& { return c.model.lambda; }, positive));
    t.push_back(field("model", "De", [](RunConfig& c) -> auto& { return c.model.De; }, positive));
    t.push_back(field("model", "Ma", [](RunConfig& c) -> auto& { return c.model.Ma; }, positive));
    t.push_back(field("model", "potential", [](RunConfig& c) -> auto& { return c.potential.kind; },
                      one_of({"hookean", "fene"})));
    t.push_back(field("model", "fene_k", [](RunConfig& c) -> auto& { return c.potential.fene_k; }, positive));
    t.push_back(field("model", "fene_b0", [](RunConfig& c) -> auto& { return c.potential.fene_b0; }, positive));
    // [grid]
    t.push_back(field("grid", "dim_x", [](RunConfig& c) -> auto& { return c.grid.dim_x; }, int_range(1, 3)));
    t.push_back(field("grid", "n", [](RunConfig& c) -> auto& { return c.grid.n; },
                      [](const int& v) { return v >= 4 && v % 2 == 0 ? "" : std::string("must be even and >= 4"); }));
    t.push_back(field("grid", "length", [](RunConfig& c) -> auto& { return c.grid.length; }, positive));
    // [basis]
    t.push_back(field("basis", "dim_q", [](RunConfig& c) -> auto& { return c.basis.dim_q; }, int_range(1, 3)));
    t.push_back(field("basis", "n_q", [](RunConfig& c) -> auto& { return c.basis.n_q; }, int_range(2, 64)));
    // [stepper]
    t.push_back(field("stepper", "scheme", [](RunConfig& c) -> auto& { return c.stepper.scheme; }));
    t.push_back(field("stepper", "order", [](RunConfig& c) -> auto& { return c.stepper.order; }, int_range(1, 2)));
    t.push_back(field("stepper", "dt", [](RunConfig& c) -> auto& { return c.stepper.dt; }, positive));
    t.push_back(field("stepper", "t_end", [](RunConfig& c) -> auto& { return c.stepper.t_end; }, positive));
    t.push_back(field("stepper", "picard_tol", [](RunConfig& c) -> auto& { return c.stepper.picard_tol; }, positive));
    t.push_back(field("stepper", "picard_max_iter", [](RunConfig& c) -> auto& { return c.stepper.picard_max_iter; },
                      int_range(2, 100000)));
    t.push_back(field("stepper", "cfl_safety", [](RunConfig& c) -> auto& { return c.stepper.cfl_safety; },
                      [](const double& v) { return v > 0.0 && v <= 1.0 ? "" : std::string("must lie in (0, 1]"); }));
    t.push_back(field("stepper", "audit", [](RunConfig& c) -> auto& { return c.stepper.audit; }));
    t.push_back(field("stepper", "eta", [](RunConfig& c) -> auto& { return c.stepper.eta; },
                      [](const double& v) { return v > 0.0 && v < 1.0 ? "" : std::string("must lie in (0, 1)"); }));
    t.push_back(field("stepper", "monotone_tol", [](RunConfig& c) -> auto& { return c.stepper.monotone_tol; },
                      non_negative));
    // [initial-data]
    t.push_back(field("initial-data", "family", [](RunConfig& c) -> auto& { return c.initial.family; },
                      one_of({"zero", "modal", "shear", "quadratic", "random", "snapshot"})));
    t.push_back(field("initial-data", "epsilon", [](RunConfig& c) -> auto& { return c.initial.epsilon; },
                      non_negative));
    t.push_back(field("initial-data", "modes", [](RunConfig& c) -> auto& { return c.initial.modes; }));
    t.push_back(field("initial-data", "path", [](RunConfig& c) -> auto& { return c.initial.path; }));
    t.push_back(field("initial-data", "seed", [](RunConfig& c) -> auto& { return c.initial.seed; }));
    // [output]
    t.push_back(field("output", "csv", [](RunConfig& c) -> auto& { return c.output.csv; }));
    t.push_back(field("output", "snapshot_dir", [](RunConfig& c) -> auto& { return c.output.snapshot_dir; }));
    t.push_back(field("output", "snapshot_every", [](RunConfig& c) -> auto& { return c.output.snapshot_every; },
                      int_range(0, 1 << 30)));
    t.push_back(field("output", "report", [](RunConfig& c) -> auto& { return c.output.report; }));
    // [diagnostics]
    t.push_back(field("diagnostics", "seed", [](RunConfig& c) -> auto& { return c.diagnostics.seed; }));
    t.push_back(field("diagnostics", "samples", [](RunConfig& c) -> auto& { return c.diagnostics.samples; },
                      int_range(1, 100000)));
    t.push_back(field("diagnostics", "max_order", [](RunConfig& c) -> auto& { return c.diagnostics.max_order; },
                      int_range(0, 3)));
    t.push_back(field("diagnostics", "cancellation_tol",
                      [](RunConfig& c) -> auto& { return c.diagnostics.cancellation_tol; }, positive));
    t.push_back(field("diagnostics", "eigenvalues", [](RunConfig& c) -> auto& { return c.diagnostics.eigenvalues; },
                      int_range(1, 1000)));
    t.push_back(field("diagnostics", "refinements", [](RunConfig& c) -> auto& { return c.diagnostics.refinements; },
                      int_range(1, 8)));
    t.push_back(field("diagnostics", "audit_ratio_tol",
                      [](RunConfig& c) -> auto& { return c.diagnostics.audit_ratio_tol; }, positive));
    t.push_back(field("diagnostics", "closure_tol", [](RunConfig& c) -> auto& { return c.diagnostics.closure_tol; },
                      positive));
    // [sweep]
    t.push_back(field("sweep", "key", [](RunConfig& c) -> auto& { return c.sweep.key; }));
    t.push_back(field("sweep", "values", [](RunConfig& c) -> auto& { return c.sweep.values; }));
    return t;
  }();
  return table;
}

const std::vector<std::string>& sections() {
  static const std::vector<std::string> s = {"model",  "grid",        "basis", "stepper",
                                             "initial-data", "output", "diagnostics", "sweep"};
  return s;
}

const Field* find_field(const std::string& section, const std::string& key) {
  for (const auto& f : fields())
    if (f.section == section && f.key == key) return &f;
  return nullptr;
}

void assign(RunConfig& c, const Field& f, const std::string& value) {
  try {
    f.set(c, value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(f.section, f.key, e.what());
  } catch (const std::out_of_range&) {
    throw ConfigError(f.section, f.key, "'" + value + "' is out of range");
  }
}

bool parent_exists(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  return parent.empty() || fs::is_directory(parent);
}

std::string resolve(const std::string& path, const std::string& base_dir) {
  if (path.empty() || base_dir.empty() || fs::path(path).is_absolute()) return path;
  return fs::absolute(fs::path(base_dir) / path).lexically_normal().string();
}

}  // namespace

void RunConfig::validate() const {
  for (const auto& f : fields()) {
    const std::string msg = f.check(*this);
    if (!msg.empty()) throw ConfigError(f.section, f.key, msg);
  }
  if (!(2.0 * model.mu + model.xi > 0.0))
    throw ConfigError("model", "xi", "viscosities must satisfy 2 mu + xi > 0");
  if (potential.kind == "fene" && basis.dim_q != 1)
    throw ConfigError("basis", "dim_q", "the FENE potential requires dim_q = 1");
  if (basis.dim_q < grid.dim_x)
    throw ConfigError("basis", "dim_q", "must be at least grid.dim_x (the flow stretches q through grad u)");
  const double steps = stepper.t_end / stepper.dt;
  if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
    throw ConfigError("stepper", "t_end", "must be an integer multiple of dt");

  const bool needs_modes = initial.family == "modal" || initial.family == "shear" ||
                           initial.family == "quadratic";
  if (needs_modes) {
    if (initial.modes.size() != 1 && initial.modes.size() != static_cast<std::size_t>(grid.dim_x))
      throw ConfigError("initial-data", "modes", "give one wavenumber or one per spatial axis");
    bool nonzero = false;
    for (int k : initial.modes) {
      if (std::abs(k) > grid.n / 3)
        throw ConfigError("initial-data", "modes",
                          "wavenumber " + std::to_string(k) + " is removed by the dealiasing filter (|k| <= n / 3)");
      nonzero = nonzero || k != 0;
    }
    if (!nonzero) throw ConfigError("initial-data", "modes", "at least one wavenumber must be nonzero");
  }
  if (initial.family == "snapshot") {
    if (initial.path.empty()) throw ConfigError("initial-data", "path", "required for the snapshot family");
    if (!fs::is_regular_file(initial.path))
      throw ConfigError("initial-data", "path", "no such file: " + initial.path);
  }
  if (!parent_exists(output.csv))
    throw ConfigError("output", "csv", "directory does not exist: " + output.csv);
  if (!parent_exists(output.report))
    throw ConfigError("output", "report", "directory does not exist: " + output.report);
  if (!output.snapshot_dir.empty() && !parent_exists(output.snapshot_dir))
    throw ConfigError("output", "snapshot_dir", "parent directory does not exist: " + output.snapshot_dir);
  if (output.snapshot_every > 0 && output.snapshot_dir.empty())
    throw ConfigError("output", "snapshot_dir", "required when snapshot_every > 0");

  if (!sweep.key.empty()) {
    const auto dot = sweep.key.find('.');
    const Field* f = dot == std::string::npos
                         ? nullptr
                         : find_field(sweep.key.substr(0, dot), sweep.key.substr(dot + 1));
    if (!f || f->section == "sweep")
      throw ConfigError("sweep", "key", "'" + sweep.key + "' does not name a configuration key");
    if (sweep.values.empty()) throw ConfigError("sweep", "values", "at least one value is required");
    for (const auto& v : sweep.values) {
      RunConfig probe = *this;
      probe.sweep = {};
      try {
        set_value(probe, sweep.key, v);
        probe.validate();
      } catch (const ConfigError& e) {
        throw ConfigError("sweep", "values", "value '" + v + "': " + e.what());
      }
    }
  } else if (!sweep.values.empty()) {
    throw ConfigError("sweep", "key", "values given without a key");
  }
}

bool RunConfig::operator==(const RunConfig& o) const {
  const auto same_step = [](const StepConfig& a, const StepConfig& b) {
    return a.dt == b.dt && a.t_end == b.t_end && a.scheme == b.scheme && a.order == b.order &&
           a.picard_tol == b.picard_tol && a.picard_max_iter == b.picard_max_iter &&
           a.cfl_safety == b.cfl_safety && a.audit == b.audit && a.eta == b.eta &&
           a.monotone_tol == b.monotone_tol;
  };
  return model == o.model && potential == o.potential && grid == o.grid && basis == o.basis &&
         same_step(stepper, o.stepper) && initial == o.initial && output == o.output &&
         diagnostics == o.diagnostics && sweep == o.sweep;
}

RunConfig parse_config(const std::string& text, const std::string& base_dir) {
  // the INI reader only knows ';' comments
  std::stringstream in;
  {
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      const std::string t = trim(line);
      in << (t.rfind('#', 0) == 0 ? ";" + t : line) << '\n';
    }
  }
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("-", "line " + std::to_string(e.line()), e.message());
  }

  RunConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("-", section, "key outside of any section");
    if (std::find(sections().begin(), sections().end(), section) == sections().end())
      throw ConfigError(section, "-", "unknown section");
    for (const auto& [key, value] : body) {
      const Field* f = find_field(section, key);
      if (!f) throw ConfigError(section, key, "unknown key");
      assign(c, *f, value.data());
    }
  }
  c.initial.path = resolve(c.initial.path, base_dir);
  c.output.csv = resolve(c.output.csv, base_dir);
  c.output.snapshot_dir = resolve(c.output.snapshot_dir, base_dir);
  c.output.report = resolve(c.output.report, base_dir);
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read configuration file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string dir = fs::path(path).parent_path().string();
  if (dir.empty()) dir = ".";
  return parse_config(ss.str(), dir);
}

std::string serialize_config(const RunConfig& c) {
  std::string out;
  std::string current;
  for (const auto& f : fields()) {
    if (f.section != current) {
      out += (current.empty() ? "[" : "\n[") + f.section + "]\n";
      current = f.section;
    }
    out += f.key + " = " + f.get(c) + "\n";
  }
  return out;
}

void set_value(RunConfig& c, const std::string& dotted_key, const std::string& value) {
  const auto dot = dotted_key.find('.');
  const Field* f = dot == std::string::npos
                       ? nullptr
                       : find_field(dotted_key.substr(0, dot), dotted_key.substr(dot + 1));
  if (!f) throw ConfigError("sweep", "key", "'" + dotted_key + "' does not name a configuration key");
  assign(c, *f, value);
}

}  // namespace polyflow::cli
