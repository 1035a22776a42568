#include "polyflow/cli/commands.hpp"

#include <omp.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <thread>

#include "polyflow/assumptions.hpp"
#include "polyflow/cli/output.hpp"
#include "polyflow/cli/setup.hpp"
#include "polyflow/closure.hpp"
#include "polyflow/dynamics.hpp"
#include "polyflow/snapshot.hpp"
#include "polyflow/stepper.hpp"

namespace polyflow::cli {

namespace {

namespace fs = std::filesystem;
using KeyValues = std::vector<std::pair<std::string, std::string>>;

std::string report_path(const RunConfig& c, const RunOptions& o) {
  return o.report_out.empty() ? c.output.report : o.report_out;
}

// Runs task(i) for i < count on up to `jobs` threads, splitting the OpenMP threads
// between them. The first exception (by index) is rethrown.
void run_jobs(int count, int jobs, const std::function<void(int)>& task) {
  jobs = std::clamp(jobs, 1, std::max(count, 1));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) task(i);
    return;
  }
  const int inner = std::max(1, omp_get_max_threads() / jobs);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < jobs; ++w)
    pool.emplace_back([&] {
      omp_set_num_threads(inner);
      for (int i = next++; i < count; i = next++) {
        try {
          task(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
  if (path.empty()) return path;
  const fs::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix + p.extension().string())).string();
}

struct RunSummary {
  TrajectoryRecord record;
  std::string text;
};

RunSummary run_simulation(const RunConfig& c) {
  const Problem problem = build_problem(c);
  const FlowState initial = initial_state(c, problem);
  CsvFile csv(c.output.csv, report_header());
  const int every = c.output.snapshot_every;
  if (every > 0) fs::create_directories(c.output.snapshot_dir);

  SimulationInput in;
  in.params = problem.params;
  in.basis = problem.basis.get();
  in.grid = &problem.grid;
  in.step = c.stepper;
  in.initial = initial;
  in.observer = [&](int step, const FlowState& s, const EnergyReport& r) {
    csv.row(report_row(step, r));
    if (every > 0 && step % every == 0) {
      std::ostringstream name;
      name << "snap_" << std::setw(6) << std::setfill('0') << step << ".pfs";
      write_snapshot((fs::path(c.output.snapshot_dir) / name.str()).string(), s, problem.grid,
                     *problem.basis);
    }
  };
  RunSummary sum;
  sum.record = simulate(in);
  const TrajectoryRecord& rec = sum.record;
  std::ostringstream os;
  os << std::setprecision(6);
  if (rec.reports.empty()) {
    sum.text = "termination         " + rec.termination + "\n";
    return sum;
  }
  const EnergyReport& first = rec.reports.front();
  const EnergyReport& last = rec.reports.back();
  os << "steps completed     " << rec.reports.size() - 1 << " of " << c.stepper.steps() << "\n"
     << "termination         " << rec.termination << "\n"
     << "E(0)                " << first.E << "\n"
     << "E(T)                " << last.E << "\n"
     << "max E(t)/E(0)       " << rec.max_energy_ratio << "\n"
     << "integral D dt       " << rec.integral_D << "\n"
     << "integral |r| dt     " << rec.integral_abs_residual << "\n"
     << "monotonicity flags  " << rec.monotonicity_violations
     << " (max relative increase " << rec.max_relative_increase << ")\n"
     << "max mass drift      " << rec.max_mass_drift << "\n"
     << "positivity lost     " << (rec.positivity_lost ? "yes" : "no") << "\n";
  sum.text = os.str();
  return sum;
}

KeyValues record_values(const TrajectoryRecord& rec, const std::string& prefix = "") {
  if (rec.reports.empty()) return {{prefix + "termination", rec.termination}};
  return {{prefix + "termination", rec.termination},
          {prefix + "steps", std::to_string(rec.reports.size() - 1)},
          {prefix + "E0", format_double(rec.reports.front().E)},
          {prefix + "E_final", format_double(rec.reports.back().E)},
          {prefix + "max_energy_ratio", format_double(rec.max_energy_ratio)},
          {prefix + "integral_D", format_double(rec.integral_D)},
          {prefix + "integral_abs_residual", format_double(rec.integral_abs_residual)},
          {prefix + "monotonicity_violations", std::to_string(rec.monotonicity_violations)},
          {prefix + "max_relative_increase", format_double(rec.max_relative_increase)},
          {prefix + "max_mass_drift", format_double(rec.max_mass_drift)},
          {prefix + "positivity_lost", rec.positivity_lost ? "true" : "false"}};
}

ExitCode record_code(const TrajectoryRecord& rec) {
  return rec.error.value_or(ExitCode::kOk);
}

ExitCode cmd_validate_potential(const RunConfig& c, const RunOptions& o, std::ostream& out) {
  const Potential pot = make_potential(c, false);
  const AssumptionReport rep = validate_assumptions(pot);
  out << rep.to_text();
  const std::string path = report_path(c, o);
  if (!path.empty()) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open report for writing: " + path);
    f << rep.to_key_value();
  }
  return rep.pass ? ExitCode::kOk : ExitCode::kCheckFailed;
}

ExitCode cmd_spectrum(const RunConfig& c, const RunOptions& o, std::ostream& out) {
  const QBasis b = build_basis(make_potential(c), c.basis.n_q);
  const int count = std::min(c.diagnostics.eigenvalues, b.size());
  const std::vector<double> ev = lowest_eigenvalues(b, count);
  const double poincare = poincare_constant(b);
  out << "potential " << b.potential().name() << ", dim_q = " << b.dim_q()
      << ", N_q = " << b.degree() << ", basis size " << b.size() << "\n";
  out << "orthonormality error " << std::setprecision(3) << b.orthonormality_error() << "\n";
  out << "lowest eigenvalues of L:\n" << std::setprecision(12);
  for (int i = 0; i < count; ++i) out << "  " << std::setw(3) << i << "  " << ev[i] << "\n";
  out << "Poincare constant " << poincare << "\n";
  KeyValues kv = {{"basis_size", std::to_string(b.size())},
                  {"poincare_constant", format_double(poincare)}};
  for (int i = 0; i < count; ++i) kv.emplace_back("eigenvalue_" + std::to_string(i), format_double(ev[i]));
  write_key_values(report_path(c, o), kv);
  return ExitCode::kOk;
}

ExitCode cmd_simulate(const RunConfig& c, const RunOptions& o, std::ostream& out) {
  if (c.sweep.empty()) {
    const RunSummary s = run_simulation(c);
    out << s.text;
    write_key_values(report_path(c, o), record_values(s.record));
    return record_code(s.record);
  }
  const int n = static_cast<int>(c.sweep.values.size());
  std::vector<RunConfig> configs(n, c);
  std::vector<RunSummary> results(n);
  for (int i = 0; i < n; ++i) {
    RunConfig& ci = configs[i];
    ci.sweep = {};
    set_value(ci, c.sweep.key, c.sweep.values[i]);
    const std::string tag = "_" + std::to_string(i);
    ci.output.csv = with_suffix(c.output.csv, tag);
    if (!c.output.snapshot_dir.empty()) ci.output.snapshot_dir = c.output.snapshot_dir + tag;
    ci.validate();
  }
  spdlog::info("sweep over {} ({} values, {} jobs)", c.sweep.key, n, o.jobs);
  run_jobs(n, o.jobs, [&](int i) { results[i] = run_simulation(configs[i]); });
  KeyValues kv;
  ExitCode code = ExitCode::kOk;
  for (int i = 0; i < n; ++i) {
    out << "== " << c.sweep.key << " = " << c.sweep.values[i] << "\n" << results[i].text;
    for (auto& e : record_values(results[i].record, "run" + std::to_string(i) + ".")) kv.push_back(e);
    if (code == ExitCode::kOk) code = record_code(results[i].record);
  }
  write_key_values(report_path(c, o), kv);
  return code;
}

ExitCode cmd_picard_demo(const RunConfig& base, const RunOptions& o, std::ostream& out) {
  RunConfig c = base;
  c.stepper.scheme = Scheme::kPicard;
  const RunSummary s = run_simulation(c);
  const TrajectoryRecord& rec = s.record;
  CsvFile trace(with_suffix(c.output.csv, "_picard"), "step,iteration,difference,ratio");
  double max_ratio = 0.0;
  int nonmonotone = 0, steps_with_ratios = 0;
  out << std::setprecision(6);
  for (std::size_t n = 0; n < rec.picard.size(); ++n) {
    const PicardTrace& t = rec.picard[n];
    out << "step " << n + 1 << ": " << t.iterations << " iterations, " << t.termination << "\n";
    out << "  differences";
    for (double d : t.diffs) out << " " << d;
    out << "\n  ratios     ";
    for (double r : t.ratios) out << " " << r;
    out << "\n";
    for (std::size_t k = 0; k < t.diffs.size(); ++k)
      trace.row(std::to_string(n + 1) + "," + std::to_string(k + 1) + "," + format_double(t.diffs[k]) +
                "," + (k == 0 || k > t.ratios.size() ? std::string() : format_double(t.ratios[k - 1])));
    if (!t.ratios.empty()) ++steps_with_ratios;
    for (std::size_t k = 0; k < t.ratios.size(); ++k) {
      max_ratio = std::max(max_ratio, t.ratios[k]);
      if (k >= 2 && t.ratios[k] > t.ratios[k - 1]) ++nonmonotone;
    }
  }
  out << s.text << "max contraction ratio " << max_ratio << "\n"
      << "ratio increases after iterate 2: " << nonmonotone << "\n";
  KeyValues kv = record_values(rec);
  kv.emplace_back("max_ratio", format_double(max_ratio));
  kv.emplace_back("steps_with_ratios", std::to_string(steps_with_ratios));
  kv.emplace_back("ratio_increases_after_2", std::to_string(nonmonotone));
  write_key_values(report_path(c, o), kv);
  return record_code(rec);
}

ExitCode cmd_audit_energy(const RunConfig& c, const RunOptions& o, std::ostream& out) {
  if (!(c.model.gamma > 1.0))
    throw UnsupportedError("the energy audit needs gamma > 1 (the internal energy is logarithmic at gamma = 1)");
  if (!c.stepper.audit) throw ConfigError("stepper", "audit", "must be true for audit-energy");
  const int levels = c.diagnostics.refinements + 1;
  std::vector<RunConfig> configs(levels, c);
  std::vector<TrajectoryRecord> recs(levels);
  for (int l = 0; l < levels; ++l) {
    configs[l].stepper.dt = c.stepper.dt / std::pow(2.0, l);
    configs[l].output.csv = with_suffix(c.output.csv, "_dt" + std::to_string(l));
    configs[l].output.snapshot_every = 0;
    configs[l].sweep = {};
  }
  run_jobs(levels, o.jobs, [&](int l) { recs[l] = run_simulation(configs[l]).record; });
  for (int l = 0; l < levels; ++l)
    if (recs[l].error) {
      out << "run at dt = " << configs[l].stepper.dt << " failed: " << recs[l].termination << "\n";
      return *recs[l].error;
    }

  const double target = std::pow(2.0, c.stepper.order);
  const double tol = c.diagnostics.audit_ratio_tol;
  bool pass = true;
  KeyValues kv = {{"scheme_order", std::to_string(c.stepper.order)}};
  out << "scheme order " << c.stepper.order << ", expected ratio " << target << " +- "
      << tol * target << "\n";
  out << std::setw(14) << "dt" << std::setw(8) << "steps" << std::setw(18) << "int |r| dt"
      << std::setw(12) << "ratio" << std::setw(10) << "order" << "\n";
  CsvFile csv(with_suffix(c.output.csv, "_audit"), "dt,steps,integral_abs_residual,ratio,order");
  for (int l = 0; l < levels; ++l) {
    const double dt = configs[l].stepper.dt;
    const double integral = recs[l].integral_abs_residual;
    std::string ratio_text, order_text;
    out << std::setprecision(6) << std::setw(14) << dt << std::setw(8) << configs[l].stepper.steps()
        << std::setw(18) << integral;
    if (l > 0) {
      const double ratio = recs[l - 1].integral_abs_residual / integral;
      const double order = std::log2(ratio);
      const bool ok = std::abs(ratio - target) <= tol * target;
      pass = pass && ok;
      out << std::setw(12) << ratio << std::setw(10) << order << (ok ? "" : "  out of range");
      ratio_text = format_double(ratio);
      order_text = format_double(order);
      kv.emplace_back("ratio_" + std::to_string(l), ratio_text);
      kv.emplace_back("order_" + std::to_string(l), order_text);
    }
    out << "\n";
    kv.emplace_back("integral_abs_residual_" + std::to_string(l), format_double(integral));
    csv.row(format_double(dt) + "," + std::to_string(configs[l].stepper.steps()) + "," +
            format_double(integral) + "," + ratio_text + "," + order_text);
  }
  kv.emplace_back("pass", pass ? "true" : "false");
  write_key_values(report_path(c, o), kv);
  out << (pass ? "measured order matches the scheme order\n"
               : "measured order does not match the scheme order\n");
  return pass ? ExitCode::kOk : ExitCode::kCheckFailed;
}

ExitCode cmd_cancellation_check(const RunConfig& c, const RunOptions& o, std::ostream& out) {
  const Problem problem = build_problem(c);
  const int orders = c.diagnostics.max_order + 1;
  std::vector<double> worst(orders, 0.0), max_m(orders, 0.0);
  std::vector<int> evaluated(orders, 0);
  for (int i = 0; i < c.diagnostics.samples; ++i) {
    const FlowState s = random_state(problem.grid, *problem.basis, 1.0,
                                     c.diagnostics.seed + static_cast<std::uint64_t>(i), true);
    for (int k = 0; k < orders; ++k) {
      const CancellationResult r = cancellation_residual(s, *problem.basis, problem.grid, k);
      max_m[k] = std::max(max_m[k], r.max_abs_m);
      if (r.degenerate) continue;
      ++evaluated[k];
      worst[k] = std::max(worst[k], r.residual);
    }
  }
  bool pass = true;
  KeyValues kv;
  out << std::setw(6) << "order" << std::setw(16) << "max residual" << std::setw(14) << "max |m|"
      << std::setw(11) << "evaluated" << "\n";
  for (int k = 0; k < orders; ++k) {
    const bool ok = worst[k] < c.diagnostics.cancellation_tol;
    pass = pass && ok;
    out << std::setw(6) << k << std::setprecision(4) << std::setw(16) << worst[k] << std::setw(14)
        << max_m[k] << std::setw(11) << evaluated[k] << (ok ? "" : "  FAIL") << "\n";
    kv.emplace_back("residual_order_" + std::to_string(k), format_double(worst[k]));
  }
  kv.emplace_back("pass", pass ? "true" : "false");
  write_key_values(report_path(c, o), kv);
  return pass ? ExitCode::kOk : ExitCode::kCheckFailed;
}

ExitCode cmd_closure_check(const RunConfig& c, const RunOptions& o, std::ostream& out) {
  require_closure(make_potential(c));
  const Problem problem = build_problem(c);
  const FlowState initial = initial_state(c, problem);
  const ClosureReport rep = closure_compare(initial, problem.params, *problem.basis, problem.grid,
                                            c.stepper);
  CsvFile csv(with_suffix(c.output.csv, "_closure"), "t,deviation");
  out << std::setprecision(6) << std::setw(12) << "t" << std::setw(16) << "deviation" << "\n";
  for (std::size_t i = 0; i < rep.times.size(); ++i) {
    out << std::setw(12) << rep.times[i] << std::setw(16) << rep.deviation[i] << "\n";
    csv.row(format_double(rep.times[i]) + "," + format_double(rep.deviation[i]));
  }
  const bool pass = rep.max_deviation < c.diagnostics.closure_tol;
  out << "max deviation " << rep.max_deviation << (pass ? " (pass)" : " (FAIL)") << "\n";
  write_key_values(report_path(c, o), {{"max_deviation", format_double(rep.max_deviation)},
                                       {"pass", pass ? "true" : "false"}});
  return pass ? ExitCode::kOk : ExitCode::kCheckFailed;
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {
      "validate-potential", "spectrum",           "simulate",     "picard-demo",
      "audit-energy",       "cancellation-check", "closure-check"};
  return names;
}

ExitCode dispatch(const std::string& command, const RunConfig& config, const RunOptions& options,
                  std::ostream& out, std::ostream& err) {
  try {
    if (command == "validate-potential") return cmd_validate_potential(config, options, out);
    if (command == "spectrum") return cmd_spectrum(config, options, out);
    if (command == "simulate") return cmd_simulate(config, options, out);
    if (command == "picard-demo") return cmd_picard_demo(config, options, out);
    if (command == "audit-energy") return cmd_audit_energy(config, options, out);
    if (command == "cancellation-check") return cmd_cancellation_check(config, options, out);
    if (command == "closure-check") return cmd_closure_check(config, options, out);
    err << "error: unknown subcommand '" << command << "'\n";
    return ExitCode::kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code();
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return ExitCode::kIo;
  } catch (const std::exception& e) {
    err << "unexpected error: " << e.what() << "\n";
    return ExitCode::kUnexpected;
  }
}

}  // namespace polyflow::cli
