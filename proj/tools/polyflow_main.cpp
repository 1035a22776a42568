#include <omp.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <charconv>
#include <cstdlib>
#include <iostream>
#include <string>

#include "polyflow/cli/commands.hpp"
#include "polyflow/cli/run_config.hpp"

namespace {

// POLYFLOW_THREADS wins over OMP_NUM_THREADS; both are optional.
void configure_threads() {
  for (const char* name : {"POLYFLOW_THREADS", "OMP_NUM_THREADS"}) {
    const char* value = std::getenv(name);
    if (value == nullptr || *value == '\0') continue;
    int n = 0;
    const std::string s(value);
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
    if (ec != std::errc() || p != s.data() + s.size() || n < 1) {
      spdlog::warn("ignoring {}={} (expected a positive integer)", name, s);
      continue;
    }
    omp_set_num_threads(n);
    spdlog::info("threads: {} (from {})", n, name);
    return;
  }
  spdlog::info("threads: {} (OpenMP default)", omp_get_max_threads());
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("polyflow"));
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"polyflow: kinetic micro-macro polymer flow solver and diagnostics"};
  app.require_subcommand(1);
  std::string config_path, report_out;
  int snapshot_every = -1, jobs = 1;
  std::uint64_t seed = 0;
  bool quiet = false;
  for (const std::string& name : polyflow::cli::subcommands()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("-c,--config", config_path, "run configuration file")->required();
    sub->add_option("--snapshot-every", snapshot_every, "write a snapshot every N steps (simulate)");
    sub->add_option("-j,--jobs", jobs, "independent runs executed concurrently")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "overrides the diagnostics and random-data seeds");
    sub->add_option("-r,--report-out", report_out, "write a key = value summary to this file");
    sub->add_flag("-q,--quiet", quiet, "only log warnings and errors");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(polyflow::ExitCode::kUsage);
  }
  if (quiet) spdlog::set_level(spdlog::level::warn);
  const std::string command = app.get_subcommands().front()->get_name();

  polyflow::cli::RunConfig config;
  try {
    config = polyflow::cli::load_config(config_path);
    if (snapshot_every >= 0) config.output.snapshot_every = snapshot_every;
    if (app.get_subcommands().front()->count("--seed") > 0) {
      config.diagnostics.seed = seed;
      config.initial.seed = seed;
    }
    config.validate();
  } catch (const polyflow::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  }
  configure_threads();
  spdlog::info("{} with {}", command, config_path);

  polyflow::cli::RunOptions options;
  options.report_out = report_out;
  options.jobs = jobs;
  const polyflow::ExitCode code =
      polyflow::cli::dispatch(command, config, options, std::cout, std::cerr);
  spdlog::info("exit code {}", static_cast<int>(code));
  return static_cast<int>(code);
}
