#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "horizon/horizon.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> paths;
  std::optional<std::size_t> steps;
  std::optional<unsigned> threads;
};

horizon::RunConfig load(const Overrides& o) {
  horizon::RunConfig cfg;
  if (o.config == "paper_suite") {
    cfg = horizon::paper_suite_config();
  } else if (!o.config.empty()) {
    std::ifstream is(o.config);
    if (!is) throw std::runtime_error("cannot open config " + o.config);
    cfg = horizon::parse_config(is);
  }
  if (o.seed) cfg.ensemble.seed = *o.seed;
  if (o.out) cfg.output.dir = *o.out;
  if (o.paths) cfg.ensemble.n_paths = *o.paths;
  if (o.steps) cfg.grid.n_steps = *o.steps;
  if (o.threads) cfg.run.threads = *o.threads;
  // Re-validate after overrides.
  return horizon::parse_config(horizon::canonical(cfg));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"horizon: BSDE-based dynamic risk measures and property checks"};
  app.require_subcommand(1);
  Overrides o;
  bool print_config = false;
  auto add_common = [&](CLI::App* sub) {
    sub->add_flag("--print-config", print_config, "print the canonical config and exit");
    sub->add_option("--config", o.config, "config file, or 'paper_suite'");
    sub->add_option("--seed", o.seed, "override ensemble seed");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--paths", o.paths, "override number of paths");
    sub->add_option("--steps", o.steps, "override number of time steps");
    sub->add_option("--threads", o.threads, "worker threads");
  };
  auto* simulate = app.add_subcommand("simulate", "simulate the path ensemble");
  auto* evaluate = app.add_subcommand("evaluate", "evaluate the measure on the claim");
  auto* verify = app.add_subcommand("verify", "run property checks");
  auto* sweep = app.add_subcommand("sweep", "parameter sweep to CSV");
  auto* report = app.add_subcommand("report", "summarize an existing report.json");
  for (auto* s : {simulate, evaluate, verify, sweep, report}) add_common(s);

  CLI11_PARSE(app, argc, argv);
  try {
    const auto cfg = load(o);
    if (print_config) {
      std::cout << horizon::canonical(cfg);
      return 0;
    }
    if (simulate->parsed()) return horizon::run_simulate(cfg);
    if (evaluate->parsed()) return horizon::run_evaluate(cfg);
    if (verify->parsed()) return horizon::run_verify(cfg);
    if (sweep->parsed()) return horizon::run_sweep(cfg);
    if (report->parsed()) return horizon::run_report(cfg);
  } catch (const horizon::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 1;
}
