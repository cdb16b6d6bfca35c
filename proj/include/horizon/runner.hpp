#pragma once

// Config-driven runs behind the command line tool. Each run writes its
// artifacts into cfg.output.dir and returns a process exit status.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "horizon/config.hpp"
#include "horizon/diagnostics.hpp"
#include "horizon/ensemble.hpp"
#include "horizon/report_io.hpp"

namespace horizon {

inline constexpr const char* kSweepCsvHeader =
    "axis,value,measure,claim,t,u,v,estimate,stderr,seed,n_paths,n_steps";

struct SweepRow {
  std::string axis;
  double value = 0.0;
  std::string measure;
  std::string claim;
  double t = 0.0, u = 0.0, v = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
  std::uint64_t seed = 0;
  std::size_t n_paths = 0;
  std::size_t n_steps = 0;
};

inline void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& os) {
  os << kSweepCsvHeader << '\n';
  for (const auto& r : rows) {
    os << r.axis << ',' << format9(r.value) << ',' << detail::csv_escape(r.measure) << ','
       << detail::csv_escape(r.claim) << ',' << format9(r.t) << ',' << format9(r.u) << ','
       << format9(r.v) << ',' << format9(r.estimate) << ',' << format9(r.std_error) << ','
       << r.seed << ',' << r.n_paths << ',' << r.n_steps << '\n';
  }
}

// Ensemble plus evaluation context for a config.
class Session {
 public:
  explicit Session(const RunConfig& cfg)
      : cfg_(cfg),
        grid_(cfg.grid.T, cfg.grid.n_steps),
        exec_(cfg.run.threads),
        ens_(std::make_unique<PathEnsemble>(
            simulate(grid_, cfg.ensemble.d, cfg.ensemble.n_paths, cfg.ensemble.seed, exec_))),
        ctx_{*ens_, cfg.basis, cfg.solver, exec_} {}

  const RunConfig& config() const noexcept { return cfg_; }
  const TimeGrid& grid() const noexcept { return grid_; }
  const PathEnsemble& ensemble() const noexcept { return *ens_; }
  const Context& context() const noexcept { return ctx_; }

  std::size_t node(double t) const { return grid_.index_of(t); }

  RandomField claim(const std::string& spec, std::size_t maturity) const {
    return evaluate_claim(parse_claim(spec, maturity), *ens_, exec_);
  }

 private:
  RunConfig cfg_;
  TimeGrid grid_;
  Executor exec_;
  std::unique_ptr<PathEnsemble> ens_;
  Context ctx_;
};

namespace detail {

inline std::filesystem::path prepare_dir(const RunConfig& cfg) {
  std::filesystem::path dir(cfg.output.dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << text;
}

inline std::vector<RandomField> shift_fields(const Session& s, std::size_t t) {
  std::vector<RandomField> out;
  for (const auto& spec : s.config().run.shifts) {
    if (spec == "tanh") out.push_back(tanh_shift(s.ensemble(), t));
    else out.push_back(RandomField::constant(s.ensemble().paths(), std::strtod(spec.c_str(), nullptr)));
  }
  return out;
}

inline PropertyReport inconclusive_report(const std::string& property, const RiskMeasure& m,
                                          const Context& ctx, const std::exception& e) {
  auto r = make_report(property, m, ctx);
  r.inconclusive = true;
  r.params["error"] = e.what();
  return r;
}

inline PropertyReport run_check(const std::string& name, const RiskMeasure& m,
                                const Session& s, std::size_t t, std::size_t u,
                                std::size_t v) {
  const auto& ctx = s.context();
  const auto& claim = s.config().run.claim;
  auto xu = [&] { return s.claim(claim, u); };
  PropertyReport r;
  if (name == "cash_additivity") {
    r = check_cash_additivity(m, ctx, xu(), t, u, shift_fields(s, t));
  } else if (name == "cash_subadditivity") {
    r = check_cash_subadditivity(m, ctx, xu(), t, u, shift_fields(s, t));
  } else if (name == "normalization") {
    r = check_normalization(m, ctx, {{t, u}, {t, v}, {u, v}});
  } else if (name == "restriction") {
    r = check_restriction(m, ctx, xu(), t, u, {v});
  } else if (name == "h_longevity") {
    r = check_h_longevity(m, ctx, xu(), t, {{u, v}});
  } else if (name == "strong" || name == "order" || name == "weak" || name == "sub") {
    r = check_time_consistency(m, ctx, parse_time_consistency(name), s.claim(claim, v), t, u, v);
  } else if (name == "monotonicity") {
    const auto x = xu();
    r = check_monotonicity(m, ctx, {{x, x + 0.5}, {x - 1.0, x}}, t, u);
  } else if (name == "convexity") {
    r = check_convexity(m, ctx, {{xu(), s.claim("sin", u)}}, u);
  } else if (name == "premium") {
    const auto* d = std::get_if<FromDriver>(&m.construction());
    if (!d) throw std::invalid_argument("premium check needs a driver:<label> measure");
    r = check_premium_identity(d->driver, ctx, xu(), t, u, v);
    r.construction = m.label();
  } else {
    throw UnknownLabel("unknown check '" + name + "'");
  }
  r.params["claim"] = claim;
  return r;
}

}  // namespace detail

// Simulates the ensemble; writes ensemble.bin and a JSON summary.
inline int run_simulate(const RunConfig& cfg, std::ostream& log = std::cout) {
  const Session s(cfg);
  const auto dir = detail::prepare_dir(cfg);
  {
    std::ofstream os(dir / "ensemble.bin", std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + (dir / "ensemble.bin").string());
    write_binary(s.ensemble(), os);
  }
  std::vector<double> terminal(s.ensemble().paths());
  for (std::size_t p = 0; p < terminal.size(); ++p) {
    terminal[p] = s.ensemble().level(s.grid().last(), p, 0);
  }
  const RandomField bt(s.grid().last(), std::move(terminal));
  nlohmann::ordered_json j;
  j["seed"] = cfg.ensemble.seed;
  j["n_paths"] = cfg.ensemble.n_paths;
  j["n_steps"] = cfg.grid.n_steps;
  j["d"] = cfg.ensemble.d;
  j["T"] = round9(cfg.grid.T);
  j["terminal_mean"] = round9(bt.mean());
  j["terminal_var"] = round9(bt.stddev() * bt.stddev());
  detail::write_file(dir / "simulate.json", j.dump(2) + "\n");
  log << "simulated " << cfg.ensemble.n_paths << " paths x " << cfg.grid.n_steps
      << " steps, seed " << cfg.ensemble.seed << ": mean B_T = " << format9(bt.mean())
      << ", var B_T = " << format9(bt.stddev() * bt.stddev()) << '\n';
  return 0;
}

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

inline Estimate evaluate_config(const Session& s, const std::string& measure, double t_time,
                                double u_time) {
  const auto m = parse_measure(measure, s.grid());
  const std::size_t t = s.node(t_time), u = s.node(u_time);
  const auto x = s.claim(s.config().run.claim, u);
  return {m.evaluate(s.context(), t, u, x).mean(), m.estimate_stderr(s.context(), u, x)};
}

// rho_tu(claim) averaged over paths, with its Monte Carlo stderr. Writes
// evaluate.json and evaluate.csv (sweep schema, axis "none").
inline int run_evaluate(const RunConfig& cfg, std::ostream& log = std::cout) {
  const Session s(cfg);
  const auto measure = bound_measure(cfg);
  const auto e = evaluate_config(s, measure, cfg.run.t, cfg.run.u);
  SweepRow row{"none", 0.0, measure, cfg.run.claim, cfg.run.t, cfg.run.u, cfg.run.u,
               e.value, e.std_error, cfg.ensemble.seed, cfg.ensemble.n_paths, cfg.grid.n_steps};
  const auto dir = detail::prepare_dir(cfg);
  nlohmann::ordered_json j;
  j["measure"] = measure;
  j["claim"] = cfg.run.claim;
  j["t"] = round9(cfg.run.t);
  j["u"] = round9(cfg.run.u);
  j["estimate"] = round9(e.value);
  j["stderr"] = round9(e.std_error);
  j["seed"] = cfg.ensemble.seed;
  j["n_paths"] = cfg.ensemble.n_paths;
  j["n_steps"] = cfg.grid.n_steps;
  detail::write_file(dir / "evaluate.json", j.dump(2) + "\n");
  std::ostringstream csv;
  write_sweep_csv({row}, csv);
  detail::write_file(dir / "evaluate.csv", csv.str());
  log << measure << " on " << cfg.run.claim << " at (" << format9(cfg.run.t) << ", "
      << format9(cfg.run.u) << "): " << format9(e.value) << " +- " << format9(e.std_error)
      << '\n';
  return 0;
}

// The default suite: implication consistency of the taxonomy matrix, the
// premium-measure identity on two drivers and sub time consistency of the
// increasing family. Full taxonomy reports go to a separate list.
inline std::vector<PropertyReport> paper_suite(const Session& s,
                                               std::vector<PropertyReport>& taxonomy_reports) {
  const auto& ctx = s.context();
  const std::size_t last = s.grid().last(), mid = last / 2;
  std::vector<PropertyReport> out;
  const auto tax = taxonomy_matrix(ctx);
  for (const auto& row : tax.rows) {
    auto r = detail::make_report("taxonomy_implications", parse_measure(row.measure, s.grid()), ctx);
    r.pass = row.contradictions.empty();
    r.violation_fraction = r.pass ? 0.0 : 1.0;
    for (const auto& [k, v] : row.holds) {
      const bool inc = row.inconclusive.count(k) && row.inconclusive.at(k);
      r.params[k] = inc ? "inconclusive" : (v ? "holds" : "fails");
    }
    if (!r.pass) {
      r.witness = Witness{0, {}, 0.0, 0.0, detail::join(row.contradictions, "; ")};
    }
    out.push_back(std::move(r));
    taxonomy_reports.insert(taxonomy_reports.end(), row.reports.begin(), row.reports.end());
  }
  const auto x = s.claim("brownian", mid);
  for (const char* spec : {"z_shift:0.1", "csa_example:0.1,0.1"}) {
    const auto drv = parse_driver(spec);
    try {
      auto r = check_premium_identity(drv, ctx, x, 0, mid, last);
      r.params["claim"] = "brownian";
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      out.push_back(detail::inconclusive_report("premium_identity",
                                                RiskMeasure::from_driver(drv), ctx, e));
    }
  }
  const auto fam = parse_measure("family:translated_family:0.5,0.1", s.grid());
  try {
    auto r = check_time_consistency(fam, ctx, TimeConsistency::sub, s.claim("sin", last), 0,
                                    mid, last);
    r.params["claim"] = "sin";
    out.push_back(std::move(r));
  } catch (const std::exception& e) {
    out.push_back(detail::inconclusive_report("sub_time_consistency", fam, ctx, e));
  }
  return out;
}

inline int exit_status(const std::vector<PropertyReport>& reports) {
  for (const auto& r : reports) {
    if (!r.pass || r.inconclusive) return 1;
  }
  return 0;
}

inline void print_summary(const std::vector<PropertyReport>& reports, std::ostream& log) {
  for (const auto& r : reports) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-13s", verdict(r));
    log << buf << r.property << "  " << r.construction << "  max_violation="
        << format9(r.max_violation) << " tol=" << format9(r.tolerance) << '\n';
  }
}

// Runs the requested checks (and the suite); writes report.json, report.csv
// and, for the suite, taxonomy.json. Nonzero exit on any non-passing verdict.
inline int run_verify(const RunConfig& cfg, std::ostream& log = std::cout) {
  const Session s(cfg);
  const auto& ctx = s.context();
  std::vector<PropertyReport> reports, taxonomy_reports;
  if (cfg.run.suite == "paper_suite") {
    auto suite = paper_suite(s, taxonomy_reports);
    reports.insert(reports.end(), suite.begin(), suite.end());
  }
  if (!cfg.run.checks.empty()) {
    const auto measure = bound_measure(cfg);
    const auto m = parse_measure(measure, s.grid());
    const std::size_t t = s.node(cfg.run.t), u = s.node(cfg.run.u), v = s.node(cfg.run.v);
    for (const auto& name : cfg.run.checks) {
      try {
        reports.push_back(detail::run_check(name, m, s, t, u, v));
      } catch (const std::exception& e) {
        reports.push_back(detail::inconclusive_report(name, m, ctx, e));
      }
    }
  }
  const auto dir = detail::prepare_dir(cfg);
  std::ostringstream js, csv;
  write_json(reports, js);
  write_csv(reports, csv);
  detail::write_file(dir / "report.json", js.str());
  detail::write_file(dir / "report.csv", csv.str());
  if (!taxonomy_reports.empty()) {
    std::ostringstream tj;
    write_json(taxonomy_reports, tj);
    detail::write_file(dir / "taxonomy.json", tj.str());
  }
  print_summary(reports, log);
  return exit_status(reports);
}

inline std::vector<SweepRow> sweep_rows(const Session& s) {
  const auto& cfg = s.config();
  const auto& sw = cfg.sweep;
  auto first = [](const std::vector<double>& v, double d) { return v.empty() ? d : v.front(); };
  const double q0 = first(sw.q, 0.5), b0 = first(sw.beta, 0.0), r0 = first(sw.r, 0.0);
  struct Point {
    std::string axis;
    double value, q, beta, r, t, u, v;
  };
  std::vector<Point> points;
  const double t = cfg.run.t, u = cfg.run.u, v = cfg.run.v;
  for (double x : sw.q) points.push_back({"q", x, x, b0, r0, t, u, v});
  for (double x : sw.beta) points.push_back({"beta", x, q0, x, r0, t, u, v});
  for (double x : sw.r) points.push_back({"r", x, q0, b0, x, t, u, v});
  for (std::size_t k = 0; k < sw.tuv.size(); ++k) {
    const auto& a = sw.tuv[k];
    points.push_back({"tuv", static_cast<double>(k), q0, b0, r0, a[0], a[1], a[2]});
  }
  if (points.empty()) points.push_back({"none", 0.0, q0, b0, r0, t, u, v});

  const auto& ctx = s.context();
  std::vector<SweepRow> rows;
  for (const auto& p : points) {
    const auto measure = substitute(cfg.run.measure, p.q, p.beta, p.r);
    const auto m = parse_measure(measure, s.grid());
    const std::size_t ti = s.node(p.t), ui = s.node(p.u), vi = s.node(p.v);
    SweepRow row{p.axis, p.value, measure, cfg.run.claim, p.t, p.u, p.v, 0.0, 0.0,
                 cfg.ensemble.seed, cfg.ensemble.n_paths, cfg.grid.n_steps};
    if (sw.quantity == "value") {
      const auto x = s.claim(cfg.run.claim, ui);
      row.estimate = m.evaluate(ctx, ti, ui, x).mean();
      row.std_error = m.estimate_stderr(ctx, ui, x);
    } else if (sw.quantity == "gamma") {
      const auto g = gamma(m, ctx, s.claim(cfg.run.claim, ui), ti, ui, vi);
      row.estimate = g.mean;
      row.std_error = g.std_error;
    } else {
      // rho_tv(-rho_uv(X)) / rho_tv(X); stderr propagated from the rhs.
      const auto rep = check_time_consistency(m, ctx, TimeConsistency::weak,
                                              s.claim(cfg.run.claim, vi), ti, ui, vi);
      row.estimate = rep.metrics.at("ratio");
      const double rhs = std::abs(rep.metrics.at("rhs_mean"));
      row.std_error = rhs > 0.0 ? m.estimate_stderr(ctx, vi, s.claim(cfg.run.claim, vi)) / rhs
                                : NAN;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline int run_sweep(const RunConfig& cfg, std::ostream& log = std::cout) {
  const Session s(cfg);
  const auto rows = sweep_rows(s);
  const auto dir = detail::prepare_dir(cfg);
  std::ostringstream csv;
  write_sweep_csv(rows, csv);
  detail::write_file(dir / "sweep.csv", csv.str());
  log << csv.str();
  return 0;
}

// Re-reads report.json from the output directory, rewrites report.csv and
// prints a summary. Exit status follows the stored verdicts.
inline int run_report(const RunConfig& cfg, std::ostream& log = std::cout) {
  const std::filesystem::path dir(cfg.output.dir);
  std::ifstream is(dir / "report.json");
  if (!is) throw std::runtime_error("no report.json in " + dir.string());
  const auto reports = read_json(is);
  std::ostringstream csv;
  write_csv(reports, csv);
  detail::write_file(dir / "report.csv", csv.str());
  print_summary(reports, log);
  std::size_t pass = 0;
  for (const auto& r : reports) pass += r.pass && !r.inconclusive;
  log << pass << "/" << reports.size() << " checks pass\n";
  return exit_status(reports);
}

}  // namespace horizon
