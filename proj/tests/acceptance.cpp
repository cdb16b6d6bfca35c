// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "horizon/horizon.hpp"
#include "oracles.hpp"

using namespace horizon;
namespace fs = std::filesystem;

namespace {

struct Setup {
  TimeGrid grid;
  PathEnsemble ens;
  Context ctx;
  Setup(std::size_t steps, std::size_t paths, std::uint64_t seed)
      : grid(1.0, steps), ens(simulate(grid, 1, paths, seed)), ctx{ens} {}
  RandomField claim(const std::string& spec, std::size_t m) const {
    return evaluate_claim(parse_claim(spec, m), ens);
  }
  RiskMeasure measure(const std::string& spec) const { return parse_measure(spec, grid); }
  RandomField constant(double c) const { return RandomField::constant(ens.paths(), c); }
};

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
    if (!ok) {
      pass = false;
      detail += " [x]";
    }
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Outcome entropic_cross_validation() {
  Outcome o;
  double err[2];
  const std::size_t steps[] = {50, 100}, paths[] = {50000, 200000};
  for (int k = 0; k < 2; ++k) {
    const Setup s(steps[k], paths[k], 101);
    const auto x = s.claim("brownian", steps[k]);
    const double y0 = solve(drivers::quad_z(), x, steps[k], s.ctx).y(0)[0];
    err[k] = std::abs(y0 - oracle::kEntropicBrownian);
    o.require(k == 1 || err[k] <= 0.05, "Y0(" + std::to_string(steps[k]) + ") = " + num(y0));
  }
  o.require(err[1] <= err[0], "error " + num(err[0]) + " -> " + num(err[1]));
  return o;
}

Outcome q_entropic_cross_validation() {
  Outcome o;
  const Setup s(50, 50000, 102);
  // The terminal is the loss (B_1 + 0.5)^-.
  const double y0 =
      solve(drivers::q_entropic(0.5), s.claim("neg_part:0.5", 50), 50, s.ctx).y(0)[0];
  const double closed =
      RiskMeasure::q_entropic(0.5, 0.5).evaluate0(s.ctx, 50, s.claim("brownian", 50));
  o.require(std::abs(y0 - closed) <= 0.05, "BSDE " + num(y0) + " vs closed form " + num(closed));
  o.require(std::abs(y0 - oracle::kQEntropicShifted_q05) <= 0.05,
            "vs quadrature " + num(oracle::kQEntropicShifted_q05));
  return o;
}

Outcome monotone_in_q() {
  Outcome o;
  const Setup s(10, 200000, 103);
  const auto b1 = s.claim("brownian", 10);
  double prev = -INFINITY, worst = INFINITY, first = 0.0, last = 0.0;
  for (double q : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}) {
    const double v = RiskMeasure::q_entropic(q).evaluate0(s.ctx, 10, b1);
    if (q == 0.1) first = v;
    last = v;
    worst = std::min(worst, v - prev);
    prev = v;
  }
  o.require(worst >= -1e-3, "min increment " + num(worst));
  const double lower = (-b1).map([](double v) { return std::max(v, 0.0); }).mean();
  o.require(std::abs(lower - oracle::kMeanNegPart) <= 0.01 && first >= lower,
            "lower " + num(lower) + " <= rho(0.1) " + num(first));
  const double upper = RiskMeasure::entropic().evaluate0(s.ctx, 10, -s.claim("neg_part:0", 10));
  o.require(std::abs(upper - oracle::kEntropicOnLosses) <= 0.01 && last <= upper,
            "rho(0.9) " + num(last) + " <= entropic on losses " + num(upper) + " (quadrature " +
                num(oracle::kEntropicOnLosses) + ")");
  return o;
}

Outcome linear_time_consistency() {
  Outcome o;
  const Setup s(50, 50000, 104);
  const auto m = s.measure("driver:linear_y:0.1");
  const auto x = s.claim("brownian:2", 50);
  const auto weak = check_time_consistency(m, s.ctx, TimeConsistency::weak, x, 0, 25, 50);
  const double ratio = weak.metrics.at("ratio");
  o.require(std::abs(ratio / oracle::kDiscount005 - 1.0) <= 0.01, "weak ratio " + num(ratio));
  const auto strong = check_time_consistency(m, s.ctx, TimeConsistency::strong, x, 0, 25, 50);
  o.require(strong.pass,
            "strong max " + num(strong.max_violation) + " tol " + num(strong.tolerance));
  return o;
}

Outcome h_longevity() {
  Outcome o;
  const Setup s(20, 50000, 105);
  const auto g = gamma(s.measure("driver:quad_z:0.1"), s.ctx, s.claim("brownian", 10), 0, 10, 20);
  o.require(std::abs(g.mean - 0.05) <= 0.01, "translated entropic gamma " + num(g.mean));
  int nonneg = 0, zero = 0;
  bool sign_ok = true;
  for (const char* spec : {"zero", "linear_y:0.1", "abs_z", "quad_z", "quad_z:0.1", "z_shift:0.1",
                           "csa_example", "csa_example:0.2,0.1", "csa_example_shift",
                           "q_entropic:0.5", "q_entropic_translated:0.5,0.1"}) {
    const auto d = parse_driver(spec);
    if (!d.nonneg_at_z0 && !d.zero_at_z0) continue;
    // Guarded drivers need a terminal inside their domain.
    const auto x = s.claim(d.domain_guard ? "sin" : "brownian", 10);
    const auto r = gamma(RiskMeasure::from_driver(d), s.ctx, x, 0, 10, 20);
    if (d.nonneg_at_z0) {
      ++nonneg;
      sign_ok = sign_ok && r.mean >= -2.0 * r.std_error;
    }
    if (d.zero_at_z0) {
      ++zero;
      sign_ok = sign_ok && std::abs(r.mean) <= 2.0 * r.std_error + 1e-12;
    }
  }
  o.require(sign_ok, "sign law on " + std::to_string(nonneg) + " nonnegative and " +
                         std::to_string(zero) + " zero-at-z0 drivers");
  return o;
}

Outcome premium_identity() {
  Outcome o;
  const Setup s(20, 50000, 106);
  const auto x = s.claim("brownian", 10);
  for (const char* spec : {"z_shift:0.1", "csa_example:0.1,0.1"}) {
    const auto r = check_premium_identity(parse_driver(spec), s.ctx, x, 0, 10, 20);
    o.require(r.pass, std::string(spec) + " gamma " + num(r.metrics.at("gamma")) + " premium " +
                          num(r.metrics.at("premium")) + " weights " +
                          num(r.metrics.at("weight_mean")));
  }
  return o;
}

Outcome cash_subadditivity() {
  Outcome o;
  const Setup s(20, 20000, 107);
  const std::size_t t = 10, u = 20;
  const auto x = s.claim("sin", u);
  const std::vector<RandomField> shifts{s.constant(0.0), s.constant(0.1), s.constant(0.5),
                                        s.constant(1.0), tanh_shift(s.ens, t)};
  for (const char* spec : {"discounted:mean,0.1", "driver:csa_example"}) {
    const CheckOptions none_allowed{.violation_cap = 0.0, .stderr_mult = 2.0, .tolerance = {}};
    const auto r = check_cash_subadditivity(s.measure(spec), s.ctx, x, t, u, shifts, none_allowed);
    o.require(r.pass, std::string(spec) + " violations " + num(r.violation_fraction));
  }
  const auto ca = check_cash_additivity(s.measure("discounted:mean,0.1"), s.ctx, x, t, u, shifts);
  o.require(!ca.pass, "discounted fails cash additivity");
  const double factor = 1.0 - std::exp(-0.1 * 0.5);
  double worst = 0.0;
  for (std::size_t k = 1; k < shifts.size(); ++k) {
    const double closed = factor * ca.metrics.at("shift_mean_" + std::to_string(k));
    const double gap = ca.metrics.at("gap_mean_" + std::to_string(k));
    worst = std::max(worst, std::abs(gap / closed - 1.0));
  }
  o.require(worst <= 0.02, "gap vs closed form, worst relative " + num(worst));
  return o;
}

Outcome taxonomy() {
  Outcome o;
  const Setup s(20, 10000, 7);
  const auto tax = taxonomy_matrix(s.ctx);
  std::size_t bad = 0;
  for (const auto& row : tax.rows) bad += !row.contradictions.empty();
  o.require(tax.consistent(), std::to_string(tax.rows.size()) + " measures, " +
                                  std::to_string(bad) + " with contradictions");
  const auto sub = check_time_consistency(s.measure("family:translated_family:0.5,0.1"), s.ctx,
                                          TimeConsistency::sub, s.claim("sin", 20), 0, 10, 20);
  o.require(sub.pass, "translated_family sub max " + num(sub.max_violation) + " tol " +
                          num(sub.tolerance));
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

Outcome determinism() {
  Outcome o;
  auto cfg = parse_config(
      "[grid]\nn_steps = 10\n[ensemble]\nn_paths = 6000\nseed = 9\n"
      "[run]\nmeasure = driver:q_entropic:{q}\nclaim = sin\nu = 0.5\n"
      "checks = cash_subadditivity, normalization, weak, sub, h_longevity, premium\n"
      "[sweep]\nq = 0.3, 0.7\n");
  std::vector<std::string> outs;
  for (unsigned threads : {1u, 2u, 8u}) {
    cfg.run.threads = threads;
    const auto dir = fs::temp_directory_path() / ("horizon_acc_" + std::to_string(threads));
    cfg.output.dir = dir.string();
    fs::remove_all(cfg.output.dir);
    std::ostringstream log;
    run_verify(cfg, log);
    run_sweep(cfg, log);
    run_simulate(cfg, log);
    std::string all;
    for (const char* f :
         {"report.json", "report.csv", "sweep.csv", "ensemble.bin", "simulate.json"}) {
      all += slurp(dir / f);
    }
    outs.push_back(all);
  }
  o.require(!outs[0].empty() && outs[0] == outs[1] && outs[0] == outs[2],
            "outputs byte-identical for 1, 2, 8 threads");

  const TimeGrid g(1.0, 10);
  const auto ens = simulate(g, 1, 20000, 8);
  const auto f = evaluate_claim(parse_claim("sin", 10), ens);
  const auto h = evaluate_claim(parse_claim("call:0.2", 10), ens);
  const double tower =
      std::abs(cond_expect(f, 0, ens)[0] - cond_expect(cond_expect(f, 6, ens), 0, ens)[0]);
  const auto lhs = cond_expect(0.7 * f - 1.3 * h, 5, ens);
  const auto rf = cond_expect(f, 5, ens), rh = cond_expect(h, 5, ens);
  double lin = 0.0;
  for (std::size_t p = 0; p < ens.paths(); ++p) {
    lin = std::max(lin, std::abs(lhs[p] - (0.7 * rf[p] - 1.3 * rh[p])));
  }
  o.require(tower <= 1e-8 && lin <= 1e-8, "tower " + num(tower) + ", linearity " + num(lin));

  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double worst = 0.0;
  for (double q : {0.05, 0.3, 0.5, 0.8, 0.99, 1.0, 1.2, 1.6, 2.0}) {
    const QIndex qi(q);
    for (int k = 0; k < 1000; ++k) {
      double x;
      if (q < 1.0) {
        const double lo = 0.999 * exp_q_bound(qi);
        x = lo + uni(rng) * (3.0 - lo);
      } else if (q > 1.0) {
        const double hi = 0.999 * exp_q_bound(qi);
        x = -3.0 + uni(rng) * (hi + 3.0);
      } else {
        x = -3.0 + 6.0 * uni(rng);
      }
      worst = std::max(worst, std::abs(ln_q(exp_q(x, qi), qi) - x));
    }
  }
  o.require(worst <= 1e-12, "inverse pair max error " + num(worst));
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"entropic cross-validation", entropic_cross_validation},
      {"q-entropic cross-validation", q_entropic_cross_validation},
      {"monotonicity in q", monotone_in_q},
      {"linear measure time consistency", linear_time_consistency},
      {"h-longevity sign and value", h_longevity},
      {"premium-measure identity", premium_identity},
      {"cash-subadditivity suite", cash_subadditivity},
      {"taxonomy matrix", taxonomy},
      {"deterministic infrastructure", determinism},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %zu: %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", k + 1,
                criteria[k].first, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
