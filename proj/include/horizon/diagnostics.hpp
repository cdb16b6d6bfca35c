#pragma once

// Axiom and horizon-risk checks on a shared ensemble.
//
// Every check produces a PropertyReport. A pathwise check records the excess
// by which each path violates the property; the verdict is
//
//   pass  <=>  share of paths with excess > tolerance <= violation cap
//
// where the tolerance carries a relative round-off allowance of 1e-9. With
// cap 0 this is max excess <= tolerance.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "horizon/bsde.hpp"
#include "horizon/claim.hpp"
#include "horizon/context.hpp"
#include "horizon/driver.hpp"
#include "horizon/errors.hpp"
#include "horizon/field.hpp"
#include "horizon/riskmeasure.hpp"

namespace horizon {

struct Witness {
  std::size_t path = 0;
  std::vector<double> times;
  double lhs = 0.0;
  double rhs = 0.0;
  std::string note;
};

struct PropertyReport {
  std::string property;
  std::string construction;
  std::map<std::string, std::string> params;
  bool pass = false;
  // Set when the check could not be carried out (calibration failure,
  // domain error). Such a report is neither evidence for nor against.
  bool inconclusive = false;
  double tolerance = 0.0;
  double max_violation = 0.0;
  double violation_fraction = 0.0;
  double violation_cap = 0.0;
  std::optional<Witness> witness;
  std::uint64_t seed = 0;
  std::size_t n_paths = 0;
  std::size_t n_steps = 0;
  std::map<std::string, double> metrics;
};

struct CheckOptions {
  double violation_cap = 1e-3;
  double stderr_mult = 2.0;
  // Overrides stderr_mult * stderr.
  std::optional<double> tolerance;
};

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline PropertyReport make_report(std::string property, const RiskMeasure& m,
                                  const Context& ctx) {
  PropertyReport r;
  r.property = std::move(property);
  r.construction = m.label();
  r.seed = ctx.ensemble.seed();
  r.n_paths = ctx.paths();
  r.n_steps = ctx.grid().steps();
  return r;
}

// Accumulates pathwise excesses over one or more comparisons.
class Tally {
 public:
  Tally(double tolerance, double cap) : tol_(tolerance), cap_(cap) {}

  void add(std::size_t path, double excess, double lhs, double rhs,
           std::vector<double> times, const std::string& note = {}) {
    ++count_;
    const double floor = 1e-9 * (1.0 + std::abs(lhs) + std::abs(rhs));
    if (excess > tol_ + floor) ++violations_;
    if (excess > max_ || !witness_) {
      if (excess > max_) max_ = excess;
      witness_ = Witness{path, std::move(times), lhs, rhs, note};
    }
  }

  // Adds every path of two fields; excess computed by `fn(lhs, rhs)`.
  template <class Fn>
  void add_fields(const RandomField& lhs, const RandomField& rhs,
                  const std::vector<double>& times, Fn&& fn,
                  const std::string& note = {}) {
    for (std::size_t p = 0; p < lhs.size(); ++p) {
      add(p, fn(lhs[p], rhs[p]), lhs[p], rhs[p], times, note);
    }
  }

  void finish(PropertyReport& r) const {
    r.tolerance = tol_;
    r.violation_cap = cap_;
    r.max_violation = std::max(max_, 0.0);
    r.violation_fraction =
        count_ == 0 ? 0.0 : static_cast<double>(violations_) / static_cast<double>(count_);
    r.pass = !r.inconclusive && r.violation_fraction <= cap_;
    if (max_ > 0.0) r.witness = witness_;
  }

 private:
  double tol_;
  double cap_;
  std::size_t count_ = 0;
  std::size_t violations_ = 0;
  double max_ = 0.0;
  std::optional<Witness> witness_;
};

inline double tolerance_for(const CheckOptions& o, double std_error) {
  return o.tolerance ? *o.tolerance : o.stderr_mult * std_error;
}

inline void require_measurable(const RandomField& f, std::size_t node, const char* what) {
  if (f.node() > node) {
    throw std::invalid_argument(std::string(what) + ": field not measurable at node " +
                                std::to_string(node));
  }
}

inline RandomField merged(RandomField x, const std::vector<RandomField>& others) {
  for (const auto& o : others) x.merge_state(o);
  return x;
}

}  // namespace detail

// 0.5 (1 + tanh(B_t)) exposed as a regressor: an F_t-measurable shift that
// polynomials in B cannot reproduce.
inline RandomField tanh_shift(const PathEnsemble& ens, std::size_t t, double scale = 0.5) {
  std::vector<double> v(ens.paths());
  for (std::size_t p = 0; p < v.size(); ++p) {
    v[p] = scale * (1.0 + std::tanh(ens.level(t, p, 0)));
  }
  return RandomField(t, std::move(v), {t}).as_regressor("tanh_shift");
}

// ---------------------------------------------------------------------------
// Cash additivity and subadditivity

inline PropertyReport check_cash_additivity(const RiskMeasure& m, const Context& ctx,
                                            const RandomField& x, std::size_t t,
                                            std::size_t u,
                                            const std::vector<RandomField>& shifts,
                                            CheckOptions opt = {.violation_cap = 0.0,
                                                                .tolerance = 1e-8}) {
  auto r = detail::make_report("cash_additivity", m, ctx);
  r.params = {{"t", detail::fmt(ctx.grid().time(t))}, {"u", detail::fmt(ctx.grid().time(u))},
              {"shifts", std::to_string(shifts.size())}};
  for (const auto& s : shifts) detail::require_measurable(s, t, "check_cash_additivity");
  const auto xb = detail::merged(x, shifts);
  const auto base = m.evaluate(ctx, t, u, xb);
  detail::Tally tally(detail::tolerance_for(opt, m.estimate_stderr(ctx, u, x)),
                      opt.violation_cap);
  const std::vector<double> times{ctx.grid().time(t), ctx.grid().time(u)};
  for (std::size_t k = 0; k < shifts.size(); ++k) {
    const auto& s = shifts[k];
    const auto shifted = m.evaluate(ctx, t, u, xb + s);
    const auto target = base - s;
    tally.add_fields(shifted, target, times,
                     [](double a, double b) { return std::abs(a - b); },
                     "shift " + std::to_string(k));
    r.metrics["gap_mean_" + std::to_string(k)] = (shifted - target).mean();
    r.metrics["shift_mean_" + std::to_string(k)] = s.mean();
  }
  tally.finish(r);
  return r;
}

// rho(X + m) >= rho(X) - m for m >= 0.
inline PropertyReport check_cash_subadditivity(const RiskMeasure& m, const Context& ctx,
                                               const RandomField& x, std::size_t t,
                                               std::size_t u,
                                               const std::vector<RandomField>& shifts,
                                               CheckOptions opt = {}) {
  auto r = detail::make_report("cash_subadditivity", m, ctx);
  r.params = {{"t", detail::fmt(ctx.grid().time(t))}, {"u", detail::fmt(ctx.grid().time(u))},
              {"shifts", std::to_string(shifts.size())}};
  for (const auto& s : shifts) {
    detail::require_measurable(s, t, "check_cash_subadditivity");
    if (s.min() < 0.0) throw std::invalid_argument("check_cash_subadditivity: shift < 0");
  }
  const auto xb = detail::merged(x, shifts);
  const auto base = m.evaluate(ctx, t, u, xb);
  detail::Tally tally(detail::tolerance_for(opt, m.estimate_stderr(ctx, u, x)),
                      opt.violation_cap);
  const std::vector<double> times{ctx.grid().time(t), ctx.grid().time(u)};
  for (std::size_t k = 0; k < shifts.size(); ++k) {
    const auto& s = shifts[k];
    const auto shifted = m.evaluate(ctx, t, u, xb + s);
    const auto target = base - s;
    tally.add_fields(shifted, target, times,
                     [](double a, double b) { return b - a; },
                     "shift " + std::to_string(k));
    r.metrics["gap_mean_" + std::to_string(k)] = (shifted - target).mean();
  }
  tally.finish(r);
  return r;
}

// ---------------------------------------------------------------------------
// Normalization and restriction

// |rho_tu(0)| <= tolerance (default 1e-10) on every (t, u) pair.
inline PropertyReport check_normalization(
    const RiskMeasure& m, const Context& ctx,
    const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
    CheckOptions opt = {.violation_cap = 0.0, .tolerance = 1e-10}) {
  auto r = detail::make_report("normalization", m, ctx);
  r.params = {{"pairs", std::to_string(pairs.size())}};
  detail::Tally tally(detail::tolerance_for(opt, 0.0), opt.violation_cap);
  const auto zero = RandomField::constant(ctx.paths(), 0.0);
  double max_rho = -INFINITY;
  for (auto [t, u] : pairs) {
    const auto v = m.evaluate(ctx, t, u, zero);
    const std::vector<double> times{ctx.grid().time(t), ctx.grid().time(u)};
    for (std::size_t p = 0; p < v.size(); ++p) {
      tally.add(p, std::abs(v[p]), v[p], 0.0, times);
      max_rho = std::max(max_rho, v[p]);
    }
  }
  r.metrics["max_rho0"] = max_rho;
  tally.finish(r);
  return r;
}

// rho_tv(X) = rho_tu(X) for X measurable at u and every v in `vs`.
inline PropertyReport check_restriction(const RiskMeasure& m, const Context& ctx,
                                        const RandomField& x, std::size_t t,
                                        std::size_t u, const std::vector<std::size_t>& vs,
                                        CheckOptions opt = {}) {
  detail::require_measurable(x, u, "check_restriction");
  auto r = detail::make_report("restriction", m, ctx);
  r.params = {{"t", detail::fmt(ctx.grid().time(t))}, {"u", detail::fmt(ctx.grid().time(u))}};
  const auto base = m.evaluate(ctx, t, u, x);
  detail::Tally tally(detail::tolerance_for(opt, m.estimate_stderr(ctx, u, x)),
                      opt.violation_cap);
  for (std::size_t v : vs) {
    if (v < u) throw std::invalid_argument("check_restriction: need v >= u");
    const auto longer = m.evaluate(ctx, t, v, x);
    tally.add_fields(longer, base,
                     {ctx.grid().time(t), ctx.grid().time(u), ctx.grid().time(v)},
                     [](double a, double b) { return std::abs(a - b); });
    r.metrics["gap_mean_v" + detail::fmt(ctx.grid().time(v))] = (longer - base).mean();
  }
  tally.finish(r);
  return r;
}

// ---------------------------------------------------------------------------
// h-longevity

struct LongevityResult {
  RandomField gamma;  // rho_tv(X) - rho_tu(X), measurable at t
  double mean = 0.0;
  double std_error = 0.0;
  // Premium-measure representation (gamma_via_premium_measure only).
  std::optional<double> premium_value;
  double weight_mean = 0.0;
  double weight_min = 0.0;
  double ess_fraction = 0.0;
};

// gamma(t, u, v, X) = rho_tv(X) - rho_tu(X); X is held at its u-value up to v.
// stderr is the Monte Carlo error of the u-level correction rho_uv - rho_uu.
inline LongevityResult gamma(const RiskMeasure& m, const Context& ctx, const RandomField& x,
                             std::size_t t, std::size_t u, std::size_t v) {
  detail::require_measurable(x, u, "gamma");
  if (!(t <= u && u <= v)) throw std::invalid_argument("gamma: need t <= u <= v");
  LongevityResult out;
  out.gamma = m.evaluate(ctx, t, v, x) - m.evaluate(ctx, t, u, x);
  out.mean = out.gamma.mean();
  const auto at_u = m.evaluate(ctx, u, v, x) - m.evaluate(ctx, u, u, x);
  out.std_error = at_u.stddev() / std::sqrt(static_cast<double>(ctx.paths()));
  return out;
}

// gamma through the h-longevity premium measure:
//
//   gamma = E_Q[ exp(int_t^v Dy g ds) int_u^v g(s, -X, 0) ds | F_t ]
//   dQ/dP = exp(-1/2 int |Dz g|^2 ds + int Dz g dB)
//
// with (Ybar, Zbar) = (Y^u, Z^u) on [t, u) and (-X, 0) on [u, v). Dz g is the
// telescoping quotient: component i changes z_i from Zbar to Z^v with the
// earlier components already at Z^v.
inline LongevityResult gamma_via_premium_measure(const Driver& driver, const Context& ctx,
                                                 const RandomField& x, std::size_t t,
                                                 std::size_t u, std::size_t v) {
  detail::require_measurable(x, u, "gamma_via_premium_measure");
  if (!(t <= u && u < v)) throw std::invalid_argument("gamma_via_premium_measure: need t <= u < v");
  const auto& ens = ctx.ensemble;
  const auto& grid = ctx.grid();
  const std::size_t n = ctx.paths();
  const std::size_t d = ens.dim();
  const double dt = grid.dt();
  const auto neg_x = -x;
  const auto su = solve_impl(driver, neg_x, u, t, true, ctx);
  const auto sv = solve_impl(driver, neg_x, v, t, true, ctx);

  std::vector<double> logw(n, 0.0), dy_int(n, 0.0), g_int(n, 0.0);
  std::vector<double> zv(d), zbar(d), zmix(d);
  const std::vector<double> zero(d, 0.0);
  for (std::size_t i = t; i < v; ++i) {
    const double s = grid.time(i);
    for (std::size_t p = 0; p < n; ++p) {
      const double ybar = i < u ? su.y(i)[p] : neg_x[p];
      const double yv = sv.y(i)[p];
      for (std::size_t k = 0; k < d; ++k) {
        zv[k] = sv.z(i, k)[p];
        zbar[k] = i < u ? su.z(i, k)[p] : 0.0;
      }
      if (driver.quadratic_in_z) {
        for (std::size_t k = 0; k < d; ++k) {
          zv[k] = std::clamp(zv[k], -ctx.solver.z_clip, ctx.solver.z_clip);
          zbar[k] = std::clamp(zbar[k], -ctx.solver.z_clip, ctx.solver.z_clip);
        }
      }
      const double g_v = driver(s, yv, zv);
      const double g_bar_v = driver(s, ybar, zv);
      const double dyg = yv != ybar ? (g_v - g_bar_v) / (yv - ybar) : 0.0;
      dy_int[p] += dyg * dt;
      zmix = zbar;
      double prev = driver(s, ybar, zmix);
      double sq = 0.0, dot = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        zmix[k] = zv[k];
        const double cur = driver(s, ybar, zmix);
        const double dzg = zv[k] != zbar[k] ? (cur - prev) / (zv[k] - zbar[k]) : 0.0;
        prev = cur;
        sq += dzg * dzg;
        dot += dzg * ens.increment(i, p, k);
      }
      logw[p] += -0.5 * sq * dt + dot;
      if (i >= u) g_int[p] += driver(s, neg_x[p], zero) * dt;
    }
  }

  std::vector<double> w(n), wf(n);
  double sw = 0.0, sw2 = 0.0, wmin = INFINITY;
  for (std::size_t p = 0; p < n; ++p) {
    w[p] = std::exp(logw[p]);
    wf[p] = w[p] * std::exp(dy_int[p]) * g_int[p];
    sw += w[p];
    sw2 += w[p] * w[p];
    wmin = std::min(wmin, w[p]);
  }
  LongevityResult out;
  out.weight_mean = sw / static_cast<double>(n);
  out.weight_min = wmin;
  out.ess_fraction = sw * sw / (sw2 * static_cast<double>(n));
  if (!(out.ess_fraction >= 0.1)) {
    throw DegenerateWeights("gamma_via_premium_measure: effective sample size " +
                                detail::fmt(out.ess_fraction) + " of paths",
                            out.ess_fraction);
  }
  // Markov approximation at t > 0: regress on B_t only.
  const RandomField weighted(v, std::move(wf));
  out.premium_value = cond_expect(weighted, t, ens, ctx.basis, ctx.executor).mean();
  out.gamma = sv.y(t) - su.y(t);
  out.mean = out.gamma.mean();
  const auto at_u = sv.y(u) - neg_x;
  out.std_error = at_u.stddev() / std::sqrt(static_cast<double>(n));
  return out;
}

// gamma(t, u, v, X) >= -tolerance on every (u, v) pair.
inline PropertyReport check_h_longevity(const RiskMeasure& m, const Context& ctx,
                                        const RandomField& x, std::size_t t,
                                        const std::vector<std::pair<std::size_t, std::size_t>>& uv,
                                        CheckOptions opt = {}) {
  auto r = detail::make_report("h_longevity", m, ctx);
  r.params = {{"t", detail::fmt(ctx.grid().time(t))}, {"pairs", std::to_string(uv.size())}};
  double tol = 0.0;
  std::vector<LongevityResult> results;
  for (auto [u, v] : uv) {
    results.push_back(gamma(m, ctx, x, t, u, v));
    tol = std::max(tol, detail::tolerance_for(opt, results.back().std_error));
  }
  detail::Tally tally(tol, opt.violation_cap);
  for (std::size_t k = 0; k < uv.size(); ++k) {
    const auto& g = results[k].gamma;
    const std::vector<double> times{ctx.grid().time(t), ctx.grid().time(uv[k].first),
                                    ctx.grid().time(uv[k].second)};
    for (std::size_t p = 0; p < g.size(); ++p) tally.add(p, -g[p], g[p], 0.0, times);
    r.metrics["gamma_mean_" + std::to_string(k)] = results[k].mean;
    r.metrics["gamma_stderr_" + std::to_string(k)] = results[k].std_error;
  }
  tally.finish(r);
  return r;
}

// gamma() against its premium-measure representation at t: the means agree
// within max(rel * |gamma|, abs_tol) and the weights have mean 1 +- 0.1.
inline PropertyReport check_premium_identity(const Driver& driver, const Context& ctx,
                                             const RandomField& x, std::size_t t,
                                             std::size_t u, std::size_t v,
                                             double rel = 0.05, double abs_tol = 0.02) {
  const auto m = RiskMeasure::from_driver(driver);
  auto r = detail::make_report("premium_identity", m, ctx);
  r.params = {{"t", detail::fmt(ctx.grid().time(t))}, {"u", detail::fmt(ctx.grid().time(u))},
              {"v", detail::fmt(ctx.grid().time(v))}};
  const auto direct = gamma(m, ctx, x, t, u, v);
  const auto prem = gamma_via_premium_measure(driver, ctx, x, t, u, v);
  const double gap = std::abs(*prem.premium_value - direct.mean);
  r.tolerance = std::max(rel * std::abs(direct.mean), abs_tol);
  r.max_violation = gap;
  const bool weights_ok = std::abs(prem.weight_mean - 1.0) <= 0.1 && prem.weight_min > 0.0;
  r.pass = gap <= r.tolerance && weights_ok;
  r.violation_fraction = r.pass ? 0.0 : 1.0;
  if (!r.pass) {
    r.witness = Witness{0, {ctx.grid().time(t), ctx.grid().time(u), ctx.grid().time(v)},
                        *prem.premium_value, direct.mean,
                        weights_ok ? "premium vs direct" : "weight mean outside 1 +- 0.1"};
  }
  r.metrics = {{"gamma", direct.mean},
               {"gamma_stderr", direct.std_error},
               {"premium", *prem.premium_value},
               {"weight_mean", prem.weight_mean},
               {"weight_min", prem.weight_min},
               {"ess_fraction", prem.ess_fraction}};
  return r;
}

// ---------------------------------------------------------------------------
// Time consistency at s <= t <= u

enum class TimeConsistency { strong, order, weak, sub };

inline const char* to_string(TimeConsistency k) {
  switch (k) {
    case TimeConsistency::strong: return "strong";
    case TimeConsistency::order: return "order";
    case TimeConsistency::weak: return "weak";
    case TimeConsistency::sub: return "sub";
  }
  return "?";
}

inline TimeConsistency parse_time_consistency(const std::string& s) {
  if (s == "strong") return TimeConsistency::strong;
  if (s == "order") return TimeConsistency::order;
  if (s == "weak") return TimeConsistency::weak;
  if (s == "sub") return TimeConsistency::sub;
  throw UnknownLabel("unknown time-consistency kind '" + s + "'");
}

namespace detail {

struct ShiftCalibration {
  RandomField shift;
  double rms_residual = 0.0;
  double max_residual = 0.0;
  int iterations = 0;
};

// F_t-measurable c with rho_tu(X2 + c) ~ rho_tu(X1) pathwise, by Newton steps
// on the pathwise residual. c enters the regression as a feature and X1 is
// evaluated with the same state, so both sides share one design. Returns the
// iterate with the smallest RMS residual.
inline ShiftCalibration calibrate_shift(const RiskMeasure& m, const Context& ctx,
                                        const RandomField& x1, const RandomField& x2,
                                        std::size_t t, std::size_t u, int max_iter = 6) {
  constexpr double h = 1e-4;
  auto as_shift = [&](std::vector<double> v) {
    return RandomField(t, std::move(v), {t}).as_regressor("order_shift");
  };
  RandomField c = as_shift((m.evaluate(ctx, t, u, x2) - m.evaluate(ctx, t, u, x1)).values());
  ShiftCalibration best;
  best.rms_residual = INFINITY;
  for (int it = 0; it < max_iter; ++it) {
    RandomField target, val;
    try {
      target = m.evaluate(ctx, t, u, x1.with_state_of(c));
      val = m.evaluate(ctx, t, u, x2 + c);
    } catch (const DomainGuardViolation&) {
      break;
    }
    const auto resid = val - target;
    double sq = 0.0, worst = 0.0;
    for (double v : resid.values()) {
      sq += v * v;
      worst = std::max(worst, std::abs(v));
    }
    const double rms = std::sqrt(sq / static_cast<double>(resid.size()));
    if (rms < best.rms_residual) best = {c, rms, worst, it + 1};
    if (worst < 1e-12) break;
    RandomField bumped;
    try {
      bumped = m.evaluate(ctx, t, u, x2 + (c + h));
    } catch (const DomainGuardViolation&) {
      break;
    }
    std::vector<double> next = c.values();
    for (std::size_t p = 0; p < next.size(); ++p) {
      const double slope = std::min((bumped[p] - val[p]) / h, -0.05);
      next[p] -= resid[p] / slope;
    }
    c = as_shift(std::move(next));
  }
  return best;
}

}  // namespace detail

// Companion claim for order time-consistency: X + 0.25 sin(2 B_u).
inline RandomField order_companion(const PathEnsemble& ens, const RandomField& x,
                                   std::size_t u) {
  std::vector<double> v(ens.paths());
  for (std::size_t p = 0; p < v.size(); ++p) {
    v[p] = x[p] + 0.25 * std::sin(2.0 * ens.level(u, p, 0));
  }
  return RandomField(u, std::move(v), {u}).with_state_of(x);
}

//   strong  rho_st(-rho_tu(X))               == rho_su(X)
//   weak    rho_su(rho_tu(0) - rho_tu(X))    == rho_su(X)
//   sub     rho_st(-rho_tu(X))               <= rho_su(X)
//   order   rho_tu(X2 + c) == rho_tu(X)  =>  rho_su(X2 + c) == rho_su(X)
//           with X2 = order_companion(X) and c calibrated at t
// Values are compared pathwise at s. Metrics report the means of both sides
// and their ratio.
inline PropertyReport check_time_consistency(const RiskMeasure& m, const Context& ctx,
                                             TimeConsistency kind, const RandomField& x,
                                             std::size_t s, std::size_t t, std::size_t u,
                                             CheckOptions opt = {}) {
  if (!(s <= t && t <= u)) throw std::invalid_argument("check_time_consistency: need s <= t <= u");
  detail::require_measurable(x, u, "check_time_consistency");
  auto r = detail::make_report(std::string(to_string(kind)) + "_time_consistency", m, ctx);
  const auto& grid = ctx.grid();
  r.params = {{"s", detail::fmt(grid.time(s))},
              {"t", detail::fmt(grid.time(t))},
              {"u", detail::fmt(grid.time(u))}};
  const std::vector<double> times{grid.time(s), grid.time(t), grid.time(u)};
  detail::Tally tally(detail::tolerance_for(opt, m.estimate_stderr(ctx, u, x)),
                      opt.violation_cap);
  auto rhs = m.evaluate(ctx, s, u, x);
  RandomField lhs;
  switch (kind) {
    case TimeConsistency::strong:
    case TimeConsistency::sub: {
      const auto inner = m.evaluate(ctx, t, u, x);
      lhs = m.evaluate(ctx, s, t, -inner);
      if (kind == TimeConsistency::strong) {
        tally.add_fields(lhs, rhs, times, [](double a, double b) { return std::abs(a - b); });
      } else {
        tally.add_fields(lhs, rhs, times, [](double a, double b) { return a - b; });
      }
      break;
    }
    case TimeConsistency::weak: {
      const auto zero = RandomField::constant(ctx.paths(), 0.0);
      const auto inner = m.evaluate(ctx, t, u, zero) - m.evaluate(ctx, t, u, x);
      lhs = m.evaluate(ctx, s, u, inner);
      tally.add_fields(lhs, rhs, times, [](double a, double b) { return std::abs(a - b); });
      break;
    }
    case TimeConsistency::order: {
      const auto x2 = order_companion(ctx.ensemble, x, u);
      const double tol = detail::tolerance_for(
          opt, std::max(m.estimate_stderr(ctx, u, x), m.estimate_stderr(ctx, u, x2)));
      tally = detail::Tally(tol, opt.violation_cap);
      const auto cal = detail::calibrate_shift(m, ctx, x, x2, t, u);
      r.metrics["inner_rms_residual"] = cal.rms_residual;
      r.metrics["inner_max_residual"] = cal.max_residual;
      // Premise: inner values agree to half the tolerance.
      if (!(cal.rms_residual <= 0.5 * tol + 1e-9)) {
        r.inconclusive = true;
        tally.finish(r);
        return r;
      }
      rhs = m.evaluate(ctx, s, u, x.with_state_of(cal.shift));
      lhs = m.evaluate(ctx, s, u, x2 + cal.shift);
      tally.add_fields(lhs, rhs, times, [](double a, double b) { return std::abs(a - b); });
      break;
    }
  }
  r.metrics["lhs_mean"] = lhs.mean();
  r.metrics["rhs_mean"] = rhs.mean();
  r.metrics["ratio"] = rhs.mean() != 0.0 ? lhs.mean() / rhs.mean() : NAN;
  tally.finish(r);
  return r;
}

// ---------------------------------------------------------------------------
// Monotonicity and convexity

// For each pair (X1, X2) with X1 <= X2 pathwise: rho(X1) >= rho(X2) at t.
inline PropertyReport check_monotonicity(
    const RiskMeasure& m, const Context& ctx,
    const std::vector<std::pair<RandomField, RandomField>>& pairs, std::size_t t,
    std::size_t u, CheckOptions opt = {}) {
  auto r = detail::make_report("monotonicity", m, ctx);
  r.params = {{"t", detail::fmt(ctx.grid().time(t))}, {"u", detail::fmt(ctx.grid().time(u))},
              {"pairs", std::to_string(pairs.size())}};
  double se = 0.0;
  for (const auto& [a, b] : pairs) {
    for (std::size_t p = 0; p < a.size(); ++p) {
      if (a[p] > b[p]) throw std::invalid_argument("check_monotonicity: pair not ordered");
    }
    se = std::max({se, m.estimate_stderr(ctx, u, a), m.estimate_stderr(ctx, u, b)});
  }
  detail::Tally tally(detail::tolerance_for(opt, se), opt.violation_cap);
  for (const auto& [a, b] : pairs) {
    const auto ra = m.evaluate(ctx, t, u, a.with_state_of(b));
    const auto rb = m.evaluate(ctx, t, u, b.with_state_of(a));
    tally.add_fields(ra, rb, {ctx.grid().time(t), ctx.grid().time(u)},
                     [](double x1, double x2) { return x2 - x1; });
  }
  tally.finish(r);
  return r;
}

// rho(l X1 + (1-l) X2) <= l rho(X1) + (1-l) rho(X2) at t = 0.
inline PropertyReport check_convexity(
    const RiskMeasure& m, const Context& ctx,
    const std::vector<std::pair<RandomField, RandomField>>& pairs, std::size_t u,
    const std::vector<double>& lambdas = {0.25, 0.5, 0.75}, CheckOptions opt = {}) {
  auto r = detail::make_report("convexity", m, ctx);
  r.params = {{"u", detail::fmt(ctx.grid().time(u))}, {"pairs", std::to_string(pairs.size())},
              {"lambdas", std::to_string(lambdas.size())}};
  double se = 0.0;
  for (const auto& [a, b] : pairs) {
    se = std::max({se, m.estimate_stderr(ctx, u, a), m.estimate_stderr(ctx, u, b)});
  }
  detail::Tally tally(detail::tolerance_for(opt, se), opt.violation_cap);
  for (const auto& [a, b] : pairs) {
    const double ra = m.evaluate0(ctx, u, a);
    const double rb = m.evaluate0(ctx, u, b);
    for (double l : lambdas) {
      const auto mix = l * a + (1.0 - l) * b;
      const double lhs = m.evaluate0(ctx, u, mix);
      const double rhs = l * ra + (1.0 - l) * rb;
      tally.add(0, lhs - rhs, lhs, rhs, {0.0, ctx.grid().time(u), l});
    }
  }
  tally.finish(r);
  return r;
}

// ---------------------------------------------------------------------------
// Taxonomy matrix

struct TaxonomyRow {
  std::string measure;
  // property -> pass over every taxonomy claim
  std::map<std::string, bool> holds;
  std::map<std::string, bool> inconclusive;
  std::vector<std::string> contradictions;
  std::vector<PropertyReport> reports;
};

struct Taxonomy {
  std::vector<TaxonomyRow> rows;
  bool consistent() const {
    for (const auto& r : rows) {
      if (!r.contradictions.empty()) return false;
    }
    return true;
  }
};

inline std::vector<std::string> taxonomy_registry() {
  return {"driver:zero",
          "driver:quad_z",
          "driver:abs_z",
          "driver:linear_y:0.1",
          "driver:csa_example",
          "driver:csa_example_shift",
          "driver:q_entropic:0.5",
          "driver:q_entropic_translated:0.5,0.1",
          "family:translated_family:0.5,0.1",
          "entropic",
          "qent:0.5,0",
          "qent_tr:0.5,0,0.1",
          "discounted:mean,0.1"};
}

inline std::vector<std::string> taxonomy_claims() { return {"sin", "const:0.5", "const:-1"}; }

// Runs the premise and conclusion checks of
//   weak => order;  strong + normalized + restricted => weak;
//   weak + h-longevity + rho(0) <= 0 => sub
// on (s, t, u) = (0, mid, last) for every claim and flags any measure that
// passes all premises of an implication and fails its conclusion.
// Inconclusive checks count as neither pass nor fail.
inline TaxonomyRow taxonomy_row(const RiskMeasure& m, const Context& ctx,
                                const std::vector<std::string>& claim_specs) {
  const auto& grid = ctx.grid();
  const std::size_t last = grid.last();
  const std::size_t mid = last / 2;
  TaxonomyRow row;
  row.measure = m.label();
  std::map<std::string, int> fails, incon;
  auto record = [&](const std::string& prop, PropertyReport rep) {
    if (rep.inconclusive) ++incon[prop];
    else if (!rep.pass) ++fails[prop];
    if (!fails.count(prop)) fails[prop] = 0;
    row.reports.push_back(std::move(rep));
  };
  auto guarded = [&](const std::string& prop, auto&& fn) {
    try {
      record(prop, fn());
    } catch (const std::exception& e) {
      PropertyReport rep = detail::make_report(prop, m, ctx);
      rep.inconclusive = true;
      rep.params["error"] = e.what();
      record(prop, std::move(rep));
    }
  };
  guarded("normalization", [&] { return check_normalization(m, ctx, {{0, mid}, {0, last}, {mid, last}}); });
  for (const auto& spec : claim_specs) {
    const auto xu = evaluate_claim(parse_claim(spec, last), ctx.ensemble, ctx.executor);
    const auto xm = evaluate_claim(parse_claim(spec, mid), ctx.ensemble, ctx.executor);
    for (auto kind : {TimeConsistency::strong, TimeConsistency::order, TimeConsistency::weak,
                      TimeConsistency::sub}) {
      guarded(to_string(kind), [&] {
        auto rep = check_time_consistency(m, ctx, kind, xu, 0, mid, last);
        rep.params["claim"] = spec;
        return rep;
      });
    }
    guarded("restriction", [&] {
      auto rep = check_restriction(m, ctx, xm, 0, mid, {last});
      rep.params["claim"] = spec;
      return rep;
    });
    guarded("h_longevity", [&] {
      auto rep = check_h_longevity(m, ctx, xm, 0, {{mid, last}});
      rep.params["claim"] = spec;
      return rep;
    });
  }
  for (const auto& [prop, n] : fails) {
    row.holds[prop] = n == 0 && incon[prop] == 0;
    row.inconclusive[prop] = n == 0 && incon[prop] > 0;
  }
  // rho(0) <= 0 is read off the normalization report.
  double rho0 = INFINITY;
  for (const auto& rep : row.reports) {
    if (rep.property == "normalization" && rep.metrics.count("max_rho0")) {
      rho0 = rep.metrics.at("max_rho0");
    }
  }
  row.holds["rho0_nonpositive"] = rho0 <= 1e-10;
  auto holds = [&](const char* p) { return row.holds.count(p) && row.holds.at(p); };
  auto fails_ = [&](const char* p) { return fails.count(p) && fails.at(p) > 0; };
  if (holds("weak") && fails_("order")) row.contradictions.push_back("weak => order");
  if (holds("strong") && holds("normalization") && holds("restriction") && fails_("weak")) {
    row.contradictions.push_back("strong + normalized + restricted => weak");
  }
  if (holds("weak") && holds("h_longevity") && holds("rho0_nonpositive") && fails_("sub")) {
    row.contradictions.push_back("weak + h-longevity + rho(0) <= 0 => sub");
  }
  return row;
}

inline Taxonomy taxonomy_matrix(const Context& ctx,
                                const std::vector<std::string>& measures = taxonomy_registry(),
                                const std::vector<std::string>& claim_specs = taxonomy_claims()) {
  Taxonomy tax;
  for (const auto& spec : measures) {
    tax.rows.push_back(taxonomy_row(parse_measure(spec, ctx.grid()), ctx, claim_specs));
  }
  return tax;
}

}  // namespace horizon
