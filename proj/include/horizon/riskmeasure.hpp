#pragma once

// Fully-dynamic risk measures rho_{tu}: F_u positions -> F_t capital.
//
//   FromDriver       rho_tu(X) = E^g(-X | F_t)
//   FromFamily       rho_tu(X) = E^{g_u}(-X | F_t)
//   QEntropicClosed  ln_q E[exp_q(L) | F_t] with L = (X+beta)^- + int_t^u a
//                    (losses) or L = -X + int_t^u a (plain)
//   EntropicClosed   ln E[exp(-X) | F_t]
//   Discounted       phi_tu(D(t,u) X) for a cash-additive phi

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>

#include "horizon/bsde.hpp"
#include "horizon/context.hpp"
#include "horizon/driver.hpp"
#include "horizon/errors.hpp"
#include "horizon/field.hpp"
#include "horizon/grid.hpp"
#include "horizon/regression.hpp"
#include "horizon/tsallis.hpp"

namespace horizon {

class RiskMeasure;

struct FromDriver {
  Driver driver;
};

struct FromFamily {
  DriverFamily family;
};

struct QEntropicClosed {
  double q = 0.5;
  double beta = 0.0;
  // Deterministic a(t) >= 0; empty means a = 0.
  std::function<double(double)> a;
  bool on_losses = true;
};

struct EntropicClosed {};

struct Discounted {
  std::shared_ptr<const RiskMeasure> base;
  DiscountCurve curve;
};

class RiskMeasure {
 public:
  using Construction =
      std::variant<FromDriver, FromFamily, QEntropicClosed, EntropicClosed, Discounted>;

  RiskMeasure(std::string label, Construction c)
      : label_(std::move(label)), construction_(std::move(c)) {
    if (const auto* d = std::get_if<Discounted>(&construction_)) {
      if (!d->base) throw std::invalid_argument("Discounted: missing base measure");
      if (!d->base->cash_additive()) {
        throw std::invalid_argument("Discounted: base measure '" + d->base->label() +
                                    "' is not cash additive");
      }
    }
    if (const auto* c2 = std::get_if<QEntropicClosed>(&construction_)) {
      if (!(c2->q > 0.0 && c2->q <= 1.0)) {
        throw std::invalid_argument("q-entropic: q must lie in (0, 1]");
      }
      if (c2->on_losses && !(c2->beta >= 0.0)) {
        throw std::invalid_argument("q-entropic: beta must be >= 0");
      }
    }
  }

  static RiskMeasure from_driver(Driver d) {
    std::string l = "driver:" + d.label;
    return RiskMeasure(std::move(l), FromDriver{std::move(d)});
  }
  static RiskMeasure from_family(DriverFamily f) {
    std::string l = "family:" + f.label;
    return RiskMeasure(std::move(l), FromFamily{std::move(f)});
  }
  static RiskMeasure entropic() { return RiskMeasure("entropic", EntropicClosed{}); }
  static RiskMeasure q_entropic(double q, double beta = 0.0, double a = 0.0) {
    QEntropicClosed c{q, beta, nullptr, true};
    if (a != 0.0) {
      if (a < 0.0) throw std::invalid_argument("q-entropic: a must be >= 0");
      c.a = [a](double) { return a; };
    }
    return RiskMeasure("qent", std::move(c));
  }
  static RiskMeasure q_entropic_raw(double q) {
    return RiskMeasure("qent_raw", QEntropicClosed{q, 0.0, nullptr, false});
  }
  static RiskMeasure discounted(RiskMeasure base, DiscountCurve curve) {
    std::string l = "discounted:" + base.label();
    return RiskMeasure(std::move(l),
                       Discounted{std::make_shared<const RiskMeasure>(std::move(base)),
                                  std::move(curve)});
  }

  const std::string& label() const noexcept { return label_; }
  void set_label(std::string l) { label_ = std::move(l); }
  const Construction& construction() const noexcept { return construction_; }

  bool cash_additive() const {
    return std::visit(
        [](const auto& c) -> bool {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, FromDriver>) {
            return !c.driver.depends_on_y;
          } else if constexpr (std::is_same_v<T, FromFamily>) {
            return !c.family.at(0.0).depends_on_y && !c.family.at(1.0).depends_on_y;
          } else if constexpr (std::is_same_v<T, QEntropicClosed>) {
            return !c.on_losses && QIndex(c.q).classical();
          } else if constexpr (std::is_same_v<T, EntropicClosed>) {
            return true;
          } else {
            for (std::size_t k = 0; k < c.curve.steps(); ++k) {
              if (c.curve.rate(k) != 0.0) return false;
            }
            return true;
          }
        },
        construction_);
  }

  bool driver_based() const {
    return std::holds_alternative<FromDriver>(construction_) ||
           std::holds_alternative<FromFamily>(construction_);
  }

  // Generator used for maturity node u (driver-based constructions only).
  Driver driver_for(const TimeGrid& grid, std::size_t u) const {
    if (const auto* d = std::get_if<FromDriver>(&construction_)) return d->driver;
    if (const auto* f = std::get_if<FromFamily>(&construction_)) {
      return f->family.at(grid.time(u));
    }
    throw std::logic_error("RiskMeasure '" + label_ + "' is not driver based");
  }

  // rho_{t u}(X) as a field measurable at t.
  RandomField evaluate(const Context& ctx, std::size_t t, std::size_t u,
                       const RandomField& x) const {
    const auto& grid = ctx.grid();
    if (u > grid.last()) throw std::out_of_range("evaluate: maturity past grid end");
    if (t > u) throw std::invalid_argument("evaluate: need t <= u");
    if (x.size() != ctx.paths()) {
      throw std::invalid_argument("evaluate: position not defined on this ensemble");
    }
    if (x.node() > u) throw std::invalid_argument("evaluate: position not F_u-measurable");
    return std::visit(
        [&](const auto& c) -> RandomField {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, FromDriver>) {
            return g_expectation(c.driver, -x, t, u, ctx);
          } else if constexpr (std::is_same_v<T, FromFamily>) {
            return g_expectation(c.family.at(grid.time(u)), -x, t, u, ctx);
          } else if constexpr (std::is_same_v<T, QEntropicClosed>) {
            return q_entropic_eval(c, ctx, t, u, x);
          } else if constexpr (std::is_same_v<T, EntropicClosed>) {
            const auto e = x.map([](double v) { return std::exp(-v); });
            const double floor = e.min();
            return cond_expect(e, t, ctx.ensemble, ctx.basis, ctx.executor)
                .map([floor](double m) { return std::log(std::max(m, floor)); });
          } else {
            return c.base->evaluate(ctx, t, u, c.curve.factor(t, u) * x);
          }
        },
        construction_);
  }

  double evaluate0(const Context& ctx, std::size_t u, const RandomField& x) const {
    return evaluate(ctx, 0, u, x).mean();
  }

  // Monte Carlo standard error of rho_{0u}(X): sd(X)/sqrt(n) for the BSDE
  // constructions, delta method through the outer transform for the closed
  // forms.
  double estimate_stderr(const Context& ctx, std::size_t u, const RandomField& x) const {
    const double rn = std::sqrt(static_cast<double>(ctx.paths()));
    return std::visit(
        [&](const auto& c) -> double {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, FromDriver> || std::is_same_v<T, FromFamily>) {
            return x.stddev() / rn;
          } else if constexpr (std::is_same_v<T, QEntropicClosed>) {
            const QIndex qi(c.q);
            const auto arg = q_argument(c, ctx.grid(), 0, u, x);
            const double m = arg.mean();
            return arg.stddev() * std::pow(m, -c.q) / rn;
          } else if constexpr (std::is_same_v<T, EntropicClosed>) {
            const auto e = x.map([](double v) { return std::exp(-v); });
            return e.stddev() / (e.mean() * rn);
          } else {
            return c.base->estimate_stderr(ctx, u, c.curve.factor(0, u) * x);
          }
        },
        construction_);
  }

 private:
  static double integral_a(const QEntropicClosed& c, const TimeGrid& grid, std::size_t t,
                           std::size_t u) {
    if (!c.a) return 0.0;
    double s = 0.0;
    for (std::size_t k = t; k < u; ++k) {
      const double ak = c.a(grid.time(k));
      if (!(ak >= 0.0)) throw std::invalid_argument("q-entropic: a(t) must be >= 0");
      s += ak * grid.dt();
    }
    return s;
  }

  // Pathwise exp_q(L).
  static RandomField q_argument(const QEntropicClosed& c, const TimeGrid& grid,
                                std::size_t t, std::size_t u, const RandomField& x) {
    const QIndex qi(c.q);
    const double shift = integral_a(c, grid, t, u);
    if (c.on_losses) {
      return x.map([&](double v) {
        return exp_q(std::max(-(v + c.beta), 0.0) + shift, qi);
      });
    }
    if (!qi.classical()) {
      const double lo = exp_q_bound(qi) + drivers::kDomainEpsilon;
      for (std::size_t p = 0; p < x.size(); ++p) {
        const double l = -x[p] + shift;
        if (!(l >= lo)) {
          throw DomainError("q-entropic: -X = " + std::to_string(-x[p]) + " at path " +
                                std::to_string(p) + " below 1/(q-1) + eps = " +
                                std::to_string(lo),
                            l, c.q, lo);
        }
      }
    }
    return x.map([&](double v) { return exp_q(-v + shift, qi); });
  }

  static RandomField q_entropic_eval(const QEntropicClosed& c, const Context& ctx,
                                     std::size_t t, std::size_t u, const RandomField& x) {
    const QIndex qi(c.q);
    const auto arg = q_argument(c, ctx.grid(), t, u, x);
    const double floor = arg.min();
    return cond_expect(arg, t, ctx.ensemble, ctx.basis, ctx.executor)
        .map([&](double m) { return ln_q(std::max(m, floor), qi); });
  }

  std::string label_;
  Construction construction_;
};

// Registry: "entropic", "mean", "qent:q,beta", "qent_tr:q,beta,a", "qent_raw:q",
// "driver:<label>", "family:<label>", "discounted:<base>,r". The base of a
// discounted measure may itself contain commas; r is taken after the last one.
inline RiskMeasure parse_measure(const std::string& spec, const TimeGrid& grid) {
  const auto [name, args] = detail::split_label(spec);
  auto nums = [&] { return detail::parse_numbers(args, "measure '" + spec + "'"); };
  auto bad = [&](const char* msg) { return UnknownLabel("measure '" + spec + "': " + msg); };
  std::optional<RiskMeasure> m;
  if (name == "entropic") {
    if (!args.empty()) throw bad("takes no parameters");
    m = RiskMeasure::entropic();
  } else if (name == "mean") {
    if (!args.empty()) throw bad("takes no parameters");
    m = RiskMeasure::from_driver(drivers::zero());
  } else if (name == "qent") {
    const auto v = nums();
    if (v.size() != 2) throw bad("need q,beta");
    m = RiskMeasure::q_entropic(v[0], v[1]);
  } else if (name == "qent_tr") {
    const auto v = nums();
    if (v.size() != 3) throw bad("need q,beta,a");
    m = RiskMeasure::q_entropic(v[0], v[1], v[2]);
  } else if (name == "qent_raw") {
    const auto v = nums();
    if (v.size() != 1) throw bad("need q");
    m = RiskMeasure::q_entropic_raw(v[0]);
  } else if (name == "driver") {
    m = RiskMeasure::from_driver(parse_driver(args));
  } else if (name == "family") {
    m = RiskMeasure::from_family(parse_family(args));
  } else if (name == "discounted") {
    const auto comma = args.rfind(',');
    if (comma == std::string::npos) throw bad("need <base>,r");
    const auto r = detail::parse_numbers(args.substr(comma + 1), "measure '" + spec + "'");
    m = RiskMeasure::discounted(parse_measure(args.substr(0, comma), grid),
                                DiscountCurve::flat(grid, r.at(0)));
  } else {
    throw UnknownLabel("unknown measure '" + spec + "'");
  }
  m->set_label(spec);
  return *m;
}

}  // namespace horizon
