#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "horizon/claim.hpp"
#include "horizon/errors.hpp"

namespace horizon {

// BSDE generator g(t, y, z) with the metadata the solver and the diagnostics
// rely on.
struct Driver {
  using Fn = std::function<double(double t, double y, std::span<const double> z)>;

  std::string label;
  Fn g;
  bool depends_on_y = false;
  // Quadratic growth in z: the solver clips z before evaluating g.
  bool quadratic_in_z = false;
  // g(t, y, 0) >= 0 for all (t, y): h-longevity.
  bool nonneg_at_z0 = false;
  // g(t, y, 0) == 0 for all (t, y): restriction.
  bool zero_at_z0 = false;
  // Optional admissibility predicate on y; the solve aborts when it fails.
  std::function<bool(double y)> domain_guard;

  double operator()(double t, double y, std::span<const double> z) const {
    return g(t, y, z);
  }
};

// Horizon-indexed drivers (g_u). The member for maturity u (in years).
struct DriverFamily {
  std::string label;
  std::function<Driver(double maturity)> member;

  Driver at(double maturity) const { return member(maturity); }

  static DriverFamily constant(Driver d) {
    DriverFamily f;
    f.label = "constant:" + d.label;
    f.member = [d = std::move(d)](double) { return d; };
    return f;
  }
};

// Samples the metadata flags on a (t, y) grid at z = 0. Returns the first
// sample where a set flag is contradicted.
struct FlagWitness {
  std::string flag;
  double t = 0.0;
  double y = 0.0;
  double value = 0.0;
};

inline std::optional<FlagWitness> verify_flags(const Driver& drv, std::size_t dim,
                                               std::span<const double> ts,
                                               std::span<const double> ys) {
  const std::vector<double> zero(dim, 0.0);
  for (double t : ts) {
    for (double y : ys) {
      if (drv.domain_guard && !drv.domain_guard(y)) continue;
      const double v = drv(t, y, zero);
      if (drv.zero_at_z0 && v != 0.0) return FlagWitness{"zero_at_z0", t, y, v};
      if (drv.nonneg_at_z0 && v < 0.0) return FlagWitness{"nonneg_at_z0", t, y, v};
    }
  }
  return std::nullopt;
}

namespace drivers {

inline double sum(std::span<const double> z) {
  double s = 0.0;
  for (double v : z) s += v;
  return s;
}

inline double norm2(std::span<const double> z) {
  double s = 0.0;
  for (double v : z) s += v * v;
  return s;
}

inline Driver zero() {
  Driver d;
  d.label = "zero";
  d.g = [](double, double, std::span<const double>) { return 0.0; };
  d.nonneg_at_z0 = d.zero_at_z0 = true;
  return d;
}

// g = -r y: E[-e^{-r(u-t)} X | F_t] as a BSDE.
inline Driver linear_y(double r) {
  Driver d;
  d.label = "linear_y:" + std::to_string(r);
  d.g = [r](double, double y, std::span<const double>) { return -r * y; };
  d.depends_on_y = true;
  return d;
}

inline Driver abs_z() {
  Driver d;
  d.label = "abs_z";
  d.g = [](double, double, std::span<const double> z) { return std::sqrt(norm2(z)); };
  d.nonneg_at_z0 = d.zero_at_z0 = true;
  return d;
}

// |z|^2 / 2 + a: the (translated) entropic driver.
inline Driver quad_z(double a = 0.0) {
  Driver d;
  d.label = a == 0.0 ? "quad_z" : "quad_z:" + std::to_string(a);
  d.g = [a](double, double, std::span<const double> z) { return 0.5 * norm2(z) + a; };
  d.quadratic_in_z = true;
  d.nonneg_at_z0 = a >= 0.0;
  d.zero_at_z0 = a == 0.0;
  return d;
}

// sum(z) + a: y-free, Lipschitz, shifted.
inline Driver z_shift(double a) {
  Driver d;
  d.label = "z_shift:" + std::to_string(a);
  d.g = [a](double, double, std::span<const double> z) { return sum(z) + a; };
  d.nonneg_at_z0 = a >= 0.0;
  d.zero_at_z0 = a == 0.0;
  return d;
}

// r y^- + sum(z) + c: decreasing and convex in y, hence cash subadditive.
inline Driver csa_example(double r = 0.1, double c = 0.0) {
  Driver d;
  d.label = "csa_example:" + std::to_string(r) + "," + std::to_string(c);
  d.g = [r, c](double, double y, std::span<const double> z) {
    return r * std::max(-y, 0.0) + sum(z) + c;
  };
  d.depends_on_y = true;
  d.nonneg_at_z0 = r >= 0.0 && c >= 0.0;
  d.zero_at_z0 = false;
  return d;
}

inline constexpr double kDomainEpsilon = 1e-3;

// q/2 |z|^2 / (1 + (1-q) y) + a. Guarded by 1 + (1-q) y >= 1e-3.
inline Driver q_entropic(double q, double a = 0.0) {
  if (!(q > 0.0 && q <= 1.0)) {
    throw std::invalid_argument("q_entropic: q must lie in (0, 1]");
  }
  Driver d;
  d.label = a == 0.0 ? "q_entropic:" + std::to_string(q)
                     : "q_entropic_translated:" + std::to_string(q) + "," +
                           std::to_string(a);
  const double k = 1.0 - q;
  d.g = [q, k, a](double, double y, std::span<const double> z) {
    return 0.5 * q * norm2(z) / (1.0 + k * y) + a;
  };
  d.depends_on_y = k != 0.0;
  d.quadratic_in_z = true;
  d.nonneg_at_z0 = a >= 0.0;
  d.zero_at_z0 = a == 0.0;
  d.domain_guard = [k](double y) { return 1.0 + k * y >= kDomainEpsilon; };
  return d;
}

inline Driver with_shift(Driver base, double c) {
  Driver d = base;
  d.label = base.label + "+" + std::to_string(c);
  d.g = [g = base.g, c](double t, double y, std::span<const double> z) {
    return g(t, y, z) + c;
  };
  d.nonneg_at_z0 = base.nonneg_at_z0 && c >= 0.0;
  d.zero_at_z0 = base.zero_at_z0 && c == 0.0;
  return d;
}

}  // namespace drivers

namespace families {

// g_u = q-entropic + alpha * u: increasing in the horizon for alpha >= 0.
inline DriverFamily translated(double q, double alpha) {
  DriverFamily f;
  f.label = "translated_family:" + std::to_string(q) + "," + std::to_string(alpha);
  f.member = [q, alpha](double u) { return drivers::q_entropic(q, alpha * u); };
  return f;
}

// g_u = g + c * u; increasing iff c >= 0.
inline DriverFamily horizon_shift(Driver base, double c) {
  DriverFamily f;
  f.label = "horizon_shift:" + base.label + "," + std::to_string(c);
  f.member = [base = std::move(base), c](double u) {
    Driver d = base;
    d.g = [g = base.g, s = c * u](double t, double y, std::span<const double> z) {
      return g(t, y, z) + s;
    };
    d.nonneg_at_z0 = base.nonneg_at_z0 && c * u >= 0.0;
    d.zero_at_z0 = base.zero_at_z0 && c * u == 0.0;
    return d;
  };
  return f;
}

}  // namespace families

// Registry: "zero", "linear_y:r", "abs_z", "quad_z[:a]", "z_shift:a",
// "csa_example[:r[,c]]", "csa_example_shift[:r]", "q_entropic:q",
// "q_entropic_translated:q,a".
inline Driver parse_driver(const std::string& spec) {
  const auto [name, args] = detail::split_label(spec);
  const auto nums = detail::parse_numbers(args, "driver '" + spec + "'");
  auto need = [&](std::size_t lo, std::size_t hi) {
    if (nums.size() < lo || nums.size() > hi) {
      throw UnknownLabel("driver '" + spec + "': wrong number of parameters");
    }
  };
  auto arg = [&](std::size_t i, double dflt) { return i < nums.size() ? nums[i] : dflt; };
  Driver d;
  if (name == "zero") {
    need(0, 0);
    d = drivers::zero();
  } else if (name == "linear_y") {
    need(1, 1);
    d = drivers::linear_y(nums[0]);
  } else if (name == "abs_z") {
    need(0, 0);
    d = drivers::abs_z();
  } else if (name == "quad_z") {
    need(0, 1);
    d = drivers::quad_z(arg(0, 0.0));
  } else if (name == "z_shift") {
    need(1, 1);
    d = drivers::z_shift(nums[0]);
  } else if (name == "csa_example") {
    need(0, 2);
    d = drivers::csa_example(arg(0, 0.1), arg(1, 0.0));
  } else if (name == "csa_example_shift") {
    need(0, 1);
    d = drivers::csa_example(arg(0, 0.1), 1.0);
  } else if (name == "q_entropic") {
    need(1, 1);
    d = drivers::q_entropic(nums[0]);
  } else if (name == "q_entropic_translated") {
    need(2, 2);
    if (nums[1] < 0.0) throw UnknownLabel("driver '" + spec + "': a must be >= 0");
    d = drivers::q_entropic(nums[0], nums[1]);
  } else {
    throw UnknownLabel("unknown driver '" + spec + "'");
  }
  d.label = spec;
  return d;
}

// Families: "translated_family:q,alpha", "constant:<driver>".
inline DriverFamily parse_family(const std::string& spec) {
  const auto [name, args] = detail::split_label(spec);
  DriverFamily f;
  if (name == "translated_family") {
    const auto nums = detail::parse_numbers(args, "family '" + spec + "'");
    if (nums.size() != 2) throw UnknownLabel("family '" + spec + "': need q,alpha");
    f = families::translated(nums[0], nums[1]);
  } else if (name == "constant") {
    f = DriverFamily::constant(parse_driver(args));
  } else {
    throw UnknownLabel("unknown family '" + spec + "'");
  }
  f.label = spec;
  return f;
}

// A tuple at which g_t(v, y, z) > g_u(v, y, z) for t <= u, v <= t.
struct IncreasingWitness {
  double t = 0.0;
  double u = 0.0;
  double v = 0.0;
  double y = 0.0;
  std::vector<double> z;
  double g_t = 0.0;
  double g_u = 0.0;
};

struct IncreasingVerdict {
  bool increasing = true;
  std::optional<IncreasingWitness> witness;
};

// Samples g_t <= g_u over maturities t <= u and (v <= t, y, z) on the given
// grids. z samples are taken along the diagonal (s, ..., s).
inline IncreasingVerdict check_increasing(const DriverFamily& family,
                                          std::span<const double> maturities,
                                          std::span<const double> times,
                                          std::span<const double> ys,
                                          std::span<const double> zs,
                                          std::size_t dim = 1) {
  if (maturities.size() < 2) {
    throw std::invalid_argument("check_increasing: need at least two maturities");
  }
  std::vector<Driver> members;
  for (double m : maturities) members.push_back(family.at(m));
  std::vector<double> z(dim);
  for (std::size_t a = 0; a < maturities.size(); ++a) {
    for (std::size_t b = 0; b < maturities.size(); ++b) {
      if (!(maturities[a] <= maturities[b]) || a == b) continue;
      for (double v : times) {
        if (v > maturities[a]) continue;
        for (double y : ys) {
          const auto& ga = members[a];
          const auto& gb = members[b];
          if ((ga.domain_guard && !ga.domain_guard(y)) ||
              (gb.domain_guard && !gb.domain_guard(y))) {
            continue;
          }
          for (double s : zs) {
            std::fill(z.begin(), z.end(), s);
            const double lo = ga(v, y, z);
            const double hi = gb(v, y, z);
            if (lo > hi) {
              return {false, IncreasingWitness{maturities[a], maturities[b], v, y, z,
                                               lo, hi}};
            }
          }
        }
      }
    }
  }
  return {};
}

}  // namespace horizon
