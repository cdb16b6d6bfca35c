#pragma once

// Tsallis q-deformed exponential and logarithm.
//
//   exp_q(x) = [1 + (1-q) x]^{1/(1-q)}
//   ln_q(x)  = (x^{1-q} - 1) / (1-q)
//
// Both reduce to exp/ln as q -> 1. For |1-q| < 1e-8 the classical branch is
// taken directly: the deformed formulas lose all precision there.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "horizon/errors.hpp"

namespace horizon {

class QIndex {
 public:
  static constexpr double kClassicalBand = 1e-8;

  explicit QIndex(double q) : q_(q), deformation_(1.0 - q) {
    if (!(q > 0.0) || !std::isfinite(q)) {
      throw std::invalid_argument("QIndex: q must be finite and > 0");
    }
  }

  double q() const noexcept { return q_; }
  // 1 - q
  double deformation() const noexcept { return deformation_; }
  bool classical() const noexcept {
    return std::abs(deformation_) < kClassicalBand;
  }

 private:
  double q_;
  double deformation_;
};

namespace detail {

inline std::string domain_message(const char* fn, double x, double q,
                                  double bound) {
  std::ostringstream os;
  os.precision(17);
  os << fn << ": x = " << x << " outside domain for q = " << q
     << " (bound " << bound << ")";
  return os.str();
}

}  // namespace detail

// Lower bound of the exp_q domain for q in (0,1), upper bound for q > 1.
inline double exp_q_bound(QIndex q) { return 1.0 / (q.q() - 1.0); }

inline double exp_q(double x, QIndex q) {
  if (q.classical()) return std::exp(x);
  const double bound = exp_q_bound(q);
  const double k = q.deformation();
  if (k > 0.0) {
    if (!(x >= bound)) {
      throw DomainError(detail::domain_message("exp_q", x, q.q(), bound), x,
                        q.q(), bound);
    }
  } else if (!(x < bound)) {
    throw DomainError(detail::domain_message("exp_q", x, q.q(), bound), x,
                      q.q(), bound);
  }
  // Rounding at the included boundary x = 1/(q-1) can leave a -ulp base.
  const double base = std::max(0.0, 1.0 + k * x);
  return std::pow(base, 1.0 / k);
}

inline double ln_q(double x, QIndex q) {
  const bool open_at_zero = q.classical() || q.deformation() <= 0.0;
  if (open_at_zero ? !(x > 0.0) : !(x >= 0.0)) {
    throw DomainError(detail::domain_message("ln_q", x, q.q(), 0.0), x, q.q(),
                      0.0);
  }
  if (q.classical()) return std::log(x);
  const double k = q.deformation();
  return (std::pow(x, k) - 1.0) / k;
}

}  // namespace horizon
