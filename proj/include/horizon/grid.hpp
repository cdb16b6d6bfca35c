#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace horizon {

// Uniform grid t_i = i * dt on [0, T].
class TimeGrid {
 public:
  TimeGrid(double horizon, std::size_t n_steps)
      : horizon_(horizon), steps_(n_steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
      throw std::invalid_argument("TimeGrid: horizon must be > 0");
    }
    if (n_steps < 1) {
      throw std::invalid_argument("TimeGrid: need at least one step");
    }
    dt_ = horizon / static_cast<double>(n_steps);
  }

  double horizon() const noexcept { return horizon_; }
  std::size_t steps() const noexcept { return steps_; }
  std::size_t last() const noexcept { return steps_; }
  double dt() const noexcept { return dt_; }

  double time(std::size_t i) const {
    if (i > steps_) throw std::out_of_range("TimeGrid::time: node past horizon");
    return i == steps_ ? horizon_ : static_cast<double>(i) * dt_;
  }

  // Node for a time that must lie on the grid (to 1e-9 relative to dt).
  std::size_t index_of(double t) const {
    const double k = t / dt_;
    const double r = std::round(k);
    if (r < 0.0 || r > static_cast<double>(steps_) || std::abs(k - r) > 1e-9) {
      throw std::out_of_range("TimeGrid::index_of: t = " + std::to_string(t) +
                              " is not a grid node");
    }
    return static_cast<std::size_t>(r);
  }

  bool operator==(const TimeGrid&) const = default;

 private:
  double horizon_;
  std::size_t steps_;
  double dt_ = 0.0;
};

// Deterministic, piecewise-constant short rate: r_k applies on [t_k, t_{k+1}).
// D(t_i, t_j) = exp(-sum_{k=i}^{j-1} r_k dt) telescopes exactly.
class DiscountCurve {
 public:
  DiscountCurve(const TimeGrid& grid, std::vector<double> rates)
      : dt_(grid.dt()), rates_(std::move(rates)) {
    if (rates_.size() != grid.steps()) {
      throw std::invalid_argument("DiscountCurve: one rate per grid step");
    }
    cumulative_.assign(rates_.size() + 1, 0.0);
    for (std::size_t k = 0; k < rates_.size(); ++k) {
      if (!(rates_[k] >= 0.0) || !std::isfinite(rates_[k])) {
        throw std::invalid_argument("DiscountCurve: rates must be >= 0");
      }
      cumulative_[k + 1] = cumulative_[k] + rates_[k] * dt_;
    }
  }

  static DiscountCurve flat(const TimeGrid& grid, double r) {
    return DiscountCurve(grid, std::vector<double>(grid.steps(), r));
  }

  std::size_t steps() const noexcept { return rates_.size(); }
  double rate(std::size_t k) const { return rates_.at(k); }

  double factor(std::size_t i, std::size_t j) const {
    if (i > j) throw std::invalid_argument("DiscountCurve: need i <= j");
    if (j >= cumulative_.size()) {
      throw std::out_of_range("DiscountCurve: node past horizon");
    }
    if (i == j) return 1.0;
    return std::exp(-(cumulative_[j] - cumulative_[i]));
  }

  // d_{tu}: smallest factor over the nodes of (t, u]; rates are nonnegative
  // so this is D(t, u) itself.
  double lower_bound(std::size_t i, std::size_t j) const { return factor(i, j); }

 private:
  double dt_;
  std::vector<double> rates_;
  std::vector<double> cumulative_;
};

}  // namespace horizon
