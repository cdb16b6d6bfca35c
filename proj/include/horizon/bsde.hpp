#pragma once

// Backward regression scheme for
//
//   Y_t = X + int_t^u g(s, Y_s, Z_s) ds - int_t^u Z_s dB_s.
//
// For i = m-1, ..., 0:
//   Yhat_i = E[Y_{i+1} | F_i]
//   Z_i    = E[(Y_{i+1} - Yhat_i) dB_i | F_i] / dt      (per component)
//   Y_i    = Yhat_i + g(t_i, y*, Z_i) dt
// where y* starts at Yhat_i and is refined by fixed-point passes when g
// depends on y. Subtracting Yhat_i before multiplying by dB_i leaves the
// estimator unchanged in expectation and makes Z invariant to shifts that are
// already known at t_i.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "horizon/context.hpp"
#include "horizon/driver.hpp"
#include "horizon/errors.hpp"
#include "horizon/field.hpp"
#include "horizon/regression.hpp"

namespace horizon {

struct SolveDiagnostics {
  std::size_t regressions = 0;
  std::size_t picard_passes = 0;
  std::size_t range_clamped = 0;
  std::size_t regression_fallbacks = 0;
  std::size_t z_clipped = 0;
};

class BSDESolution {
 public:
  BSDESolution(std::size_t maturity, std::size_t stop, std::size_t dim)
      : maturity_(maturity), stop_(stop), dim_(dim), y_(maturity + 1),
        z_(maturity * dim) {}

  std::size_t maturity() const noexcept { return maturity_; }
  std::size_t stop() const noexcept { return stop_; }

  // Y at node i; only nodes in [stop, maturity] are available, and only the
  // stop node when the solve ran without history.
  const RandomField& y(std::size_t i) const {
    if (i > maturity_ || y_[i].size() == 0) {
      throw std::out_of_range("BSDESolution: Y not recorded at node " + std::to_string(i));
    }
    return y_[i];
  }

  // Z component k at node i < maturity.
  const RandomField& z(std::size_t i, std::size_t k) const {
    if (i >= maturity_ || k >= dim_ || z_[i * dim_ + k].size() == 0) {
      throw std::out_of_range("BSDESolution: Z not recorded at node " + std::to_string(i));
    }
    return z_[i * dim_ + k];
  }

  SolveDiagnostics diagnostics;

 private:
  friend BSDESolution solve_impl(const Driver&, const RandomField&, std::size_t,
                                 std::size_t, bool, const Context&);

  std::size_t maturity_;
  std::size_t stop_;
  std::size_t dim_;
  std::vector<RandomField> y_;
  std::vector<RandomField> z_;
};

inline BSDESolution solve_impl(const Driver& driver, const RandomField& terminal,
                               std::size_t maturity, std::size_t stop,
                               bool history, const Context& ctx) {
  const auto& ens = ctx.ensemble;
  const auto& grid = ens.grid();
  const std::size_t n = ens.paths();
  const std::size_t d = ens.dim();
  const double dt = grid.dt();
  if (maturity > grid.last()) throw std::out_of_range("solve: maturity past grid end");
  if (stop > maturity) throw std::invalid_argument("solve: stop node after maturity");
  if (terminal.size() != n) throw std::invalid_argument("solve: terminal not on ensemble");
  if (terminal.node() > maturity) {
    throw std::invalid_argument("solve: terminal not measurable at maturity");
  }
  if (ctx.solver.picard_iters < 0) throw std::invalid_argument("solve: picard_iters < 0");

  BSDESolution sol(maturity, stop, d);
  auto& diag = sol.diagnostics;
  RandomField next = terminal;
  if (history || stop == maturity) sol.y_[maturity] = terminal;

  const bool clip = driver.quadratic_in_z;
  const double zc = ctx.solver.z_clip;
  const int passes = driver.depends_on_y ? ctx.solver.picard_iters : 0;
  const std::size_t blocks = block_count(n);

  std::vector<double> yhat(n);
  std::vector<double> zvals(n * d, 0.0);
  std::vector<std::size_t> clipped(blocks);

  for (std::size_t i = maturity; i-- > stop;) {
    const double t = grid.time(i);
    RegressionState state;
    std::size_t node = 0;
    if (next.node() <= i) {
      // Y_{i+1} is already known at t_i: E[Y|F_i] = Y and E[Y dB|F_i] = 0.
      yhat = next.values();
      std::fill(zvals.begin(), zvals.end(), 0.0);
      state.nodes = next.anchors();
      state.features = next.features();
      node = next.node();
    } else {
      LeastSquares ls(ens, state_at(next, i), ctx.basis, ctx.executor);
      ++diag.regressions;
      if (ls.ridge_fallback()) ++diag.regression_fallbacks;
      yhat = ls.project(next.values());
      if (driver.domain_guard) {
        // Where Yhat leaves the guarded domain, clip it to the sample range of
        // Y_{i+1}.
        const double lo = next.min(), hi = next.max();
        for (double& v : yhat) {
          if (!driver.domain_guard(v)) {
            ++diag.range_clamped;
            v = std::clamp(v, lo, hi);
          }
        }
      }
      std::vector<double> rhs(n);
      for (std::size_t k = 0; k < d; ++k) {
        ctx.executor.for_paths(n, [&](std::size_t p) {
          rhs[p] = (next[p] - yhat[p]) * ens.increment(i, p, k);
        });
        const auto zk = ls.project(rhs);
        for (std::size_t p = 0; p < n; ++p) zvals[p * d + k] = zk[p] / dt;
      }
      state = ls.state();
      node = state.top();
    }

    std::vector<double> yi(n);
    std::fill(clipped.begin(), clipped.end(), 0);
    ctx.executor.for_blocks(blocks, [&](std::size_t b) {
      const std::size_t lo = b * kPathBlock, hi = std::min(n, lo + kPathBlock);
      for (std::size_t p = lo; p < hi; ++p) {
        double* zp = &zvals[p * d];
        if (clip) {
          for (std::size_t k = 0; k < d; ++k) {
            if (std::abs(zp[k]) > zc) {
              zp[k] = std::clamp(zp[k], -zc, zc);
              ++clipped[b];
            }
          }
        }
        const std::span<const double> z(zp, d);
        auto eval = [&](double y) {
          if (driver.domain_guard && !driver.domain_guard(y)) {
            std::ostringstream os;
            os << "solve: driver " << driver.label << " domain guard failed at path "
               << p << ", node " << i << ", y = " << y;
            throw DomainGuardViolation(os.str(), p, i, y);
          }
          return driver(t, y, z);
        };
        double ystar = yhat[p];
        for (int k = 0; k < passes; ++k) ystar = yhat[p] + eval(ystar) * dt;
        const double v = yhat[p] + eval(ystar) * dt;
        if (!std::isfinite(v)) {
          throw NonFiniteValue("solve: non-finite Y at path " + std::to_string(p) +
                                   ", node " + std::to_string(i),
                               p, i);
        }
        yi[p] = v;
      }
    });
    for (std::size_t c : clipped) diag.z_clipped += c;
    diag.picard_passes += static_cast<std::size_t>(passes);

    RandomField yfield(node, std::move(yi), state.nodes, state.features);
    if (history) {
      for (std::size_t k = 0; k < d; ++k) {
        std::vector<double> zk(n);
        for (std::size_t p = 0; p < n; ++p) zk[p] = zvals[p * d + k];
        sol.z_[i * d + k] = RandomField(node, std::move(zk), state.nodes, state.features);
      }
    }
    if (history || i == stop) sol.y_[i] = yfield;
    next = std::move(yfield);
  }
  return sol;
}

// Full backward solve from `maturity` to node 0, keeping every Y and Z.
inline BSDESolution solve(const Driver& driver, const RandomField& terminal,
                          std::size_t maturity, const Context& ctx) {
  return solve_impl(driver, terminal, maturity, 0, true, ctx);
}

// E^g(X | F_{t_i}) for X measurable at `maturity`.
inline RandomField g_expectation(const Driver& driver, const RandomField& x,
                                 std::size_t t, std::size_t maturity,
                                 const Context& ctx) {
  if (t > maturity) throw std::invalid_argument("g_expectation: need t <= maturity");
  return solve_impl(driver, x, maturity, t, false, ctx).y(t);
}

}  // namespace horizon
