#pragma once

// Least-squares Monte Carlo realization of E[ . | F_{t_i}].
//
// The regressors at node i are all monomials, up to a total degree, in the
// standardized Brownian increments between the state nodes (the target node
// and any earlier anchors of the field), plus one linear column per explicit
// feature. Increments are independent N(0,1) under the standardization, which
// keeps the Gram matrix well conditioned even for nearby anchor nodes; the
// polynomial space spanned is the same as for the raw levels.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "horizon/ensemble.hpp"
#include "horizon/errors.hpp"
#include "horizon/field.hpp"
#include "horizon/parallel.hpp"

namespace horizon {

struct RegressionBasis {
  int degree = 4;
  double ridge = 0.0;
  bool operator==(const RegressionBasis&) const = default;
};

inline constexpr double kRidgeFallback = 1e-10;

struct RegressionState {
  std::vector<std::size_t> nodes;  // sorted, all > 0
  std::vector<FeaturePtr> features;

  std::size_t top() const {
    std::size_t n = nodes.empty() ? 0 : nodes.back();
    for (const auto& f : features) n = std::max(n, f->node);
    return n;
  }
};

// Regression state for projecting `f` onto F_{t_i}: node i itself plus every
// anchor and feature of f that is already known at i.
inline RegressionState state_at(const RandomField& f, std::size_t i) {
  RegressionState s;
  for (std::size_t a : f.anchors()) {
    if (a > 0 && a < i) s.nodes.push_back(a);
  }
  if (i > 0) s.nodes.push_back(i);
  for (const auto& feat : f.features()) {
    if (feat->node > 0 && feat->node <= i) s.features.push_back(feat);
  }
  return s;
}

namespace detail {

inline void enumerate_monomials(std::size_t vars, int degree,
                                std::vector<std::vector<int>>& out) {
  // Graded order: all exponents of total degree 0, then 1, ...
  std::vector<int> cur(vars, 0);
  for (int total = 0; total <= degree; ++total) {
    // Compositions of `total` into `vars` parts, lexicographic.
    std::function<void(std::size_t, int)> rec = [&](std::size_t v, int left) {
      if (v + 1 == vars) {
        cur[v] = left;
        out.push_back(cur);
        return;
      }
      for (int e = left; e >= 0; --e) {
        cur[v] = e;
        rec(v + 1, left - e);
      }
    };
    if (vars == 0) {
      if (total == 0) out.push_back({});
      continue;
    }
    rec(0, total);
  }
}

}  // namespace detail

class LeastSquares {
 public:
  LeastSquares(const PathEnsemble& ens, RegressionState state,
               const RegressionBasis& basis, const Executor& exec = Executor{})
      : exec_(exec), n_(ens.paths()), state_(std::move(state)) {
    if (basis.degree < 0) throw std::invalid_argument("RegressionBasis: degree < 0");
    if (basis.ridge < 0.0) throw std::invalid_argument("RegressionBasis: ridge < 0");
    const std::size_t d = ens.dim();
    const std::size_t vars = state_.nodes.size() * d;
    detail::enumerate_monomials(vars, vars == 0 ? 0 : basis.degree, monomials_);
    poly_terms_ = monomials_.size();
    terms_ = poly_terms_ + state_.features.size();
    build_design(ens, basis.degree);
    factorize(basis.ridge);
  }

  std::size_t terms() const noexcept { return terms_; }
  bool ridge_fallback() const noexcept { return fallback_; }
  const RegressionState& state() const noexcept { return state_; }

  std::vector<double> coefficients(std::span<const double> y) const {
    if (y.size() != n_) throw std::invalid_argument("LeastSquares: size mismatch");
    const std::size_t K = terms_;
    const std::size_t blocks = block_count(n_);
    std::vector<double> partial(blocks * K, 0.0);
    exec_.for_blocks(blocks, [&](std::size_t b) {
      double* acc = &partial[b * K];
      const std::size_t lo = b * kPathBlock, hi = std::min(n_, lo + kPathBlock);
      for (std::size_t p = lo; p < hi; ++p) {
        const double* row = &design_[p * K];
        const double yp = y[p];
        for (std::size_t a = 0; a < K; ++a) acc[a] += row[a] * yp;
      }
    });
    std::vector<double> rhs(K, 0.0);
    for (std::size_t b = 0; b < blocks; ++b) {
      for (std::size_t a = 0; a < K; ++a) rhs[a] += partial[b * K + a];
    }
    for (double& v : rhs) v /= static_cast<double>(n_);
    return solve(std::move(rhs));
  }

  std::vector<double> fitted(std::span<const double> coef) const {
    std::vector<double> out(n_);
    const std::size_t K = terms_;
    exec_.for_paths(n_, [&](std::size_t p) {
      const double* row = &design_[p * K];
      double s = 0.0;
      for (std::size_t a = 0; a < K; ++a) s += row[a] * coef[a];
      out[p] = s;
    });
    return out;
  }

  std::vector<double> project(std::span<const double> y) const {
    return fitted(coefficients(y));
  }

 private:
  void build_design(const PathEnsemble& ens, int degree) {
    const std::size_t K = terms_;
    const std::size_t d = ens.dim();
    const auto& grid = ens.grid();
    const auto& nodes = state_.nodes;
    std::vector<double> inv_sd(nodes.size());
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      const double prev = j == 0 ? 0.0 : grid.time(nodes[j - 1]);
      inv_sd[j] = 1.0 / std::sqrt(grid.time(nodes[j]) - prev);
    }
    const std::size_t vars = nodes.size() * d;
    const int pmax = std::max(degree, 0);
    design_.assign(n_ * K, 0.0);
    exec_.for_blocks(block_count(n_), [&](std::size_t b) {
      std::vector<double> powers(vars * (pmax + 1));
      const std::size_t lo = b * kPathBlock, hi = std::min(n_, lo + kPathBlock);
      for (std::size_t p = lo; p < hi; ++p) {
        for (std::size_t j = 0; j < nodes.size(); ++j) {
          for (std::size_t k = 0; k < d; ++k) {
            const double prev = j == 0 ? 0.0 : ens.level(nodes[j - 1], p, k);
            const double x = (ens.level(nodes[j], p, k) - prev) * inv_sd[j];
            double* pw = &powers[(j * d + k) * (pmax + 1)];
            pw[0] = 1.0;
            for (int e = 1; e <= pmax; ++e) pw[e] = pw[e - 1] * x;
          }
        }
        double* row = &design_[p * K];
        for (std::size_t m = 0; m < poly_terms_; ++m) {
          double v = 1.0;
          const auto& ex = monomials_[m];
          for (std::size_t q = 0; q < vars; ++q) {
            if (ex[q] != 0) v *= powers[q * (pmax + 1) + ex[q]];
          }
          row[m] = v;
        }
        for (std::size_t f = 0; f < state_.features.size(); ++f) {
          row[poly_terms_ + f] = state_.features[f]->values[p];
        }
      }
    });
  }

  void factorize(double ridge) {
    const std::size_t K = terms_;
    const std::size_t blocks = block_count(n_);
    std::vector<double> partial(blocks * K * K, 0.0);
    exec_.for_blocks(blocks, [&](std::size_t b) {
      double* acc = &partial[b * K * K];
      const std::size_t lo = b * kPathBlock, hi = std::min(n_, lo + kPathBlock);
      for (std::size_t p = lo; p < hi; ++p) {
        const double* row = &design_[p * K];
        for (std::size_t a = 0; a < K; ++a) {
          const double ra = row[a];
          for (std::size_t c = 0; c <= a; ++c) acc[a * K + c] += ra * row[c];
        }
      }
    });
    gram_.assign(K * K, 0.0);
    for (std::size_t b = 0; b < blocks; ++b) {
      for (std::size_t e = 0; e < K * K; ++e) gram_[e] += partial[b * K * K + e];
    }
    for (double& v : gram_) v /= static_cast<double>(n_);
    if (!cholesky(ridge)) {
      if (ridge == 0.0 && cholesky(kRidgeFallback)) {
        fallback_ = true;
        return;
      }
      throw SingularRegression("LeastSquares: normal equations are singular (" +
                               std::to_string(K) + " terms, " +
                               std::to_string(n_) + " paths)");
    }
  }

  // Lower Cholesky factor of gram + ridge * I (intercept unpenalized).
  bool cholesky(double ridge) {
    const std::size_t K = terms_;
    chol_.assign(K * K, 0.0);
    double max_diag = 0.0;
    for (std::size_t a = 0; a < K; ++a) max_diag = std::max(max_diag, gram_[a * K + a]);
    const double floor = 1e-14 * std::max(max_diag, 1.0);
    for (std::size_t a = 0; a < K; ++a) {
      for (std::size_t c = 0; c <= a; ++c) {
        double s = gram_[a * K + c];
        if (a == c && a > 0) s += ridge;
        for (std::size_t k = 0; k < c; ++k) s -= chol_[a * K + k] * chol_[c * K + k];
        if (a == c) {
          if (!(s > floor) || !std::isfinite(s)) return false;
          chol_[a * K + a] = std::sqrt(s);
        } else {
          chol_[a * K + c] = s / chol_[c * K + c];
        }
      }
    }
    return true;
  }

  std::vector<double> solve(std::vector<double> x) const {
    const std::size_t K = terms_;
    for (std::size_t a = 0; a < K; ++a) {
      double s = x[a];
      for (std::size_t k = 0; k < a; ++k) s -= chol_[a * K + k] * x[k];
      x[a] = s / chol_[a * K + a];
    }
    for (std::size_t a = K; a-- > 0;) {
      double s = x[a];
      for (std::size_t k = a + 1; k < K; ++k) s -= chol_[k * K + a] * x[k];
      x[a] = s / chol_[a * K + a];
    }
    return x;
  }

  Executor exec_;
  std::size_t n_;
  RegressionState state_;
  std::vector<std::vector<int>> monomials_;
  std::size_t poly_terms_ = 0;
  std::size_t terms_ = 0;
  std::vector<double> design_;
  std::vector<double> gram_;
  std::vector<double> chol_;
  bool fallback_ = false;
};

struct Projection {
  RandomField field;
  std::vector<double> coefficients;  // empty when the field was already known
  RegressionState state;
  bool ridge_fallback = false;
};

// Projection of `f` onto F_{t_i}. A field already measurable at i is returned
// unchanged; at i = 0 the result is the sample mean on every path.
inline Projection project(const RandomField& f, std::size_t i,
                          const PathEnsemble& ens, const RegressionBasis& basis,
                          const Executor& exec = Executor{}) {
  if (f.size() != ens.paths()) {
    throw std::invalid_argument("cond_expect: field not defined on this ensemble");
  }
  if (i > ens.grid().last()) throw std::out_of_range("cond_expect: node past grid end");
  if (f.node() <= i) return {f, {}, {}, false};
  LeastSquares ls(ens, state_at(f, i), basis, exec);
  Projection out;
  out.coefficients = ls.coefficients(f.values());
  out.state = ls.state();
  out.ridge_fallback = ls.ridge_fallback();
  out.field = RandomField(out.state.top(), ls.fitted(out.coefficients),
                          out.state.nodes, out.state.features);
  return out;
}

inline RandomField cond_expect(const RandomField& f, std::size_t i,
                               const PathEnsemble& ens,
                               const RegressionBasis& basis = {},
                               const Executor& exec = Executor{}) {
  return project(f, i, ens, basis, exec).field;
}

}  // namespace horizon
