#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "horizon/ensemble.hpp"
#include "horizon/errors.hpp"
#include "horizon/field.hpp"

namespace horizon {

// Read-only view of one path, truncated at the claim's maturity.
class PathView {
 public:
  PathView(const PathEnsemble& ens, std::size_t path, std::size_t horizon_node)
      : ens_(&ens), path_(path), last_(horizon_node) {}

  double operator()(std::size_t node, std::size_t k = 0) const {
    if (node > last_) {
      throw std::out_of_range("PathView: node beyond claim maturity");
    }
    return ens_->level(node, path_, k);
  }
  double terminal(std::size_t k = 0) const { return (*this)(last_, k); }
  std::size_t last() const noexcept { return last_; }
  std::size_t dim() const noexcept { return ens_->dim(); }

 private:
  const PathEnsemble* ens_;
  std::size_t path_;
  std::size_t last_;
};

struct Claim {
  std::size_t maturity = 0;
  std::function<double(const PathView&)> payoff;
  std::string label;
  // Nodes the payoff reads; empty means a deterministic payoff. Defaults to
  // the maturity node for the registry claims.
  std::vector<std::size_t> reads;
};

inline RandomField evaluate_claim(const Claim& claim, const PathEnsemble& ens,
                                  const Executor& exec = Executor{}) {
  if (claim.maturity > ens.grid().last()) {
    throw std::out_of_range("evaluate_claim: maturity index " +
                            std::to_string(claim.maturity) + " past grid end");
  }
  for (std::size_t r : claim.reads) {
    if (r > claim.maturity) {
      throw std::out_of_range("evaluate_claim: payoff reads past maturity");
    }
  }
  std::vector<double> values(ens.paths());
  exec.for_paths(ens.paths(), [&](std::size_t p) {
    values[p] = claim.payoff(PathView(ens, p, claim.maturity));
  });
  const std::size_t node =
      claim.reads.empty() ? 0 : *std::max_element(claim.reads.begin(), claim.reads.end());
  return RandomField(node, std::move(values), claim.reads);
}

namespace claims {

inline Claim constant(std::size_t m, double c) {
  return {m, [c](const PathView&) { return c; }, "const:" + std::to_string(c), {}};
}

// B_{t_m} + shift (first Brownian component).
inline Claim brownian(std::size_t m, double shift = 0.0) {
  return {m, [shift](const PathView& v) { return v.terminal() + shift; },
          "brownian", {m}};
}

// (B_{t_m} + beta)^-
inline Claim neg_part(std::size_t m, double beta) {
  return {m,
          [beta](const PathView& v) { return std::max(-(v.terminal() + beta), 0.0); },
          "neg_part", {m}};
}

inline Claim call(std::size_t m, double strike) {
  return {m,
          [strike](const PathView& v) { return std::max(v.terminal() - strike, 0.0); },
          "call", {m}};
}

inline Claim sine(std::size_t m) {
  return {m, [](const PathView& v) { return std::sin(v.terminal()); }, "sin", {m}};
}

}  // namespace claims

namespace detail {

inline std::vector<double> parse_numbers(const std::string& s,
                                         const std::string& context) {
  std::vector<double> out;
  if (s.empty()) return out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t comma = s.find(',', pos);
    const std::string tok =
        s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw UnknownLabel(context + ": bad number '" + tok + "'");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

// "name:args" -> (name, args)
inline std::pair<std::string, std::string> split_label(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) return {spec, ""};
  return {spec.substr(0, colon), spec.substr(colon + 1)};
}

}  // namespace detail

// Claim registry: "const:c", "brownian[:shift]", "neg_part:beta", "call:K",
// "sin".
inline Claim parse_claim(const std::string& spec, std::size_t maturity) {
  const auto [name, args] = detail::split_label(spec);
  const auto nums = detail::parse_numbers(args, "claim '" + spec + "'");
  auto need = [&](std::size_t lo, std::size_t hi) {
    if (nums.size() < lo || nums.size() > hi) {
      throw UnknownLabel("claim '" + spec + "': wrong number of parameters");
    }
  };
  Claim c;
  if (name == "const") {
    need(1, 1);
    c = claims::constant(maturity, nums[0]);
  } else if (name == "brownian") {
    need(0, 1);
    c = claims::brownian(maturity, nums.empty() ? 0.0 : nums[0]);
  } else if (name == "neg_part") {
    need(0, 1);
    c = claims::neg_part(maturity, nums.empty() ? 0.0 : nums[0]);
  } else if (name == "call") {
    need(1, 1);
    c = claims::call(maturity, nums[0]);
  } else if (name == "sin") {
    need(0, 0);
    c = claims::sine(maturity);
  } else {
    throw UnknownLabel("unknown claim '" + spec + "'");
  }
  c.label = spec;
  return c;
}

}  // namespace horizon
