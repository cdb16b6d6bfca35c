#pragma once

// RandomField: one value per path, measurable w.r.t. F_{t_node}.
//
// Besides the values a field records its regression state: the grid nodes
// whose Brownian levels it is a function of (anchors) and any explicit
// regressor columns (features) it was built from. Conditional expectations
// project onto polynomials of the anchors that are already known at the
// target node plus those features, so that F_t-measurable ingredients of a
// later claim survive projection at nodes after t.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace horizon {

struct Feature {
  std::size_t node = 0;
  std::string label;
  std::vector<double> values;
};

using FeaturePtr = std::shared_ptr<const Feature>;

class RandomField {
 public:
  RandomField() = default;

  RandomField(std::size_t node, std::vector<double> values,
              std::vector<std::size_t> anchors = {},
              std::vector<FeaturePtr> features = {})
      : node_(node),
        values_(std::move(values)),
        anchors_(std::move(anchors)),
        features_(std::move(features)) {
    normalize();
  }

  static RandomField constant(std::size_t n_paths, double c) {
    return RandomField(0, std::vector<double>(n_paths, c));
  }

  std::size_t node() const noexcept { return node_; }
  std::size_t size() const noexcept { return values_.size(); }
  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& values() noexcept { return values_; }
  const std::vector<std::size_t>& anchors() const noexcept { return anchors_; }
  const std::vector<FeaturePtr>& features() const noexcept { return features_; }

  double operator[](std::size_t p) const { return values_[p]; }
  double& operator[](std::size_t p) { return values_[p]; }

  // Exposes this field's values as a regressor to every field derived from
  // it. Used for F_t-measurable shifts that polynomials cannot represent.
  RandomField as_regressor(std::string label) const {
    RandomField out = *this;
    auto f = std::make_shared<Feature>();
    f->node = node_;
    f->label = std::move(label);
    f->values = values_;
    out.features_.push_back(std::move(f));
    return out;
  }

  // Same values, same measurability, state copied from `other`.
  RandomField with_state_of(const RandomField& other) const {
    RandomField out = *this;
    out.merge_state(other);
    return out;
  }

  // Pathwise map; measurability unchanged.
  template <class Fn>
  RandomField map(Fn&& fn) const {
    RandomField out = *this;
    for (auto& v : out.values_) v = fn(v);
    return out;
  }

  // Pathwise binary map; measurability is the join of both inputs.
  template <class Fn>
  static RandomField zip(const RandomField& a, const RandomField& b, Fn&& fn) {
    if (a.size() != b.size()) {
      throw std::invalid_argument("RandomField: path count mismatch");
    }
    RandomField out = a;
    out.merge_state(b);
    for (std::size_t p = 0; p < out.values_.size(); ++p) {
      out.values_[p] = fn(a.values_[p], b.values_[p]);
    }
    return out;
  }

  double mean() const {
    if (values_.empty()) return 0.0;
    double s = 0.0;
    for (double v : values_) s += v;
    return s / static_cast<double>(values_.size());
  }

  // Sample standard deviation (n - 1 denominator).
  double stddev() const {
    const std::size_t n = values_.size();
    if (n < 2) return 0.0;
    const double m = mean();
    double s = 0.0;
    for (double v : values_) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(n - 1));
  }

  double min() const { return *std::min_element(values_.begin(), values_.end()); }
  double max() const { return *std::max_element(values_.begin(), values_.end()); }

  bool is_constant() const {
    return std::all_of(values_.begin(), values_.end(),
                       [&](double v) { return v == values_.front(); });
  }

  void merge_state(const RandomField& other) {
    node_ = std::max(node_, other.node_);
    anchors_.insert(anchors_.end(), other.anchors_.begin(), other.anchors_.end());
    for (const auto& f : other.features_) {
      if (std::find(features_.begin(), features_.end(), f) == features_.end()) {
        features_.push_back(f);
      }
    }
    normalize();
  }

 private:
  void normalize() {
    std::sort(anchors_.begin(), anchors_.end());
    anchors_.erase(std::unique(anchors_.begin(), anchors_.end()), anchors_.end());
    // B_0 = 0 carries no information.
    anchors_.erase(std::remove(anchors_.begin(), anchors_.end(), std::size_t{0}),
                   anchors_.end());
    for (std::size_t a : anchors_) node_ = std::max(node_, a);
    for (const auto& f : features_) node_ = std::max(node_, f->node);
  }

  std::size_t node_ = 0;
  std::vector<double> values_;
  std::vector<std::size_t> anchors_;
  std::vector<FeaturePtr> features_;
};

inline RandomField operator+(const RandomField& a, const RandomField& b) {
  return RandomField::zip(a, b, std::plus<>{});
}
inline RandomField operator-(const RandomField& a, const RandomField& b) {
  return RandomField::zip(a, b, std::minus<>{});
}
inline RandomField operator*(const RandomField& a, const RandomField& b) {
  return RandomField::zip(a, b, std::multiplies<>{});
}
inline RandomField operator+(const RandomField& a, double c) {
  return a.map([c](double v) { return v + c; });
}
inline RandomField operator-(const RandomField& a, double c) {
  return a.map([c](double v) { return v - c; });
}
inline RandomField operator*(double c, const RandomField& a) {
  return a.map([c](double v) { return c * v; });
}
inline RandomField operator-(const RandomField& a) {
  return a.map([](double v) { return -v; });
}

}  // namespace horizon
