#pragma once

#include <cstddef>

#include "horizon/ensemble.hpp"
#include "horizon/parallel.hpp"
#include "horizon/regression.hpp"

namespace horizon {

struct SolveOptions {
  int picard_iters = 3;
  double z_clip = 10.0;
  bool operator==(const SolveOptions&) const = default;
};

// Everything an evaluation needs besides the measure and the claim. Holds
// the ensemble by reference; the ensemble must outlive the context.
struct Context {
  const PathEnsemble& ensemble;
  RegressionBasis basis{};
  SolveOptions solver{};
  Executor executor{};

  const TimeGrid& grid() const noexcept { return ensemble.grid(); }
  std::size_t paths() const noexcept { return ensemble.paths(); }
  double dt() const noexcept { return ensemble.grid().dt(); }
};

}  // namespace horizon
