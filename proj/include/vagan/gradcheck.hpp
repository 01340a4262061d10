#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vagan/autodiff.hpp"

namespace vagan {

struct GradCheckOptions {
  double step = 1e-3;
  // 0 checks every element; otherwise a seeded random subset per parameter.
  std::size_t max_entries_per_parameter = 0;
  std::uint64_t seed = 0;
};

struct GradCheckEntry {
  std::string name;
  std::size_t checked = 0;
  double max_abs_error = 0.0;
  // max |fd - bp| over checked elements divided by the larger of
  // max |fd| and max |bp| over the same elements.
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;

  double max_rel_error() const;
  bool passed(double tolerance) const { return max_rel_error() < tolerance; }
};

// Builds a scalar graph from the parameter set. Called once for the
// backprop gradient and twice per checked element for central differences,
// so it must be deterministic (reseed any Rng inside it).
using ScalarGraphFn = std::function<Var(Graph&, ParameterSet&)>;

GradCheckReport grad_check(const ScalarGraphFn& fn, ParameterSet& params,
                           const GradCheckOptions& opts = {});

}  // namespace vagan
