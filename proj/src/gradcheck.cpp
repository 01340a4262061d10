#include "vagan/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vagan/error.hpp"
#include "vagan/random.hpp"

namespace vagan {

double GradCheckReport::max_rel_error() const {
  double worst = 0.0;
  for (const auto& e : entries) worst = std::max(worst, e.max_rel_error);
  return worst;
}

namespace {

double evaluate(const ScalarGraphFn& fn, ParameterSet& params) {
  Graph g;
  return fn(g, params).value().item();
}

std::vector<std::size_t> pick_indices(std::size_t size, const GradCheckOptions& opts,
                                      std::uint64_t salt) {
  std::vector<std::size_t> idx(size);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (opts.max_entries_per_parameter == 0 || opts.max_entries_per_parameter >= size) return idx;
  Rng rng(derive_seed(opts.seed, salt));
  for (std::size_t i = 0; i < opts.max_entries_per_parameter; ++i) {
    const auto j = static_cast<std::size_t>(
        uniform_int(rng, static_cast<std::int64_t>(i), static_cast<std::int64_t>(size - 1)));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(opts.max_entries_per_parameter);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

GradCheckReport grad_check(const ScalarGraphFn& fn, ParameterSet& params,
                           const GradCheckOptions& opts) {
  if (!(opts.step > 0.0)) throw Error(ErrorKind::config, "gradient check step must be positive");

  params.zero_grad();
  {
    Graph g;
    Var out = fn(g, params);
    g.backward(out);
  }

  GradCheckReport report;
  std::uint64_t salt = 0;
  for (auto& [name, p] : params.parameters()) {
    const Tensor backprop = p.grad;
    GradCheckEntry entry;
    entry.name = name;
    double scale = 0.0;
    for (std::size_t i : pick_indices(p.value.size(), opts, salt++)) {
      const double saved = p.value[i];
      p.value[i] = saved + opts.step;
      const double up = evaluate(fn, params);
      p.value[i] = saved - opts.step;
      const double down = evaluate(fn, params);
      p.value[i] = saved;
      const double fd = (up - down) / (2.0 * opts.step);
      entry.max_abs_error = std::max(entry.max_abs_error, std::abs(fd - backprop[i]));
      scale = std::max({scale, std::abs(fd), std::abs(backprop[i])});
      ++entry.checked;
    }
    entry.max_rel_error = scale > 0.0 ? entry.max_abs_error / scale : entry.max_abs_error;
    report.entries.push_back(entry);
  }
  params.zero_grad();
  return report;
}

}  // namespace vagan
