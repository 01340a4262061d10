#pragma once

// Finite-difference checks of every layer, every loss and both full networks
// at a small spatial size.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "vagan/gradcheck.hpp"

namespace vagan {

struct SuiteOptions {
  // Square input size for the image layers and networks (16 or 32).
  std::size_t size = 16;
  std::uint64_t seed = 7;
  double step = 1e-5;
  // Per-parameter entry cap for the network checks (0 = every entry).
  std::size_t network_entries = 0;
};

struct SuiteResult {
  std::string name;
  GradCheckReport report;
};

std::vector<SuiteResult> run_gradcheck_suite(const SuiteOptions& opts);

// Individual checks; each returns the report for one scalar graph.
GradCheckReport check_discriminator_loss(std::size_t size, std::uint64_t seed,
                                         const GradCheckOptions& opts);
GradCheckReport check_generator_pipeline(std::size_t size, std::uint64_t seed,
                                         const GradCheckOptions& opts);

}  // namespace vagan
