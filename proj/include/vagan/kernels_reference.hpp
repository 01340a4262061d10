#pragma once

// Serial textbook loops with the same contracts as vagan/kernels.hpp.
// Used as the independent oracle in tests and as the baseline in benchmarks.

#include "vagan/kernels.hpp"

namespace vagan::kernels::reference {

void gemm(Transpose trans_a, Transpose trans_b, std::size_t m, std::size_t n, std::size_t k,
          std::span<const double> a, std::span<const double> b, std::span<double> c,
          bool accumulate);

void conv2d_forward(const ConvGeometry& geo, std::span<const double> input,
                    std::span<const double> kernel, std::span<double> output);
void conv2d_backward_input(const ConvGeometry& geo, std::span<const double> grad_output,
                           std::span<const double> kernel, std::span<double> grad_input);
void conv2d_backward_kernel(const ConvGeometry& geo, std::span<const double> input,
                            std::span<const double> grad_output, std::span<double> grad_kernel);

void channel_sums(std::span<const double> x, std::size_t channels, std::span<double> sums);
void channel_dot(std::span<const double> x, std::span<const double> y, std::size_t channels,
                 std::span<double> sums);

}  // namespace vagan::kernels::reference
