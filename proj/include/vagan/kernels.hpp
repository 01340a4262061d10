#pragma once

// Numeric kernels behind the autodiff layers. Everything is row-major; image
// batches are NHWC and convolution kernels are [k, k, C_in, C_out].
//
// Two implementations share one signature set: the OpenMP/GEMM kernels in
// vagan::kernels, and the plain serial loops in vagan::kernels::reference
// (kernels_reference.hpp) that the tests and benchmarks compare against.
//
// Forward kernels overwrite their output. Backward kernels accumulate (+=)
// into the gradient buffer they are given.
//
// Parallel loops never split a reduction across threads, so results are
// bitwise identical for any thread count.

#include <cstddef>
#include <span>

namespace vagan::kernels {

enum class Transpose { no, yes };

// C[m x n] (+)= op(A) * op(B) where op(A) is m x k and op(B) is k x n.
void gemm(Transpose trans_a, Transpose trans_b, std::size_t m, std::size_t n, std::size_t k,
          std::span<const double> a, std::span<const double> b, std::span<double> c,
          bool accumulate);

struct ConvGeometry {
  std::size_t batch = 0;
  std::size_t in_h = 0, in_w = 0, in_c = 0;
  std::size_t out_h = 0, out_w = 0, out_c = 0;
  std::size_t kernel = 0, stride = 1;
  std::size_t pad_top = 0, pad_left = 0;

  // SAME convention: out = ceil(in / stride),
  // pad_total = max((out - 1) * stride + kernel - in, 0), pad_top = pad_total / 2.
  static ConvGeometry same(std::size_t batch, std::size_t in_h, std::size_t in_w,
                           std::size_t in_c, std::size_t out_c, std::size_t kernel,
                           std::size_t stride);

  std::size_t input_elements() const noexcept { return batch * in_h * in_w * in_c; }
  std::size_t output_elements() const noexcept { return batch * out_h * out_w * out_c; }
  std::size_t kernel_elements() const noexcept { return kernel * kernel * in_c * out_c; }
  std::size_t patch_size() const noexcept { return kernel * kernel * in_c; }
};

void conv2d_forward(const ConvGeometry& geo, std::span<const double> input,
                    std::span<const double> kernel, std::span<double> output);
void conv2d_backward_input(const ConvGeometry& geo, std::span<const double> grad_output,
                           std::span<const double> kernel, std::span<double> grad_input);
void conv2d_backward_kernel(const ConvGeometry& geo, std::span<const double> input,
                            std::span<const double> grad_output, std::span<double> grad_kernel);

// Per-channel sums over all leading axes of a [..., channels] buffer.
void channel_sums(std::span<const double> x, std::size_t channels, std::span<double> sums);
// Per-channel sums of x * y.
void channel_dot(std::span<const double> x, std::span<const double> y, std::size_t channels,
                 std::span<double> sums);

}  // namespace vagan::kernels
