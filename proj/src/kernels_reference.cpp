#include "vagan/kernels_reference.hpp"

#include <algorithm>
#include <cstdint>

#include "vagan/error.hpp"

namespace vagan::kernels::reference {

namespace {

void require_size(std::span<const double> buf, std::size_t expected, const char* what) {
  if (buf.size() != expected) {
    throw Error(ErrorKind::dimension, std::string(what) + " buffer size mismatch");
  }
}

struct Sizes {
  std::int64_t in_h, in_w, in_c, out_h, out_w, out_c, k, s, pt, pl;
};

Sizes sizes_of(const ConvGeometry& g) {
  return {static_cast<std::int64_t>(g.in_h),    static_cast<std::int64_t>(g.in_w),
          static_cast<std::int64_t>(g.in_c),    static_cast<std::int64_t>(g.out_h),
          static_cast<std::int64_t>(g.out_w),   static_cast<std::int64_t>(g.out_c),
          static_cast<std::int64_t>(g.kernel),  static_cast<std::int64_t>(g.stride),
          static_cast<std::int64_t>(g.pad_top), static_cast<std::int64_t>(g.pad_left)};
}

void check(const ConvGeometry& geo, std::span<const double> input, std::span<const double> kernel,
           std::span<const double> output) {
  if (geo.stride == 0 || geo.kernel == 0) {
    throw Error(ErrorKind::dimension, "convolution stride and kernel must be positive");
  }
  require_size(input, geo.input_elements(), "convolution input");
  require_size(kernel, geo.kernel_elements(), "convolution kernel");
  require_size(output, geo.output_elements(), "convolution output");
}

}  // namespace

void gemm(Transpose trans_a, Transpose trans_b, std::size_t m, std::size_t n, std::size_t k,
          std::span<const double> a, std::span<const double> b, std::span<double> c,
          bool accumulate) {
  require_size(a, m * k, "gemm A");
  require_size(b, k * n, "gemm B");
  require_size(c, m * n, "gemm C");
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double sum = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = trans_a == Transpose::yes ? a[p * m + i] : a[i * k + p];
        const double bv = trans_b == Transpose::yes ? b[j * k + p] : b[p * n + j];
        sum += av * bv;
      }
      c[i * n + j] = accumulate ? c[i * n + j] + sum : sum;
    }
  }
}

void conv2d_forward(const ConvGeometry& geo, std::span<const double> input,
                    std::span<const double> kernel, std::span<double> output) {
  check(geo, input, kernel, output);
  const Sizes z = sizes_of(geo);
  for (std::int64_t b = 0; b < static_cast<std::int64_t>(geo.batch); ++b) {
    for (std::int64_t oh = 0; oh < z.out_h; ++oh) {
      for (std::int64_t ow = 0; ow < z.out_w; ++ow) {
        for (std::int64_t co = 0; co < z.out_c; ++co) {
          double sum = 0.0;
          for (std::int64_t kh = 0; kh < z.k; ++kh) {
            const std::int64_t ih = oh * z.s + kh - z.pt;
            if (ih < 0 || ih >= z.in_h) continue;
            for (std::int64_t kw = 0; kw < z.k; ++kw) {
              const std::int64_t iw = ow * z.s + kw - z.pl;
              if (iw < 0 || iw >= z.in_w) continue;
              for (std::int64_t ci = 0; ci < z.in_c; ++ci) {
                sum += input[((b * z.in_h + ih) * z.in_w + iw) * z.in_c + ci] *
                       kernel[((kh * z.k + kw) * z.in_c + ci) * z.out_c + co];
              }
            }
          }
          output[((b * z.out_h + oh) * z.out_w + ow) * z.out_c + co] = sum;
        }
      }
    }
  }
}

void conv2d_backward_input(const ConvGeometry& geo, std::span<const double> grad_output,
                           std::span<const double> kernel, std::span<double> grad_input) {
  check(geo, grad_input, kernel, grad_output);
  const Sizes z = sizes_of(geo);
  for (std::int64_t b = 0; b < static_cast<std::int64_t>(geo.batch); ++b) {
    for (std::int64_t oh = 0; oh < z.out_h; ++oh) {
      for (std::int64_t ow = 0; ow < z.out_w; ++ow) {
        for (std::int64_t co = 0; co < z.out_c; ++co) {
          const double g = grad_output[((b * z.out_h + oh) * z.out_w + ow) * z.out_c + co];
          for (std::int64_t kh = 0; kh < z.k; ++kh) {
            const std::int64_t ih = oh * z.s + kh - z.pt;
            if (ih < 0 || ih >= z.in_h) continue;
            for (std::int64_t kw = 0; kw < z.k; ++kw) {
              const std::int64_t iw = ow * z.s + kw - z.pl;
              if (iw < 0 || iw >= z.in_w) continue;
              for (std::int64_t ci = 0; ci < z.in_c; ++ci) {
                grad_input[((b * z.in_h + ih) * z.in_w + iw) * z.in_c + ci] +=
                    g * kernel[((kh * z.k + kw) * z.in_c + ci) * z.out_c + co];
              }
            }
          }
        }
      }
    }
  }
}

void conv2d_backward_kernel(const ConvGeometry& geo, std::span<const double> input,
                            std::span<const double> grad_output, std::span<double> grad_kernel) {
  check(geo, input, grad_kernel, grad_output);
  const Sizes z = sizes_of(geo);
  for (std::int64_t kh = 0; kh < z.k; ++kh) {
    for (std::int64_t kw = 0; kw < z.k; ++kw) {
      for (std::int64_t ci = 0; ci < z.in_c; ++ci) {
        for (std::int64_t co = 0; co < z.out_c; ++co) {
          double sum = 0.0;
          for (std::int64_t b = 0; b < static_cast<std::int64_t>(geo.batch); ++b) {
            for (std::int64_t oh = 0; oh < z.out_h; ++oh) {
              const std::int64_t ih = oh * z.s + kh - z.pt;
              if (ih < 0 || ih >= z.in_h) continue;
              for (std::int64_t ow = 0; ow < z.out_w; ++ow) {
                const std::int64_t iw = ow * z.s + kw - z.pl;
                if (iw < 0 || iw >= z.in_w) continue;
                sum += input[((b * z.in_h + ih) * z.in_w + iw) * z.in_c + ci] *
                       grad_output[((b * z.out_h + oh) * z.out_w + ow) * z.out_c + co];
              }
            }
          }
          grad_kernel[((kh * z.k + kw) * z.in_c + ci) * z.out_c + co] += sum;
        }
      }
    }
  }
}

void channel_sums(std::span<const double> x, std::size_t channels, std::span<double> sums) {
  require_size(sums, channels, "channel sums");
  std::fill(sums.begin(), sums.end(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) sums[i % channels] += x[i];
}

void channel_dot(std::span<const double> x, std::span<const double> y, std::size_t channels,
                 std::span<double> sums) {
  require_size(sums, channels, "channel sums");
  require_size(y, x.size(), "channel dot operand");
  std::fill(sums.begin(), sums.end(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) sums[i % channels] += x[i] * y[i];
}

}  // namespace vagan::kernels::reference
