#include "vagan/kernels.hpp"

#include <algorithm>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "vagan/error.hpp"

namespace vagan::kernels {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using MatrixMap = Eigen::Map<RowMatrix>;

// Upper bound on the im2col scratch buffer, in doubles (128 MiB).
constexpr std::size_t kMaxPatchElements = std::size_t{1} << 24;

void require_size(std::span<const double> buf, std::size_t expected, const char* what) {
  if (buf.size() != expected) {
    throw Error(ErrorKind::dimension, std::string(what) + " buffer holds " +
                                          std::to_string(buf.size()) + " values, expected " +
                                          std::to_string(expected));
  }
}

void check_geometry(const ConvGeometry& geo, std::span<const double> input,
                    std::span<const double> kernel, std::span<const double> output) {
  if (geo.stride == 0 || geo.kernel == 0) {
    throw Error(ErrorKind::dimension, "convolution stride and kernel must be positive");
  }
  require_size(input, geo.input_elements(), "convolution input");
  require_size(kernel, geo.kernel_elements(), "convolution kernel");
  require_size(output, geo.output_elements(), "convolution output");
}

std::size_t images_per_chunk(const ConvGeometry& geo) {
  const std::size_t per_image = geo.out_h * geo.out_w * geo.patch_size();
  return std::clamp<std::size_t>(kMaxPatchElements / std::max<std::size_t>(per_image, 1), 1,
                                 geo.batch);
}

// Rows are (image, oh, ow); columns are (kh, kw, ci), matching the kernel's
// [k, k, C_in, C_out] layout read as a (k*k*C_in) x C_out matrix.
void im2col(const ConvGeometry& geo, const double* input, std::size_t first, std::size_t count,
            double* patches) {
  const std::size_t patch = geo.patch_size();
  const auto images = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(static)
  for (std::int64_t local = 0; local < images; ++local) {
    const std::size_t b = first + static_cast<std::size_t>(local);
    const double* image = input + b * geo.in_h * geo.in_w * geo.in_c;
    for (std::size_t oh = 0; oh < geo.out_h; ++oh) {
      for (std::size_t ow = 0; ow < geo.out_w; ++ow) {
        const std::size_t row = (static_cast<std::size_t>(local) * geo.out_h + oh) * geo.out_w + ow;
        double* dst = patches + row * patch;
        for (std::size_t kh = 0; kh < geo.kernel; ++kh) {
          const auto ih = static_cast<std::int64_t>(oh * geo.stride + kh) -
                          static_cast<std::int64_t>(geo.pad_top);
          for (std::size_t kw = 0; kw < geo.kernel; ++kw, dst += geo.in_c) {
            const auto iw = static_cast<std::int64_t>(ow * geo.stride + kw) -
                            static_cast<std::int64_t>(geo.pad_left);
            if (ih < 0 || iw < 0 || ih >= static_cast<std::int64_t>(geo.in_h) ||
                iw >= static_cast<std::int64_t>(geo.in_w)) {
              std::fill(dst, dst + geo.in_c, 0.0);
            } else {
              const double* src =
                  image + (static_cast<std::size_t>(ih) * geo.in_w + static_cast<std::size_t>(iw)) *
                              geo.in_c;
              std::copy(src, src + geo.in_c, dst);
            }
          }
        }
      }
    }
  }
}

// Scatter-add of patch gradients back onto the input grid. One thread per
// image, so no two threads touch the same output element.
void col2im_add(const ConvGeometry& geo, const double* patches, std::size_t first,
                std::size_t count, double* grad_input) {
  const std::size_t patch = geo.patch_size();
  const auto images = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(static)
  for (std::int64_t local = 0; local < images; ++local) {
    const std::size_t b = first + static_cast<std::size_t>(local);
    double* image = grad_input + b * geo.in_h * geo.in_w * geo.in_c;
    for (std::size_t oh = 0; oh < geo.out_h; ++oh) {
      for (std::size_t ow = 0; ow < geo.out_w; ++ow) {
        const std::size_t row = (static_cast<std::size_t>(local) * geo.out_h + oh) * geo.out_w + ow;
        const double* src = patches + row * patch;
        for (std::size_t kh = 0; kh < geo.kernel; ++kh) {
          const auto ih = static_cast<std::int64_t>(oh * geo.stride + kh) -
                          static_cast<std::int64_t>(geo.pad_top);
          for (std::size_t kw = 0; kw < geo.kernel; ++kw, src += geo.in_c) {
            const auto iw = static_cast<std::int64_t>(ow * geo.stride + kw) -
                            static_cast<std::int64_t>(geo.pad_left);
            if (ih < 0 || iw < 0 || ih >= static_cast<std::int64_t>(geo.in_h) ||
                iw >= static_cast<std::int64_t>(geo.in_w)) {
              continue;
            }
            double* dst =
                image + (static_cast<std::size_t>(ih) * geo.in_w + static_cast<std::size_t>(iw)) *
                            geo.in_c;
            for (std::size_t c = 0; c < geo.in_c; ++c) dst[c] += src[c];
          }
        }
      }
    }
  }
}

}  // namespace

ConvGeometry ConvGeometry::same(std::size_t batch, std::size_t in_h, std::size_t in_w,
                                std::size_t in_c, std::size_t out_c, std::size_t kernel,
                                std::size_t stride) {
  if (stride == 0) throw Error(ErrorKind::dimension, "convolution stride must be positive");
  if (kernel == 0) throw Error(ErrorKind::dimension, "convolution kernel must be positive");
  ConvGeometry geo;
  geo.batch = batch;
  geo.in_h = in_h;
  geo.in_w = in_w;
  geo.in_c = in_c;
  geo.out_c = out_c;
  geo.kernel = kernel;
  geo.stride = stride;
  geo.out_h = (in_h + stride - 1) / stride;
  geo.out_w = (in_w + stride - 1) / stride;
  const auto pad_total = [&](std::size_t in, std::size_t out) -> std::size_t {
    const std::size_t covered = (out - 1) * stride + kernel;
    return covered > in ? covered - in : 0;
  };
  geo.pad_top = pad_total(in_h, geo.out_h) / 2;
  geo.pad_left = pad_total(in_w, geo.out_w) / 2;
  return geo;
}

void gemm(Transpose trans_a, Transpose trans_b, std::size_t m, std::size_t n, std::size_t k,
          std::span<const double> a, std::span<const double> b, std::span<double> c,
          bool accumulate) {
  require_size(a, m * k, "gemm A");
  require_size(b, k * n, "gemm B");
  require_size(c, m * n, "gemm C");
  const auto rows = static_cast<Eigen::Index>(m);
  const auto cols = static_cast<Eigen::Index>(n);
  const auto inner = static_cast<Eigen::Index>(k);
  MatrixMap out(c.data(), rows, cols);
  if (!accumulate) out.setZero();
  const bool ta = trans_a == Transpose::yes;
  const bool tb = trans_b == Transpose::yes;
  if (!ta && !tb) {
    out.noalias() += ConstMatrixMap(a.data(), rows, inner) * ConstMatrixMap(b.data(), inner, cols);
  } else if (!ta && tb) {
    out.noalias() +=
        ConstMatrixMap(a.data(), rows, inner) * ConstMatrixMap(b.data(), cols, inner).transpose();
  } else if (ta && !tb) {
    out.noalias() +=
        ConstMatrixMap(a.data(), inner, rows).transpose() * ConstMatrixMap(b.data(), inner, cols);
  } else {
    out.noalias() += ConstMatrixMap(a.data(), inner, rows).transpose() *
                     ConstMatrixMap(b.data(), cols, inner).transpose();
  }
}

void conv2d_forward(const ConvGeometry& geo, std::span<const double> input,
                    std::span<const double> kernel, std::span<double> output) {
  check_geometry(geo, input, kernel, output);
  const std::size_t chunk = images_per_chunk(geo);
  const std::size_t spatial = geo.out_h * geo.out_w;
  const std::size_t patch = geo.patch_size();
  std::vector<double> patches(chunk * spatial * patch);
  const ConstMatrixMap weights(kernel.data(), static_cast<Eigen::Index>(patch),
                               static_cast<Eigen::Index>(geo.out_c));
  for (std::size_t first = 0; first < geo.batch; first += chunk) {
    const std::size_t count = std::min(chunk, geo.batch - first);
    const auto rows = static_cast<Eigen::Index>(count * spatial);
    im2col(geo, input.data(), first, count, patches.data());
    MatrixMap out(output.data() + first * spatial * geo.out_c, rows,
                  static_cast<Eigen::Index>(geo.out_c));
    out.noalias() = ConstMatrixMap(patches.data(), rows, static_cast<Eigen::Index>(patch)) * weights;
  }
}

void conv2d_backward_input(const ConvGeometry& geo, std::span<const double> grad_output,
                           std::span<const double> kernel, std::span<double> grad_input) {
  check_geometry(geo, grad_input, kernel, grad_output);
  const std::size_t chunk = images_per_chunk(geo);
  const std::size_t spatial = geo.out_h * geo.out_w;
  const std::size_t patch = geo.patch_size();
  std::vector<double> patches(chunk * spatial * patch);
  const ConstMatrixMap weights(kernel.data(), static_cast<Eigen::Index>(patch),
                               static_cast<Eigen::Index>(geo.out_c));
  for (std::size_t first = 0; first < geo.batch; first += chunk) {
    const std::size_t count = std::min(chunk, geo.batch - first);
    const auto rows = static_cast<Eigen::Index>(count * spatial);
    MatrixMap dpatches(patches.data(), rows, static_cast<Eigen::Index>(patch));
    dpatches.noalias() = ConstMatrixMap(grad_output.data() + first * spatial * geo.out_c, rows,
                                        static_cast<Eigen::Index>(geo.out_c)) *
                         weights.transpose();
    col2im_add(geo, patches.data(), first, count, grad_input.data());
  }
}

void conv2d_backward_kernel(const ConvGeometry& geo, std::span<const double> input,
                            std::span<const double> grad_output, std::span<double> grad_kernel) {
  check_geometry(geo, input, grad_kernel, grad_output);
  const std::size_t chunk = images_per_chunk(geo);
  const std::size_t spatial = geo.out_h * geo.out_w;
  const std::size_t patch = geo.patch_size();
  std::vector<double> patches(chunk * spatial * patch);
  MatrixMap dweights(grad_kernel.data(), static_cast<Eigen::Index>(patch),
                     static_cast<Eigen::Index>(geo.out_c));
  for (std::size_t first = 0; first < geo.batch; first += chunk) {
    const std::size_t count = std::min(chunk, geo.batch - first);
    const auto rows = static_cast<Eigen::Index>(count * spatial);
    im2col(geo, input.data(), first, count, patches.data());
    dweights.noalias() +=
        ConstMatrixMap(patches.data(), rows, static_cast<Eigen::Index>(patch)).transpose() *
        ConstMatrixMap(grad_output.data() + first * spatial * geo.out_c, rows,
                       static_cast<Eigen::Index>(geo.out_c));
  }
}

namespace {
// Channels are processed in blocks so each thread walks rows contiguously.
constexpr std::size_t kChannelBlock = 16;
}  // namespace

void channel_sums(std::span<const double> x, std::size_t channels, std::span<double> sums) {
  require_size(sums, channels, "channel sums");
  if (channels == 0 || x.size() % channels != 0) {
    throw Error(ErrorKind::dimension, "buffer size is not a multiple of the channel count");
  }
  const std::size_t rows = x.size() / channels;
  const auto blocks = static_cast<std::int64_t>((channels + kChannelBlock - 1) / kChannelBlock);
#pragma omp parallel for schedule(static)
  for (std::int64_t block = 0; block < blocks; ++block) {
    const std::size_t c0 = static_cast<std::size_t>(block) * kChannelBlock;
    const std::size_t c1 = std::min(channels, c0 + kChannelBlock);
    double acc[kChannelBlock] = {};
    for (std::size_t r = 0; r < rows; ++r) {
      const double* row = x.data() + r * channels;
      for (std::size_t c = c0; c < c1; ++c) acc[c - c0] += row[c];
    }
    for (std::size_t c = c0; c < c1; ++c) sums[c] = acc[c - c0];
  }
}

void channel_dot(std::span<const double> x, std::span<const double> y, std::size_t channels,
                 std::span<double> sums) {
  require_size(sums, channels, "channel sums");
  require_size(y, x.size(), "channel dot operand");
  if (channels == 0 || x.size() % channels != 0) {
    throw Error(ErrorKind::dimension, "buffer size is not a multiple of the channel count");
  }
  const std::size_t rows = x.size() / channels;
  const auto blocks = static_cast<std::int64_t>((channels + kChannelBlock - 1) / kChannelBlock);
#pragma omp parallel for schedule(static)
  for (std::int64_t block = 0; block < blocks; ++block) {
    const std::size_t c0 = static_cast<std::size_t>(block) * kChannelBlock;
    const std::size_t c1 = std::min(channels, c0 + kChannelBlock);
    double acc[kChannelBlock] = {};
    for (std::size_t r = 0; r < rows; ++r) {
      const double* xr = x.data() + r * channels;
      const double* yr = y.data() + r * channels;
      for (std::size_t c = c0; c < c1; ++c) acc[c - c0] += xr[c] * yr[c];
    }
    for (std::size_t c = c0; c < c1; ++c) sums[c] = acc[c - c0];
  }
}

}  // namespace vagan::kernels
