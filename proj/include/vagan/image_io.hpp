#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace vagan {

// 8-bit interleaved RGB raster.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // height * width * 3

  Image() = default;
  Image(std::size_t w, std::size_t h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(w * h * 3, fill) {}

  std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c) {
    return pixels[(y * width + x) * 3 + c];
  }
  std::uint8_t at(std::size_t x, std::size_t y, std::size_t c) const {
    return pixels[(y * width + x) * 3 + c];
  }

  friend bool operator==(const Image&, const Image&) = default;
};

// Decodes any PNG colour type to RGB8. Throws an io error on failure.
Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& image);

// Half-pixel-centred bilinear resampling with edge clamping. Returns channel
// values in [0, 255] without rounding, HWC order.
std::vector<double> resample_bilinear(const Image& src, std::size_t width, std::size_t height);
Image resize_bilinear(const Image& src, std::size_t width, std::size_t height);

// Writes p / 127.5 - 1 for every channel value into out (HWC order).
void image_to_unit_range(const Image& image, std::span<double> out);
// Inverse mapping (x + 1) * 127.5, rounded half up and clamped to [0, 255].
Image unit_range_to_image(std::span<const double> hwc, std::size_t width, std::size_t height);

// Tiles `rows * cols` equally sized images row-major into one raster.
Image tile_grid(std::span<const Image> tiles, std::size_t rows, std::size_t cols);

}  // namespace vagan
