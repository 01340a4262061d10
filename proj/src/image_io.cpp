#include "vagan/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include <png.h>

#include "vagan/error.hpp"

namespace vagan {

namespace fs = std::filesystem;

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

Image read_png(const fs::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw Error(ErrorKind::io, "cannot open image " + path.string());
  png_byte header[8];
  if (std::fread(header, 1, 8, file.get()) != 8 || png_sig_cmp(header, 0, 8) != 0) {
    throw Error(ErrorKind::io, "not a PNG file: " + path.string());
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) throw Error(ErrorKind::io, "libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(ErrorKind::io, "libpng initialisation failed");
  }

  Image image;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::io, "corrupt PNG data in " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  image.width = png_get_image_width(png, info);
  image.height = png_get_image_height(png, info);
  if (png_get_rowbytes(png, info) != image.width * 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::io, "unsupported PNG layout in " + path.string());
  }
  image.pixels.resize(image.width * image.height * 3);
  rows.resize(image.height);
  for (std::size_t y = 0; y < image.height; ++y) rows[y] = image.pixels.data() + y * image.width * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

void write_png(const fs::path& path, const Image& image) {
  if (image.width == 0 || image.height == 0 ||
      image.pixels.size() != image.width * image.height * 3) {
    throw Error(ErrorKind::dimension, "cannot write malformed image " + path.string());
  }
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw Error(ErrorKind::io, "cannot write image " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) throw Error(ErrorKind::io, "libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(ErrorKind::io, "libpng initialisation failed");
  }
  std::vector<png_bytep> rows(image.height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::io, "failed encoding PNG " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t y = 0; y < image.height; ++y) {
    rows[y] = const_cast<png_bytep>(image.pixels.data() + y * image.width * 3);
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::vector<double> resample_bilinear(const Image& src, std::size_t width, std::size_t height) {
  if (src.width == 0 || src.height == 0 || width == 0 || height == 0) {
    throw Error(ErrorKind::dimension, "cannot resize an empty image");
  }
  std::vector<double> out(width * height * 3);
  const double sx = static_cast<double>(src.width) / static_cast<double>(width);
  const double sy = static_cast<double>(src.height) / static_cast<double>(height);
  const auto axis = [](double pos, std::size_t n, std::size_t& i0, std::size_t& i1, double& t) {
    pos = std::clamp(pos, 0.0, static_cast<double>(n - 1));
    i0 = static_cast<std::size_t>(std::floor(pos));
    i1 = std::min(i0 + 1, n - 1);
    t = pos - static_cast<double>(i0);
  };
  for (std::size_t y = 0; y < height; ++y) {
    std::size_t y0, y1;
    double ty;
    axis((static_cast<double>(y) + 0.5) * sy - 0.5, src.height, y0, y1, ty);
    for (std::size_t x = 0; x < width; ++x) {
      std::size_t x0, x1;
      double tx;
      axis((static_cast<double>(x) + 0.5) * sx - 0.5, src.width, x0, x1, tx);
      for (std::size_t c = 0; c < 3; ++c) {
        const double top = (1.0 - tx) * src.at(x0, y0, c) + tx * src.at(x1, y0, c);
        const double bottom = (1.0 - tx) * src.at(x0, y1, c) + tx * src.at(x1, y1, c);
        out[(y * width + x) * 3 + c] = (1.0 - ty) * top + ty * bottom;
      }
    }
  }
  return out;
}

Image resize_bilinear(const Image& src, std::size_t width, std::size_t height) {
  if (src.width == width && src.height == height) return src;
  const std::vector<double> values = resample_bilinear(src, width, height);
  Image out(width, height);
  for (std::size_t i = 0; i < values.size(); ++i) {
    out.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::floor(values[i] + 0.5), 0.0, 255.0));
  }
  return out;
}

void image_to_unit_range(const Image& image, std::span<double> out) {
  if (out.size() != image.pixels.size()) {
    throw Error(ErrorKind::dimension, "image buffer size mismatch");
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<double>(image.pixels[i]) / 127.5 - 1.0;
  }
}

Image unit_range_to_image(std::span<const double> hwc, std::size_t width, std::size_t height) {
  if (hwc.size() != width * height * 3) {
    throw Error(ErrorKind::dimension, "image buffer size mismatch");
  }
  Image out(width, height);
  for (std::size_t i = 0; i < hwc.size(); ++i) {
    const double v = std::floor((hwc[i] + 1.0) * 127.5 + 0.5);
    out.pixels[i] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
  }
  return out;
}

Image tile_grid(std::span<const Image> tiles, std::size_t rows, std::size_t cols) {
  if (tiles.size() != rows * cols || tiles.empty()) {
    throw Error(ErrorKind::dimension, "grid of " + std::to_string(rows) + "x" +
                                          std::to_string(cols) + " needs exactly " +
                                          std::to_string(rows * cols) + " tiles");
  }
  const std::size_t tw = tiles.front().width, th = tiles.front().height;
  Image grid(tw * cols, th * rows);
  for (std::size_t t = 0; t < tiles.size(); ++t) {
    const Image& tile = tiles[t];
    if (tile.width != tw || tile.height != th) {
      throw Error(ErrorKind::dimension, "grid tiles must share one size");
    }
    const std::size_t ox = (t % cols) * tw, oy = (t / cols) * th;
    for (std::size_t y = 0; y < th; ++y) {
      std::copy_n(tile.pixels.data() + y * tw * 3, tw * 3,
                  grid.pixels.data() + ((oy + y) * grid.width + ox) * 3);
    }
  }
  return grid;
}

}  // namespace vagan
