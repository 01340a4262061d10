#include "vagan/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <exception>

#include "vagan/dataset.hpp"
#include "vagan/error.hpp"
#include "vagan/labels.hpp"

namespace vagan {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kFrameStream = 0x5f4e41;
constexpr int kSupersample = 3;

using Rgb = std::array<double, 3>;

double quantize(double v) { return std::round(v * 1e6) / 1e6; }

// Parameters of one rendered face in unit coordinates (image spans [-1, 1]).
struct Face {
  double cx, cy, scale;
  Rgb background, skin, eye, pupil, lips;
  double mouth, eye_open;
};

Rgb shade(const Face& f, double x, double y) {
  const double u = (x - f.cx) / f.scale;
  const double v = (y - f.cy) / f.scale;
  if ((u * u) / (0.75 * 0.75) + (v * v) / (0.9 * 0.9) > 1.0) return f.background;

  const double eye_ry = 0.02 + 0.13 * (f.eye_open + 1.0) / 2.0;
  for (double ex : {-0.32, 0.32}) {
    const double du = u - ex, dv = v + 0.25;
    if ((du * du) / (0.16 * 0.16) + (dv * dv) / (eye_ry * eye_ry) <= 1.0) {
      return du * du + dv * dv <= 0.06 * 0.06 ? f.pupil : f.eye;
    }
  }

  constexpr double half_width = 0.36;
  if (std::abs(u) <= half_width) {
    const double t = u / half_width;
    const double centre = 0.45 + 0.22 * f.mouth * (1.0 - t * t);
    if (std::abs(v - centre) <= 0.05) return f.lips;
  }
  return f.skin;
}

Rgb jitter(Rng& rng, Rgb base, double amount) {
  for (double& c : base) c = std::clamp(c + uniform(rng, -amount, amount), 0.0, 255.0);
  return base;
}

}  // namespace

Image render_face(double mouth_curvature, double eye_aperture, std::size_t size, Rng& rng) {
  if (size == 0) throw Error(ErrorKind::config, "image size must be positive");
  if (!(std::abs(mouth_curvature) <= 1.0 && std::abs(eye_aperture) <= 1.0)) {
    throw Error(ErrorKind::config, "face parameters must lie in [-1, 1]");
  }
  Face f;
  f.cx = uniform(rng, -0.05, 0.05);
  f.cy = uniform(rng, -0.05, 0.05);
  f.scale = uniform(rng, 0.95, 1.05);
  f.background = jitter(rng, {60, 70, 90}, 30);
  f.skin = jitter(rng, {215, 170, 140}, 25);
  f.eye = jitter(rng, {245, 245, 245}, 8);
  f.pupil = jitter(rng, {40, 30, 25}, 15);
  f.lips = jitter(rng, {150, 40, 50}, 20);
  f.mouth = mouth_curvature;
  f.eye_open = eye_aperture;

  Image img(size, size);
  const double n = static_cast<double>(size);
  for (std::size_t py = 0; py < size; ++py) {
    for (std::size_t px = 0; px < size; ++px) {
      Rgb acc{0, 0, 0};
      for (int sy = 0; sy < kSupersample; ++sy) {
        for (int sx = 0; sx < kSupersample; ++sx) {
          const double x = ((static_cast<double>(px) + (sx + 0.5) / kSupersample) / n) * 2.0 - 1.0;
          const double y = ((static_cast<double>(py) + (sy + 0.5) / kSupersample) / n) * 2.0 - 1.0;
          const Rgb c = shade(f, x, y);
          for (int k = 0; k < 3; ++k) acc[k] += c[k];
        }
      }
      for (std::size_t k = 0; k < 3; ++k) {
        const double mean = acc[k] / (kSupersample * kSupersample);
        img.at(px, py, k) = static_cast<std::uint8_t>(std::clamp(std::floor(mean + 0.5), 0.0, 255.0));
      }
    }
  }
  return img;
}

std::string synth_video_id(std::size_t ordinal) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "synth%03zu", ordinal);
  return buf;
}

SynthSummary synth_dataset(const SynthConfig& cfg, const fs::path& out_dir) {
  if (cfg.count == 0) throw Error(ErrorKind::config, "synth count must be at least 1");
  if (cfg.image_size == 0) throw Error(ErrorKind::config, "image size must be positive");
  if (cfg.frames_per_video == 0) throw Error(ErrorKind::config, "frames per video must be positive");

  const fs::path frames_root = out_dir / "frames";
  const fs::path labels_root = out_dir / "labels";
  std::error_code ec;
  fs::create_directories(frames_root, ec);
  if (!ec) fs::create_directories(labels_root, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create " + out_dir.string() + ": " + ec.message());

  const std::size_t videos = (cfg.count + cfg.frames_per_video - 1) / cfg.frames_per_video;
  SynthSummary summary;
  summary.frames = cfg.count;
  std::vector<LabelTable> tables(videos);
  for (std::size_t v = 0; v < videos; ++v) {
    const std::string id = synth_video_id(v);
    summary.video_ids.push_back(id);
    tables[v].video_id = id;
    fs::create_directories(frames_root / id, ec);
    if (ec) throw Error(ErrorKind::io, "cannot create frame directory for " + id);
  }

  std::vector<LabelRow> rows(cfg.count);
  std::exception_ptr failure;
  const auto n = static_cast<std::int64_t>(cfg.count);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    Rng rng(derive_seed(cfg.seed, kFrameStream, k));
    const double valence = quantize(uniform(rng, -1.0, 1.0));
    const double arousal = quantize(uniform(rng, -1.0, 1.0));
    const auto frame_index = static_cast<std::int64_t>(k % cfg.frames_per_video) + 1;
    rows[k] = {frame_index, valence, arousal};
    try {
      const Image img = render_face(valence, arousal, cfg.image_size, rng);
      write_png(frames_root / synth_video_id(k / cfg.frames_per_video) / frame_file_name(frame_index),
                img);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  for (std::size_t k = 0; k < cfg.count; ++k) tables[k / cfg.frames_per_video].rows.push_back(rows[k]);
  for (const auto& t : tables) save_label_table(labels_root, t);

  const std::size_t test = videos > 1 ? std::min(cfg.test_videos, videos - 1) : 0;
  summary.test_ids.assign(summary.video_ids.end() - static_cast<std::ptrdiff_t>(test),
                          summary.video_ids.end());
  write_id_list(out_dir / "test_split.txt", summary.test_ids);
  return summary;
}

}  // namespace vagan
