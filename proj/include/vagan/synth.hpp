#pragma once

// Procedural face-like frames with known valence/arousal, laid out like a
// real corpus: frames/<vid>/<index>.png, labels/<vid>.txt, test_split.txt.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vagan/image_io.hpp"
#include "vagan/random.hpp"

namespace vagan {

// mouth curvature in [-1, 1] (valence; positive smiles), eye aperture in
// [-1, 1] (arousal; 0 is half open). Nuisance appearance comes from rng.
Image render_face(double mouth_curvature, double eye_aperture, std::size_t size, Rng& rng);

struct SynthConfig {
  std::size_t count = 1000;
  std::size_t image_size = 64;
  std::size_t frames_per_video = 100;
  // Trailing videos listed in test_split.txt, capped at videos - 1.
  std::size_t test_videos = 1;
  std::uint64_t seed = 1;
};

struct SynthSummary {
  std::vector<std::string> video_ids;
  std::vector<std::string> test_ids;
  std::size_t frames = 0;
};

std::string synth_video_id(std::size_t ordinal);

SynthSummary synth_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace vagan
