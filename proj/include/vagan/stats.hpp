#pragma once

// Dataset statistics: the valence/arousal histogram and the frame/label audit.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vagan/labels.hpp"

namespace vagan {

// Uniform bins over [-1, 1]^2; bin i covers [lo_i, hi_i) except the last,
// which also takes +1. counts is indexed [valence_bin * bins + arousal_bin].
struct VaHistogram {
  std::size_t bins = 0;
  std::vector<std::size_t> counts;

  std::size_t at(std::size_t valence_bin, std::size_t arousal_bin) const {
    return counts[valence_bin * bins + arousal_bin];
  }
  std::size_t total() const;
};

std::size_t histogram_bin(double value, std::size_t bins);
VaHistogram va_histogram(std::span<const LabelTable> tables, std::size_t bins);

struct VideoAudit {
  std::string video_id;
  std::size_t frame_count = 0;
  std::size_t label_count = 0;
  std::vector<std::int64_t> orphan_labels;     // label rows without a frame file
  std::vector<std::int64_t> unlabeled_frames;  // frame files without a label row

  bool consistent() const { return orphan_labels.empty() && unlabeled_frames.empty(); }
};

struct AuditReport {
  std::vector<VideoAudit> videos;
  std::size_t total_frames = 0;
  std::size_t total_labels = 0;
  std::optional<std::size_t> pre_detection_frames;
  std::optional<double> loss_fraction;

  bool consistent() const;
};

// (pre - post) / pre.
double detection_loss_fraction(std::size_t pre_detection, std::size_t post_detection);

// pre_counts, when given, holds "<video_id> <frame count before detection>"
// lines; the loss fraction compares their sum with the frames on disk.
AuditReport audit_frames(const std::filesystem::path& frames_root,
                         const std::filesystem::path& labels_root,
                         const std::optional<std::filesystem::path>& pre_counts = std::nullopt);

}  // namespace vagan
