#pragma once

// Per-video label files and the frame directory naming scheme:
//   <frames_root>/<video_id>/<6-digit index>.png
//   <labels_root>/<video_id>.txt with lines "<6-digit index> <valence> <arousal>"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vagan/annotation.hpp"

namespace vagan {

struct LabelRow {
  std::int64_t frame_index = 0;
  double valence = 0.0;
  double arousal = 0.0;

  friend bool operator==(const LabelRow&, const LabelRow&) = default;
};

// Rows ascend strictly by frame index; values lie in [-1, 1].
struct LabelTable {
  std::string video_id;
  std::vector<LabelRow> rows;

  void validate() const;
};

void write_label_table(std::ostream& out, const LabelTable& table);
// Reads three-column files, or legacy two-column "<valence> <arousal>" files
// whose rows get ordinal indices 1..N.
LabelTable read_label_table(std::istream& in, const std::string& video_id);

std::filesystem::path label_file_path(const std::filesystem::path& labels_root,
                                      const std::string& video_id);
void save_label_table(const std::filesystem::path& labels_root, const LabelTable& table);
LabelTable load_label_table(const std::filesystem::path& labels_root, const std::string& video_id);

std::string frame_file_name(std::int64_t frame_index);
std::optional<std::int64_t> parse_frame_file_name(const std::string& file_name);
// Sorted frame indices of the PNG files in a video directory.
std::vector<std::int64_t> list_frame_indices(const std::filesystem::path& video_dir);

// Interpolates both tracks over 1..max(frame_indices), scales to [-1, 1] and
// keeps the rows of the given (detected) frames.
LabelTable build_label_table(const std::string& video_id, const AnnotationTrack& valence,
                             const AnnotationTrack& arousal,
                             const std::vector<std::int64_t>& frame_indices, int fps);

}  // namespace vagan
