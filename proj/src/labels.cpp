#include "vagan/labels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vagan/error.hpp"

namespace vagan {

namespace fs = std::filesystem;

void LabelTable::validate() const {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const LabelRow& r = rows[i];
    if (r.frame_index < 1) {
      throw Error(ErrorKind::parse, video_id + ": frame index must be positive");
    }
    if (i > 0 && r.frame_index <= rows[i - 1].frame_index) {
      throw Error(ErrorKind::parse, video_id + ": frame indices must ascend strictly (index " +
                                        std::to_string(r.frame_index) + ")");
    }
    if (!(std::abs(r.valence) <= 1.0) || !(std::abs(r.arousal) <= 1.0)) {
      throw Error(ErrorKind::parse, video_id + ": label at frame " +
                                        std::to_string(r.frame_index) + " outside [-1, 1]");
    }
  }
}

void write_label_table(std::ostream& out, const LabelTable& table) {
  table.validate();
  char line[96];
  for (const LabelRow& r : table.rows) {
    const int n = std::snprintf(line, sizeof line, "%06lld %.6f %.6f\n",
                                static_cast<long long>(r.frame_index), r.valence, r.arousal);
    out.write(line, n);
  }
}

LabelTable read_label_table(std::istream& in, const std::string& video_id) {
  LabelTable table;
  table.video_id = video_id;
  std::string line;
  std::size_t line_no = 0;
  int columns = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<std::string> tokens;
    for (std::string t; fields >> t;) tokens.push_back(t);
    if (tokens.empty()) continue;
    const int this_columns = static_cast<int>(tokens.size());
    if ((this_columns != 2 && this_columns != 3) || (columns != 0 && this_columns != columns)) {
      throw Error(ErrorKind::parse, video_id + " line " + std::to_string(line_no) +
                                        ": malformed label line");
    }
    columns = this_columns;
    LabelRow row;
    try {
      std::size_t used = 0;
      if (columns == 3) {
        row.frame_index = std::stoll(tokens[0], &used);
        if (used != tokens[0].size()) throw std::invalid_argument("index");
      } else {
        row.frame_index = static_cast<std::int64_t>(table.rows.size()) + 1;
      }
      const std::size_t base = columns == 3 ? 1 : 0;
      row.valence = std::stod(tokens[base], &used);
      if (used != tokens[base].size()) throw std::invalid_argument("valence");
      row.arousal = std::stod(tokens[base + 1], &used);
      if (used != tokens[base + 1].size()) throw std::invalid_argument("arousal");
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::parse, video_id + " line " + std::to_string(line_no) +
                                        ": malformed label line");
    }
    table.rows.push_back(row);
  }
  table.validate();
  return table;
}

fs::path label_file_path(const fs::path& labels_root, const std::string& video_id) {
  return labels_root / (video_id + ".txt");
}

void save_label_table(const fs::path& labels_root, const LabelTable& table) {
  std::error_code ec;
  fs::create_directories(labels_root, ec);
  const fs::path path = label_file_path(labels_root, table.video_id);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write label file " + path.string());
  write_label_table(out, table);
  if (!out) throw Error(ErrorKind::io, "failed writing label file " + path.string());
}

LabelTable load_label_table(const fs::path& labels_root, const std::string& video_id) {
  const fs::path path = label_file_path(labels_root, video_id);
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open label file " + path.string());
  return read_label_table(in, video_id);
}

std::string frame_file_name(std::int64_t frame_index) {
  char name[32];
  std::snprintf(name, sizeof name, "%06lld.png", static_cast<long long>(frame_index));
  return name;
}

std::optional<std::int64_t> parse_frame_file_name(const std::string& file_name) {
  if (file_name.size() < 5 || !file_name.ends_with(".png")) return std::nullopt;
  const std::string stem = file_name.substr(0, file_name.size() - 4);
  if (stem.size() < 6 ||
      !std::all_of(stem.begin(), stem.end(), [](unsigned char c) { return std::isdigit(c); })) {
    return std::nullopt;
  }
  const std::int64_t index = std::stoll(stem);
  if (index < 1) return std::nullopt;
  return index;
}

std::vector<std::int64_t> list_frame_indices(const fs::path& video_dir) {
  if (!fs::is_directory(video_dir)) {
    throw Error(ErrorKind::io, "missing frame directory " + video_dir.string());
  }
  std::vector<std::int64_t> indices;
  for (const auto& entry : fs::directory_iterator(video_dir)) {
    if (!entry.is_regular_file()) continue;
    if (auto idx = parse_frame_file_name(entry.path().filename().string())) {
      indices.push_back(*idx);
    }
  }
  std::sort(indices.begin(), indices.end());
  return indices;
}

LabelTable build_label_table(const std::string& video_id, const AnnotationTrack& valence,
                             const AnnotationTrack& arousal,
                             const std::vector<std::int64_t>& frame_indices, int fps) {
  LabelTable table;
  table.video_id = video_id;
  if (frame_indices.empty()) return table;
  const auto total = static_cast<std::size_t>(
      *std::max_element(frame_indices.begin(), frame_indices.end()));
  const std::vector<double> v = scale_annotations(interpolate_to_frames(valence, total, fps));
  const std::vector<double> a = scale_annotations(interpolate_to_frames(arousal, total, fps));
  std::vector<std::int64_t> sorted = frame_indices;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (std::int64_t idx : sorted) {
    const auto k = static_cast<std::size_t>(idx - 1);
    table.rows.push_back({idx, v[k], a[k]});
  }
  return table;
}

}  // namespace vagan
