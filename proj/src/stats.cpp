#include "vagan/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "vagan/error.hpp"

namespace vagan {

namespace fs = std::filesystem;

std::size_t VaHistogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

std::size_t histogram_bin(double value, std::size_t bins) {
  if (!(value >= -1.0 && value <= 1.0)) {
    throw Error(ErrorKind::dimension, "histogram value outside [-1, 1]");
  }
  const auto bin = static_cast<std::size_t>(std::floor((value + 1.0) / 2.0 * static_cast<double>(bins)));
  return std::min(bin, bins - 1);
}

VaHistogram va_histogram(std::span<const LabelTable> tables, std::size_t bins) {
  if (bins == 0) throw Error(ErrorKind::config, "histogram needs at least one bin");
  VaHistogram hist{bins, std::vector<std::size_t>(bins * bins, 0)};
  for (const auto& table : tables) {
    for (const auto& row : table.rows) {
      ++hist.counts[histogram_bin(row.valence, bins) * bins + histogram_bin(row.arousal, bins)];
    }
  }
  return hist;
}

bool AuditReport::consistent() const {
  return std::all_of(videos.begin(), videos.end(), [](const VideoAudit& v) { return v.consistent(); });
}

double detection_loss_fraction(std::size_t pre_detection, std::size_t post_detection) {
  if (pre_detection == 0) throw Error(ErrorKind::config, "pre-detection frame count is zero");
  if (post_detection > pre_detection) {
    throw Error(ErrorKind::config, "more detected frames than source frames");
  }
  return static_cast<double>(pre_detection - post_detection) / static_cast<double>(pre_detection);
}

namespace {

std::size_t read_pre_counts(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open count file " + path.string());
  std::size_t total = 0;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string id;
    long long count = -1;
    if (!(fields >> id >> count) || count < 0) {
      throw Error(ErrorKind::parse, path.string() + ":" + std::to_string(line_no) +
                                        ": expected '<video_id> <count>'");
    }
    total += static_cast<std::size_t>(count);
  }
  return total;
}

}  // namespace

AuditReport audit_frames(const fs::path& frames_root, const fs::path& labels_root,
                         const std::optional<fs::path>& pre_counts) {
  if (!fs::is_directory(frames_root)) {
    throw Error(ErrorKind::io, "missing frames directory " + frames_root.string());
  }
  if (!fs::is_directory(labels_root)) {
    throw Error(ErrorKind::io, "missing labels directory " + labels_root.string());
  }
  std::set<std::string> ids;
  for (const auto& e : fs::directory_iterator(frames_root)) {
    if (e.is_directory()) ids.insert(e.path().filename().string());
  }
  for (const auto& e : fs::directory_iterator(labels_root)) {
    if (e.is_regular_file() && e.path().extension() == ".txt") ids.insert(e.path().stem().string());
  }

  AuditReport report;
  for (const auto& id : ids) {
    VideoAudit video;
    video.video_id = id;
    std::vector<std::int64_t> frames;
    if (fs::is_directory(frames_root / id)) frames = list_frame_indices(frames_root / id);
    std::vector<std::int64_t> labeled;
    if (fs::exists(label_file_path(labels_root, id))) {
      for (const auto& row : load_label_table(labels_root, id).rows) labeled.push_back(row.frame_index);
    }
    video.frame_count = frames.size();
    video.label_count = labeled.size();
    std::set_difference(labeled.begin(), labeled.end(), frames.begin(), frames.end(),
                        std::back_inserter(video.orphan_labels));
    std::set_difference(frames.begin(), frames.end(), labeled.begin(), labeled.end(),
                        std::back_inserter(video.unlabeled_frames));
    report.total_frames += video.frame_count;
    report.total_labels += video.label_count;
    report.videos.push_back(std::move(video));
  }
  if (pre_counts) {
    report.pre_detection_frames = read_pre_counts(*pre_counts);
    report.loss_fraction = detection_loss_fraction(*report.pre_detection_frames, report.total_frames);
  }
  return report;
}

}  // namespace vagan
