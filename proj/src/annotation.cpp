#include "vagan/annotation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>

#include "vagan/error.hpp"

namespace vagan {

std::string_view dimension_name(AffectDimension dim) noexcept {
  return dim == AffectDimension::valence ? "valence" : "arousal";
}

namespace {

struct PendingSample {
  AnnotationSample sample;
  std::size_t line = 0;
};

// Accepts an ASCII or Unicode minus sign.
std::string normalize_minus(std::string token) {
  static const std::string unicode_minus = "\xE2\x88\x92";
  if (token.rfind(unicode_minus, 0) == 0) token.replace(0, unicode_minus.size(), "-");
  return token;
}

bool parse_number(const std::string& token, double& out) {
  const std::string t = normalize_minus(token);
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

std::string where(std::size_t line) { return "line " + std::to_string(line) + ": "; }

}  // namespace

AnnotationTrack parse_annotation_file(std::istream& in, AffectDimension dim) {
  std::vector<PendingSample> pending;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream fields(line);
    std::string first, second, extra;
    if (!(fields >> first)) continue;
    double seconds = 0.0;
    if (!parse_number(first, seconds)) {
      if (pending.empty()) continue;  // header line
      throw Error(ErrorKind::parse, where(line_no) + "malformed timestamp '" + first + "'");
    }
    if (!(fields >> second)) {
      throw Error(ErrorKind::parse, where(line_no) + "missing value column");
    }
    if (fields >> extra) throw Error(ErrorKind::parse, where(line_no) + "unexpected third column");
    double value = 0.0;
    if (!parse_number(second, value)) {
      throw Error(ErrorKind::parse, where(line_no) + "malformed value '" + second + "'");
    }
    if (seconds < 0.0) throw Error(ErrorKind::parse, where(line_no) + "negative timestamp");
    if (value != std::round(value)) {
      throw Error(ErrorKind::parse, where(line_no) + "value " + second + " is not an integer");
    }
    if (std::abs(value) > kAnnotationRange) {
      throw Error(ErrorKind::parse, where(line_no) + "value " + second +
                                        " outside [-1000, 1000]");
    }
    pending.push_back({{seconds, value}, line_no});
  }
  if (pending.empty()) throw Error(ErrorKind::parse, "empty track");

  std::stable_sort(pending.begin(), pending.end(), [](const auto& a, const auto& b) {
    return a.sample.seconds < b.sample.seconds;
  });
  AnnotationTrack track;
  track.dimension = dim;
  track.samples.reserve(pending.size());
  for (std::size_t i = 0; i < pending.size(); ++i) {
    if (i > 0 && pending[i].sample.seconds == pending[i - 1].sample.seconds) {
      throw Error(ErrorKind::parse, where(std::max(pending[i].line, pending[i - 1].line)) +
                                        "duplicate timestamp " +
                                        std::to_string(pending[i].sample.seconds));
    }
    track.samples.push_back(pending[i].sample);
  }
  return track;
}

AnnotationTrack read_annotation_file(const std::filesystem::path& path, AffectDimension dim) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open annotation file " + path.string());
  try {
    return parse_annotation_file(in, dim);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

std::vector<double> interpolate_to_frames(const AnnotationTrack& track, std::size_t total_frames,
                                          int fps) {
  if (track.samples.empty()) throw Error(ErrorKind::parse, "empty track");
  if (total_frames < 1) throw Error(ErrorKind::config, "total_frames must be at least 1");
  if (fps <= 0) throw Error(ErrorKind::config, "fps must be positive");
  const auto& knots = track.samples;
  std::vector<double> xp(knots.size());
  for (std::size_t i = 0; i < knots.size(); ++i) xp[i] = knots[i].seconds * fps;

  std::vector<double> out(total_frames);
  for (std::size_t f = 0; f < total_frames; ++f) {
    const double x = static_cast<double>(f + 1);
    if (x <= xp.front()) {
      out[f] = knots.front().value;
      continue;
    }
    if (x >= xp.back()) {
      out[f] = knots.back().value;
      continue;
    }
    // First knot strictly greater than x; its predecessor is <= x.
    const auto hi = static_cast<std::size_t>(std::upper_bound(xp.begin(), xp.end(), x) -
                                             xp.begin());
    const std::size_t lo = hi - 1;
    const double slope = (knots[hi].value - knots[lo].value) / (xp[hi] - xp[lo]);
    out[f] = knots[lo].value + slope * (x - xp[lo]);
  }
  return out;
}

std::vector<double> scale_annotations(std::span<const double> raw) {
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!(std::abs(raw[i]) <= kAnnotationRange)) {
      throw Error(ErrorKind::parse, "annotation value " + std::to_string(raw[i]) + " at frame " +
                                        std::to_string(i + 1) + " outside [-1000, 1000]");
    }
    out[i] = raw[i] / kAnnotationRange;
  }
  return out;
}

}  // namespace vagan
