#pragma once

// Raw annotation tracks and their conversion to per-frame labels.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace vagan {

enum class AffectDimension { valence, arousal };

std::string_view dimension_name(AffectDimension dim) noexcept;

struct AnnotationSample {
  double seconds = 0.0;
  // Integer-valued, within [-1000, 1000].
  double value = 0.0;

  friend bool operator==(const AnnotationSample&, const AnnotationSample&) = default;
};

// Samples sorted by strictly increasing time; never empty.
struct AnnotationTrack {
  AffectDimension dimension = AffectDimension::valence;
  std::vector<AnnotationSample> samples;
};

inline constexpr double kAnnotationRange = 1000.0;

// Two whitespace-separated columns per line: seconds, integer value.
// Lines whose first token is not a number are skipped as headers. Errors
// carry the 1-based line number.
AnnotationTrack parse_annotation_file(std::istream& in, AffectDimension dim);
AnnotationTrack read_annotation_file(const std::filesystem::path& path, AffectDimension dim);

// Piecewise-linear evaluation at frame positions 1..total_frames, with knots
// at seconds * fps. Positions outside the knot range hold the edge value.
std::vector<double> interpolate_to_frames(const AnnotationTrack& track, std::size_t total_frames,
                                          int fps);

// Maps raw values in [-1000, 1000] onto [-1, 1].
std::vector<double> scale_annotations(std::span<const double> raw);

}  // namespace vagan
