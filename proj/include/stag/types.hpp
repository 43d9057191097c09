#pragma once

#include <Eigen/Core>

#include <cmath>
#include <compare>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace stag {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text; carries the 1-based line number of the offending record.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Axis-aligned box in pixel coordinates (MOT convention: top-left corner plus extent).
template <typename Scalar>
struct BoxT {
  Scalar left{0};
  Scalar top{0};
  Scalar width{0};
  Scalar height{0};

  Scalar right() const { return left + width; }
  Scalar bottom() const { return top + height; }
  Scalar area() const { return width * height; }
  Scalar center_x() const { return left + width / Scalar(2); }
  Scalar center_y() const { return top + height / Scalar(2); }

  bool valid() const {
    return std::isfinite(left) && std::isfinite(top) && std::isfinite(width) &&
           std::isfinite(height) && width >= Scalar(0) && height >= Scalar(0);
  }

  friend bool operator==(const BoxT&, const BoxT&) = default;
};

using Box = BoxT<double>;

struct Detection {
  int frame{1};
  Box box;
  double score{0.0};
};

/// Per-frame detections keyed by 1-based frame index; each list keeps file order.
using DetectionsByFrame = std::map<int, std::vector<Detection>>;

enum class TrackState { Active, Occluded, Lost, Removed };

const char* to_string(TrackState state);

struct Track {
  int track_id{0};
  std::string video_id;
  std::map<int, Box> observations;
  TrackState state{TrackState::Active};
  int occluded_streak{0};
  int frames_since_update{0};

  bool empty() const { return observations.empty(); }
  int first_frame() const { return observations.begin()->first; }
  int last_frame() const { return observations.rbegin()->first; }
};

/// Identity of a track across the corpus.
struct TrackKey {
  std::string video_id;
  int track_id{0};

  friend auto operator<=>(const TrackKey&, const TrackKey&) = default;
  friend bool operator==(const TrackKey&, const TrackKey&) = default;
};

struct Query {
  std::string query_id;
  std::string video_id;
  std::string text;
};

struct CaptionRecord {
  std::string video_id;
  int track_id{0};
  std::string caption;
};

inline constexpr int kEmbeddingDim = 384;

/// Sentence embedding. Stored as 32-bit reals, matching the on-disk container.
using EmbeddingVector = Eigen::VectorXf;

struct GroundTruthEntry {
  std::string query_id;
  std::string video_id;
  std::vector<Track> tracks;
};

/// One ranked prediction for a query: the full track plus its retrieval score.
struct ScoredTrack {
  Track track;
  double score{0.0};
};

struct SubmissionEntry {
  std::string query_id;
  std::string video_id;
  std::vector<ScoredTrack> ranked;
};

using Submission = std::vector<SubmissionEntry>;

}  // namespace stag
