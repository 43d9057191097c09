#pragma once

// Per-track clip specifications: which frames to show the captioner and
// which box to highlight in each of them.

#include "stag/types.hpp"

#include <map>
#include <string>
#include <vector>

namespace stag {

inline constexpr int kCaptionFrames = 24;

/// Picks min(N, count) entries at positions round(i (N-1) / (count-1)).
/// Throws on empty input or count < 1.
std::vector<int> sample_frames_evenly(const std::vector<int>& frames, int count = kCaptionFrames);

struct VideoMeta {
  /// fmt-style template with {video_id} and {frame} fields, e.g. "{video_id}/img1/{frame:06d}.jpg".
  std::string frame_path_template = "{video_id}/img1/{frame:06d}.jpg";
};

struct ClipManifest {
  std::string video_id;
  int track_id{0};
  int first_frame{0};
  int last_frame{0};
  std::vector<int> sampled_frames;
  std::map<int, Box> overlays;
  std::string frame_path_template;
  std::string highlight_color = "green";
  int line_width = 3;

  std::string frame_path(int frame) const;
};

/// Samples over the track's inclusive frame span. A sampled frame with no
/// observation borrows the box of the nearest observed frame (earlier on ties).
ClipManifest build_clip_manifest(const Track& track, const VideoMeta& meta,
                                 int count = kCaptionFrames);

struct OverlayRecord {
  int frame{0};
  std::string frame_path;
  Box box;
  std::string color;

  friend bool operator==(const OverlayRecord&, const OverlayRecord&) = default;
};

/// "frame<TAB>path<TAB>left,top,width,height<TAB>color" per sampled frame.
std::string render_overlay_script(const ClipManifest& manifest);
std::vector<OverlayRecord> parse_overlay_script(const std::string& text);

/// One JSON object per line.
std::string write_manifests(const std::vector<ClipManifest>& manifests);
std::vector<ClipManifest> parse_manifests(const std::string& text);

/// Stable serialization used as cache key material.
std::string manifest_fingerprint(const ClipManifest& manifest);

}  // namespace stag
