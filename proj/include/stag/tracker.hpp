#pragma once

// Occlusion-aware tracking-by-detection: constant-velocity Kalman motion,
// two-stage high/low score association, and an Active -> Occluded -> Lost ->
// Removed lifecycle.

#include "stag/kalman.hpp"
#include "stag/types.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace stag {

struct TrackerConfig {
  double track_thresh = 0.7;          // detections at or above are "high"; only they start tracks
  int track_buffer = 30;              // frames a Lost track survives before removal
  double match_thresh = 0.85;         // gate on 1 - IoU (see match_thresh_is_min_iou)
  double min_box_area = 100.0;        // smaller detections are dropped before association
  int reset_velocity_offset_occ = 5;  // look-back window for velocity after occlusion
  int reset_pos_offset_occ = 3;       // frames over which position blends back to measurements
  double enlarge_bbox_occ = 1.1;      // Occluded tracks match with this box scale
  double dampen_motion_occ = 0.89;    // per-frame velocity factor while Occluded
  int active_occ_to_lost_thresh = 10; // Occluded longer than this -> Lost
  double init_iou_suppress = 0.8;     // no new track over an existing one above this IoU
  double low_score_thresh = 0.1;      // floor of the second association stage
  double occ_overlap_thresh = 0.3;    // unmatched + overlap above this -> Occluded
  bool match_thresh_is_min_iou = false;
  double appearance_weight = 0.0;     // blend of appearance cost; 0 = pure IoU

  /// Throws stag::Error on an out-of-range field.
  void validate() const;
  /// Largest admissible association cost (1 - IoU).
  double max_match_cost() const;
};

/// Reads a JSON object whose keys are the TrackerConfig field names. Missing keys keep defaults.
TrackerConfig load_tracker_config(const std::string& path);
TrackerConfig tracker_config_from_json_text(const std::string& text);
std::string tracker_config_to_json_text(const TrackerConfig& config);

/// A track together with its motion estimate.
struct TrackedObject {
  Track track;
  MotionState<double> motion;
  int smoothing_frames_left = 0;   // position-blend frames remaining after an occlusion
  bool matched_this_frame = false;

  /// Box of the current frame's observation when matched, else the motion estimate.
  Box current_box() const;
  /// Predicted box used for association (enlarged when Occluded).
  Box association_box(const TrackerConfig& config) const;
};

/// Optional appearance affinity in [0,1] between a track and a detection.
using AppearanceAffinity = std::function<double(const TrackedObject&, const Detection&)>;

struct AssociationResult {
  std::vector<std::pair<std::size_t, std::size_t>> matches;  // (track index, detection index)
  std::vector<std::size_t> unmatched_tracks;
  std::vector<std::size_t> unmatched_high_dets;
};

/// Two-stage association. Stage 1: Active, Occluded and Lost tracks against
/// high-score detections. Stage 2: the remaining Active and Occluded tracks
/// against detections in [low_score_thresh, track_thresh). Removed tracks are
/// skipped. Both stages use cost 1 - IoU under the same gate.
AssociationResult associate_frame(std::span<const TrackedObject> tracks,
                                  std::span<const Detection> detections,
                                  const TrackerConfig& config,
                                  const AppearanceAffinity& affinity = {});

struct FrameObservation {
  int track_id;
  Box box;
};

class Tracker {
 public:
  explicit Tracker(TrackerConfig config, std::string video_id = {},
                   KalmanNoise<double> noise = {});

  /// Processes one frame. Frames must be strictly increasing. Returns the
  /// observations recorded in this frame (matched and newly started tracks).
  std::vector<FrameObservation> step(int frame, std::span<const Detection> detections);

  void set_appearance_affinity(AppearanceAffinity affinity) { affinity_ = std::move(affinity); }

  const std::vector<TrackedObject>& objects() const { return objects_; }
  const TrackedObject* find(int track_id) const;
  const TrackerConfig& config() const { return config_; }
  int last_frame() const { return last_frame_; }

  /// All tracks that were ever started, sorted by id.
  std::vector<Track> tracks() const;

 private:
  void update_matched(TrackedObject& obj, const Detection& det, int frame,
                      const MotionState<double>& predicted);
  void update_unmatched(std::size_t index);
  bool overlaps_live_track(std::size_t index) const;

  TrackerConfig config_;
  std::string video_id_;
  KalmanNoise<double> noise_;
  AppearanceAffinity affinity_;
  std::vector<TrackedObject> objects_;
  int next_id_ = 1;
  int last_frame_ = 0;
};

/// Runs frames 1..last detection frame (missing frames count as empty).
std::vector<Track> run_sequence(const DetectionsByFrame& detections, const TrackerConfig& config,
                                const std::string& video_id);

}  // namespace stag
