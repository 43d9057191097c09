#include "stag/tracker.hpp"

#include "stag/assignment.hpp"
#include "stag/geometry.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

namespace stag {

const char* to_string(TrackState state) {
  switch (state) {
    case TrackState::Active: return "active";
    case TrackState::Occluded: return "occluded";
    case TrackState::Lost: return "lost";
    case TrackState::Removed: return "removed";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Config

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error("tracker config: " + what);
}

bool unit(double v) { return v >= 0.0 && v <= 1.0; }

template <typename Fn>
void for_each_field(TrackerConfig& c, Fn&& fn) {
  fn("track_thresh", c.track_thresh);
  fn("track_buffer", c.track_buffer);
  fn("match_thresh", c.match_thresh);
  fn("min_box_area", c.min_box_area);
  fn("reset_velocity_offset_occ", c.reset_velocity_offset_occ);
  fn("reset_pos_offset_occ", c.reset_pos_offset_occ);
  fn("enlarge_bbox_occ", c.enlarge_bbox_occ);
  fn("dampen_motion_occ", c.dampen_motion_occ);
  fn("active_occ_to_lost_thresh", c.active_occ_to_lost_thresh);
  fn("init_iou_suppress", c.init_iou_suppress);
  fn("low_score_thresh", c.low_score_thresh);
  fn("occ_overlap_thresh", c.occ_overlap_thresh);
  fn("match_thresh_is_min_iou", c.match_thresh_is_min_iou);
  fn("appearance_weight", c.appearance_weight);
}

}  // namespace

void TrackerConfig::validate() const {
  require(unit(track_thresh), "track_thresh must be in [0,1]");
  require(unit(low_score_thresh), "low_score_thresh must be in [0,1]");
  require(low_score_thresh < track_thresh, "low_score_thresh must be below track_thresh");
  require(track_buffer >= 0, "track_buffer must be >= 0");
  require(unit(match_thresh), "match_thresh must be in [0,1]");
  require(min_box_area >= 0.0, "min_box_area must be >= 0");
  require(reset_velocity_offset_occ >= 0, "reset_velocity_offset_occ must be >= 0");
  require(reset_pos_offset_occ >= 0, "reset_pos_offset_occ must be >= 0");
  require(enlarge_bbox_occ >= 1.0, "enlarge_bbox_occ must be >= 1");
  require(dampen_motion_occ > 0.0 && dampen_motion_occ <= 1.0,
          "dampen_motion_occ must be in (0,1]");
  require(active_occ_to_lost_thresh >= 0, "active_occ_to_lost_thresh must be >= 0");
  require(unit(init_iou_suppress), "init_iou_suppress must be in [0,1]");
  require(unit(occ_overlap_thresh), "occ_overlap_thresh must be in [0,1]");
  require(unit(appearance_weight), "appearance_weight must be in [0,1]");
}

double TrackerConfig::max_match_cost() const {
  return match_thresh_is_min_iou ? 1.0 - match_thresh : match_thresh;
}

TrackerConfig tracker_config_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("tracker config: invalid JSON: ") + e.what());
  }
  require(j.is_object(), "top level must be an object");
  TrackerConfig c;
  std::size_t known = 0;
  try {
    for_each_field(c, [&](const char* key, auto& field) {
      if (auto it = j.find(key); it != j.end()) {
        it->get_to(field);
        ++known;
      }
    });
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("tracker config: ") + e.what());
  }
  if (known != j.size()) {
    TrackerConfig probe;
    for (const auto& [key, value] : j.items()) {
      bool found = false;
      for_each_field(probe, [&](const char* name, auto&) { found = found || key == name; });
      require(found, "unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

TrackerConfig load_tracker_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open tracker config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return tracker_config_from_json_text(ss.str());
}

std::string tracker_config_to_json_text(const TrackerConfig& config) {
  nlohmann::ordered_json j;
  TrackerConfig copy = config;
  for_each_field(copy, [&](const char* key, auto& field) { j[key] = field; });
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Association

Box TrackedObject::current_box() const {
  if (matched_this_frame) return track.observations.rbegin()->second;
  return state_box(motion);
}

Box TrackedObject::association_box(const TrackerConfig& config) const {
  const Box predicted = state_box(motion);
  if (track.state == TrackState::Occluded)
    return enlarge_about_center(predicted, config.enlarge_bbox_occ);
  return predicted;
}

namespace {

void match_stage(std::span<const TrackedObject> tracks, std::span<const Detection> detections,
                 const std::vector<std::size_t>& track_idx, const std::vector<std::size_t>& det_idx,
                 const TrackerConfig& config, const AppearanceAffinity& affinity,
                 std::vector<char>& track_used, std::vector<char>& det_used,
                 AssociationResult& result) {
  if (track_idx.empty() || det_idx.empty()) return;
  const double w = affinity ? config.appearance_weight : 0.0;
  Eigen::MatrixXd cost(track_idx.size(), det_idx.size());
  for (std::size_t r = 0; r < track_idx.size(); ++r) {
    const auto& obj = tracks[track_idx[r]];
    const Box box = obj.association_box(config);
    for (std::size_t c = 0; c < det_idx.size(); ++c) {
      const auto& det = detections[det_idx[c]];
      double value = 1.0 - iou(box, det.box);
      if (w > 0.0) value = (1.0 - w) * value + w * (1.0 - affinity(obj, det));
      cost(r, c) = value;
    }
  }
  for (const auto& [r, c] : solve_assignment(cost, config.max_match_cost())) {
    result.matches.emplace_back(track_idx[r], det_idx[c]);
    track_used[track_idx[r]] = 1;
    det_used[det_idx[c]] = 1;
  }
}

}  // namespace

AssociationResult associate_frame(std::span<const TrackedObject> tracks,
                                  std::span<const Detection> detections,
                                  const TrackerConfig& config, const AppearanceAffinity& affinity) {
  AssociationResult result;
  std::vector<char> track_used(tracks.size(), 0), det_used(detections.size(), 0);

  std::vector<std::size_t> high, low;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const double s = detections[i].score;
    if (s >= config.track_thresh)
      high.push_back(i);
    else if (s >= config.low_score_thresh)
      low.push_back(i);
  }

  std::vector<std::size_t> stage1;
  for (std::size_t i = 0; i < tracks.size(); ++i)
    if (tracks[i].track.state != TrackState::Removed) stage1.push_back(i);
  match_stage(tracks, detections, stage1, high, config, affinity, track_used, det_used, result);

  std::vector<std::size_t> stage2;
  for (std::size_t i : stage1) {
    const auto state = tracks[i].track.state;
    if (!track_used[i] && (state == TrackState::Active || state == TrackState::Occluded))
      stage2.push_back(i);
  }
  match_stage(tracks, detections, stage2, low, config, affinity, track_used, det_used, result);

  for (std::size_t i : stage1)
    if (!track_used[i]) result.unmatched_tracks.push_back(i);
  for (std::size_t i : high)
    if (!det_used[i]) result.unmatched_high_dets.push_back(i);
  std::sort(result.matches.begin(), result.matches.end());
  return result;
}

// ---------------------------------------------------------------------------
// Tracker

Tracker::Tracker(TrackerConfig config, std::string video_id, KalmanNoise<double> noise)
    : config_(config), video_id_(std::move(video_id)), noise_(noise) {
  config_.validate();
}

const TrackedObject* Tracker::find(int track_id) const {
  for (const auto& obj : objects_)
    if (obj.track.track_id == track_id) return &obj;
  return nullptr;
}

std::vector<Track> Tracker::tracks() const {
  std::vector<Track> out;
  out.reserve(objects_.size());
  for (const auto& obj : objects_) out.push_back(obj.track);
  return out;
}

void Tracker::update_matched(TrackedObject& obj, const Detection& det, int frame,
                             const MotionState<double>& predicted) {
  const TrackState prior = obj.track.state;
  MotionState<double> updated = kalman_update(predicted, det.box, noise_);

  if (prior == TrackState::Occluded) {
    // Velocity from the observation offset frames back (or the oldest one).
    const int offset = std::max(1, config_.reset_velocity_offset_occ);
    const auto& obs = obj.track.observations;
    auto ref = obs.upper_bound(frame - offset);
    if (ref == obs.begin())
      ref = obs.begin();
    else
      --ref;
    const int dt = frame - ref->first;
    if (dt > 0)
      updated.velocity() =
          (to_measurement(det.box) - to_measurement(ref->second)) / static_cast<double>(dt);
    obj.smoothing_frames_left = config_.reset_pos_offset_occ;
  }

  if (obj.smoothing_frames_left > 0) {
    const int window = config_.reset_pos_offset_occ;
    const double weight =
        static_cast<double>(window - obj.smoothing_frames_left + 1) / static_cast<double>(window);
    updated.position() = weight * updated.position() + (1.0 - weight) * predicted.position();
    --obj.smoothing_frames_left;
  }

  obj.motion = updated;
  obj.track.observations[frame] = det.box;
  obj.track.state = TrackState::Active;
  obj.track.occluded_streak = 0;
  obj.track.frames_since_update = 0;
  obj.matched_this_frame = true;
}

bool Tracker::overlaps_live_track(std::size_t index) const {
  const Box mine = state_box(objects_[index].motion);
  for (std::size_t j = 0; j < objects_.size(); ++j) {
    if (j == index) continue;
    const auto state = objects_[j].track.state;
    if (state != TrackState::Active && state != TrackState::Occluded) continue;
    if (iou(mine, objects_[j].current_box()) > config_.occ_overlap_thresh) return true;
  }
  return false;
}

std::vector<FrameObservation> Tracker::step(int frame, std::span<const Detection> detections) {
  if (frame <= last_frame_)
    throw Error("tracker: frame " + std::to_string(frame) + " is not after frame " +
                std::to_string(last_frame_));
  last_frame_ = frame;

  std::vector<Detection> dets;
  dets.reserve(detections.size());
  for (const auto& d : detections)
    if (d.box.valid() && d.box.area() >= config_.min_box_area) dets.push_back(d);

  for (auto& obj : objects_) {
    obj.matched_this_frame = false;
    if (obj.track.state != TrackState::Removed) obj.motion = kalman_predict(obj.motion, noise_);
  }

  const AssociationResult assoc = associate_frame(objects_, dets, config_, affinity_);

  for (const auto& [ti, di] : assoc.matches) {
    const MotionState<double> predicted = objects_[ti].motion;
    update_matched(objects_[ti], dets[di], frame, predicted);
  }

  // Occlusion is judged against the pre-transition states of this frame.
  std::vector<char> occluded(assoc.unmatched_tracks.size(), 0);
  for (std::size_t k = 0; k < assoc.unmatched_tracks.size(); ++k) {
    const auto state = objects_[assoc.unmatched_tracks[k]].track.state;
    if (state == TrackState::Active || state == TrackState::Occluded)
      occluded[k] = overlaps_live_track(assoc.unmatched_tracks[k]);
  }
  for (std::size_t k = 0; k < assoc.unmatched_tracks.size(); ++k) {
    auto& obj = objects_[assoc.unmatched_tracks[k]];
    auto& t = obj.track;
    ++t.frames_since_update;
    if (t.state == TrackState::Active || t.state == TrackState::Occluded) {
      if (occluded[k]) {
        t.state = TrackState::Occluded;
        ++t.occluded_streak;
        obj.motion.velocity() *= config_.dampen_motion_occ;
        if (t.occluded_streak > config_.active_occ_to_lost_thresh) {
          t.state = TrackState::Lost;
          t.occluded_streak = 0;
        }
      } else {
        t.state = TrackState::Lost;
        t.occluded_streak = 0;
      }
    }
    if (t.state == TrackState::Lost && t.frames_since_update > config_.track_buffer)
      t.state = TrackState::Removed;
  }

  std::vector<FrameObservation> emitted;
  for (const auto& [ti, di] : assoc.matches)
    emitted.push_back({objects_[ti].track.track_id, dets[di].box});

  std::vector<std::size_t> fresh = assoc.unmatched_high_dets;
  std::stable_sort(fresh.begin(), fresh.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  for (std::size_t di : fresh) {
    const Detection& det = dets[di];
    if (!(det.box.height > 0.0)) continue;
    bool suppressed = false;
    for (const auto& obj : objects_) {
      const auto state = obj.track.state;
      if (state != TrackState::Active && state != TrackState::Occluded) continue;
      if (iou(obj.current_box(), det.box) > config_.init_iou_suppress) {
        suppressed = true;
        break;
      }
    }
    if (suppressed) continue;
    TrackedObject obj;
    obj.track.track_id = next_id_++;
    obj.track.video_id = video_id_;
    obj.track.observations[frame] = det.box;
    obj.motion = kalman_initiate(det.box, noise_);
    obj.matched_this_frame = true;
    emitted.push_back({obj.track.track_id, det.box});
    objects_.push_back(std::move(obj));
  }
  std::sort(emitted.begin(), emitted.end(),
            [](const FrameObservation& a, const FrameObservation& b) {
              return a.track_id < b.track_id;
            });
  return emitted;
}

std::vector<Track> run_sequence(const DetectionsByFrame& detections, const TrackerConfig& config,
                                const std::string& video_id) {
  Tracker tracker(config, video_id);
  if (detections.empty()) return {};
  const int last = detections.rbegin()->first;
  static const std::vector<Detection> kNone;
  for (int frame = 1; frame <= last; ++frame) {
    const auto it = detections.find(frame);
    tracker.step(frame, it == detections.end() ? kNone : it->second);
  }
  return tracker.tracks();
}

}  // namespace stag
