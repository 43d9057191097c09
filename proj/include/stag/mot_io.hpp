#pragma once

// MOT Challenge comma-separated text: frame,id,left,top,width,height,conf[,...]

#include "stag/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace stag {

/// Detection file. The id column is ignored; trailing columns are ignored.
DetectionsByFrame parse_mot_detections(std::istream& in);
DetectionsByFrame parse_mot_detections(const std::string& text);

/// Detection file with id -1 and three trailing -1 columns, in frame then input order.
std::string write_mot_detections(const DetectionsByFrame& detections);

/// One line per observation, sorted by frame then track id.
std::string write_mot_tracks(const std::vector<Track>& tracks);

/// Inverse of write_mot_tracks. Tracks come back sorted by id; the state
/// fields are left at their defaults.
std::vector<Track> parse_mot_tracks(std::istream& in, const std::string& video_id);
std::vector<Track> parse_mot_tracks(const std::string& text, const std::string& video_id);

/// Shortest decimal with at most two fractional digits ("10", "0.9", "12.25").
std::string format_coordinate(double value);

}  // namespace stag
