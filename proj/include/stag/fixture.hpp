#pragma once

// Seeded synthetic scenes with known ground truth for desk-scale runs of the
// whole pipeline. Output is identical across platforms for a given seed.

#include "stag/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace stag {

struct FixtureOptions {
  std::uint64_t seed = 1;
  /// "mixed" (several actions per video), "crossing" (two walkers pass each
  /// other, the farther one hidden while they overlap) or "dropout" (one
  /// walker with a detector gap).
  std::string scene = "mixed";
  int videos = 2;
  int frames = 60;
  int dropout_frames = 3;  // gap length of the "dropout" scene
};

struct FixtureVideo {
  std::string video_id;
  DetectionsByFrame detections;
  std::vector<Track> gt_tracks;
};

struct Fixture {
  std::vector<FixtureVideo> videos;
  std::vector<Query> queries;
  std::vector<GroundTruthEntry> ground_truth;
};

Fixture make_fixture(const FixtureOptions& options);

/// Layout: <root>/<video>/det/det.txt, <root>/<video>/gt/gt.txt,
/// <root>/queries.jsonl, <root>/gt.jsonl.
void write_fixture(const Fixture& fixture, const std::filesystem::path& root);

}  // namespace stag
