#include "stag/fixture.hpp"

#include "stag/fs.hpp"
#include "stag/geometry.hpp"
#include "stag/mot_io.hpp"
#include "stag/records_io.hpp"

#include <fmt/format.h>

#include <cmath>
#include <random>
#include <set>

namespace stag {
namespace {

// Only engine output and arithmetic are used: the engine is specified bit for
// bit by the standard, the <random> distributions are not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  bool chance(double p) { return uniform() < p; }
  /// Bell-shaped noise in [-1.5, 1.5] * scale.
  double jitter(double scale) { return (uniform() + uniform() + uniform() - 1.5) * scale; }

 private:
  std::mt19937_64 engine_;
};

double quantize(double v) { return std::round(v * 100.0) / 100.0; }

Box quantize(const Box& b) {
  return {quantize(b.left), quantize(b.top), quantize(b.width), quantize(b.height)};
}

enum class Action { Right, Left, Still, Approach };

const char* query_text(Action a) {
  switch (a) {
    case Action::Right: return "the person who walks to the right";
    case Action::Left: return "the person who walks to the left";
    case Action::Still: return "the person who stands still in one place";
    case Action::Approach: return "the person who approaches the camera";
  }
  return "";
}

struct Walker {
  Action action;
  double cx0, cy0, vx, vy, h0, growth;
  int first, last;
  bool hide_when_overlapping = false;

  Box box_at(int frame) const {
    const double t = frame - first;
    const double h = h0 * (1.0 + growth * t);
    const double w = 0.4 * h;
    return quantize(Box{cx0 + vx * t - w / 2.0, cy0 + vy * t - h / 2.0, w, h});
  }
};

struct SceneNoise {
  double random_dropout = 0.0;
  double low_score_rate = 0.0;
  double duplicate_rate = 0.0;
  double clutter_rate = 0.0;
  double tiny_rate = 0.0;
  double coord_jitter = 0.5;
};

std::vector<Walker> mixed_walkers(Rng& rng, int video_index, int frames) {
  std::vector<Walker> w;
  w.push_back({Action::Right, rng.uniform(150, 250), rng.uniform(280, 320), rng.uniform(7, 9), 0,
               rng.uniform(110, 130), 0, 1, frames});
  w.push_back({Action::Left, rng.uniform(1650, 1750), rng.uniform(700, 740), -rng.uniform(6, 8), 0,
               rng.uniform(100, 120), 0, 1, frames});
  w.push_back({Action::Still, rng.uniform(910, 990), 500, 0, 0, rng.uniform(120, 140), 0, 1,
               frames});
  w.push_back({Action::Approach, rng.uniform(1320, 1380), 140, 0, rng.uniform(2.5, 3.5),
               rng.uniform(70, 85), 0.015, 1, frames});
  if (video_index % 2 == 0) {
    // Second right walker, entering late.
    const int start = 1 + frames / 4;
    w.push_back({Action::Right, rng.uniform(550, 650), 920, rng.uniform(7, 9), 0,
                 rng.uniform(95, 105), 0, start, frames});
  }
  return w;
}

FixtureVideo simulate(const std::string& video_id, const std::vector<Walker>& walkers,
                      const SceneNoise& noise, const std::set<int>& gap_frames, int frames,
                      Rng& rng) {
  FixtureVideo v;
  v.video_id = video_id;
  for (std::size_t i = 0; i < walkers.size(); ++i) {
    Track t;
    t.track_id = static_cast<int>(i) + 1;
    t.video_id = video_id;
    for (int f = walkers[i].first; f <= walkers[i].last; ++f)
      t.observations[f] = walkers[i].box_at(f);
    v.gt_tracks.push_back(std::move(t));
  }

  for (int f = 1; f <= frames; ++f) {
    std::vector<Detection> dets;
    for (std::size_t i = 0; i < walkers.size(); ++i) {
      const Walker& w = walkers[i];
      if (f < w.first || f > w.last) continue;
      const Box truth = w.box_at(f);
      if (w.hide_when_overlapping) {
        bool hidden = false;
        for (std::size_t j = 0; j < walkers.size(); ++j)
          if (j != i && f >= walkers[j].first && f <= walkers[j].last &&
              iou(truth, walkers[j].box_at(f)) > 0.3)
            hidden = true;
        if (hidden) continue;
      }
      if (gap_frames.count(f)) continue;
      if (rng.chance(noise.random_dropout)) continue;
      const double score = rng.chance(noise.low_score_rate) ? rng.uniform(0.2, 0.65)
                                                            : rng.uniform(0.72, 0.98);
      const double j = noise.coord_jitter;
      const Box seen = quantize(Box{truth.left + rng.jitter(j), truth.top + rng.jitter(j),
                                    truth.width + rng.jitter(j), truth.height + rng.jitter(j)});
      dets.push_back({f, seen, quantize(score)});
      if (rng.chance(noise.duplicate_rate)) {
        Box dup = seen;
        dup.left += 1.0;
        dets.push_back({f, quantize(dup), quantize(rng.uniform(0.72, 0.8))});
      }
    }
    if (rng.chance(noise.clutter_rate)) {
      const double w = rng.uniform(30, 60);
      dets.push_back({f, quantize(Box{rng.uniform(0, 1800), rng.uniform(0, 1000), w, 2.0 * w}),
                      quantize(rng.uniform(0.01, 0.09))});
    }
    if (rng.chance(noise.tiny_rate))
      dets.push_back({f, quantize(Box{rng.uniform(0, 1800), rng.uniform(0, 1000), 8, 10}), 0.9});
    if (!dets.empty()) v.detections[f] = std::move(dets);
  }
  return v;
}

}  // namespace

Fixture make_fixture(const FixtureOptions& options) {
  if (options.videos < 1 || options.frames < 2) throw Error("fixture: need >= 1 video, >= 2 frames");
  Rng rng(options.seed);
  Fixture fx;
  for (int vi = 1; vi <= options.videos; ++vi) {
    const std::string video_id = fmt::format("synth-{:02d}", vi);
    std::vector<Walker> walkers;
    SceneNoise noise;
    std::set<int> gaps;
    if (options.scene == "mixed") {
      walkers = mixed_walkers(rng, vi, options.frames);
      noise = SceneNoise{0.04, 0.15, 0.03, 0.3, 0.2, 1.0};
    } else if (options.scene == "crossing") {
      const double mid = 0.5 * (options.frames + 1);
      const double speed = rng.uniform(9, 11);
      walkers.push_back({Action::Right, 700 - speed * (mid - 1), 500, speed, 0, 120, 0, 1,
                         options.frames});
      Walker back{Action::Left, 700 + speed * (mid - 1), 510, -speed, 0, 110, 0, 1,
                  options.frames};
      back.hide_when_overlapping = true;
      walkers.push_back(back);
    } else if (options.scene == "dropout") {
      walkers.push_back({Action::Right, rng.uniform(150, 250), 400, rng.uniform(7, 9), 0, 120, 0,
                         1, options.frames});
      const int start = options.frames / 2;
      for (int f = start; f < start + options.dropout_frames; ++f) gaps.insert(f);
    } else {
      throw Error("fixture: unknown scene '" + options.scene + "'");
    }

    FixtureVideo video = simulate(video_id, walkers, noise, gaps, options.frames, rng);

    std::vector<Action> seen;
    for (const auto& w : walkers)
      if (std::find(seen.begin(), seen.end(), w.action) == seen.end()) seen.push_back(w.action);
    int qn = 1;
    for (Action a : seen) {
      GroundTruthEntry e;
      e.query_id = fmt::format("{}-q{}", video_id, qn++);
      e.video_id = video_id;
      for (std::size_t i = 0; i < walkers.size(); ++i)
        if (walkers[i].action == a) e.tracks.push_back(video.gt_tracks[i]);
      fx.queries.push_back({e.query_id, video_id, query_text(a)});
      fx.ground_truth.push_back(std::move(e));
    }
    fx.videos.push_back(std::move(video));
  }
  return fx;
}

void write_fixture(const Fixture& fixture, const std::filesystem::path& root) {
  for (const auto& v : fixture.videos) {
    write_file_atomic(root / v.video_id / "det" / "det.txt", write_mot_detections(v.detections));
    write_file_atomic(root / v.video_id / "gt" / "gt.txt", write_mot_tracks(v.gt_tracks));
  }
  write_file_atomic(root / "queries.jsonl", write_queries(fixture.queries));
  write_file_atomic(root / "gt.jsonl", write_ground_truth(fixture.ground_truth));
}

}  // namespace stag
