#pragma once

// Command-line entry point and the file-level stages it wires together. Every
// stage reads its inputs from files and writes its outputs atomically, so a
// stage can be re-run on its own and `pipeline` is the plain composition.

#include "stag/metrics.hpp"
#include "stag/retrieval.hpp"
#include "stag/tracker.hpp"
#include "stag/track_export.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace stag::cli {

namespace fs = std::filesystem;

struct BackendOptions {
  std::string backend = "stub";  // "stub" or "remote"
  std::string adapter_url;       // falls back to $STAG_ADAPTER_URL
  int max_in_flight = 4;
};

struct TrackStageResult {
  std::vector<std::pair<std::string, std::size_t>> counts;  // per video
};

/// Tracks every video (or imports foreign MOT track files from `import_dir`),
/// writing <out>/tracks/<video>.txt and <out>/track_counts.tsv.
TrackStageResult stage_track(const fs::path& dataset, const std::vector<std::string>& videos,
                             const TrackerConfig& config, const fs::path& out,
                             const std::optional<fs::path>& import_dir = std::nullopt);

/// <out>/manifests.jsonl plus one overlay script per track under <out>/overlays/.
std::vector<ClipManifest> stage_export(const fs::path& tracks_dir, const VideoMeta& meta,
                                       int frames, const fs::path& out);

struct CaptionStageResult {
  std::size_t tracks = 0, cache_hits = 0, cache_misses = 0;
  std::vector<CaptionOutcome> failures;
};

CaptionStageResult stage_caption(const fs::path& manifests, const fs::path& captions_out,
                                 const PromptConfig& prompt, const BackendOptions& backend,
                                 const std::optional<fs::path>& cache = std::nullopt);

struct RetrieveOptions {
  int k = kDefaultTopK;
  bool same_video_only = true;
  std::optional<fs::path> embeddings_out;
  std::optional<fs::path> embed_cache;
};

Submission stage_retrieve(const fs::path& queries, const fs::path& captions,
                          const fs::path& tracks_dir, const fs::path& submission_out,
                          const RetrieveOptions& options, const BackendOptions& backend);

/// Writes the text table to `report_out` and the records next to it (.jsonl).
EvalReport stage_evaluate(const fs::path& gt, const fs::path& pred, const fs::path& report_out,
                          const MetricsConfig& config, const std::string& method = "stag");

/// Directories under `dataset` that contain det/det.txt, sorted.
std::vector<std::string> discover_videos(const fs::path& dataset);

/// "a:b:step" or a comma-separated list.
std::vector<double> parse_alpha_grid(const std::string& text);

int run(int argc, char** argv);
int run(const std::vector<std::string>& args);

}  // namespace stag::cli
