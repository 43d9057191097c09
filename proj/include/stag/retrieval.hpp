#pragma once

// Caption every track clip, embed captions and queries, rank tracks per query
// by cosine similarity.

#include "stag/embedding_store.hpp"
#include "stag/track_export.hpp"
#include "stag/types.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <vector>

namespace stag {

inline constexpr const char* kDefaultCaptionPrompt =
    "Please describe the activities of the entity highlighted in the bounding box, including "
    "the following aspects: (1) Movement and Direction; (2) Positional Relations; (3) Body "
    "Postures and Gestures; (4) Interactions with Objects or Others; (5) States and "
    "Transitions; (6) Camera/Frame References.";

inline constexpr int kDefaultTopK = 10;

struct PromptConfig {
  std::string prompt_text = kDefaultCaptionPrompt;
};

// ---------------------------------------------------------------------------
// Backends. Implementations must tolerate concurrent calls.

class Captioner {
 public:
  virtual ~Captioner() = default;
  virtual std::string backend_id() const = 0;
  /// Throws on failure. An empty return value is treated as a malformed response.
  virtual std::string caption(const ClipManifest& manifest, const std::string& prompt) = 0;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::string backend_id() const = 0;
  virtual int dimension() const = 0;
  virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;
};

/// Deterministic captioner that describes the highlighted box's motion
/// (direction, approach/retreat, stillness) from the manifest overlays.
class StubCaptioner final : public Captioner {
 public:
  std::string backend_id() const override { return "stub-motion-v1"; }
  std::string caption(const ClipManifest& manifest, const std::string& prompt) override;
};

/// Feature hashing of lowercased alphanumeric tokens, L2-normalized.
class HashEmbedder final : public Embedder {
 public:
  static constexpr std::uint64_t kDefaultSeed = 0x5354414745ull;

  explicit HashEmbedder(std::uint64_t seed = kDefaultSeed, int dim = kEmbeddingDim)
      : seed_(seed), dim_(dim) {}

  std::string backend_id() const override;
  int dimension() const override { return dim_; }
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;
  EmbeddingVector embed_one(const std::string& text) const;

 private:
  std::uint64_t seed_;
  int dim_;
};

/// Memoizes captions keyed by content_hash(manifest, prompt, backend id).
class CachingCaptioner final : public Captioner {
 public:
  explicit CachingCaptioner(Captioner& inner) : inner_(inner) {}

  std::string backend_id() const override { return inner_.backend_id(); }
  std::string caption(const ClipManifest& manifest, const std::string& prompt) override;

  std::string cache_key(const ClipManifest& manifest, const std::string& prompt) const;
  /// JSON lines {"key", "caption"}; a missing file is an empty cache.
  void load(const std::string& path);
  void save(const std::string& path) const;

  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

 private:
  Captioner& inner_;
  mutable std::mutex mutex_;
  std::map<std::string, std::string> cache_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

/// Memoizes embeddings keyed by content_hash(text, backend id).
class CachingEmbedder final : public Embedder {
 public:
  explicit CachingEmbedder(Embedder& inner) : inner_(inner) {}

  std::string backend_id() const override { return inner_.backend_id(); }
  int dimension() const override { return inner_.dimension(); }
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;

  void load(const std::string& path);
  void save(const std::string& path) const;

  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

 private:
  std::string key(const std::string& text) const;

  Embedder& inner_;
  std::mutex mutex_;
  std::map<std::string, EmbeddingVector> cache_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

// ---------------------------------------------------------------------------
// Operations

struct CaptionOptions {
  int max_in_flight = 4;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{100};
};

struct CaptionOutcome {
  std::string video_id;
  int track_id{0};
  std::string caption;  // empty on failure
  std::string error;

  bool ok() const { return error.empty(); }
};

/// One outcome per manifest, in manifest order. Failures are recorded per
/// track after the retries run out; they never abort the batch.
std::vector<CaptionOutcome> caption_tracks(const std::vector<ClipManifest>& manifests,
                                           const PromptConfig& prompt, Captioner& captioner,
                                           const CaptionOptions& options = {});

/// Unit-norm embeddings, one per text. Throws on empty text, a backend
/// dimension other than `dim`, or a zero vector.
std::vector<EmbeddingVector> embed_texts(const std::vector<std::string>& texts, Embedder& embedder,
                                         int dim = kEmbeddingDim);

/// Cosine of the angle between two equally sized vectors, in double precision.
template <typename DerivedA, typename DerivedB>
double cosine_similarity(const Eigen::MatrixBase<DerivedA>& a,
                         const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) throw Error("cosine_similarity: size mismatch");
  const auto ad = a.template cast<double>();
  const auto bd = b.template cast<double>();
  const double na = ad.norm();
  const double nb = bd.norm();
  if (!(na > 0.0) || !(nb > 0.0)) throw Error("cosine_similarity: zero vector");
  const double c = ad.dot(bd) / (na * nb);
  return std::clamp(c, -1.0, 1.0);
}

struct RankedCandidate {
  TrackKey key;
  double score{0.0};
};

struct RetrievalResult {
  std::string query_id;
  std::string video_id;
  std::vector<RankedCandidate> ranked;  // score descending, ties by key ascending
};

/// Exact top-k by cosine similarity. With `same_video_only`, only candidates
/// from the query's video compete.
RetrievalResult retrieve_topk(const Query& query, const EmbeddingVector& query_embedding,
                              const EmbeddingMap& candidates, int k = kDefaultTopK,
                              bool same_video_only = true);

/// Attaches full tracks to the ranked keys. Throws on a key with no track.
Submission assemble_submission(const std::vector<RetrievalResult>& results,
                               const std::map<TrackKey, Track>& tracks);

}  // namespace stag
