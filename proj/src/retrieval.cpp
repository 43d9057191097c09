#include "stag/retrieval.hpp"

#include "stag/fs.hpp"
#include "stag/hashing.hpp"

#include "json.hpp"

#include <cctype>
#include <filesystem>
#include <sstream>
#include <thread>

namespace stag {

// ---------------------------------------------------------------------------
// Stub captioner

std::string StubCaptioner::caption(const ClipManifest& manifest, const std::string&) {
  if (manifest.overlays.empty()) throw Error("stub captioner: manifest has no overlays");
  const Box& first = manifest.overlays.begin()->second;
  const Box& last = manifest.overlays.rbegin()->second;
  double mean_w = 0.0, mean_h = 0.0;
  for (const auto& [f, b] : manifest.overlays) {
    mean_w += b.width;
    mean_h += b.height;
  }
  mean_w /= static_cast<double>(manifest.overlays.size());
  mean_h /= static_cast<double>(manifest.overlays.size());

  const double dx = last.center_x() - first.center_x();
  const double dy = last.center_y() - first.center_y();
  const double scale = first.height > 0.0 ? last.height / first.height : 1.0;

  std::vector<std::string> phrases;
  if (dx > 0.75 * mean_w) phrases.emplace_back("walks to the right");
  if (dx < -0.75 * mean_w) phrases.emplace_back("walks to the left");
  if (dy > 0.5 * mean_h) phrases.emplace_back("moves down in the frame");
  if (dy < -0.5 * mean_h) phrases.emplace_back("moves up in the frame");
  if (scale > 1.2) phrases.emplace_back("approaches the camera");
  if (scale < 1.0 / 1.2) phrases.emplace_back("moves away from the camera");
  if (phrases.empty()) phrases.emplace_back("stands still in one place");

  std::string text = "The highlighted person ";
  for (std::size_t i = 0; i < phrases.size(); ++i) {
    if (i > 0) text += " and ";
    text += phrases[i];
  }
  text += ". The person is visible in " + std::to_string(manifest.sampled_frames.size()) +
          " sampled frames between frame " + std::to_string(manifest.first_frame) +
          " and frame " + std::to_string(manifest.last_frame) + ".";
  return text;
}

// ---------------------------------------------------------------------------
// Hash embedder

std::string HashEmbedder::backend_id() const {
  return "hash-v1-" + to_hex(seed_) + "-" + std::to_string(dim_);
}

EmbeddingVector HashEmbedder::embed_one(const std::string& text) const {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  if (tokens.empty()) tokens.push_back(text);

  std::string seed_bytes(8, '\0');
  for (int i = 0; i < 8; ++i) seed_bytes[i] = static_cast<char>((seed_ >> (8 * i)) & 0xff);
  const std::uint64_t base = fnv1a64(seed_bytes);

  Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim_);
  for (const auto& tok : tokens) {
    const std::uint64_t h = fnv1a64(tok, base);
    const auto index = static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dim_));
    acc[index] += ((h >> 40) & 1u) ? -1.0 : 1.0;
  }
  double norm = acc.norm();
  if (!(norm > 0.0)) {
    // All tokens cancelled out; fall back to the hash of the whole text.
    const std::uint64_t h = fnv1a64(text, base);
    acc[static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dim_))] = 1.0;
    norm = 1.0;
  }
  return (acc / norm).cast<float>();
}

std::vector<EmbeddingVector> HashEmbedder::embed(const std::vector<std::string>& texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_one(t));
  return out;
}

// ---------------------------------------------------------------------------
// Caches

std::string CachingCaptioner::cache_key(const ClipManifest& manifest,
                                        const std::string& prompt) const {
  return content_hash(manifest_fingerprint(manifest) + '\x1f' + prompt + '\x1f' +
                      inner_.backend_id());
}

std::string CachingCaptioner::caption(const ClipManifest& manifest, const std::string& prompt) {
  const std::string key = cache_key(manifest, prompt);
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) {
      ++hits_;
      return it->second;
    }
  }
  ++misses_;
  std::string text = inner_.caption(manifest, prompt);
  if (!text.empty()) {
    std::lock_guard lock(mutex_);
    cache_[key] = text;
  }
  return text;
}

void CachingCaptioner::load(const std::string& path) {
  if (!std::filesystem::exists(path)) return;
  std::istringstream in(read_file(path));
  std::string line;
  std::lock_guard lock(mutex_);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    cache_[j.at("key").get<std::string>()] = j.at("caption").get<std::string>();
  }
}

void CachingCaptioner::save(const std::string& path) const {
  std::string out;
  std::lock_guard lock(mutex_);
  for (const auto& [key, text] : cache_) {
    nlohmann::ordered_json j;
    j["key"] = key;
    j["caption"] = text;
    out += j.dump() + "\n";
  }
  write_file_atomic(path, out);
}

std::string CachingEmbedder::key(const std::string& text) const {
  return content_hash(text + '\x1f' + inner_.backend_id());
}

std::vector<EmbeddingVector> CachingEmbedder::embed(const std::vector<std::string>& texts) {
  std::lock_guard lock(mutex_);
  std::vector<std::string> missing;
  std::vector<std::string> missing_keys;
  for (const auto& t : texts) {
    const std::string k = key(t);
    if (cache_.count(k) ||
        std::find(missing_keys.begin(), missing_keys.end(), k) != missing_keys.end())
      continue;
    missing.push_back(t);
    missing_keys.push_back(k);
  }
  if (!missing.empty()) {
    auto fresh = inner_.embed(missing);
    if (fresh.size() != missing.size()) throw Error("embedder returned wrong number of vectors");
    for (std::size_t i = 0; i < fresh.size(); ++i) cache_[missing_keys[i]] = std::move(fresh[i]);
  }
  misses_ += missing.size();
  hits_ += texts.size() - missing.size();
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(cache_.at(key(t)));
  return out;
}

void CachingEmbedder::load(const std::string& path) {
  if (!std::filesystem::exists(path)) return;
  const auto stored = load_embeddings(path, inner_.dimension());
  std::lock_guard lock(mutex_);
  for (const auto& [k, v] : stored) cache_[k.video_id] = v;
}

void CachingEmbedder::save(const std::string& path) const {
  EmbeddingMap out;
  for (const auto& [k, v] : cache_) out.emplace(TrackKey{k, 0}, v);
  std::ostringstream bytes;
  write_embeddings(bytes, out, inner_.dimension());
  write_file_atomic(path, bytes.str());
}

// ---------------------------------------------------------------------------
// Operations

std::vector<CaptionOutcome> caption_tracks(const std::vector<ClipManifest>& manifests,
                                           const PromptConfig& prompt, Captioner& captioner,
                                           const CaptionOptions& options) {
  if (prompt.prompt_text.empty()) throw Error("caption prompt must not be empty");
  std::vector<CaptionOutcome> out(manifests.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < manifests.size(); i = next++) {
      const auto& m = manifests[i];
      CaptionOutcome& result = out[i];
      result.video_id = m.video_id;
      result.track_id = m.track_id;
      auto backoff = options.initial_backoff;
      for (int attempt = 1; attempt <= std::max(1, options.max_attempts); ++attempt) {
        try {
          std::string text = captioner.caption(m, prompt.prompt_text);
          if (text.empty()) throw Error("malformed response: empty caption");
          result.caption = std::move(text);
          result.error.clear();
          break;
        } catch (const std::exception& e) {
          result.error = e.what();
        }
        if (attempt < options.max_attempts) {
          std::this_thread::sleep_for(backoff);
          backoff *= 2;
        }
      }
    }
  };

  const auto threads = static_cast<std::size_t>(std::max(1, options.max_in_flight));
  const std::size_t n = std::min(threads, manifests.size());
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n);
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  return out;
}

std::vector<EmbeddingVector> embed_texts(const std::vector<std::string>& texts, Embedder& embedder,
                                         int dim) {
  for (const auto& t : texts)
    if (t.empty()) throw Error("embed_texts: empty text");
  if (texts.empty()) return {};
  if (embedder.dimension() != dim)
    throw Error("embed_texts: backend dimension " + std::to_string(embedder.dimension()) +
                " does not match " + std::to_string(dim));
  auto vectors = embedder.embed(texts);
  if (vectors.size() != texts.size()) throw Error("embed_texts: backend returned wrong count");
  for (auto& v : vectors) {
    if (v.size() != dim)
      throw Error("embed_texts: dimension mismatch from backend (" + std::to_string(v.size()) +
                  ")");
    if (!v.allFinite()) throw Error("embed_texts: non-finite embedding");
    const double norm = v.cast<double>().norm();
    if (!(norm > 0.0)) throw Error("embed_texts: zero embedding");
    v = (v.cast<double>() / norm).cast<float>();
  }
  return vectors;
}

RetrievalResult retrieve_topk(const Query& query, const EmbeddingVector& query_embedding,
                              const EmbeddingMap& candidates, int k, bool same_video_only) {
  if (k < 1) throw Error("retrieve_topk: k must be >= 1");
  RetrievalResult result{query.query_id, query.video_id, {}};
  std::vector<RankedCandidate> scored;
  scored.reserve(candidates.size());
  for (const auto& [key, vec] : candidates) {
    if (same_video_only && key.video_id != query.video_id) continue;
    scored.push_back({key, cosine_similarity(query_embedding, vec)});
  }
  const auto better = [](const RankedCandidate& a, const RankedCandidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.key < b.key;
  };
  const auto keep = std::min(scored.size(), static_cast<std::size_t>(k));
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep),
                    scored.end(), better);
  scored.resize(keep);
  result.ranked = std::move(scored);
  return result;
}

Submission assemble_submission(const std::vector<RetrievalResult>& results,
                               const std::map<TrackKey, Track>& tracks) {
  Submission out;
  out.reserve(results.size());
  for (const auto& r : results) {
    SubmissionEntry e{r.query_id, r.video_id, {}};
    for (const auto& c : r.ranked) {
      const auto it = tracks.find(c.key);
      if (it == tracks.end())
        throw Error("assemble_submission: query " + r.query_id + " references unknown track " +
                    c.key.video_id + "/" + std::to_string(c.key.track_id));
      e.ranked.push_back({it->second, c.score});
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace stag
