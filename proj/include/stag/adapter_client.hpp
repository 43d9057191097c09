#pragma once

// Client for the model-adapter HTTP service.
//
//   GET  /health  -> {"status", "backend", "dim"}
//   POST /caption {"v":1, "frame_paths":[...], "prompt", "track":{"video_id","track_id"},
//                  "overlays":[{"frame", "box":[l,t,w,h]}]}
//              -> {"v":1, "caption", "backend"}
//   POST /embed   {"v":1, "texts":[...]}  -> {"v":1, "embeddings":[[...]], "dim", "backend"}

#include "stag/retrieval.hpp"

#include <chrono>
#include <string>
#include <vector>

namespace stag {

inline constexpr int kWireVersion = 1;
inline constexpr std::size_t kEmbedBatchLimit = 256;
inline constexpr const char* kAdapterUrlEnv = "STAG_ADAPTER_URL";

/// Non-2xx reply or transport failure.
class AdapterError : public Error {
 public:
  AdapterError(int status, const std::string& what) : Error(what), status_(status) {}
  /// HTTP status, or 0 when the request never got a reply.
  int status() const noexcept { return status_; }

 private:
  int status_;
};

struct AdapterHealth {
  std::string status;
  std::string backend;
  int dim{0};
};

/// Builds the /caption request body for a manifest.
std::string caption_request_body(const ClipManifest& manifest, const std::string& prompt);
/// Builds the /embed request body.
std::string embed_request_body(const std::vector<std::string>& texts);

class AdapterClient {
 public:
  /// `base_url` like "http://127.0.0.1:8765".
  explicit AdapterClient(std::string base_url,
                         std::chrono::seconds timeout = std::chrono::seconds(120));

  AdapterHealth health() const;
  /// Returns (caption, backend).
  std::pair<std::string, std::string> caption(const ClipManifest& manifest,
                                              const std::string& prompt) const;
  /// Splits into batches of at most kEmbedBatchLimit. Checks every vector has `dim` values.
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts, int dim) const;

  const std::string& base_url() const { return base_url_; }

 private:
  std::string post(const std::string& path, const std::string& body) const;

  std::string base_url_;
  std::chrono::seconds timeout_;
};

class RemoteCaptioner final : public Captioner {
 public:
  explicit RemoteCaptioner(AdapterClient client) : client_(std::move(client)) {}
  std::string backend_id() const override { return "remote:" + client_.base_url(); }
  std::string caption(const ClipManifest& manifest, const std::string& prompt) override;

 private:
  AdapterClient client_;
};

class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(AdapterClient client, int dim = kEmbeddingDim)
      : client_(std::move(client)), dim_(dim) {}
  std::string backend_id() const override { return "remote:" + client_.base_url(); }
  int dimension() const override { return dim_; }
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;

 private:
  AdapterClient client_;
  int dim_;
};

}  // namespace stag
