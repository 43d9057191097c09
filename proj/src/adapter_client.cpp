#include "stag/adapter_client.hpp"

#include "httplib.h"
#include "json.hpp"

namespace stag {
namespace {

using json = nlohmann::json;

json parse_reply(const std::string& body, const char* route) {
  try {
    auto j = json::parse(body);
    if (!j.is_object()) throw AdapterError(200, std::string(route) + ": reply is not an object");
    // /health is unversioned; the data routes must speak our wire version.
    const auto v = j.find("v");
    if (v != j.end() && !(v->is_number_integer() && v->get<int>() == kWireVersion))
      throw AdapterError(200, std::string(route) + ": unsupported wire version " + v->dump());
    return j;
  } catch (const json::parse_error& e) {
    throw AdapterError(200, std::string(route) + ": malformed reply: " + e.what());
  }
}

}  // namespace

std::string caption_request_body(const ClipManifest& manifest, const std::string& prompt) {
  nlohmann::ordered_json j;
  j["v"] = kWireVersion;
  auto paths = nlohmann::ordered_json::array();
  auto overlays = nlohmann::ordered_json::array();
  for (int f : manifest.sampled_frames) {
    paths.push_back(manifest.frame_path(f));
    const Box& b = manifest.overlays.at(f);
    nlohmann::ordered_json o;
    o["frame"] = f;
    o["box"] = {b.left, b.top, b.width, b.height};
    overlays.push_back(std::move(o));
  }
  j["frame_paths"] = std::move(paths);
  j["prompt"] = prompt;
  j["track"] = {{"video_id", manifest.video_id}, {"track_id", manifest.track_id}};
  j["overlays"] = std::move(overlays);
  return j.dump();
}

std::string embed_request_body(const std::vector<std::string>& texts) {
  nlohmann::ordered_json j;
  j["v"] = kWireVersion;
  j["texts"] = texts;
  return j.dump();
}

AdapterClient::AdapterClient(std::string base_url, std::chrono::seconds timeout)
    : base_url_(std::move(base_url)), timeout_(timeout) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
  if (base_url_.empty()) throw Error("adapter URL is empty");
}

std::string AdapterClient::post(const std::string& path, const std::string& body) const {
  httplib::Client cli(base_url_);
  cli.set_connection_timeout(timeout_);
  cli.set_read_timeout(timeout_);
  auto res = cli.Post(path, body, "application/json");
  if (!res)
    throw AdapterError(0, "adapter " + base_url_ + path + " unreachable: " +
                              httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300)
    throw AdapterError(res->status, "adapter " + path + " returned HTTP " +
                                        std::to_string(res->status) + ": " + res->body);
  return res->body;
}

AdapterHealth AdapterClient::health() const {
  httplib::Client cli(base_url_);
  cli.set_connection_timeout(timeout_);
  cli.set_read_timeout(timeout_);
  auto res = cli.Get("/health");
  if (!res)
    throw AdapterError(0, "adapter " + base_url_ + " unreachable: " +
                              httplib::to_string(res.error()));
  if (res->status != 200)
    throw AdapterError(res->status, "adapter /health returned HTTP " + std::to_string(res->status));
  const auto j = parse_reply(res->body, "/health");
  try {
    return {j.at("status").get<std::string>(), j.at("backend").get<std::string>(),
            j.at("dim").get<int>()};
  } catch (const json::exception& e) {
    throw AdapterError(200, std::string("/health: ") + e.what());
  }
}

std::pair<std::string, std::string> AdapterClient::caption(const ClipManifest& manifest,
                                                           const std::string& prompt) const {
  const auto j = parse_reply(post("/caption", caption_request_body(manifest, prompt)), "/caption");
  const auto it = j.find("caption");
  if (it == j.end() || !it->is_string())
    throw AdapterError(200, "/caption: reply has no caption string");
  std::string text = it->get<std::string>();
  if (text.empty()) throw AdapterError(200, "/caption: empty caption");
  return {std::move(text), j.value("backend", std::string("unknown"))};
}

std::vector<EmbeddingVector> AdapterClient::embed(const std::vector<std::string>& texts,
                                                  int dim) const {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (std::size_t start = 0; start < texts.size(); start += kEmbedBatchLimit) {
    const auto end = std::min(texts.size(), start + kEmbedBatchLimit);
    const std::vector<std::string> batch(texts.begin() + static_cast<std::ptrdiff_t>(start),
                                         texts.begin() + static_cast<std::ptrdiff_t>(end));
    const auto j = parse_reply(post("/embed", embed_request_body(batch)), "/embed");
    try {
      if (j.contains("dim") && j.at("dim").get<int>() != dim)
        throw AdapterError(200, "/embed: dimension mismatch (" +
                                    std::to_string(j.at("dim").get<int>()) + " != " +
                                    std::to_string(dim) + ")");
      const auto& rows = j.at("embeddings");
      if (!rows.is_array() || rows.size() != batch.size())
        throw AdapterError(200, "/embed: expected " + std::to_string(batch.size()) + " vectors");
      for (const auto& row : rows) {
        if (!row.is_array() || static_cast<int>(row.size()) != dim)
          throw AdapterError(200, "/embed: dimension mismatch in vector");
        EmbeddingVector v(dim);
        for (int i = 0; i < dim; ++i) v[i] = row[static_cast<std::size_t>(i)].get<float>();
        out.push_back(std::move(v));
      }
    } catch (const json::exception& e) {
      throw AdapterError(200, std::string("/embed: ") + e.what());
    }
  }
  return out;
}

std::string RemoteCaptioner::caption(const ClipManifest& manifest, const std::string& prompt) {
  return client_.caption(manifest, prompt).first;
}

std::vector<EmbeddingVector> RemoteEmbedder::embed(const std::vector<std::string>& texts) {
  return client_.embed(texts, dim_);
}

}  // namespace stag
