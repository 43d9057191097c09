#include "stag/adapter_client.hpp"

#include "httplib.h"
#include "json.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <mutex>
#include <thread>

using namespace stag;
using json = nlohmann::json;

namespace {

// In-process stand-in for the adapter service. Behaviour is switchable per test.
class FakeAdapter {
 public:
  FakeAdapter() {
    server_.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"status":"ok","backend":"fake","dim":384})", "application/json");
    });
    server_.Post("/caption", [this](const httplib::Request& req, httplib::Response& res) {
      ++caption_calls;
      const auto body = json::parse(req.body);
      {
        std::lock_guard lock(mutex_);
        last_caption_request = body;
      }
      if (current() == "error") {
        res.status = 422;
        res.set_content(R"({"detail":"frame_paths must have 1..24 entries"})", "application/json");
        return;
      }
      json out = {{"v", current() == "bad-version" ? 2 : 1}, {"backend", "fake"}};
      out["caption"] = current() == "empty" ? "" : "caption for track " +
                                                  std::to_string(body["track"]["track_id"].get<int>());
      if (current() == "garbage") {
        res.set_content("not json", "application/json");
        return;
      }
      res.set_content(out.dump(), "application/json");
    });
    server_.Post("/embed", [this](const httplib::Request& req, httplib::Response& res) {
      const auto body = json::parse(req.body);
      const auto& texts = body["texts"];
      max_batch = std::max<std::size_t>(max_batch, texts.size());
      ++embed_calls;
      const int dim = current() == "wrong-dim" ? 512 : 384;
      json rows = json::array();
      for (std::size_t i = 0; i < texts.size(); ++i) {
        std::vector<float> v(dim, 0.0f);
        v[texts[i].get<std::string>().size() % dim] = 1.0f;
        rows.push_back(v);
      }
      res.set_content(json{{"v", 1}, {"embeddings", rows}, {"dim", dim}, {"backend", "fake"}}.dump(),
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeAdapter() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  void set_mode(std::string m) {
    std::lock_guard lock(mutex_);
    mode_ = std::move(m);
  }
  std::string current() {
    std::lock_guard lock(mutex_);
    return mode_;
  }

  json last_caption_request;
  std::atomic<int> caption_calls{0}, embed_calls{0};
  std::size_t max_batch = 0;

 private:
  std::mutex mutex_;
  std::string mode_ = "ok";
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

ClipManifest sample_manifest(int id = 3) {
  Track t;
  t.video_id = "vid";
  t.track_id = id;
  for (int f = 1; f <= 30; ++f) t.observations[f] = Box{1.0 * f, 2, 30, 60};
  return build_clip_manifest(t, VideoMeta{});
}

}  // namespace

TEST(AdapterClient, RequestBodiesFollowWireSchema) {
  const auto m = sample_manifest();
  const auto j = json::parse(caption_request_body(m, "describe"));
  EXPECT_EQ(j["v"], 1);
  EXPECT_EQ(j["frame_paths"].size(), 24u);
  EXPECT_EQ(j["frame_paths"][0], "vid/img1/000001.jpg");
  EXPECT_EQ(j["prompt"], "describe");
  EXPECT_EQ(j["track"]["video_id"], "vid");
  EXPECT_EQ(j["track"]["track_id"], 3);
  EXPECT_EQ(j["overlays"].size(), 24u);
  EXPECT_EQ(j["overlays"][0]["box"], json::parse("[1.0,2.0,30.0,60.0]"));
  const auto e = json::parse(embed_request_body({"a", "b"}));
  EXPECT_EQ(e["v"], 1);
  EXPECT_EQ(e["texts"], json::parse(R"(["a","b"])"));
}

TEST(AdapterClient, HealthCaptionEmbed) {
  FakeAdapter fake;
  AdapterClient client(fake.url() + "/");
  const auto h = client.health();
  EXPECT_EQ(h.status, "ok");
  EXPECT_EQ(h.dim, 384);
  const auto [caption, backend] = client.caption(sample_manifest(7), kDefaultCaptionPrompt);
  EXPECT_EQ(caption, "caption for track 7");
  EXPECT_EQ(backend, "fake");
  EXPECT_EQ(fake.last_caption_request["prompt"], kDefaultCaptionPrompt);
  const auto vecs = client.embed({"a", "bb"}, 384);
  ASSERT_EQ(vecs.size(), 2u);
  EXPECT_EQ(vecs[1](2), 1.0f);
}

TEST(AdapterClient, EmbedBatchesAreChunked) {
  FakeAdapter fake;
  AdapterClient client(fake.url());
  std::vector<std::string> texts(600, "x");
  EXPECT_EQ(client.embed(texts, 384).size(), 600u);
  EXPECT_EQ(fake.embed_calls.load(), 3);
  EXPECT_EQ(fake.max_batch, kEmbedBatchLimit);
}

TEST(AdapterClient, ErrorsAreTyped) {
  FakeAdapter fake;
  AdapterClient client(fake.url());
  fake.set_mode("error");
  try {
    client.caption(sample_manifest(), "p");
    FAIL();
  } catch (const AdapterError& e) {
    EXPECT_EQ(e.status(), 422);
  }
  fake.set_mode("empty");
  EXPECT_THROW(client.caption(sample_manifest(), "p"), AdapterError);
  fake.set_mode("garbage");
  EXPECT_THROW(client.caption(sample_manifest(), "p"), AdapterError);
  fake.set_mode("bad-version");
  EXPECT_THROW(client.caption(sample_manifest(), "p"), AdapterError);
  fake.set_mode("wrong-dim");
  EXPECT_THROW(client.embed({"a"}, 384), AdapterError);
}

TEST(AdapterClient, UnreachableServer) {
  int port;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  AdapterClient client("http://127.0.0.1:" + std::to_string(port), std::chrono::seconds(2));
  try {
    client.health();
    FAIL();
  } catch (const AdapterError& e) {
    EXPECT_EQ(e.status(), 0);
  }
  EXPECT_THROW(AdapterClient(""), Error);
}

TEST(AdapterClient, RemoteBackendsDriveTheBatchCaptioner) {
  FakeAdapter fake;
  RemoteCaptioner captioner{AdapterClient(fake.url())};
  std::vector<ClipManifest> ms;
  for (int id = 1; id <= 6; ++id) ms.push_back(sample_manifest(id));
  const auto out = caption_tracks(ms, PromptConfig{}, captioner);
  ASSERT_EQ(out.size(), 6u);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(out[i].caption, "caption for track " + std::to_string(i + 1));
  RemoteEmbedder embedder{AdapterClient(fake.url())};
  const auto v = embed_texts({"hello", "world!"}, embedder);
  EXPECT_NEAR(v[0].norm(), 1.0, 1e-6);
}

TEST(AdapterClient, EmptyCaptionBecomesPerTrackFailure) {
  FakeAdapter fake;
  fake.set_mode("empty");
  RemoteCaptioner captioner{AdapterClient(fake.url())};
  CaptionOptions opts;
  opts.initial_backoff = std::chrono::milliseconds(1);
  const auto out = caption_tracks({sample_manifest(1), sample_manifest(2)}, PromptConfig{},
                                  captioner, opts);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_FALSE(out[0].ok());
  EXPECT_FALSE(out[1].ok());
  EXPECT_EQ(fake.caption_calls.load(), 6);
}
