#include "support.hpp"

#include "stag/cli.hpp"
#include "stag/fixture.hpp"
#include "stag/fs.hpp"
#include "stag/mot_io.hpp"
#include "stag/records_io.hpp"

#include "json.hpp"

#include <gtest/gtest.h>

using namespace stag;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) { return cli::run(args); }

const fs::path kSynth = test::data_dir() / "synth";

}  // namespace

TEST(Fixture, DeterministicPerSeed) {
  const auto a = make_fixture({});
  const auto b = make_fixture({});
  ASSERT_EQ(a.videos.size(), 2u);
  EXPECT_EQ(write_mot_detections(a.videos[0].detections), write_mot_detections(b.videos[0].detections));
  EXPECT_EQ(write_ground_truth(a.ground_truth), write_ground_truth(b.ground_truth));
  FixtureOptions other;
  other.seed = 2;
  EXPECT_NE(write_mot_detections(make_fixture(other).videos[0].detections),
            write_mot_detections(a.videos[0].detections));
  EXPECT_EQ(a.queries.size(), a.ground_truth.size());
}

TEST(Fixture, CommittedDatasetMatchesGenerator) {
  // Guards the generator's cross-platform stability.
  test::TempDir dir("fx");
  ASSERT_EQ(run({"make-fixture", "--out", dir.path().string()}), 0);
  for (const char* rel : {"queries.jsonl", "gt.jsonl", "synth-01/det/det.txt", "synth-02/det/det.txt",
                          "synth-01/gt/gt.txt", "synth-02/gt/gt.txt"})
    EXPECT_EQ(read_file(dir / rel), read_file(kSynth / rel)) << rel;
}

TEST(Fixture, DropoutSceneKeepsOneIdentity) {
  FixtureOptions o;
  o.scene = "dropout";
  o.videos = 1;
  o.dropout_frames = 3;
  const auto fx = make_fixture(o);
  const auto tracks = run_sequence(fx.videos[0].detections, TrackerConfig{}, "synth-01");
  EXPECT_EQ(tracks.size(), 1u);
}

TEST(Fixture, CrossingSceneRecoversBothWalkers) {
  FixtureOptions o;
  o.scene = "crossing";
  o.videos = 1;
  const auto fx = make_fixture(o);
  const auto tracks = run_sequence(fx.videos[0].detections, TrackerConfig{}, "synth-01");
  EXPECT_EQ(tracks.size(), 2u);
  for (const auto& t : tracks) EXPECT_EQ(t.first_frame(), 1);
}

TEST(Pipeline, GoldenAndDeterministic) {
  test::TempDir a("pipe-a"), b("pipe-b");
  ASSERT_EQ(run({"pipeline", "--dataset", kSynth.string(), "--out", a.path().string()}), 0);
  ASSERT_EQ(run({"pipeline", "--dataset", kSynth.string(), "--out", b.path().string()}), 0);
  for (const char* rel : {"submission.jsonl", "captions.jsonl", "manifests.jsonl", "report.txt",
                          "report.jsonl", "caption_embeddings.bin", "track_counts.tsv",
                          "tracks/synth-01.txt", "overlays/synth-01-1.tsv"})
    EXPECT_EQ(read_file(a / rel), read_file(b / rel)) << rel;
  EXPECT_EQ(read_file(a / "submission.jsonl"), read_file(kSynth / "expected/submission.jsonl"));
  EXPECT_EQ(read_file(a / "report.txt"), read_file(kSynth / "expected/report.txt"));
}

TEST(Pipeline, RerunServesEveryCaptionFromCache) {
  test::TempDir dir("pipe-cache");
  ASSERT_EQ(run({"pipeline", "--dataset", kSynth.string(), "--out", dir.path().string()}), 0);
  const auto first = nlohmann::json::parse(read_file(dir / "caption_stats.json"));
  EXPECT_EQ(first["cache_hits"], 0);
  const auto submission = read_file(dir / "submission.jsonl");
  ASSERT_EQ(run({"pipeline", "--dataset", kSynth.string(), "--out", dir.path().string()}), 0);
  const auto second = nlohmann::json::parse(read_file(dir / "caption_stats.json"));
  EXPECT_EQ(second["cache_hits"], second["tracks"]);
  EXPECT_EQ(second["cache_misses"], 0);
  EXPECT_EQ(read_file(dir / "submission.jsonl"), submission);
}

TEST(Pipeline, StagesComposeLikeThePipeline) {
  test::TempDir whole("whole"), staged("staged");
  const auto s = staged.path().string();
  ASSERT_EQ(run({"pipeline", "--dataset", kSynth.string(), "--out", whole.path().string()}), 0);
  ASSERT_EQ(run({"track", "--dataset", kSynth.string(), "--out", s}), 0);
  ASSERT_EQ(run({"export", "--tracks", s + "/tracks", "--out", s}), 0);
  ASSERT_EQ(run({"caption", "--manifests", s + "/manifests.jsonl", "--out", s + "/captions.jsonl"}), 0);
  ASSERT_EQ(run({"retrieve", "--queries", (kSynth / "queries.jsonl").string(), "--captions",
                 s + "/captions.jsonl", "--tracks", s + "/tracks", "--out", s + "/submission.jsonl"}),
            0);
  ASSERT_EQ(run({"evaluate", "--gt", (kSynth / "gt.jsonl").string(), "--pred",
                 s + "/submission.jsonl", "--report", s + "/report.txt"}),
            0);
  EXPECT_EQ(read_file(staged / "submission.jsonl"), read_file(whole / "submission.jsonl"));
  EXPECT_EQ(read_file(staged / "report.txt"), read_file(whole / "report.txt"));
}

TEST(Pipeline, ImportedTracksAndCorpusWideRetrieval) {
  test::TempDir dir("import");
  const auto d = dir.path().string();
  fs::create_directories(dir / "foreign");
  fs::copy_file(kSynth / "synth-01/gt/gt.txt", dir / "foreign/synth-01.txt");
  fs::copy_file(kSynth / "synth-02/gt/gt.txt", dir / "foreign/synth-02.txt");
  ASSERT_EQ(run({"pipeline", "--dataset", kSynth.string(), "--out", d + "/out", "--import-tracks",
                 d + "/foreign", "--corpus-wide", "--k", "3"}),
            0);
  const auto sub = parse_submission(read_file(dir / "out/submission.jsonl"));
  bool crossed = false;
  for (const auto& e : sub) {
    EXPECT_LE(e.ranked.size(), 3u);
    for (const auto& r : e.ranked) crossed |= r.track.video_id != e.video_id;
  }
  EXPECT_TRUE(crossed);
  // With ground-truth tracks as input and per-video retrieval the ceiling is high.
  ASSERT_EQ(run({"pipeline", "--dataset", kSynth.string(), "--out", d + "/own", "--import-tracks",
                 d + "/foreign"}),
            0);
  const auto records = read_file(dir / "own/report.jsonl");
  const auto summary = nlohmann::json::parse(records.substr(0, records.find('\n')));
  EXPECT_GT(summary["miou"].get<double>(), 90.0);
}

TEST(Cli, FailuresExitNonzero) {
  test::TempDir dir("fail");
  const auto d = dir.path().string();
  EXPECT_NE(run({}), 0);
  EXPECT_NE(run({"frobnicate"}), 0);
  EXPECT_NE(run({"track", "--dataset", kSynth.string(), "--config", "/nonexistent/cfg.json",
                 "--out", d}),
            0);
  EXPECT_NE(run({"track", "--dataset", d + "/missing", "--out", d}), 0);
  EXPECT_NE(run({"evaluate", "--gt", (kSynth / "gt.jsonl").string(), "--pred",
                 (kSynth / "nope.jsonl").string(), "--report", d + "/r.txt"}),
            0);
  EXPECT_NE(run({"evaluate", "--gt", (kSynth / "gt.jsonl").string(), "--pred",
                 (kSynth / "expected/submission.jsonl").string(), "--report", d + "/r.txt",
                 "--alpha-grid", "0.9:0.1:0.1"}),
            0);
}

TEST(Cli, RemoteBackendNeedsReachableAdapter) {
  test::TempDir dir("remote");
  const auto d = dir.path().string();
  ASSERT_EQ(run({"track", "--dataset", kSynth.string(), "--out", d}), 0);
  ASSERT_EQ(run({"export", "--tracks", d + "/tracks", "--out", d}), 0);
  ::unsetenv("STAG_ADAPTER_URL");
  EXPECT_NE(run({"caption", "--manifests", d + "/manifests.jsonl", "--out", d + "/c.jsonl",
                 "--backend", "remote"}),
            0);
  // Port 9 (discard) on loopback is closed in the sandbox: every track fails, the batch completes.
  EXPECT_EQ(run({"caption", "--manifests", d + "/manifests.jsonl", "--out", d + "/c.jsonl",
                 "--backend", "remote", "--adapter-url", "http://127.0.0.1:9"}),
            1);
  EXPECT_TRUE(fs::exists(dir / "c.jsonl"));
  EXPECT_TRUE(parse_captions(read_file(dir / "c.jsonl")).empty());
}

TEST(Cli, TrackerConfigFileIsHonoured) {
  test::TempDir dir("cfg");
  const auto d = dir.path().string();
  write_file_atomic(dir / "strict.json", R"({"min_box_area": 1000000})");
  ASSERT_EQ(run({"track", "--dataset", kSynth.string(), "--config", d + "/strict.json", "--out", d}),
            0);
  EXPECT_EQ(read_file(dir / "tracks/synth-01.txt"), "");
}

TEST(Cli, AlphaGridParsing) {
  const auto g = cli::parse_alpha_grid("0.05:0.95:0.05");
  ASSERT_EQ(g.size(), 19u);
  EXPECT_NEAR(g.back(), 0.95, 1e-12);
  EXPECT_EQ(cli::parse_alpha_grid("0.5,0.75"), (std::vector<double>{0.5, 0.75}));
  EXPECT_THROW(cli::parse_alpha_grid("a,b"), Error);
  EXPECT_THROW(cli::parse_alpha_grid("0.1:0.2"), Error);
}
