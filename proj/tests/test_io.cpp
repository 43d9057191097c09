#include "support.hpp"

#include "stag/embedding_store.hpp"
#include "stag/fs.hpp"
#include "stag/mot_io.hpp"
#include "stag/records_io.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace stag;

TEST(MotIo, ParsesDetectionLine) {
  const auto d = parse_mot_detections(std::string("1,-1,10,20,30,40,0.9,-1,-1,-1\n"));
  ASSERT_EQ(d.size(), 1u);
  const auto& det = d.at(1).at(0);
  EXPECT_EQ(det.frame, 1);
  EXPECT_EQ(det.box, (Box{10, 20, 30, 40}));
  EXPECT_EQ(det.score, 0.9);
}

TEST(MotIo, EmptyAndOrdering) {
  EXPECT_TRUE(parse_mot_detections(std::string()).empty());
  const auto d = parse_mot_detections(std::string("2,-1,0,0,10,10,0.5\n1,-1,0,0,5,5,0.8\n"));
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.begin()->first, 1);
  EXPECT_EQ(d.rbegin()->first, 2);
}

TEST(MotIo, ToleratesCrlfAndBlankLines) {
  const auto d = parse_mot_detections(std::string("\r\n1,-1,1,2,3,4,0.5\r\n\n"));
  EXPECT_EQ(d.at(1).size(), 1u);
}

TEST(MotIo, MalformedLinesReportLineNumber) {
  try {
    parse_mot_detections(std::string("1,-1,0,0,5,5,0.8\n1,-1,0,0,5\n"));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse_mot_detections(std::string("0,-1,0,0,5,5,0.8")), ParseError);
  EXPECT_THROW(parse_mot_detections(std::string("1,-1,0,0,-5,5,0.8")), ParseError);
  EXPECT_THROW(parse_mot_detections(std::string("1,-1,0,0,5,5,1.8")), ParseError);
  EXPECT_THROW(parse_mot_detections(std::string("1,-1,x,0,5,5,0.8")), ParseError);
  EXPECT_THROW(parse_mot_detections(std::string("1.5,-1,0,0,5,5,0.8")), ParseError);
}

TEST(MotIo, WritesTrackLines) {
  Track t;
  t.track_id = 1;
  t.observations[3] = Box{1, 2, 3, 4};
  EXPECT_EQ(write_mot_tracks({t}), "3,1,1,2,3,4,1,-1,-1,-1\n");
  EXPECT_EQ(write_mot_tracks({}), "");
  Track u = t;
  u.track_id = 2;
  const auto text = write_mot_tracks({u, t});
  EXPECT_EQ(text, "3,1,1,2,3,4,1,-1,-1,-1\n3,2,1,2,3,4,1,-1,-1,-1\n");
}

TEST(MotIo, TrackRoundTripIsExactAtTwoDecimals) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> cents(0, 200000);
  std::vector<Track> tracks;
  for (int id = 1; id <= 5; ++id) {
    Track t;
    t.track_id = id;
    t.video_id = "v";
    for (int f = id; f < id + 30; f += 1 + id % 3)
      t.observations[f] = Box{cents(rng) / 100.0, cents(rng) / 100.0, cents(rng) / 100.0 + 1,
                              cents(rng) / 100.0 + 1};
    tracks.push_back(t);
  }
  const auto text = write_mot_tracks(tracks);
  const auto back = parse_mot_tracks(text, "v");
  ASSERT_EQ(back.size(), tracks.size());
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    EXPECT_EQ(back[i].track_id, tracks[i].track_id);
    EXPECT_EQ(back[i].observations, tracks[i].observations);
  }
  EXPECT_EQ(write_mot_tracks(back), text);
}

TEST(MotIo, DuplicateTrackObservationRejected) {
  EXPECT_THROW(parse_mot_tracks(std::string("1,1,0,0,1,1,1\n1,1,0,0,1,1,1\n"), "v"), ParseError);
}

TEST(MotIo, CoordinateFormatting) {
  EXPECT_EQ(format_coordinate(10.0), "10");
  EXPECT_EQ(format_coordinate(10.5), "10.5");
  EXPECT_EQ(format_coordinate(0.125), "0.12");
  EXPECT_EQ(format_coordinate(-0.001), "0");
}

TEST(Records, Queries) {
  const std::string text =
      R"({"query_id":"q1","video_id":"v1","text":"a person walking"})" "\n"
      R"({"query_id":"q2","video_id":"v1","text":"a dog"})" "\n"
      R"({"query_id":"q3","video_id":"v2","text":"a car turning left"})" "\n";
  const auto q = parse_queries(text);
  ASSERT_EQ(q.size(), 3u);
  EXPECT_EQ(q[0].query_id, "q1");
  EXPECT_EQ(q[2].text, "a car turning left");
  EXPECT_EQ(parse_queries(write_queries(q)).size(), 3u);
  EXPECT_THROW(parse_queries(text + R"({"query_id":"q1","video_id":"v1","text":"x"})"), ParseError);
  EXPECT_THROW(parse_queries(std::string(R"({"query_id":"q1","video_id":"v1"})")), ParseError);
  EXPECT_THROW(parse_queries(std::string(R"({"query_id":"q1","video_id":"v1","text":""})")),
               ParseError);
  EXPECT_THROW(parse_queries(std::string("{not json")), ParseError);
}

TEST(Records, GroundTruthAndSubmissionRoundTrip) {
  GroundTruthEntry g{"q1", "v", {test::make_track("v", 4, 1, 3, Box{1, 2, 3, 4.5})}};
  const auto gt = parse_ground_truth(write_ground_truth({g}));
  ASSERT_EQ(gt.size(), 1u);
  EXPECT_EQ(gt[0].tracks[0].observations, g.tracks[0].observations);
  EXPECT_EQ(gt[0].tracks[0].track_id, 4);

  Submission s = {{"q1", "v", {{test::make_track("v", 2, 5, 6, Box{0, 0, 5, 5}), 0.75},
                               {test::make_track("v", 9, 1, 1, Box{1, 1, 5, 5}), 0.5}}}};
  const auto text = write_submission(s);
  const auto back = parse_submission(text);
  ASSERT_EQ(back.size(), 1u);
  ASSERT_EQ(back[0].ranked.size(), 2u);
  EXPECT_EQ(back[0].ranked[0].track.track_id, 2);
  EXPECT_EQ(back[0].ranked[1].score, 0.5);
  EXPECT_EQ(back[0].ranked[1].track.observations, s[0].ranked[1].track.observations);
  EXPECT_EQ(write_submission(back), text);
}

TEST(Records, Captions) {
  const std::vector<CaptionRecord> c = {{"v", 1, "walks left"}, {"v", 2, "stands"}};
  const auto back = parse_captions(write_captions(c));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].caption, "stands");
  EXPECT_THROW(parse_captions(std::string(R"({"video_id":"v","track_id":1,"caption":""})")),
               ParseError);
}

TEST(Embeddings, ZeroVectorRoundTrip) {
  EmbeddingMap m;
  m[{"v", 1}] = EmbeddingVector::Zero(kEmbeddingDim);
  std::stringstream ss;
  write_embeddings(ss, m);
  const auto back = read_embeddings(ss);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back.at({"v", 1}), m.at({"v", 1}));
}

TEST(Embeddings, RandomVectorsByteIdentical) {
  std::mt19937_64 rng(9);
  std::normal_distribution<float> n;
  EmbeddingMap m;
  for (int i = 0; i < 100; ++i) {
    EmbeddingVector v(kEmbeddingDim);
    for (int j = 0; j < kEmbeddingDim; ++j) v(j) = n(rng);
    m[{"video-" + std::to_string(i % 7), i}] = v;
  }
  std::stringstream a;
  write_embeddings(a, m);
  const std::string bytes = a.str();
  EXPECT_EQ(bytes.substr(0, 8), "STEMB001");
  std::stringstream in(bytes);
  const auto back = read_embeddings(in);
  EXPECT_EQ(back, m);
  std::stringstream b;
  write_embeddings(b, back);
  EXPECT_EQ(b.str(), bytes);
}

TEST(Embeddings, DimensionMismatchAndCorruption) {
  EmbeddingMap m;
  m[{"v", 1}] = EmbeddingVector::Ones(512);
  std::stringstream ss;
  write_embeddings(ss, m, 512);
  const std::string bytes = ss.str();
  std::stringstream in(bytes);
  EXPECT_THROW(read_embeddings(in), Error);
  std::stringstream in512(bytes);
  EXPECT_EQ(read_embeddings(in512, 512).size(), 1u);
  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(read_embeddings(truncated, 512), Error);
  std::stringstream bad_magic("XXXXXXXX" + bytes.substr(8));
  EXPECT_THROW(read_embeddings(bad_magic, 512), Error);
  std::stringstream out;
  EXPECT_THROW(write_embeddings(out, m), Error);  // vector size disagrees with dim
}

TEST(Embeddings, FileRoundTrip) {
  test::TempDir dir("emb");
  EmbeddingMap m;
  m[{"v", 3}] = EmbeddingVector::Constant(kEmbeddingDim, 0.25f);
  save_embeddings((dir / "x/e.bin").string(), m);
  EXPECT_EQ(load_embeddings((dir / "x/e.bin").string()), m);
  EXPECT_THROW(load_embeddings((dir / "missing.bin").string()), Error);
}
