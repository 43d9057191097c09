#include "stag/records_io.hpp"

#include "json.hpp"

#include <cmath>
#include <functional>
#include <istream>
#include <set>
#include <sstream>

namespace stag {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

void for_each_record(std::istream& in, const std::function<void(std::size_t, const json&)>& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!record.is_object()) throw ParseError(line_no, "record is not an object");
    try {
      fn(line_no, record);
    } catch (const json::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
}

std::string string_field(const json& record, const char* key, std::size_t line_no) {
  const auto it = record.find(key);
  if (it == record.end()) throw ParseError(line_no, std::string("missing key '") + key + "'");
  if (!it->is_string()) throw ParseError(line_no, std::string("key '") + key + "' is not a string");
  return it->get<std::string>();
}

int int_field(const json& record, const char* key, std::size_t line_no) {
  const auto it = record.find(key);
  if (it == record.end()) throw ParseError(line_no, std::string("missing key '") + key + "'");
  if (!it->is_number_integer())
    throw ParseError(line_no, std::string("key '") + key + "' is not an integer");
  return it->get<int>();
}

ordered_json boxes_to_json(const Track& track) {
  ordered_json boxes = ordered_json::array();
  for (const auto& [frame, b] : track.observations)
    boxes.push_back(ordered_json::array({frame, b.left, b.top, b.width, b.height}));
  return boxes;
}

void boxes_from_json(const json& boxes, Track& track, std::size_t line_no) {
  if (!boxes.is_array()) throw ParseError(line_no, "'boxes' is not an array");
  for (const auto& row : boxes) {
    if (!row.is_array() || row.size() != 5 || !row[0].is_number_integer())
      throw ParseError(line_no, "box entries must be [frame, left, top, width, height]");
    const int frame = row[0].get<int>();
    Box box{row[1].get<double>(), row[2].get<double>(), row[3].get<double>(),
            row[4].get<double>()};
    if (frame < 1) throw ParseError(line_no, "frame index must be >= 1");
    if (!box.valid()) throw ParseError(line_no, "invalid box");
    if (!track.observations.emplace(frame, box).second)
      throw ParseError(line_no, "duplicate frame " + std::to_string(frame) + " in track " +
                                    std::to_string(track.track_id));
  }
  if (track.observations.empty()) throw ParseError(line_no, "track has no boxes");
}

Track track_from_json(const json& item, const std::string& default_video, std::size_t line_no) {
  Track track;
  track.track_id = int_field(item, "track_id", line_no);
  track.video_id = item.contains("video_id") ? string_field(item, "video_id", line_no)
                                             : default_video;
  boxes_from_json(item.at("boxes"), track, line_no);
  return track;
}

}  // namespace

std::vector<Query> parse_queries(std::istream& in) {
  std::vector<Query> out;
  std::set<std::string> seen;
  for_each_record(in, [&](std::size_t line_no, const json& r) {
    Query q{string_field(r, "query_id", line_no), string_field(r, "video_id", line_no),
            string_field(r, "text", line_no)};
    if (q.text.empty()) throw ParseError(line_no, "empty query text");
    if (!seen.insert(q.query_id).second)
      throw ParseError(line_no, "duplicate query_id '" + q.query_id + "'");
    out.push_back(std::move(q));
  });
  return out;
}

std::vector<Query> parse_queries(const std::string& text) {
  std::istringstream in(text);
  return parse_queries(in);
}

std::string write_queries(const std::vector<Query>& queries) {
  std::string out;
  for (const auto& q : queries) {
    ordered_json r;
    r["query_id"] = q.query_id;
    r["video_id"] = q.video_id;
    r["text"] = q.text;
    out += r.dump() + "\n";
  }
  return out;
}

std::vector<GroundTruthEntry> parse_ground_truth(std::istream& in) {
  std::vector<GroundTruthEntry> out;
  std::set<std::string> seen;
  for_each_record(in, [&](std::size_t line_no, const json& r) {
    GroundTruthEntry e;
    e.query_id = string_field(r, "query_id", line_no);
    e.video_id = string_field(r, "video_id", line_no);
    if (!seen.insert(e.query_id).second)
      throw ParseError(line_no, "duplicate query_id '" + e.query_id + "'");
    const auto& tracks = r.at("tracks");
    if (!tracks.is_array() || tracks.empty())
      throw ParseError(line_no, "ground truth entry needs at least one track");
    for (const auto& t : tracks) e.tracks.push_back(track_from_json(t, e.video_id, line_no));
    out.push_back(std::move(e));
  });
  return out;
}

std::vector<GroundTruthEntry> parse_ground_truth(const std::string& text) {
  std::istringstream in(text);
  return parse_ground_truth(in);
}

std::string write_ground_truth(const std::vector<GroundTruthEntry>& entries) {
  std::string out;
  for (const auto& e : entries) {
    ordered_json r;
    r["query_id"] = e.query_id;
    r["video_id"] = e.video_id;
    r["tracks"] = ordered_json::array();
    for (const auto& t : e.tracks) {
      ordered_json jt;
      jt["track_id"] = t.track_id;
      if (t.video_id != e.video_id) jt["video_id"] = t.video_id;
      jt["boxes"] = boxes_to_json(t);
      r["tracks"].push_back(std::move(jt));
    }
    out += r.dump() + "\n";
  }
  return out;
}

Submission parse_submission(std::istream& in) {
  Submission out;
  std::set<std::string> seen;
  for_each_record(in, [&](std::size_t line_no, const json& r) {
    SubmissionEntry e;
    e.query_id = string_field(r, "query_id", line_no);
    e.video_id = string_field(r, "video_id", line_no);
    if (!seen.insert(e.query_id).second)
      throw ParseError(line_no, "duplicate query_id '" + e.query_id + "'");
    const auto& results = r.at("results");
    if (!results.is_array()) throw ParseError(line_no, "'results' is not an array");
    for (const auto& item : results) {
      ScoredTrack st;
      st.track = track_from_json(item, e.video_id, line_no);
      st.score = item.value("score", 0.0);
      e.ranked.push_back(std::move(st));
    }
    out.push_back(std::move(e));
  });
  return out;
}

Submission parse_submission(const std::string& text) {
  std::istringstream in(text);
  return parse_submission(in);
}

std::string write_submission(const Submission& submission) {
  std::string out;
  for (const auto& e : submission) {
    ordered_json r;
    r["query_id"] = e.query_id;
    r["video_id"] = e.video_id;
    r["results"] = ordered_json::array();
    int rank = 1;
    for (const auto& st : e.ranked) {
      ordered_json item;
      item["rank"] = rank++;
      item["video_id"] = st.track.video_id;
      item["track_id"] = st.track.track_id;
      item["score"] = st.score;
      item["boxes"] = boxes_to_json(st.track);
      r["results"].push_back(std::move(item));
    }
    out += r.dump() + "\n";
  }
  return out;
}

std::vector<CaptionRecord> parse_captions(std::istream& in) {
  std::vector<CaptionRecord> out;
  std::set<TrackKey> seen;
  for_each_record(in, [&](std::size_t line_no, const json& r) {
    CaptionRecord c{string_field(r, "video_id", line_no), int_field(r, "track_id", line_no),
                    string_field(r, "caption", line_no)};
    if (c.caption.empty()) throw ParseError(line_no, "empty caption");
    if (!seen.insert(TrackKey{c.video_id, c.track_id}).second)
      throw ParseError(line_no, "duplicate caption for " + c.video_id + "/" +
                                    std::to_string(c.track_id));
    out.push_back(std::move(c));
  });
  return out;
}

std::vector<CaptionRecord> parse_captions(const std::string& text) {
  std::istringstream in(text);
  return parse_captions(in);
}

std::string write_captions(const std::vector<CaptionRecord>& captions) {
  std::string out;
  for (const auto& c : captions) {
    ordered_json r;
    r["video_id"] = c.video_id;
    r["track_id"] = c.track_id;
    r["caption"] = c.caption;
    out += r.dump() + "\n";
  }
  return out;
}

}  // namespace stag
