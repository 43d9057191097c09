#include "stag/mot_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <sstream>
#include <string_view>
#include <tuple>

namespace stag {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

double parse_real(std::string_view field, std::size_t line_no, const char* name) {
  double value = 0.0;
  // from_chars rejects a leading '+', which some exporters emit.
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(value))
    throw ParseError(line_no, std::string("bad ") + name + " '" + std::string(field) + "'");
  return value;
}

int parse_index(std::string_view field, std::size_t line_no, const char* name) {
  const double value = parse_real(field, line_no, name);
  if (value != std::floor(value) || std::abs(value) > 1e9)
    throw ParseError(line_no, std::string(name) + " is not an integer");
  return static_cast<int>(value);
}

struct MotRow {
  int frame;
  int id;
  Box box;
  double conf;
};

// Calls `sink(line_no, row)` for every non-blank line.
template <typename Sink>
void for_each_row(std::istream& in, Sink&& sink) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = trim(line);
    if (view.empty()) continue;
    const auto fields = split_fields(view);
    if (fields.size() < 7)
      throw ParseError(line_no, "expected at least 7 comma-separated fields, got " +
                                    std::to_string(fields.size()));
    MotRow row;
    row.frame = parse_index(fields[0], line_no, "frame");
    row.id = parse_index(fields[1], line_no, "id");
    row.box = Box{parse_real(fields[2], line_no, "left"), parse_real(fields[3], line_no, "top"),
                  parse_real(fields[4], line_no, "width"),
                  parse_real(fields[5], line_no, "height")};
    row.conf = parse_real(fields[6], line_no, "confidence");
    if (row.frame < 1) throw ParseError(line_no, "frame index must be >= 1");
    if (row.box.width < 0 || row.box.height < 0)
      throw ParseError(line_no, "negative box width/height");
    sink(line_no, row);
  }
}

}  // namespace

std::string format_coordinate(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, 2);
  std::string out(buf, ptr);
  if (out.find('.') != std::string::npos) {
    while (out.back() == '0') out.pop_back();
    if (out.back() == '.') out.pop_back();
  }
  if (out == "-0") out = "0";
  return out;
}

DetectionsByFrame parse_mot_detections(std::istream& in) {
  DetectionsByFrame out;
  for_each_row(in, [&](std::size_t line_no, const MotRow& row) {
    if (row.conf < 0.0 || row.conf > 1.0)
      throw ParseError(line_no, "confidence outside [0,1]");
    out[row.frame].push_back(Detection{row.frame, row.box, row.conf});
  });
  return out;
}

DetectionsByFrame parse_mot_detections(const std::string& text) {
  std::istringstream in(text);
  return parse_mot_detections(in);
}

std::string write_mot_detections(const DetectionsByFrame& detections) {
  std::string out;
  for (const auto& [frame, dets] : detections)
    for (const auto& d : dets) {
      out += std::to_string(frame) + ",-1";
      for (double v : {d.box.left, d.box.top, d.box.width, d.box.height, d.score}) {
        out += ',';
        out += format_coordinate(v);
      }
      out += ",-1,-1,-1\n";
    }
  return out;
}

std::string write_mot_tracks(const std::vector<Track>& tracks) {
  std::vector<std::tuple<int, int, const Box*>> rows;
  for (const auto& t : tracks)
    for (const auto& [frame, box] : t.observations) rows.emplace_back(frame, t.track_id, &box);
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
  });
  std::string out;
  for (const auto& [frame, id, box] : rows) {
    out += std::to_string(frame);
    out += ',';
    out += std::to_string(id);
    for (double v : {box->left, box->top, box->width, box->height}) {
      out += ',';
      out += format_coordinate(v);
    }
    out += ",1,-1,-1,-1\n";
  }
  return out;
}

std::vector<Track> parse_mot_tracks(std::istream& in, const std::string& video_id) {
  std::map<int, Track> by_id;
  for_each_row(in, [&](std::size_t line_no, const MotRow& row) {
    if (row.id < 1) throw ParseError(line_no, "track id must be >= 1");
    auto& track = by_id[row.id];
    track.track_id = row.id;
    track.video_id = video_id;
    if (!track.observations.emplace(row.frame, row.box).second)
      throw ParseError(line_no, "duplicate observation for track " + std::to_string(row.id) +
                                    " in frame " + std::to_string(row.frame));
  });
  std::vector<Track> out;
  out.reserve(by_id.size());
  for (auto& [id, track] : by_id) out.push_back(std::move(track));
  return out;
}

std::vector<Track> parse_mot_tracks(const std::string& text, const std::string& video_id) {
  std::istringstream in(text);
  return parse_mot_tracks(in, video_id);
}

}  // namespace stag
