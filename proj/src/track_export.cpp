#include "stag/track_export.hpp"

#include "stag/mot_io.hpp"

#include "json.hpp"

#include <fmt/args.h>
#include <fmt/format.h>

#include <charconv>
#include <iterator>
#include <sstream>

namespace stag {

std::vector<int> sample_frames_evenly(const std::vector<int>& frames, int count) {
  if (frames.empty()) throw Error("sample_frames_evenly: empty frame list");
  if (count < 1) throw Error("sample_frames_evenly: count must be >= 1");
  const auto n = static_cast<long long>(frames.size());
  if (n <= count) return frames;
  if (count == 1) return {frames.front()};
  const long long span = n - 1;
  const long long steps = count - 1;
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(count));
  for (long long i = 0; i < count; ++i) {
    // round(i * span / steps) in exact integer arithmetic, halves rounded up.
    const long long pos = (2 * i * span + steps) / (2 * steps);
    out.push_back(frames[static_cast<std::size_t>(pos)]);
  }
  return out;
}

std::string ClipManifest::frame_path(int frame) const {
  try {
    return fmt::format(fmt::runtime(frame_path_template), fmt::arg("video_id", video_id),
                       fmt::arg("frame", frame));
  } catch (const fmt::format_error& e) {
    throw Error("bad frame path template '" + frame_path_template + "': " + e.what());
  }
}

ClipManifest build_clip_manifest(const Track& track, const VideoMeta& meta, int count) {
  if (track.empty()) throw Error("build_clip_manifest: track has no observations");
  ClipManifest m;
  m.video_id = track.video_id;
  m.track_id = track.track_id;
  m.first_frame = track.first_frame();
  m.last_frame = track.last_frame();
  m.frame_path_template = meta.frame_path_template;

  std::vector<int> span;
  span.reserve(static_cast<std::size_t>(m.last_frame - m.first_frame + 1));
  for (int f = m.first_frame; f <= m.last_frame; ++f) span.push_back(f);
  m.sampled_frames = sample_frames_evenly(span, count);

  const auto& obs = track.observations;
  for (int f : m.sampled_frames) {
    auto later = obs.lower_bound(f);
    if (later != obs.end() && later->first == f) {
      m.overlays[f] = later->second;
      continue;
    }
    // later != begin, since f > first_frame here
    auto earlier = std::prev(later);
    if (later == obs.end() || f - earlier->first <= later->first - f)
      m.overlays[f] = earlier->second;
    else
      m.overlays[f] = later->second;
  }
  return m;
}

std::string render_overlay_script(const ClipManifest& manifest) {
  std::string out;
  for (int f : manifest.sampled_frames) {
    const Box& b = manifest.overlays.at(f);
    out += std::to_string(f) + '\t' + manifest.frame_path(f) + '\t' + format_coordinate(b.left) +
           ',' + format_coordinate(b.top) + ',' + format_coordinate(b.width) + ',' +
           format_coordinate(b.height) + '\t' + manifest.highlight_color + '\n';
  }
  return out;
}

namespace {

double real_field(const std::string& s, std::size_t line_no) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError(line_no, "bad number '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

}  // namespace

std::vector<OverlayRecord> parse_overlay_script(const std::string& text) {
  std::vector<OverlayRecord> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cols = split(line, '\t');
    if (cols.size() != 4) throw ParseError(line_no, "expected 4 tab-separated columns");
    const auto coords = split(cols[2], ',');
    if (coords.size() != 4) throw ParseError(line_no, "box must be left,top,width,height");
    OverlayRecord r;
    r.frame = static_cast<int>(real_field(cols[0], line_no));
    r.frame_path = cols[1];
    r.box = Box{real_field(coords[0], line_no), real_field(coords[1], line_no),
                real_field(coords[2], line_no), real_field(coords[3], line_no)};
    r.color = cols[3];
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

nlohmann::ordered_json manifest_to_json(const ClipManifest& m) {
  nlohmann::ordered_json j;
  j["video_id"] = m.video_id;
  j["track_id"] = m.track_id;
  j["frame_span"] = {m.first_frame, m.last_frame};
  j["sampled_frames"] = m.sampled_frames;
  auto overlays = nlohmann::ordered_json::array();
  for (int f : m.sampled_frames) {
    const Box& b = m.overlays.at(f);
    overlays.push_back({f, b.left, b.top, b.width, b.height});
  }
  j["overlays"] = std::move(overlays);
  j["frame_path_template"] = m.frame_path_template;
  j["highlight_color"] = m.highlight_color;
  j["line_width"] = m.line_width;
  return j;
}

}  // namespace

std::string write_manifests(const std::vector<ClipManifest>& manifests) {
  std::string out;
  for (const auto& m : manifests) out += manifest_to_json(m).dump() + "\n";
  return out;
}

std::vector<ClipManifest> parse_manifests(const std::string& text) {
  std::vector<ClipManifest> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ClipManifest m;
      m.video_id = j.at("video_id").get<std::string>();
      m.track_id = j.at("track_id").get<int>();
      m.first_frame = j.at("frame_span").at(0).get<int>();
      m.last_frame = j.at("frame_span").at(1).get<int>();
      m.sampled_frames = j.at("sampled_frames").get<std::vector<int>>();
      for (const auto& o : j.at("overlays"))
        m.overlays[o.at(0).get<int>()] = Box{o.at(1).get<double>(), o.at(2).get<double>(),
                                             o.at(3).get<double>(), o.at(4).get<double>()};
      m.frame_path_template = j.at("frame_path_template").get<std::string>();
      m.highlight_color = j.value("highlight_color", std::string("green"));
      m.line_width = j.value("line_width", 3);
      for (int f : m.sampled_frames)
        if (!m.overlays.count(f)) throw ParseError(line_no, "sampled frame without overlay");
      out.push_back(std::move(m));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return out;
}

std::string manifest_fingerprint(const ClipManifest& manifest) {
  return manifest_to_json(manifest).dump();
}

}  // namespace stag
