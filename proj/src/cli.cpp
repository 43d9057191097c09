#include "stag/cli.hpp"

#include "stag/adapter_client.hpp"
#include "stag/fixture.hpp"
#include "stag/fs.hpp"
#include "stag/mot_io.hpp"
#include "stag/records_io.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <fmt/format.h>

#include <cstdlib>
#include <iostream>
#include <memory>

namespace stag::cli {
namespace {

std::string resolve_adapter_url(const BackendOptions& b) {
  if (!b.adapter_url.empty()) return b.adapter_url;
  if (const char* env = std::getenv(kAdapterUrlEnv)) return env;
  throw Error(std::string("remote backend needs --adapter-url or $") + kAdapterUrlEnv);
}

struct Backends {
  std::unique_ptr<Captioner> captioner;
  std::unique_ptr<Embedder> embedder;
};

Backends make_backends(const BackendOptions& b) {
  Backends out;
  if (b.backend == "stub") {
    out.captioner = std::make_unique<StubCaptioner>();
    out.embedder = std::make_unique<HashEmbedder>();
  } else if (b.backend == "remote") {
    const std::string url = resolve_adapter_url(b);
    out.captioner = std::make_unique<RemoteCaptioner>(AdapterClient(url));
    out.embedder = std::make_unique<RemoteEmbedder>(AdapterClient(url));
  } else {
    throw Error("unknown backend '" + b.backend + "' (expected stub or remote)");
  }
  return out;
}

std::map<TrackKey, Track> load_track_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("tracks directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::map<TrackKey, Track> out;
  for (const auto& f : files) {
    const std::string video = f.stem().string();
    for (auto& t : parse_mot_tracks(read_file(f), video))
      out.emplace(TrackKey{video, t.track_id}, std::move(t));
  }
  return out;
}

}  // namespace

std::vector<std::string> discover_videos(const fs::path& dataset) {
  if (!fs::is_directory(dataset)) throw Error("dataset directory not found: " + dataset.string());
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(dataset))
    if (entry.is_directory() && fs::exists(entry.path() / "det" / "det.txt"))
      out.push_back(entry.path().filename().string());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> parse_alpha_grid(const std::string& text) {
  std::vector<double> grid;
  auto to_double = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw Error("bad alpha grid '" + text + "'");
    }
  };
  if (text.find(':') != std::string::npos) {
    const auto a = text.find(':');
    const auto b = text.find(':', a + 1);
    if (b == std::string::npos) throw Error("alpha grid range must be lo:hi:step");
    const double lo = to_double(text.substr(0, a));
    const double hi = to_double(text.substr(a + 1, b - a - 1));
    const double step = to_double(text.substr(b + 1));
    if (!(step > 0.0) || hi < lo) throw Error("bad alpha grid range '" + text + "'");
    const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
    for (int i = 0; i <= n; ++i) grid.push_back(lo + step * i);
  } else {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) grid.push_back(to_double(item));
  }
  if (grid.empty()) throw Error("empty alpha grid");
  return grid;
}

TrackStageResult stage_track(const fs::path& dataset, const std::vector<std::string>& videos,
                             const TrackerConfig& config, const fs::path& out,
                             const std::optional<fs::path>& import_dir) {
  TrackStageResult result;
  const fs::path tracks_dir = out / "tracks";
  fs::create_directories(tracks_dir);
  if (import_dir) {
    if (!fs::is_directory(*import_dir))
      throw Error("import directory not found: " + import_dir->string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(*import_dir))
      if (entry.is_regular_file() && entry.path().extension() == ".txt")
        files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      const std::string video = f.stem().string();
      const auto tracks = parse_mot_tracks(read_file(f), video);
      write_file_atomic(tracks_dir / (video + ".txt"), write_mot_tracks(tracks));
      result.counts.emplace_back(video, tracks.size());
    }
  } else {
    for (const auto& video : videos) {
      const fs::path det = dataset / video / "det" / "det.txt";
      if (!fs::exists(det)) throw Error("missing detection file " + det.string());
      const auto tracks = run_sequence(parse_mot_detections(read_file(det)), config, video);
      write_file_atomic(tracks_dir / (video + ".txt"), write_mot_tracks(tracks));
      result.counts.emplace_back(video, tracks.size());
    }
  }
  std::string summary = "video_id\ttracks\n";
  for (const auto& [video, n] : result.counts) summary += video + "\t" + std::to_string(n) + "\n";
  write_file_atomic(out / "track_counts.tsv", summary);
  return result;
}

std::vector<ClipManifest> stage_export(const fs::path& tracks_dir, const VideoMeta& meta,
                                       int frames, const fs::path& out) {
  std::vector<ClipManifest> manifests;
  for (const auto& [key, track] : load_track_dir(tracks_dir)) {
    manifests.push_back(build_clip_manifest(track, meta, frames));
    write_file_atomic(out / "overlays" / fmt::format("{}-{}.tsv", key.video_id, key.track_id),
                      render_overlay_script(manifests.back()));
  }
  write_file_atomic(out / "manifests.jsonl", write_manifests(manifests));
  return manifests;
}

CaptionStageResult stage_caption(const fs::path& manifests_path, const fs::path& captions_out,
                                 const PromptConfig& prompt, const BackendOptions& backend,
                                 const std::optional<fs::path>& cache) {
  const auto manifests = parse_manifests(read_file(manifests_path));
  auto backends = make_backends(backend);
  CachingCaptioner cached(*backends.captioner);
  if (cache) cached.load(cache->string());
  CaptionOptions opts;
  opts.max_in_flight = backend.max_in_flight;
  const auto outcomes = caption_tracks(manifests, prompt, cached, opts);

  CaptionStageResult result;
  result.tracks = outcomes.size();
  std::vector<CaptionRecord> records;
  for (const auto& o : outcomes) {
    if (o.ok())
      records.push_back({o.video_id, o.track_id, o.caption});
    else
      result.failures.push_back(o);
  }
  result.cache_hits = cached.hits();
  result.cache_misses = cached.misses();
  write_file_atomic(captions_out, write_captions(records));
  if (cache) cached.save(cache->string());

  nlohmann::ordered_json stats;
  stats["tracks"] = result.tracks;
  stats["cache_hits"] = result.cache_hits;
  stats["cache_misses"] = result.cache_misses;
  stats["failures"] = result.failures.size();
  stats["backend"] = cached.backend_id();
  write_file_atomic(captions_out.parent_path() / "caption_stats.json", stats.dump(2) + "\n");
  return result;
}

Submission stage_retrieve(const fs::path& queries_path, const fs::path& captions_path,
                          const fs::path& tracks_dir, const fs::path& submission_out,
                          const RetrieveOptions& options, const BackendOptions& backend) {
  const auto queries = parse_queries(read_file(queries_path));
  const auto captions = parse_captions(read_file(captions_path));
  const auto tracks = load_track_dir(tracks_dir);
  auto backends = make_backends(backend);
  CachingEmbedder embedder(*backends.embedder);
  if (options.embed_cache) embedder.load(options.embed_cache->string());

  std::vector<std::string> caption_texts;
  for (const auto& c : captions) caption_texts.push_back(c.caption);
  const auto caption_vecs = embed_texts(caption_texts, embedder);
  EmbeddingMap candidates;
  for (std::size_t i = 0; i < captions.size(); ++i)
    candidates.emplace(TrackKey{captions[i].video_id, captions[i].track_id}, caption_vecs[i]);

  std::vector<std::string> query_texts;
  for (const auto& q : queries) query_texts.push_back(q.text);
  const auto query_vecs = embed_texts(query_texts, embedder);

  std::vector<RetrievalResult> results;
  for (std::size_t i = 0; i < queries.size(); ++i)
    results.push_back(
        retrieve_topk(queries[i], query_vecs[i], candidates, options.k, options.same_video_only));
  auto submission = assemble_submission(results, tracks);
  write_file_atomic(submission_out, write_submission(submission));
  if (options.embeddings_out) {
    std::ostringstream bytes;
    write_embeddings(bytes, candidates);
    write_file_atomic(*options.embeddings_out, bytes.str());
  }
  if (options.embed_cache) embedder.save(options.embed_cache->string());
  return submission;
}

EvalReport stage_evaluate(const fs::path& gt, const fs::path& pred, const fs::path& report_out,
                          const MetricsConfig& config, const std::string& method) {
  const auto truth = parse_ground_truth(read_file(gt));
  const auto submission = parse_submission(read_file(pred));
  const auto report = evaluate(submission, truth, config);
  write_file_atomic(report_out, format_report_table(report, method));
  auto records = report_out;
  records.replace_extension(".jsonl");
  if (records == report_out) records += ".jsonl";
  write_file_atomic(records, format_report_records(report));
  return report;
}

// ---------------------------------------------------------------------------
// Command line

namespace {

struct MetricFlags {
  std::string alpha_grid;
  bool unranked_set = false;
  bool miou_all_ranks = false;
  bool pooled = false;

  void add(CLI::App& app) {
    app.add_option("--alpha-grid", alpha_grid, "lo:hi:step or comma list (default 0.05:0.95:0.05)");
    app.add_flag("--unranked-set", unranked_set, "R-k@X ignores rank order");
    app.add_flag("--miou-all-ranks", miou_all_ranks, "mIoU over all ranked predictions");
    app.add_flag("--pooled-hota", pooled, "pool HOTA counts over queries");
  }
  MetricsConfig config() const {
    MetricsConfig c;
    if (!alpha_grid.empty()) c.alpha_grid = parse_alpha_grid(alpha_grid);
    c.unranked_set = unranked_set;
    c.miou_all_ranks = miou_all_ranks;
    c.pooled_hota = pooled;
    c.validate();
    return c;
  }
};

void add_backend_flags(CLI::App& app, BackendOptions& b) {
  app.add_option("--backend", b.backend, "stub | remote")
      ->check(CLI::IsMember({"stub", "remote"}));
  app.add_option("--adapter-url", b.adapter_url, "model adapter base URL")
      ->envname(kAdapterUrlEnv);
  app.add_option("--max-in-flight", b.max_in_flight, "concurrent caption requests")
      ->check(CLI::PositiveNumber);
}

PromptConfig load_prompt(const std::string& prompt_file) {
  PromptConfig p;
  if (!prompt_file.empty()) {
    p.prompt_text = read_file(prompt_file);
    while (!p.prompt_text.empty() &&
           (p.prompt_text.back() == '\n' || p.prompt_text.back() == '\r'))
      p.prompt_text.pop_back();
    if (p.prompt_text.empty()) throw Error("prompt file is empty");
  }
  return p;
}

TrackerConfig load_config_or_default(const std::string& path) {
  return path.empty() ? TrackerConfig{} : load_tracker_config(path);
}

void report_caption(const CaptionStageResult& r) {
  const double pct = r.tracks ? 100.0 * static_cast<double>(r.cache_hits) / r.tracks : 100.0;
  std::cerr << fmt::format("caption: {} tracks, {} cache hits ({:.1f}%), {} failures\n", r.tracks,
                           r.cache_hits, pct, r.failures.size());
  for (const auto& f : r.failures)
    std::cerr << fmt::format("caption: {}/{} failed: {}\n", f.video_id, f.track_id, f.error);
}

}  // namespace

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Spatiotemporal action grounding: track, caption, retrieve, evaluate"};
  app.name("stag");
  app.set_config("--config-file", "", "TOML/INI file with option defaults");
  app.require_subcommand(1);

  // track
  std::string dataset, out, config_path, import_dir;
  std::vector<std::string> videos;
  auto* track = app.add_subcommand("track", "run the tracker on every video of a dataset");
  track->add_option("--dataset", dataset, "dataset root (<video>/det/det.txt)");
  track->add_option("--videos", videos, "subset of videos")->delimiter(',');
  track->add_option("--config", config_path, "tracker config (JSON)");
  track->add_option("--import-tracks", import_dir, "import MOT track files instead of tracking");
  track->add_option("--out", out, "output directory")->required();

  // export
  std::string tracks_dir, frames_template = VideoMeta{}.frame_path_template;
  int frames = kCaptionFrames;
  auto* exp = app.add_subcommand("export", "build per-track clip manifests and overlay scripts");
  exp->add_option("--tracks", tracks_dir, "directory of <video>.txt track files")->required();
  exp->add_option("--frames-template", frames_template, "frame path template");
  exp->add_option("--frames", frames, "frames per clip")->check(CLI::PositiveNumber);
  exp->add_option("--out", out, "output directory")->required();

  // caption
  std::string manifests, captions, prompt_file, cache;
  BackendOptions backend;
  auto* cap = app.add_subcommand("caption", "caption every clip manifest");
  cap->add_option("--manifests", manifests)->required();
  cap->add_option("--out", captions, "captions.jsonl")->required();
  cap->add_option("--prompt-file", prompt_file);
  cap->add_option("--cache", cache, "caption cache file");
  add_backend_flags(*cap, backend);

  // retrieve
  std::string queries, submission_path, embeddings_out, embed_cache;
  int k = kDefaultTopK;
  bool corpus_wide = false;
  auto* ret = app.add_subcommand("retrieve", "rank tracks for every query");
  ret->add_option("--queries", queries)->required();
  ret->add_option("--captions", captions)->required();
  ret->add_option("--tracks", tracks_dir)->required();
  ret->add_option("--out", submission_path, "submission.jsonl")->required();
  ret->add_option("--k", k)->check(CLI::PositiveNumber);
  ret->add_flag("--corpus-wide", corpus_wide, "retrieve from all videos");
  ret->add_option("--embeddings", embeddings_out, "write caption embeddings here");
  ret->add_option("--embed-cache", embed_cache);
  add_backend_flags(*ret, backend);

  // evaluate
  std::string gt, pred, report, method = "stag";
  MetricFlags metric_flags;
  auto* ev = app.add_subcommand("evaluate", "score a submission against ground truth");
  ev->add_option("--gt", gt)->required();
  ev->add_option("--pred", pred)->required();
  ev->add_option("--report", report, "text table; records go to the .jsonl sibling")->required();
  ev->add_option("--method", method, "row label");
  metric_flags.add(*ev);

  // pipeline
  std::string queries_opt, gt_opt;
  auto* pipe = app.add_subcommand("pipeline", "track -> export -> caption -> retrieve -> evaluate");
  pipe->add_option("--dataset", dataset)->required();
  pipe->add_option("--out", out)->required();
  pipe->add_option("--config", config_path, "tracker config (JSON)");
  pipe->add_option("--import-tracks", import_dir);
  pipe->add_option("--videos", videos)->delimiter(',');
  pipe->add_option("--queries", queries_opt, "default <dataset>/queries.jsonl");
  pipe->add_option("--gt", gt_opt, "default <dataset>/gt.jsonl when present");
  pipe->add_option("--frames-template", frames_template);
  pipe->add_option("--prompt-file", prompt_file);
  pipe->add_option("--k", k)->check(CLI::PositiveNumber);
  pipe->add_flag("--corpus-wide", corpus_wide);
  add_backend_flags(*pipe, backend);
  metric_flags.add(*pipe);

  // make-fixture
  FixtureOptions fx;
  auto* mk = app.add_subcommand("make-fixture", "write a seeded synthetic dataset");
  mk->add_option("--out", out)->required();
  mk->add_option("--seed", fx.seed);
  mk->add_option("--scene", fx.scene)->check(CLI::IsMember({"mixed", "crossing", "dropout"}));
  mk->add_option("--videos", fx.videos)->check(CLI::PositiveNumber);
  mk->add_option("--frames", fx.frames)->check(CLI::Range(2, 100000));
  mk->add_option("--dropout-frames", fx.dropout_frames)->check(CLI::NonNegativeNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, std::cout, std::cerr);
  }

  std::string stage = "setup";
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (*track) {
      stage = "track";
      const auto cfg = load_config_or_default(config_path);
      const auto vids = !import_dir.empty() ? std::vector<std::string>{}
                        : videos.empty()    ? discover_videos(dataset)
                                            : videos;
      const auto r = stage_track(dataset, vids, cfg, out,
                                 import_dir.empty() ? std::nullopt
                                                    : std::optional<fs::path>(import_dir));
      for (const auto& [v, n] : r.counts) std::cerr << "track: " << v << ": " << n << " tracks\n";
    } else if (*exp) {
      stage = "export";
      const auto m = stage_export(tracks_dir, VideoMeta{frames_template}, frames, out);
      std::cerr << "export: " << m.size() << " manifests\n";
    } else if (*cap) {
      stage = "caption";
      const auto r =
          stage_caption(manifests, captions, load_prompt(prompt_file), backend,
                        cache.empty() ? std::nullopt : std::optional<fs::path>(cache));
      report_caption(r);
      if (!r.failures.empty()) return 1;
    } else if (*ret) {
      stage = "retrieve";
      RetrieveOptions opts;
      opts.k = k;
      opts.same_video_only = !corpus_wide;
      if (!embeddings_out.empty()) opts.embeddings_out = embeddings_out;
      if (!embed_cache.empty()) opts.embed_cache = embed_cache;
      const auto s = stage_retrieve(queries, captions, tracks_dir, submission_path, opts, backend);
      std::cerr << "retrieve: " << s.size() << " queries\n";
    } else if (*ev) {
      stage = "evaluate";
      const auto r = stage_evaluate(gt, pred, report, metric_flags.config(), method);
      std::cerr << fmt::format("evaluate: m-HIoU {:.2f}, HOTA {:.2f}, mIoU {:.2f}\n", r.m_hiou,
                               r.hota, r.miou);
    } else if (*pipe) {
      const fs::path root(dataset), dir(out);
      const auto metrics = metric_flags.config();
      stage = "track";
      const auto cfg = load_config_or_default(config_path);
      const auto vids = !import_dir.empty() ? std::vector<std::string>{}
                        : videos.empty()    ? discover_videos(root)
                                            : videos;
      const auto tr = stage_track(root, vids, cfg, dir,
                                  import_dir.empty() ? std::nullopt
                                                     : std::optional<fs::path>(import_dir));
      for (const auto& [v, n] : tr.counts) std::cerr << "track: " << v << ": " << n << " tracks\n";
      stage = "export";
      stage_export(dir / "tracks", VideoMeta{frames_template}, kCaptionFrames, dir);
      stage = "caption";
      const auto cr = stage_caption(dir / "manifests.jsonl", dir / "captions.jsonl",
                                    load_prompt(prompt_file), backend, dir / "caption_cache.jsonl");
      report_caption(cr);
      if (!cr.failures.empty()) throw Error(std::to_string(cr.failures.size()) + " captions failed");
      stage = "retrieve";
      RetrieveOptions opts;
      opts.k = k;
      opts.same_video_only = !corpus_wide;
      opts.embeddings_out = dir / "caption_embeddings.bin";
      opts.embed_cache = dir / "embed_cache.bin";
      stage_retrieve(queries_opt.empty() ? root / "queries.jsonl" : fs::path(queries_opt),
                     dir / "captions.jsonl", dir / "tracks", dir / "submission.jsonl", opts,
                     backend);
      const fs::path gt_path = gt_opt.empty() ? root / "gt.jsonl" : fs::path(gt_opt);
      if (!gt_opt.empty() || fs::exists(gt_path)) {
        stage = "evaluate";
        const auto r = stage_evaluate(gt_path, dir / "submission.jsonl", dir / "report.txt",
                                      metrics);
        std::cerr << fmt::format("evaluate: m-HIoU {:.2f}, HOTA {:.2f}, mIoU {:.2f}\n", r.m_hiou,
                                 r.hota, r.miou);
      }
    } else if (*mk) {
      stage = "make-fixture";
      write_fixture(make_fixture(fx), out);
    }
  } catch (const std::exception& e) {
    std::cerr << "stag " << command << ": stage '" << stage << "' failed: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace stag::cli
