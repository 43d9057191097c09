#include "stag/metrics.hpp"

#include "stag/assignment.hpp"
#include "stag/geometry.hpp"

#include "json.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace stag {

std::vector<double> MetricsConfig::default_alpha_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 19; ++i) grid.push_back(0.05 * i);
  return grid;
}

void MetricsConfig::validate() const {
  if (alpha_grid.empty() || recall_k.empty() || recall_iou.empty())
    throw Error("metrics config: grids must be non-empty");
  for (double a : alpha_grid)
    if (!(a > 0.0 && a < 1.0)) throw Error("metrics config: alpha values must be in (0,1)");
  for (double x : recall_iou)
    if (!(x > 0.0 && x < 1.0)) throw Error("metrics config: recall IoU thresholds must be in (0,1)");
  for (int k : recall_k)
    if (k < 1) throw Error("metrics config: recall k must be >= 1");
}

double temporal_iou(const Track& pred, const Track& gt) {
  if (pred.empty() || gt.empty() || pred.video_id != gt.video_id) return 0.0;
  const int p0 = pred.first_frame(), p1 = pred.last_frame();
  const int g0 = gt.first_frame(), g1 = gt.last_frame();
  const int inter = std::min(p1, g1) - std::max(p0, g0) + 1;
  if (inter <= 0) return 0.0;
  const int uni = (p1 - p0 + 1) + (g1 - g0 + 1) - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

HotaCounts& HotaCounts::operator+=(const HotaCounts& o) {
  tp += o.tp;
  fn += o.fn;
  fp += o.fp;
  ass_a_sum += o.ass_a_sum;
  ass_re_sum += o.ass_re_sum;
  ass_pr_sum += o.ass_pr_sum;
  loc_sum += o.loc_sum;
  return *this;
}

namespace {

struct FrameDets {
  std::vector<int> gt_ids, pred_ids;
  std::vector<Box> gt_boxes, pred_boxes;
  Eigen::MatrixXd sim;
};

constexpr double kAlphaEps = std::numeric_limits<double>::epsilon();

}  // namespace

std::vector<HotaCounts> hota_counts(const std::vector<Track>& preds, const std::vector<Track>& gts,
                                    const std::vector<double>& alpha_grid) {
  const auto n_gt = static_cast<int>(gts.size());
  const auto n_pred = static_cast<int>(preds.size());
  std::vector<double> gt_count(n_gt), pred_count(n_pred);

  std::map<std::pair<std::string, int>, FrameDets> frames;
  for (int g = 0; g < n_gt; ++g) {
    gt_count[g] = static_cast<double>(gts[g].observations.size());
    for (const auto& [f, b] : gts[g].observations) {
      auto& fd = frames[{gts[g].video_id, f}];
      fd.gt_ids.push_back(g);
      fd.gt_boxes.push_back(b);
    }
  }
  for (int p = 0; p < n_pred; ++p) {
    pred_count[p] = static_cast<double>(preds[p].observations.size());
    for (const auto& [f, b] : preds[p].observations) {
      auto& fd = frames[{preds[p].video_id, f}];
      fd.pred_ids.push_back(p);
      fd.pred_boxes.push_back(b);
    }
  }
  double total_gt = 0, total_pred = 0;
  for (double c : gt_count) total_gt += c;
  for (double c : pred_count) total_pred += c;

  // Global alignment between identities, independent of alpha.
  Eigen::MatrixXd potential = Eigen::MatrixXd::Zero(n_gt, n_pred);
  for (auto& [key, fd] : frames) {
    const auto ng = static_cast<Eigen::Index>(fd.gt_ids.size());
    const auto np = static_cast<Eigen::Index>(fd.pred_ids.size());
    fd.sim.resize(ng, np);
    for (Eigen::Index i = 0; i < ng; ++i)
      for (Eigen::Index j = 0; j < np; ++j) fd.sim(i, j) = iou(fd.gt_boxes[i], fd.pred_boxes[j]);
    if (ng == 0 || np == 0) continue;
    const Eigen::VectorXd row_sum = fd.sim.rowwise().sum();
    const Eigen::RowVectorXd col_sum = fd.sim.colwise().sum();
    for (Eigen::Index i = 0; i < ng; ++i)
      for (Eigen::Index j = 0; j < np; ++j) {
        const double denom = row_sum(i) + col_sum(j) - fd.sim(i, j);
        if (denom > kAlphaEps) potential(fd.gt_ids[i], fd.pred_ids[j]) += fd.sim(i, j) / denom;
      }
  }
  Eigen::MatrixXd alignment = Eigen::MatrixXd::Zero(n_gt, n_pred);
  for (int g = 0; g < n_gt; ++g)
    for (int p = 0; p < n_pred; ++p) {
      const double pm = potential(g, p);
      if (pm > 0.0) alignment(g, p) = pm / (gt_count[g] + pred_count[p] - pm);
    }

  std::vector<HotaCounts> out(alpha_grid.size());
  for (std::size_t a = 0; a < alpha_grid.size(); ++a) {
    const double alpha = alpha_grid[a];
    HotaCounts& c = out[a];
    Eigen::MatrixXd matches = Eigen::MatrixXd::Zero(n_gt, n_pred);
    for (const auto& [key, fd] : frames) {
      const auto ng = fd.sim.rows();
      const auto np = fd.sim.cols();
      if (ng == 0 || np == 0) continue;
      // Cardinality first (the constant dominates any sum of weights <= min(ng, np)).
      const double dominance = static_cast<double>(std::min(ng, np)) + 1.0;
      Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(ng, np);
      for (Eigen::Index i = 0; i < ng; ++i)
        for (Eigen::Index j = 0; j < np; ++j)
          if (fd.sim(i, j) >= alpha - kAlphaEps && fd.sim(i, j) > 0.0)
            cost(i, j) = -(dominance + alignment(fd.gt_ids[i], fd.pred_ids[j]) * fd.sim(i, j));
      for (const auto& [i, j] : solve_assignment(cost)) {
        if (cost(i, j) >= 0.0) continue;
        c.tp += 1.0;
        c.loc_sum += fd.sim(i, j);
        matches(fd.gt_ids[i], fd.pred_ids[j]) += 1.0;
      }
    }
    c.fn = total_gt - c.tp;
    c.fp = total_pred - c.tp;
    for (int g = 0; g < n_gt; ++g)
      for (int p = 0; p < n_pred; ++p) {
        const double mc = matches(g, p);
        if (mc <= 0.0) continue;
        c.ass_a_sum += mc * (mc / (gt_count[g] + pred_count[p] - mc));
        c.ass_re_sum += mc * (mc / gt_count[g]);
        c.ass_pr_sum += mc * (mc / pred_count[p]);
      }
  }
  return out;
}

HotaComponents finalize_hota(const std::vector<HotaCounts>& counts) {
  HotaComponents r;
  if (counts.empty()) return r;
  for (const auto& c : counts) {
    double det_a, det_re, det_pr, ass_a, ass_re, ass_pr, loc_a;
    if (c.tp + c.fn + c.fp == 0.0) {
      // Nothing to detect and nothing predicted.
      det_a = det_re = det_pr = ass_a = ass_re = ass_pr = loc_a = 1.0;
    } else {
      det_a = c.tp / (c.tp + c.fn + c.fp);
      det_re = c.tp + c.fn > 0.0 ? c.tp / (c.tp + c.fn) : 0.0;
      det_pr = c.tp + c.fp > 0.0 ? c.tp / (c.tp + c.fp) : 0.0;
      const bool any = c.tp > 0.0;
      ass_a = any ? c.ass_a_sum / c.tp : 0.0;
      ass_re = any ? c.ass_re_sum / c.tp : 0.0;
      ass_pr = any ? c.ass_pr_sum / c.tp : 0.0;
      loc_a = any ? c.loc_sum / c.tp : 0.0;
    }
    const double hota = std::sqrt(det_a * ass_a);
    r.hota_alpha.push_back(hota);
    r.det_a_alpha.push_back(det_a);
    r.ass_a_alpha.push_back(ass_a);
    r.hota += hota;
    r.det_a += det_a;
    r.ass_a += ass_a;
    r.det_re += det_re;
    r.det_pr += det_pr;
    r.ass_re += ass_re;
    r.ass_pr += ass_pr;
    r.loc_a += loc_a;
  }
  const double n = static_cast<double>(counts.size());
  for (double* v : {&r.hota, &r.det_a, &r.ass_a, &r.det_re, &r.det_pr, &r.ass_re, &r.ass_pr,
                    &r.loc_a})
    *v /= n;
  return r;
}

HotaComponents hota_components(const std::vector<Track>& preds, const std::vector<Track>& gts,
                               const MetricsConfig& config) {
  return finalize_hota(hota_counts(preds, gts, config.alpha_grid));
}

namespace {

struct Paired {
  const GroundTruthEntry* gt;
  const SubmissionEntry* sub;  // null when the submission has no record for the query
};

// GT queries in query_id order, paired with their submission rows.
std::vector<Paired> pair_queries(const Submission& submission,
                                 const std::vector<GroundTruthEntry>& gt) {
  std::map<std::string, const GroundTruthEntry*> by_id;
  for (const auto& e : gt)
    if (!by_id.emplace(e.query_id, &e).second)
      throw Error("evaluate: duplicate ground-truth query " + e.query_id);
  std::map<std::string, const SubmissionEntry*> subs;
  for (const auto& s : submission) {
    if (!by_id.count(s.query_id))
      throw Error("evaluate: submission query " + s.query_id + " is not in the ground truth");
    if (!subs.emplace(s.query_id, &s).second)
      throw Error("evaluate: duplicate submission query " + s.query_id);
  }
  std::vector<Paired> out;
  for (const auto& [id, e] : by_id) {
    const auto it = subs.find(id);
    out.push_back({e, it == subs.end() ? nullptr : it->second});
  }
  return out;
}

std::vector<Track> predicted_tracks(const SubmissionEntry* s) {
  std::vector<Track> out;
  if (s)
    for (const auto& st : s->ranked) out.push_back(st.track);
  return out;
}

double best_tiou_against(const Track& pred, const GroundTruthEntry& gt) {
  double best = 0.0;
  for (const auto& g : gt.tracks) best = std::max(best, temporal_iou(pred, g));
  return best;
}

double query_miou(const std::vector<Track>& preds, const GroundTruthEntry& gt,
                  const MetricsConfig& config) {
  if (preds.empty() || gt.tracks.empty()) return 0.0;
  if (!config.miou_all_ranks) return best_tiou_against(preds.front(), gt);
  Eigen::MatrixXd cost(preds.size(), gt.tracks.size());
  for (std::size_t p = 0; p < preds.size(); ++p)
    for (std::size_t g = 0; g < gt.tracks.size(); ++g)
      cost(p, g) = -temporal_iou(preds[p], gt.tracks[g]);
  return -matching_cost(cost, solve_assignment(cost)) / static_cast<double>(gt.tracks.size());
}

bool recall_hit(const std::vector<Track>& preds, const GroundTruthEntry& gt, int k, double x,
                bool unranked) {
  const std::size_t n = unranked ? preds.size() : std::min(preds.size(), static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i)
    if (best_tiou_against(preds[i], gt) >= x - 1e-12) return true;
  return false;
}

}  // namespace

double compute_miou(const Submission& submission, const std::vector<GroundTruthEntry>& gt,
                    const MetricsConfig& config) {
  const auto paired = pair_queries(submission, gt);
  if (paired.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& q : paired) sum += query_miou(predicted_tracks(q.sub), *q.gt, config);
  return sum / static_cast<double>(paired.size());
}

RecallGrid compute_recall_grid(const Submission& submission,
                               const std::vector<GroundTruthEntry>& gt,
                               const MetricsConfig& config) {
  const auto paired = pair_queries(submission, gt);
  RecallGrid grid;
  for (int k : config.recall_k)
    for (double x : config.recall_iou) {
      double hits = 0.0;
      for (const auto& q : paired)
        hits += recall_hit(predicted_tracks(q.sub), *q.gt, k, x, config.unranked_set) ? 1.0 : 0.0;
      grid[{k, x}] = paired.empty() ? 0.0 : 100.0 * hits / static_cast<double>(paired.size());
    }
  return grid;
}

EvalReport evaluate(const Submission& submission, const std::vector<GroundTruthEntry>& gt,
                    const MetricsConfig& config) {
  config.validate();
  const auto paired = pair_queries(submission, gt);
  EvalReport report;
  std::vector<HotaCounts> pooled(config.alpha_grid.size());
  HotaComponents mean;
  double miou_sum = 0.0;
  for (const auto& q : paired) {
    const auto preds = predicted_tracks(q.sub);
    const auto counts = hota_counts(preds, q.gt->tracks, config.alpha_grid);
    for (std::size_t a = 0; a < counts.size(); ++a) pooled[a] += counts[a];
    QueryReport qr;
    qr.query_id = q.gt->query_id;
    qr.hota = finalize_hota(counts);
    qr.miou = query_miou(preds, *q.gt, config);
    for (const auto& p : preds) qr.best_tiou = std::max(qr.best_tiou, best_tiou_against(p, *q.gt));
    mean.hota += qr.hota.hota;
    mean.det_a += qr.hota.det_a;
    mean.ass_a += qr.hota.ass_a;
    mean.det_re += qr.hota.det_re;
    mean.det_pr += qr.hota.det_pr;
    mean.ass_re += qr.hota.ass_re;
    mean.ass_pr += qr.hota.ass_pr;
    mean.loc_a += qr.hota.loc_a;
    miou_sum += qr.miou;
    report.queries.push_back(std::move(qr));
  }
  const double n = paired.empty() ? 1.0 : static_cast<double>(paired.size());
  const HotaComponents h = config.pooled_hota ? finalize_hota(pooled) : [&] {
    HotaComponents m = mean;
    for (double* v : {&m.hota, &m.det_a, &m.ass_a, &m.det_re, &m.det_pr, &m.ass_re, &m.ass_pr,
                      &m.loc_a})
      *v /= n;
    return m;
  }();
  report.hota = 100.0 * h.hota;
  report.det_a = 100.0 * h.det_a;
  report.ass_a = 100.0 * h.ass_a;
  report.det_re = 100.0 * h.det_re;
  report.det_pr = 100.0 * h.det_pr;
  report.ass_re = 100.0 * h.ass_re;
  report.ass_pr = 100.0 * h.ass_pr;
  report.loc_a = 100.0 * h.loc_a;
  report.miou = 100.0 * miou_sum / n;
  report.m_hiou = compute_mhiou(report.hota, report.miou);
  report.recall_grid = compute_recall_grid(submission, gt, config);
  return report;
}

namespace {

std::string threshold_label(double x) { return fmt::format("{:g}", x); }

}  // namespace

std::string format_report_table(const EvalReport& report, const std::string& method) {
  std::vector<std::string> headers = {"Method", "m-HIoU", "HOTA",  "mIoU",  "DetA", "AssA",
                                      "DetRe",  "DetPr",  "AssRe", "AssPr", "LocA"};
  std::vector<std::string> values = {method};
  for (double v : {report.m_hiou, report.hota, report.miou, report.det_a, report.ass_a,
                   report.det_re, report.det_pr, report.ass_re, report.ass_pr, report.loc_a})
    values.push_back(fmt::format("{:.2f}", v));
  for (const auto& [key, v] : report.recall_grid) {
    headers.push_back(fmt::format("R{}@{}", key.first, threshold_label(key.second)));
    values.push_back(fmt::format("{:.2f}", v));
  }
  std::string head, row;
  for (std::size_t i = 0; i < headers.size(); ++i) {
    const std::size_t w = std::max(headers[i].size(), values[i].size());
    const char* sep = i + 1 < headers.size() ? "  " : "";
    head += fmt::format("{:>{}}{}", headers[i], w, sep);
    row += fmt::format("{:>{}}{}", values[i], w, sep);
  }
  return head + "\n" + row + "\n";
}

std::string format_report_records(const EvalReport& report) {
  nlohmann::ordered_json s;
  s["record"] = "summary";
  s["m_hiou"] = report.m_hiou;
  s["hota"] = report.hota;
  s["miou"] = report.miou;
  s["det_a"] = report.det_a;
  s["ass_a"] = report.ass_a;
  s["det_re"] = report.det_re;
  s["det_pr"] = report.det_pr;
  s["ass_re"] = report.ass_re;
  s["ass_pr"] = report.ass_pr;
  s["loc_a"] = report.loc_a;
  nlohmann::ordered_json recall;
  for (const auto& [key, v] : report.recall_grid)
    recall[fmt::format("R{}@{}", key.first, threshold_label(key.second))] = v;
  s["recall"] = std::move(recall);
  std::string out = s.dump() + "\n";
  for (const auto& q : report.queries) {
    nlohmann::ordered_json r;
    r["record"] = "query";
    r["query_id"] = q.query_id;
    r["hota"] = 100.0 * q.hota.hota;
    r["det_a"] = 100.0 * q.hota.det_a;
    r["ass_a"] = 100.0 * q.hota.ass_a;
    r["loc_a"] = 100.0 * q.hota.loc_a;
    r["miou"] = 100.0 * q.miou;
    r["best_tiou"] = 100.0 * q.best_tiou;
    out += r.dump() + "\n";
  }
  return out;
}

}  // namespace stag
