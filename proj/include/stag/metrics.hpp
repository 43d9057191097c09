#pragma once

// Grounding evaluation: HOTA decomposition over detections, temporal IoU of
// track spans, mIoU, m-HIoU and the top-k recall grid.

#include "stag/types.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace stag {

struct MetricsConfig {
  std::vector<double> alpha_grid = default_alpha_grid();
  std::vector<int> recall_k = {1, 5, 10};
  std::vector<double> recall_iou = {0.1, 0.3, 0.5};
  /// mIoU over all ranked predictions (assignment to GT instances) instead of rank 1.
  bool miou_all_ranks = false;
  /// R-k@X ignores rank: any returned prediction may hit.
  bool unranked_set = false;
  /// HOTA from counts pooled over queries instead of the per-query mean.
  bool pooled_hota = false;

  static std::vector<double> default_alpha_grid();
  void validate() const;
};

/// Temporal IoU of the inclusive spans [first_frame, last_frame]; 0 across videos.
double temporal_iou(const Track& pred, const Track& gt);

/// Per-alpha tallies. Values are sums so that queries can be pooled.
struct HotaCounts {
  double tp = 0, fn = 0, fp = 0;
  double ass_a_sum = 0, ass_re_sum = 0, ass_pr_sum = 0;  // summed over TPs
  double loc_sum = 0;                                     // summed spatial IoU over TPs

  HotaCounts& operator+=(const HotaCounts& o);
};

struct HotaComponents {
  double hota = 0, det_a = 0, ass_a = 0, det_re = 0, det_pr = 0, ass_re = 0, ass_pr = 0,
         loc_a = 0;
  std::vector<double> hota_alpha, det_a_alpha, ass_a_alpha;
};

/// Accumulates the HOTA tallies of one prediction set against one GT set.
/// Detections are keyed by (video_id, frame). For every alpha and frame the
/// matching maximizes the number of pairs with IoU >= alpha, then the summed
/// alignment-weighted similarity.
std::vector<HotaCounts> hota_counts(const std::vector<Track>& preds, const std::vector<Track>& gts,
                                    const std::vector<double>& alpha_grid);

/// Turns per-alpha tallies into the averaged components.
HotaComponents finalize_hota(const std::vector<HotaCounts>& counts);

HotaComponents hota_components(const std::vector<Track>& preds, const std::vector<Track>& gts,
                               const MetricsConfig& config = {});

/// Ranking metric: arithmetic mean of HOTA and mIoU (same units in and out).
constexpr double compute_mhiou(double hota, double miou) { return (hota + miou) / 2.0; }

/// Mean over GT queries; queries missing from the submission count as empty.
double compute_miou(const Submission& submission, const std::vector<GroundTruthEntry>& gt,
                    const MetricsConfig& config = {});

using RecallGrid = std::map<std::pair<int, double>, double>;

/// R-k@X in percent.
RecallGrid compute_recall_grid(const Submission& submission,
                               const std::vector<GroundTruthEntry>& gt,
                               const MetricsConfig& config = {});

struct QueryReport {
  std::string query_id;
  HotaComponents hota;
  double miou = 0;      // fraction
  double best_tiou = 0; // best temporal IoU among all ranked predictions
};

/// All scalar fields in percent, unrounded.
struct EvalReport {
  double m_hiou = 0, hota = 0, miou = 0, det_a = 0, ass_a = 0, det_re = 0, det_pr = 0, ass_re = 0,
         ass_pr = 0, loc_a = 0;
  RecallGrid recall_grid;
  std::vector<QueryReport> queries;
};

/// Throws stag::Error when the submission names a query absent from the ground truth.
EvalReport evaluate(const Submission& submission, const std::vector<GroundTruthEntry>& gt,
                    const MetricsConfig& config = {});

/// Aligned text table in the results-table column order, values to 2 decimals.
std::string format_report_table(const EvalReport& report, const std::string& method = "stag");
/// One JSON object per line: a "summary" record then one "query" record per query.
std::string format_report_records(const EvalReport& report);

}  // namespace stag
