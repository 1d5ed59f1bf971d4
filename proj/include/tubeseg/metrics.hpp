// Evaluation measures: region/boundary quality (J, F), track average
// precision and recall, and mask-based CLEAR-style tracking scores.
#pragma once

#include <string>
#include <vector>

#include "tubeseg/stitching.hpp"
#include "tubeseg/volume.hpp"

namespace tubeseg {

struct TrackMatch {
  int pred_id = 0;
  int gt_id = 0;
  double iou = 0.0;
};

// Optimal one-to-one matching maximizing total tube IoU; pairs with zero
// IoU are dropped. Throws ConfigError on dims mismatch.
std::vector<TrackMatch> match_tracks(const TrackSet& pred, const TrackSet& gt);

// Tube IoU of a matched pair.
double j_score(const MaskTube& pred, const MaskTube& gt);

// Per-frame boundary F-measure averaged over frames. Boundaries are mask
// pixels with a 4-neighbor background or frame-edge neighbor; a boundary
// pixel counts as matched when the other mask has a boundary pixel within
// Euclidean distance tolerance_px. Frames where both boundaries are empty
// score 1.
double f_score(const MaskTube& pred, const MaskTube& gt, int tolerance_px);

// ceil(0.8% of the frame diagonal), at least 1 pixel.
int default_boundary_tolerance(const VolumeDims& dims);

struct TrackApResult {
  std::vector<double> thresholds;  // 0.50, 0.55, ..., 0.95
  std::vector<double> ap;          // per threshold
  double mean_ap = 0.0;
  double ar_at_1 = 0.0;
  double ar_at_10 = 0.0;
};

// Greedy confidence-ordered matching at tube IoU >= threshold; AP is the
// area under the monotone-interpolated precision-recall curve. AR@k is the
// recall averaged over thresholds when keeping the top-k predictions.
TrackApResult track_ap(const TrackSet& pred, const TrackSet& gt);

struct MotsResult {
  double smotsa = 0.0;
  double motsa = 0.0;
  double motsp = 0.0;
  long id_switches = 0;
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long gt_detections = 0;
};

// Per-frame one-to-one mask matching at IoU > 0.5. An id switch is counted
// when a ground-truth track's matched prediction id changes between its
// consecutive matched frames.
MotsResult mots_scores(const TrackSet& pred, const TrackSet& gt);

struct TrackScore {
  int gt_id = 0;
  int pred_id = 0;  // 0 when unmatched
  double j = 0.0;
  double f = 0.0;
};

struct EvalReport {
  double j_mean = 0.0;
  double j_recall = 0.0;
  double f_mean = 0.0;
  double f_recall = 0.0;
  double jf_mean = 0.0;
  TrackApResult ap;
  MotsResult mots;
  std::vector<TrackScore> per_track;  // one row per ground-truth track
};

EvalReport evaluate(const TrackSet& pred, const TrackSet& gt,
                    int boundary_tolerance_px);

std::string report_to_json(const EvalReport& report);
std::string report_to_table(const EvalReport& report);

}  // namespace tubeseg
