#include "tubeseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "json.hpp"

#include "tubeseg/error.hpp"

namespace tubeseg {

std::vector<TrackMatch> match_tracks(const TrackSet& pred,
                                     const TrackSet& gt) {
  if (!(pred.dims == gt.dims))
    throw ConfigError("match_tracks: dims mismatch");
  std::vector<int> pred_ids, gt_ids;
  for (const auto& [id, info] : pred.tracks) pred_ids.push_back(id);
  for (const auto& [id, info] : gt.tracks) gt_ids.push_back(id);

  std::vector<std::vector<double>> iou(
      pred_ids.size(), std::vector<double>(gt_ids.size(), 0.0));
  for (size_t i = 0; i < pred_ids.size(); ++i)
    for (size_t j = 0; j < gt_ids.size(); ++j)
      iou[i][j] = tube_iou(pred.tracks.at(pred_ids[i]).tube,
                           gt.tracks.at(gt_ids[j]).tube);

  std::vector<TrackMatch> matches;
  if (pred_ids.empty() || gt_ids.empty()) return matches;
  const Assignment assign = linear_assignment(iou, /*minimize=*/false);
  for (const auto& [i, j] : assign.pairs) {
    const double v = iou[static_cast<size_t>(i)][static_cast<size_t>(j)];
    if (v > 0.0)
      matches.push_back(TrackMatch{pred_ids[static_cast<size_t>(i)],
                                   gt_ids[static_cast<size_t>(j)], v});
  }
  return matches;
}

double j_score(const MaskTube& pred, const MaskTube& gt) {
  return tube_iou(pred, gt);
}

int default_boundary_tolerance(const VolumeDims& dims) {
  const double diag = std::sqrt(static_cast<double>(dims.width) * dims.width +
                                static_cast<double>(dims.height) * dims.height);
  return std::max(1, static_cast<int>(std::ceil(0.008 * diag)));
}

namespace {

// Boundary pixels of one frame: mask pixels 4-adjacent to background or the
// frame edge. Frame data is a H*W slice of the dense mask.
std::vector<std::pair<int, int>> boundary_pixels(
    const std::vector<std::uint8_t>& dense, const VolumeDims& dims,
    int frame) {
  const int w = dims.width;
  const int h = dims.height;
  const size_t base = static_cast<size_t>(frame) * h * w;
  std::vector<std::pair<int, int>> pts;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!dense[base + static_cast<size_t>(y) * w + x]) continue;
      const bool edge =
          x == 0 || x == w - 1 || y == 0 || y == h - 1 ||
          !dense[base + static_cast<size_t>(y) * w + (x - 1)] ||
          !dense[base + static_cast<size_t>(y) * w + (x + 1)] ||
          !dense[base + static_cast<size_t>(y - 1) * w + x] ||
          !dense[base + static_cast<size_t>(y + 1) * w + x];
      if (edge) pts.emplace_back(x, y);
    }
  }
  return pts;
}

// Fraction of pts with some other-set pixel within radius tol.
double matched_fraction(const std::vector<std::pair<int, int>>& pts,
                        const std::vector<std::uint8_t>& other_map, int w,
                        int h, int tol) {
  if (pts.empty()) return 0.0;
  const long tol2 = static_cast<long>(tol) * tol;
  long hit = 0;
  for (const auto& [x, y] : pts) {
    bool found = false;
    for (int dy = -tol; dy <= tol && !found; ++dy) {
      const int yy = y + dy;
      if (yy < 0 || yy >= h) continue;
      for (int dx = -tol; dx <= tol; ++dx) {
        const int xx = x + dx;
        if (xx < 0 || xx >= w) continue;
        if (static_cast<long>(dx) * dx + static_cast<long>(dy) * dy > tol2)
          continue;
        if (other_map[static_cast<size_t>(yy) * w + xx]) {
          found = true;
          break;
        }
      }
    }
    if (found) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(pts.size());
}

}  // namespace

double f_score(const MaskTube& pred, const MaskTube& gt, int tolerance_px) {
  if (!(pred.dims() == gt.dims())) throw ConfigError("f_score: dims mismatch");
  if (tolerance_px < 0) throw ConfigError("f_score: negative tolerance");
  const VolumeDims& dims = pred.dims();
  const auto dp = pred.to_dense();
  const auto dg = gt.to_dense();
  const int w = dims.width;
  const int h = dims.height;

  double sum = 0.0;
  for (int f = 0; f < dims.t_len; ++f) {
    const auto bp = boundary_pixels(dp, dims, f);
    const auto bg = boundary_pixels(dg, dims, f);
    if (bp.empty() && bg.empty()) {
      sum += 1.0;
      continue;
    }
    if (bp.empty() || bg.empty()) continue;  // F = 0 for this frame

    std::vector<std::uint8_t> map_p(static_cast<size_t>(h) * w, 0);
    std::vector<std::uint8_t> map_g(static_cast<size_t>(h) * w, 0);
    for (const auto& [x, y] : bp) map_p[static_cast<size_t>(y) * w + x] = 1;
    for (const auto& [x, y] : bg) map_g[static_cast<size_t>(y) * w + x] = 1;

    const double precision = matched_fraction(bp, map_g, w, h, tolerance_px);
    const double recall = matched_fraction(bg, map_p, w, h, tolerance_px);
    if (precision + recall > 0.0)
      sum += 2.0 * precision * recall / (precision + recall);
  }
  return sum / static_cast<double>(dims.t_len);
}

namespace {

struct Detection {
  int pred_id;
  double confidence;
};

}  // namespace

TrackApResult track_ap(const TrackSet& pred, const TrackSet& gt) {
  if (!(pred.dims == gt.dims)) throw ConfigError("track_ap: dims mismatch");
  TrackApResult res;
  for (int k = 0; k < 10; ++k) res.thresholds.push_back(0.50 + 0.05 * k);

  std::vector<Detection> dets;
  for (const auto& [id, info] : pred.tracks) {
    if (!std::isfinite(info.confidence))
      throw ConfigError("track_ap: missing or non-finite confidence");
    dets.push_back({id, info.confidence});
  }
  std::sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.pred_id < b.pred_id;
  });

  std::vector<int> gt_ids;
  for (const auto& [id, info] : gt.tracks) gt_ids.push_back(id);
  const size_t num_gt = gt_ids.size();

  // IoU table once; reused across thresholds.
  std::vector<std::vector<double>> iou(dets.size(),
                                       std::vector<double>(num_gt, 0.0));
  for (size_t d = 0; d < dets.size(); ++d)
    for (size_t j = 0; j < num_gt; ++j)
      iou[d][j] = tube_iou(pred.tracks.at(dets[d].pred_id).tube,
                           gt.tracks.at(gt_ids[j]).tube);

  auto greedy_tp_flags = [&](double thr, size_t max_dets) {
    std::vector<char> gt_used(num_gt, 0);
    std::vector<char> tp(std::min(dets.size(), max_dets), 0);
    for (size_t d = 0; d < tp.size(); ++d) {
      double best = thr;
      int best_j = -1;
      for (size_t j = 0; j < num_gt; ++j) {
        if (gt_used[j]) continue;
        if (iou[d][j] >= best) {
          best = iou[d][j];
          best_j = static_cast<int>(j);
        }
      }
      if (best_j >= 0) {
        tp[d] = 1;
        gt_used[static_cast<size_t>(best_j)] = 1;
      }
    }
    return tp;
  };

  double ar1 = 0.0, ar10 = 0.0;
  for (double thr : res.thresholds) {
    const auto tp = greedy_tp_flags(thr, dets.size());
    double ap = 0.0;
    if (num_gt > 0) {
      // Precision at each true positive, with the running precision made
      // monotone from the right before integrating over recall steps.
      std::vector<double> precisions;
      long cum_tp = 0;
      for (size_t d = 0; d < tp.size(); ++d) {
        if (tp[d]) {
          ++cum_tp;
          precisions.push_back(static_cast<double>(cum_tp) /
                               static_cast<double>(d + 1));
        }
      }
      for (size_t i = precisions.size(); i-- > 1;)
        precisions[i - 1] = std::max(precisions[i - 1], precisions[i]);
      for (double p : precisions) ap += p / static_cast<double>(num_gt);
    }
    res.ap.push_back(ap);
    res.mean_ap += ap / static_cast<double>(res.thresholds.size());

    auto recall_at = [&](size_t k) {
      if (num_gt == 0) return 0.0;
      const auto flags = greedy_tp_flags(thr, k);
      long hits = 0;
      for (char f : flags) hits += f;
      return static_cast<double>(hits) / static_cast<double>(num_gt);
    };
    ar1 += recall_at(1) / static_cast<double>(res.thresholds.size());
    ar10 += recall_at(10) / static_cast<double>(res.thresholds.size());
  }
  res.ar_at_1 = ar1;
  res.ar_at_10 = ar10;
  return res;
}

MotsResult mots_scores(const TrackSet& pred, const TrackSet& gt) {
  if (!(pred.dims == gt.dims)) throw ConfigError("mots_scores: dims mismatch");
  const VolumeDims& dims = pred.dims;

  MotsResult res;
  double iou_sum = 0.0;
  // Last matched prediction id per ground-truth track.
  std::map<int, int> last_match;

  for (int f = 0; f < dims.t_len; ++f) {
    struct FrameMask {
      int id;
      MaskTube mask;
    };
    std::vector<FrameMask> pm, gm;
    for (const auto& [id, info] : pred.tracks) {
      MaskTube m = info.tube.restrict_frames(f, f + 1);
      if (!m.empty()) pm.push_back({id, std::move(m)});
    }
    for (const auto& [id, info] : gt.tracks) {
      MaskTube m = info.tube.restrict_frames(f, f + 1);
      if (!m.empty()) gm.push_back({id, std::move(m)});
    }
    res.gt_detections += static_cast<long>(gm.size());

    // One-to-one IoU-optimal matching, gated at IoU > 0.5. Masks within a
    // frame are disjoint, so at most one candidate can clear the gate per
    // track anyway.
    std::vector<char> pred_used(pm.size(), 0);
    long frame_tp = 0;
    if (!pm.empty() && !gm.empty()) {
      std::vector<std::vector<double>> iou(pm.size(),
                                           std::vector<double>(gm.size()));
      for (size_t i = 0; i < pm.size(); ++i)
        for (size_t j = 0; j < gm.size(); ++j)
          iou[i][j] = tube_iou(pm[i].mask, gm[j].mask);
      const Assignment assign = linear_assignment(iou, /*minimize=*/false);
      for (const auto& [i, j] : assign.pairs) {
        const double v = iou[static_cast<size_t>(i)][static_cast<size_t>(j)];
        if (v <= 0.5) continue;
        ++frame_tp;
        iou_sum += v;
        pred_used[static_cast<size_t>(i)] = 1;
        const int gt_id = gm[static_cast<size_t>(j)].id;
        const int pred_id = pm[static_cast<size_t>(i)].id;
        auto it = last_match.find(gt_id);
        if (it != last_match.end() && it->second != pred_id)
          ++res.id_switches;
        last_match[gt_id] = pred_id;
      }
    }
    res.tp += frame_tp;
    res.fn += static_cast<long>(gm.size()) - frame_tp;
    for (size_t i = 0; i < pm.size(); ++i)
      if (!pred_used[i]) ++res.fp;
  }

  const double denom = static_cast<double>(res.gt_detections);
  if (denom > 0.0) {
    res.motsa = 1.0 - static_cast<double>(res.fp + res.fn + res.id_switches) /
                          denom;
    res.smotsa =
        (iou_sum - static_cast<double>(res.fp + res.id_switches)) / denom;
  } else {
    res.motsa = res.fp > 0 ? -1.0 : 1.0;
    res.smotsa = res.motsa;
  }
  res.motsp = res.tp > 0 ? iou_sum / static_cast<double>(res.tp) : 0.0;
  return res;
}

EvalReport evaluate(const TrackSet& pred, const TrackSet& gt,
                    int boundary_tolerance_px) {
  EvalReport rep;
  const auto matches = match_tracks(pred, gt);
  std::map<int, TrackMatch> by_gt;
  for (const TrackMatch& m : matches) by_gt[m.gt_id] = m;

  const size_t num_gt = gt.tracks.size();
  for (const auto& [gt_id, info] : gt.tracks) {
    TrackScore score;
    score.gt_id = gt_id;
    auto it = by_gt.find(gt_id);
    if (it != by_gt.end()) {
      score.pred_id = it->second.pred_id;
      const MaskTube& pt = pred.tracks.at(score.pred_id).tube;
      score.j = it->second.iou;
      score.f = f_score(pt, info.tube, boundary_tolerance_px);
    }
    rep.per_track.push_back(score);
  }
  if (num_gt > 0) {
    for (const TrackScore& s : rep.per_track) {
      rep.j_mean += s.j / static_cast<double>(num_gt);
      rep.f_mean += s.f / static_cast<double>(num_gt);
      if (s.j > 0.5) rep.j_recall += 1.0 / static_cast<double>(num_gt);
      if (s.f > 0.5) rep.f_recall += 1.0 / static_cast<double>(num_gt);
    }
  }
  rep.jf_mean = 0.5 * (rep.j_mean + rep.f_mean);
  rep.ap = track_ap(pred, gt);
  rep.mots = mots_scores(pred, gt);
  return rep;
}

std::string report_to_json(const EvalReport& rep) {
  nlohmann::ordered_json doc;
  doc["j_mean"] = rep.j_mean;
  doc["j_recall"] = rep.j_recall;
  doc["f_mean"] = rep.f_mean;
  doc["f_recall"] = rep.f_recall;
  doc["jf_mean"] = rep.jf_mean;
  nlohmann::ordered_json ap;
  for (size_t i = 0; i < rep.ap.thresholds.size(); ++i) {
    char key[16];
    std::snprintf(key, sizeof(key), "%.2f", rep.ap.thresholds[i]);
    ap[key] = rep.ap.ap[i];
  }
  doc["ap_per_threshold"] = ap;
  doc["mean_ap"] = rep.ap.mean_ap;
  doc["ar_at_1"] = rep.ap.ar_at_1;
  doc["ar_at_10"] = rep.ap.ar_at_10;
  doc["smotsa"] = rep.mots.smotsa;
  doc["motsa"] = rep.mots.motsa;
  doc["motsp"] = rep.mots.motsp;
  doc["id_switches"] = rep.mots.id_switches;
  nlohmann::ordered_json tracks = nlohmann::ordered_json::array();
  for (const TrackScore& s : rep.per_track) {
    nlohmann::ordered_json row;
    row["gt_id"] = s.gt_id;
    row["pred_id"] = s.pred_id;
    row["j"] = s.j;
    row["f"] = s.f;
    tracks.push_back(row);
  }
  doc["per_track"] = tracks;
  return doc.dump(2) + "\n";
}

std::string report_to_table(const EvalReport& rep) {
  std::ostringstream out;
  char line[160];
  out << "metric        value\n";
  auto emit = [&](const char* name, double v) {
    std::snprintf(line, sizeof(line), "%-12s %8.4f\n", name, v);
    out << line;
  };
  emit("j_mean", rep.j_mean);
  emit("j_recall", rep.j_recall);
  emit("f_mean", rep.f_mean);
  emit("f_recall", rep.f_recall);
  emit("jf_mean", rep.jf_mean);
  emit("mean_ap", rep.ap.mean_ap);
  emit("ar_at_1", rep.ap.ar_at_1);
  emit("ar_at_10", rep.ap.ar_at_10);
  emit("smotsa", rep.mots.smotsa);
  emit("motsa", rep.mots.motsa);
  emit("motsp", rep.mots.motsp);
  std::snprintf(line, sizeof(line), "%-12s %8ld\n", "id_switches",
                rep.mots.id_switches);
  out << line;
  out << "\ngt_id  pred_id        j        f\n";
  for (const TrackScore& s : rep.per_track) {
    std::snprintf(line, sizeof(line), "%5d  %7d  %7.4f  %7.4f\n", s.gt_id,
                  s.pred_id, s.j, s.f);
    out << line;
  }
  return out.str();
}

}  // namespace tubeseg
