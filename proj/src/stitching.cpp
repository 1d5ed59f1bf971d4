#include "tubeseg/stitching.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"

#include "tubeseg/error.hpp"

namespace tubeseg {

std::vector<ClipWindow> split_clips(int video_len, int clip_len, int overlap) {
  if (clip_len < 1) throw ConfigError("clip length must be >= 1");
  if (overlap < 0 || overlap >= clip_len)
    throw ConfigError("clip overlap must lie in [0, clip_len)");
  if (video_len < 1) throw ConfigError("video length must be >= 1");

  std::vector<ClipWindow> windows;
  if (video_len <= clip_len) {
    windows.push_back(ClipWindow{0, video_len});
    return windows;
  }
  const int stride = clip_len - overlap;
  int start = 0;
  while (start + clip_len < video_len) {
    windows.push_back(ClipWindow{start, start + clip_len});
    start += stride;
  }
  windows.push_back(ClipWindow{video_len - clip_len, video_len});
  return windows;
}

std::vector<std::vector<double>> overlap_cost_matrix(
    const ClusterResult& prev, const ClusterResult& next,
    const ClipWindow& prev_window, const ClipWindow& next_window) {
  const int ov_start = std::max(prev_window.start, next_window.start);
  const int ov_end = std::min(prev_window.end, next_window.end);
  if (ov_start >= ov_end)
    throw ConfigError("overlap_cost_matrix: windows do not overlap");
  const int ov_len = ov_end - ov_start;

  const size_t na = prev.instances.size();
  const size_t nb = next.instances.size();
  std::vector<std::vector<double>> cost(na, std::vector<double>(nb, 0.0));
  for (size_t a = 0; a < na; ++a) {
    const MaskTube ma =
        prev.labeling.mask_for(static_cast<int>(a) + 1)
            .extract_frames(ov_start - prev_window.start, ov_len);
    for (size_t b = 0; b < nb; ++b) {
      const MaskTube mb =
          next.labeling.mask_for(static_cast<int>(b) + 1)
              .extract_frames(ov_start - next_window.start, ov_len);
      cost[a][b] = tube_iou(ma, mb);
    }
  }
  return cost;
}

Assignment linear_assignment(const std::vector<std::vector<double>>& cost,
                             bool minimize) {
  const int n = static_cast<int>(cost.size());
  const int m = n > 0 ? static_cast<int>(cost[0].size()) : 0;
  Assignment result;
  if (n == 0 || m == 0) return result;
  for (const auto& row : cost)
    if (static_cast<int>(row.size()) != m)
      throw ConfigError("linear_assignment: ragged cost matrix");

  // Pad to square; dummy entries cost 0 so they never affect the optimum.
  const int dim = std::max(n, m);
  std::vector<std::vector<double>> a(dim, std::vector<double>(dim, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      if (!std::isfinite(cost[i][j]))
        throw ConfigError("linear_assignment: non-finite cost");
      a[i][j] = minimize ? cost[i][j] : -cost[i][j];
    }

  // Hungarian method with potentials, O(dim^3). Arrays are 1-based with a
  // virtual row/column 0.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(dim + 1, 0.0), v(dim + 1, 0.0);
  std::vector<int> match(dim + 1, 0);  // match[j] = row assigned to column j
  std::vector<int> way(dim + 1, 0);
  for (int i = 1; i <= dim; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(dim + 1, inf);
    std::vector<char> used(dim + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= dim; ++j) {
        if (used[j]) continue;
        const double cur = a[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= dim; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }

  for (int j = 1; j <= dim; ++j) {
    const int i = match[j];
    if (i >= 1 && i <= n && j <= m) {
      result.pairs.emplace_back(i - 1, j - 1);
      result.total += cost[i - 1][j - 1];
    }
  }
  std::sort(result.pairs.begin(), result.pairs.end());
  return result;
}

InstanceLabeling TrackSet::to_labeling() const {
  InstanceLabeling out(dims);
  for (const auto& [id, info] : tracks)
    for (const Run& r : info.tube.runs())
      for (Index i = r.start; i < r.start + r.length; ++i)
        out.set_label(i, id);
  return out;
}

TrackSet TrackSet::from_labeling(const InstanceLabeling& labeling,
                                 double default_confidence) {
  TrackSet ts;
  ts.dims = labeling.dims();
  for (int id : labeling.instance_ids())
    ts.tracks[id] =
        TrackInfo{labeling.mask_for(id), default_confidence, std::nullopt};
  return ts;
}

TrackSet stitch_clips(std::span<const ClusterResult> per_clip,
                      std::span<const ClipWindow> windows,
                      const VolumeDims& video_dims, double min_assoc_iou) {
  if (per_clip.size() != windows.size())
    throw ConfigError("stitch_clips: clip results do not match windows");
  validate_dims(video_dims);

  TrackSet ts;
  ts.dims = video_dims;
  if (per_clip.empty()) return ts;

  InstanceLabeling global(video_dims);
  const Index frame_px =
      static_cast<Index>(video_dims.height) * video_dims.width;

  int next_global_id = 1;
  struct Accum {
    double heat_sum = 0.0;
    int tracklets = 0;
  };
  std::map<int, Accum> accum;
  // Global id of each tracklet in the previously processed clip.
  std::vector<int> prev_global;

  int committed_end = 0;  // frames [0, committed_end) already written
  for (size_t c = 0; c < per_clip.size(); ++c) {
    const ClusterResult& clip = per_clip[c];
    const ClipWindow& win = windows[c];
    if (clip.labeling.dims().t_len != win.length() ||
        clip.labeling.dims().height != video_dims.height ||
        clip.labeling.dims().width != video_dims.width)
      throw ConfigError("stitch_clips: clip labeling does not match window");

    const int k = static_cast<int>(clip.instances.size());
    std::vector<int> global_id(static_cast<size_t>(k), 0);

    if (c == 0) {
      for (int t = 0; t < k; ++t) global_id[static_cast<size_t>(t)] = next_global_id++;
    } else {
      const auto cost =
          overlap_cost_matrix(per_clip[c - 1], clip, windows[c - 1], win);
      const Assignment assign = linear_assignment(cost, /*minimize=*/false);
      for (const auto& [a, b] : assign.pairs) {
        if (cost[static_cast<size_t>(a)][static_cast<size_t>(b)] >= min_assoc_iou)
          global_id[static_cast<size_t>(b)] = prev_global[static_cast<size_t>(a)];
      }
      for (int t = 0; t < k; ++t)
        if (global_id[static_cast<size_t>(t)] == 0)
          global_id[static_cast<size_t>(t)] = next_global_id++;
    }

    for (int t = 0; t < k; ++t) {
      Accum& acc = accum[global_id[static_cast<size_t>(t)]];
      acc.heat_sum += clip.instances[static_cast<size_t>(t)].seed_heat;
      acc.tracklets += 1;
    }

    // First window covering a frame owns its pixels.
    const int write_start = std::max(win.start, committed_end);
    for (int f = write_start; f < win.end; ++f) {
      const Index dst = static_cast<Index>(f) * frame_px;
      const Index src = static_cast<Index>(f - win.start) * frame_px;
      for (Index p = 0; p < frame_px; ++p) {
        const int local = clip.labeling.label(src + p);
        if (local > 0)
          global.set_label(dst + p, global_id[static_cast<size_t>(local - 1)]);
      }
    }
    committed_end = win.end;
    prev_global = std::move(global_id);
  }

  for (int id : global.instance_ids()) {
    const Accum& acc = accum.at(id);
    ts.tracks[id] = TrackInfo{global.mask_for(id),
                              acc.heat_sum / std::max(acc.tracklets, 1),
                              std::nullopt};
  }
  return ts;
}

void save_track_meta(const TrackSet& tracks, const std::string& path) {
  nlohmann::ordered_json doc;
  for (const auto& [id, info] : tracks.tracks) {
    nlohmann::ordered_json entry;
    entry["confidence"] = info.confidence;
    if (info.category)
      entry["category"] = *info.category;
    else
      entry["category"] = nullptr;
    doc[std::to_string(id)] = entry;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << doc.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

void load_track_meta(TrackSet& tracks, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad track meta json: ") + e.what());
  }
  for (auto& [key, entry] : doc.items()) {
    const int id = std::stoi(key);
    auto it = tracks.tracks.find(id);
    if (it == tracks.tracks.end()) continue;
    if (entry.contains("confidence"))
      it->second.confidence = entry["confidence"].get<double>();
    if (entry.contains("category") && !entry["category"].is_null())
      it->second.category = entry["category"].get<int>();
  }
}

}  // namespace tubeseg
