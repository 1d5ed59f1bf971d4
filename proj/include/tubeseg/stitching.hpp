// Overlapping clip windows and tracklet association across clips.
#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tubeseg/inference.hpp"
#include "tubeseg/volume.hpp"

namespace tubeseg {

// Half-open frame window [start, end).
struct ClipWindow {
  int start = 0;
  int end = 0;
  int length() const { return end - start; }
  bool operator==(const ClipWindow&) const = default;
};

// Windows of length clip_len advancing by clip_len - overlap; the final
// window is shifted left to end exactly at video_len. A video shorter than
// clip_len produces a single short window.
std::vector<ClipWindow> split_clips(int video_len, int clip_len, int overlap);

// Entry (a,b): IoU of prev tracklet a+1 and next tracklet b+1 restricted to
// the shared frames of the two windows. Throws ConfigError when the windows
// do not overlap.
std::vector<std::vector<double>> overlap_cost_matrix(
    const ClusterResult& prev, const ClusterResult& next,
    const ClipWindow& prev_window, const ClipWindow& next_window);

struct Assignment {
  std::vector<std::pair<int, int>> pairs;  // (row, column), both real
  double total = 0.0;
};

// Optimal one-to-one assignment over a rectangular matrix (Hungarian method
// on a zero-padded square); min(n,m) pairs are returned.
Assignment linear_assignment(const std::vector<std::vector<double>>& cost,
                             bool minimize);

struct TrackInfo {
  MaskTube tube;  // over the full video volume
  double confidence = 0.0;
  std::optional<int> category;
};

struct TrackSet {
  VolumeDims dims;  // full video volume
  std::map<int, TrackInfo> tracks;

  InstanceLabeling to_labeling() const;
  static TrackSet from_labeling(const InstanceLabeling& labeling,
                                double default_confidence = 1.0);
};

// Associates consecutive clips' tracklets by overlap IoU via linear
// assignment; matches below min_assoc_iou open new tracks instead. Each
// frame's pixels come from the first window covering it. Track confidence
// is the mean seed heat of the stitched tracklets.
TrackSet stitch_clips(std::span<const ClusterResult> per_clip,
                      std::span<const ClipWindow> windows,
                      const VolumeDims& video_dims, double min_assoc_iou);

// Sidecar with per-track category / confidence, JSON keyed by track id.
void save_track_meta(const TrackSet& tracks, const std::string& path);
void load_track_meta(TrackSet& tracks, const std::string& path);

}  // namespace tubeseg
