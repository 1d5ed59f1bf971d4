// Spatio-temporal volume geometry: coordinate grids, mask tubes, labelings.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace tubeseg {

using Index = std::int64_t;

struct VolumeDims {
  int t_len = 0;
  int height = 0;
  int width = 0;

  Index num_pixels() const {
    return static_cast<Index>(t_len) * height * width;
  }
  bool valid() const { return t_len >= 1 && height >= 1 && width >= 1; }
  bool operator==(const VolumeDims&) const = default;
};

// Throws ConfigError when dims are degenerate.
void validate_dims(const VolumeDims& dims);

// Per-axis coordinates normalized to [0,1]; an axis of length 1 maps to 0.
// Linear indices are t-major, then row, then column.
struct PixelCoord {
  double x = 0.0;
  double y = 0.0;
  double t = 0.0;
  Index index = 0;
};

Index linear_index(const VolumeDims& dims, int frame, int row, int col);
PixelCoord coord_at(const VolumeDims& dims, Index index);
std::vector<PixelCoord> coordinate_grid(const VolumeDims& dims);

// Half-open run [start, start+length) of linear indices.
struct Run {
  Index start = 0;
  Index length = 0;
  bool operator==(const Run&) const = default;
};

// Per-pixel boolean membership over a volume, stored as sorted,
// non-adjacent, non-overlapping runs.
class MaskTube {
public:
  MaskTube() = default;
  explicit MaskTube(VolumeDims dims) : dims_(dims) {}
  // Validates canonical run form; throws ConfigError otherwise.
  MaskTube(VolumeDims dims, std::vector<Run> runs);

  static MaskTube from_dense(const VolumeDims& dims,
                             std::span<const std::uint8_t> dense);
  static MaskTube from_indices(const VolumeDims& dims,
                               std::span<const Index> sorted_indices);

  const VolumeDims& dims() const { return dims_; }
  const std::vector<Run>& runs() const { return runs_; }
  Index pixel_count() const;
  bool empty() const { return runs_.empty(); }
  bool contains(Index i) const;

  std::vector<std::uint8_t> to_dense() const;
  std::vector<Index> to_indices() const;

  // Membership restricted to frames [first, last), same dims.
  MaskTube restrict_frames(int first, int last) const;
  // Frames [first, first+count) re-indexed into a (count, H, W) volume.
  MaskTube extract_frames(int first, int count) const;

  bool operator==(const MaskTube&) const = default;

private:
  VolumeDims dims_{};
  std::vector<Run> runs_;
};

// |a∩b| / |a∪b|. Two empty masks give 1 (vacuous match), empty vs
// nonempty gives 0. Throws ConfigError on dims mismatch.
double tube_iou(const MaskTube& a, const MaskTube& b);

// Per-pixel instance id; 0 is background, k >= 1 an instance.
class InstanceLabeling {
public:
  InstanceLabeling() = default;
  explicit InstanceLabeling(VolumeDims dims);
  InstanceLabeling(VolumeDims dims, std::vector<int> labels);

  const VolumeDims& dims() const { return dims_; }
  std::span<const int> labels() const { return labels_; }
  int label(Index i) const { return labels_[static_cast<size_t>(i)]; }
  void set_label(Index i, int id);

  // Sorted distinct nonzero ids present in the labeling.
  std::vector<int> instance_ids() const;
  MaskTube mask_for(int id) const;
  std::vector<Index> pixels_of(int id) const;

  // Frames [first, first+count) re-indexed into a (count, H, W) volume.
  InstanceLabeling extract_frames(int first, int count) const;

  bool operator==(const InstanceLabeling&) const = default;

private:
  VolumeDims dims_{};
  std::vector<int> labels_;
};

// Text formats. Mask tube: header "dims T H W" then one "start length"
// line per run. Labeling: same header then one "id start length" line per
// run, sorted by (id, start).
void save_mask_tube(const MaskTube& mask, std::ostream& out);
MaskTube load_mask_tube(std::istream& in);
void save_labeling(const InstanceLabeling& labeling, std::ostream& out);
InstanceLabeling load_labeling(std::istream& in);

void save_mask_tube_file(const MaskTube& mask, const std::string& path);
MaskTube load_mask_tube_file(const std::string& path);
void save_labeling_file(const InstanceLabeling& labeling,
                        const std::string& path);
InstanceLabeling load_labeling_file(const std::string& path);

}  // namespace tubeseg
