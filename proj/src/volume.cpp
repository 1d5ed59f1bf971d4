#include "tubeseg/volume.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "tubeseg/error.hpp"

namespace tubeseg {

void validate_dims(const VolumeDims& dims) {
  if (!dims.valid()) {
    std::ostringstream msg;
    msg << "invalid volume dims " << dims.t_len << "x" << dims.height << "x"
        << dims.width;
    throw ConfigError(msg.str());
  }
}

Index linear_index(const VolumeDims& dims, int frame, int row, int col) {
  return (static_cast<Index>(frame) * dims.height + row) * dims.width + col;
}

namespace {

double normalize_axis(Index pos, int len) {
  return len > 1 ? static_cast<double>(pos) / (len - 1) : 0.0;
}

}  // namespace

PixelCoord coord_at(const VolumeDims& dims, Index index) {
  const Index col = index % dims.width;
  const Index row = (index / dims.width) % dims.height;
  const Index frame = index / (static_cast<Index>(dims.width) * dims.height);
  return PixelCoord{normalize_axis(col, dims.width),
                    normalize_axis(row, dims.height),
                    normalize_axis(frame, dims.t_len), index};
}

std::vector<PixelCoord> coordinate_grid(const VolumeDims& dims) {
  validate_dims(dims);
  std::vector<PixelCoord> grid;
  grid.reserve(static_cast<size_t>(dims.num_pixels()));
  for (Index i = 0; i < dims.num_pixels(); ++i) grid.push_back(coord_at(dims, i));
  return grid;
}

MaskTube::MaskTube(VolumeDims dims, std::vector<Run> runs)
    : dims_(dims), runs_(std::move(runs)) {
  Index prev_end = -1;
  for (const Run& r : runs_) {
    if (r.length <= 0 || r.start < 0)
      throw ConfigError("mask run with non-positive length or negative start");
    if (r.start <= prev_end)
      throw ConfigError("mask runs must be sorted, non-overlapping and non-adjacent");
    if (r.start + r.length > dims_.num_pixels())
      throw ConfigError("mask run exceeds volume size");
    prev_end = r.start + r.length;  // adjacency check: next start must be > end
  }
}

MaskTube MaskTube::from_dense(const VolumeDims& dims,
                              std::span<const std::uint8_t> dense) {
  MaskTube mask(dims);
  const Index n = dims.num_pixels();
  Index i = 0;
  while (i < n) {
    if (dense[static_cast<size_t>(i)]) {
      Index start = i;
      while (i < n && dense[static_cast<size_t>(i)]) ++i;
      mask.runs_.push_back(Run{start, i - start});
    } else {
      ++i;
    }
  }
  return mask;
}

MaskTube MaskTube::from_indices(const VolumeDims& dims,
                                std::span<const Index> sorted_indices) {
  MaskTube mask(dims);
  size_t i = 0;
  while (i < sorted_indices.size()) {
    const Index start = sorted_indices[i];
    Index len = 1;
    while (i + 1 < sorted_indices.size() &&
           sorted_indices[i + 1] == sorted_indices[i] + 1) {
      ++i;
      ++len;
    }
    mask.runs_.push_back(Run{start, len});
    ++i;
  }
  return mask;
}

Index MaskTube::pixel_count() const {
  Index n = 0;
  for (const Run& r : runs_) n += r.length;
  return n;
}

bool MaskTube::contains(Index i) const {
  auto it = std::upper_bound(
      runs_.begin(), runs_.end(), i,
      [](Index v, const Run& r) { return v < r.start; });
  if (it == runs_.begin()) return false;
  --it;
  return i < it->start + it->length;
}

std::vector<std::uint8_t> MaskTube::to_dense() const {
  std::vector<std::uint8_t> dense(static_cast<size_t>(dims_.num_pixels()), 0);
  for (const Run& r : runs_)
    std::fill_n(dense.begin() + static_cast<size_t>(r.start),
                static_cast<size_t>(r.length), std::uint8_t{1});
  return dense;
}

std::vector<Index> MaskTube::to_indices() const {
  std::vector<Index> idx;
  idx.reserve(static_cast<size_t>(pixel_count()));
  for (const Run& r : runs_)
    for (Index i = r.start; i < r.start + r.length; ++i) idx.push_back(i);
  return idx;
}

MaskTube MaskTube::restrict_frames(int first, int last) const {
  const Index frame_px = static_cast<Index>(dims_.height) * dims_.width;
  const Index lo = static_cast<Index>(first) * frame_px;
  const Index hi = static_cast<Index>(last) * frame_px;
  MaskTube out(dims_);
  for (const Run& r : runs_) {
    const Index s = std::max(r.start, lo);
    const Index e = std::min(r.start + r.length, hi);
    if (s < e) out.runs_.push_back(Run{s, e - s});
  }
  return out;
}

MaskTube MaskTube::extract_frames(int first, int count) const {
  const Index frame_px = static_cast<Index>(dims_.height) * dims_.width;
  const Index lo = static_cast<Index>(first) * frame_px;
  const Index hi = lo + static_cast<Index>(count) * frame_px;
  MaskTube out(VolumeDims{count, dims_.height, dims_.width});
  for (const Run& r : runs_) {
    const Index s = std::max(r.start, lo);
    const Index e = std::min(r.start + r.length, hi);
    if (s < e) out.runs_.push_back(Run{s - lo, e - s});
  }
  return out;
}

double tube_iou(const MaskTube& a, const MaskTube& b) {
  if (!(a.dims() == b.dims()))
    throw ConfigError("tube_iou: dims mismatch");
  const auto& ra = a.runs();
  const auto& rb = b.runs();
  Index inter = 0;
  size_t i = 0, j = 0;
  while (i < ra.size() && j < rb.size()) {
    const Index s = std::max(ra[i].start, rb[j].start);
    const Index e =
        std::min(ra[i].start + ra[i].length, rb[j].start + rb[j].length);
    if (s < e) inter += e - s;
    if (ra[i].start + ra[i].length < rb[j].start + rb[j].length)
      ++i;
    else
      ++j;
  }
  const Index uni = a.pixel_count() + b.pixel_count() - inter;
  if (uni == 0) return 1.0;  // both empty: vacuous match
  return static_cast<double>(inter) / static_cast<double>(uni);
}

InstanceLabeling::InstanceLabeling(VolumeDims dims)
    : dims_(dims),
      labels_(static_cast<size_t>(dims.num_pixels()), 0) {
  validate_dims(dims);
}

InstanceLabeling::InstanceLabeling(VolumeDims dims, std::vector<int> labels)
    : dims_(dims), labels_(std::move(labels)) {
  validate_dims(dims);
  if (static_cast<Index>(labels_.size()) != dims_.num_pixels())
    throw ConfigError("labeling size does not match dims");
  for (int v : labels_)
    if (v < 0) throw ConfigError("labeling contains negative id");
}

void InstanceLabeling::set_label(Index i, int id) {
  if (id < 0) throw ConfigError("labeling id must be non-negative");
  labels_[static_cast<size_t>(i)] = id;
}

std::vector<int> InstanceLabeling::instance_ids() const {
  std::vector<int> ids(labels_.begin(), labels_.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (!ids.empty() && ids.front() == 0) ids.erase(ids.begin());
  return ids;
}

MaskTube InstanceLabeling::mask_for(int id) const {
  MaskTube out(dims_);
  std::vector<Run> runs;
  const Index n = dims_.num_pixels();
  Index i = 0;
  while (i < n) {
    if (labels_[static_cast<size_t>(i)] == id && id != 0) {
      Index start = i;
      while (i < n && labels_[static_cast<size_t>(i)] == id) ++i;
      runs.push_back(Run{start, i - start});
    } else {
      ++i;
    }
  }
  return MaskTube(dims_, std::move(runs));
}

std::vector<Index> InstanceLabeling::pixels_of(int id) const {
  std::vector<Index> idx;
  for (Index i = 0; i < dims_.num_pixels(); ++i)
    if (labels_[static_cast<size_t>(i)] == id) idx.push_back(i);
  return idx;
}

InstanceLabeling InstanceLabeling::extract_frames(int first, int count) const {
  const Index frame_px = static_cast<Index>(dims_.height) * dims_.width;
  InstanceLabeling out(VolumeDims{count, dims_.height, dims_.width});
  const Index lo = static_cast<Index>(first) * frame_px;
  std::copy_n(labels_.begin() + static_cast<size_t>(lo),
              static_cast<size_t>(frame_px) * count, out.labels_.begin());
  return out;
}

namespace {

VolumeDims read_dims_header(std::istream& in) {
  std::string tag;
  VolumeDims dims;
  if (!(in >> tag >> dims.t_len >> dims.height >> dims.width) || tag != "dims")
    throw IoError("expected 'dims T H W' header");
  validate_dims(dims);
  return dims;
}

}  // namespace

void save_mask_tube(const MaskTube& mask, std::ostream& out) {
  const auto& d = mask.dims();
  out << "dims " << d.t_len << " " << d.height << " " << d.width << "\n";
  for (const Run& r : mask.runs()) out << r.start << " " << r.length << "\n";
}

MaskTube load_mask_tube(std::istream& in) {
  const VolumeDims dims = read_dims_header(in);
  std::vector<Run> runs;
  Run r;
  while (in >> r.start >> r.length) runs.push_back(r);
  if (!in.eof() && in.fail() && !in.bad()) {
    // trailing garbage that is not a number pair
    in.clear();
    std::string rest;
    if (in >> rest) throw IoError("malformed mask tube run line");
  }
  try {
    return MaskTube(dims, std::move(runs));
  } catch (const ConfigError& e) {
    throw IoError(std::string("malformed mask tube: ") + e.what());
  }
}

void save_labeling(const InstanceLabeling& labeling, std::ostream& out) {
  const auto& d = labeling.dims();
  out << "dims " << d.t_len << " " << d.height << " " << d.width << "\n";
  for (int id : labeling.instance_ids()) {
    const MaskTube mask = labeling.mask_for(id);
    for (const Run& r : mask.runs())
      out << id << " " << r.start << " " << r.length << "\n";
  }
}

InstanceLabeling load_labeling(std::istream& in) {
  const VolumeDims dims = read_dims_header(in);
  InstanceLabeling labeling(dims);
  int id;
  Run r;
  std::map<int, Index> assigned;  // detect double assignment
  while (in >> id >> r.start >> r.length) {
    if (id <= 0 || r.start < 0 || r.length <= 0 ||
        r.start + r.length > dims.num_pixels())
      throw IoError("malformed labeling run");
    for (Index i = r.start; i < r.start + r.length; ++i) {
      if (labeling.label(i) != 0)
        throw IoError("labeling runs overlap");
      labeling.set_label(i, id);
    }
  }
  if (!in.eof() && in.fail() && !in.bad()) {
    in.clear();
    std::string rest;
    if (in >> rest) throw IoError("malformed labeling run line");
  }
  return labeling;
}

namespace {

template <typename SaveFn>
void save_to_path(const std::string& path, SaveFn fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  fn(out);
  if (!out) throw IoError("write failed: " + path);
}

std::ifstream open_for_read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  return in;
}

}  // namespace

void save_mask_tube_file(const MaskTube& mask, const std::string& path) {
  save_to_path(path, [&](std::ostream& out) { save_mask_tube(mask, out); });
}

MaskTube load_mask_tube_file(const std::string& path) {
  auto in = open_for_read(path);
  return load_mask_tube(in);
}

void save_labeling_file(const InstanceLabeling& labeling,
                        const std::string& path) {
  save_to_path(path, [&](std::ostream& out) { save_labeling(labeling, out); });
}

InstanceLabeling load_labeling_file(const std::string& path) {
  auto in = open_for_read(path);
  return load_labeling(in);
}

}  // namespace tubeseg
