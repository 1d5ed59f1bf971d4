// Deterministic synthetic clips: moving shapes with exact ground truth, and
// single-image to clip augmentation via per-frame affine jitter.
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "tubeseg/volume.hpp"

namespace tubeseg {

enum class ShapeKind { rectangle, disk };

struct SynthConfig {
  VolumeDims dims;  // full video volume
  int num_instances = 2;
  std::vector<ShapeKind> shape_kinds = {ShapeKind::rectangle, ShapeKind::disk};
  double min_speed = 0.5;  // pixels per frame
  double max_speed = 1.5;
  double min_size = 5.0;  // half extent (rectangle) or radius (disk), pixels
  double max_size = 9.0;
  bool allow_exit = false;  // when false, shapes stay fully inside the frame
  std::uint64_t seed = 1;

  void validate() const;
};

struct InstanceTrajectory {
  int id = 0;
  ShapeKind kind = ShapeKind::rectangle;
  double size_x = 0.0;  // half extent along x; for disks equal to size_y
  double size_y = 0.0;
  std::vector<std::array<double, 2>> centers;  // (x, y) per frame
};

struct SynthClip {
  InstanceLabeling labeling;
  std::vector<InstanceTrajectory> trajectories;
};

// Constant-velocity shapes rendered per frame; a contested pixel belongs to
// the instance with the higher id (fixed z-order, higher id in front).
// Deterministic per seed.
SynthClip generate_clip(const SynthConfig& cfg);

struct AffineJitterConfig {
  double max_rotation_deg = 10.0;     // rotation sampled in +-range
  double max_translation_frac = 0.10; // of the frame size, per axis
  double min_scale = 0.8;
  double max_scale = 1.2;
  std::uint64_t seed = 1;

  void validate() const;
};

// Rotation and scale about the frame center followed by translation.
struct AffineTransform {
  double rotation_rad = 0.0;
  double translate_x = 0.0;  // pixels
  double translate_y = 0.0;
  double scale = 1.0;
};

// Nearest-neighbor label resampling of a single frame; pixels mapping
// outside the frame become background.
InstanceLabeling apply_affine_to_labels(const InstanceLabeling& base,
                                        const AffineTransform& transform);

// Frame 0 is the base; every later frame applies an independently sampled
// affine transform (rotation/translation/scale about the frame center) to
// the base labels with nearest-neighbor resampling. Pixels mapping outside
// the frame become background.
InstanceLabeling augment_image_to_clip(const InstanceLabeling& base,
                                       int t_len,
                                       const AffineJitterConfig& cfg);

}  // namespace tubeseg
