#include "tubeseg/synth.hpp"

#include <algorithm>
#include <cmath>

#include "tubeseg/error.hpp"
#include "tubeseg/rng.hpp"

namespace tubeseg {

void SynthConfig::validate() const {
  validate_dims(dims);
  if (num_instances < 0) throw ConfigError("num_instances must be >= 0");
  if (shape_kinds.empty()) throw ConfigError("need at least one shape kind");
  if (!(min_speed >= 0.0 && max_speed >= min_speed))
    throw ConfigError("invalid speed range");
  if (!(min_size > 0.0 && max_size >= min_size))
    throw ConfigError("invalid size range");
  if (2.0 * max_size + 2.0 > std::min(dims.width, dims.height))
    throw ConfigError("shapes do not fit the frame");
}

namespace {

struct ShapeState {
  ShapeKind kind;
  double size_x, size_y;
  double cx, cy;  // center at frame 0
  double vx, vy;  // pixels per frame
};

bool inside_shape(const ShapeState& s, double cx, double cy, int px, int py) {
  const double dx = px - cx;
  const double dy = py - cy;
  if (s.kind == ShapeKind::rectangle)
    return std::abs(dx) <= s.size_x && std::abs(dy) <= s.size_y;
  return dx * dx + dy * dy <= s.size_x * s.size_x;
}

}  // namespace

SynthClip generate_clip(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const int w = cfg.dims.width;
  const int h = cfg.dims.height;
  const int t_len = cfg.dims.t_len;

  std::vector<ShapeState> shapes;
  for (int k = 0; k < cfg.num_instances; ++k) {
    ShapeState s;
    s.kind = cfg.shape_kinds[static_cast<size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(cfg.shape_kinds.size()) - 1))];
    s.size_x = rng.uniform(cfg.min_size, cfg.max_size);
    s.size_y = s.kind == ShapeKind::disk ? s.size_x
                                         : rng.uniform(cfg.min_size, cfg.max_size);
    const double speed = rng.uniform(cfg.min_speed, cfg.max_speed);
    const double angle = rng.uniform(0.0, 6.283185307179586);
    s.vx = speed * std::cos(angle);
    s.vy = speed * std::sin(angle);

    // Keep shapes inside the frame over the whole clip unless exits are
    // allowed; initial placements avoid overlapping earlier shapes (best
    // effort, capped attempts).
    const double span_x = s.vx * (t_len - 1);
    const double span_y = s.vy * (t_len - 1);
    double lo_x = s.size_x, hi_x = w - 1 - s.size_x;
    double lo_y = s.size_y, hi_y = h - 1 - s.size_y;
    if (!cfg.allow_exit) {
      lo_x = std::max(lo_x, s.size_x - std::min(span_x, 0.0));
      hi_x = std::min(hi_x, w - 1 - s.size_x - std::max(span_x, 0.0));
      lo_y = std::max(lo_y, s.size_y - std::min(span_y, 0.0));
      hi_y = std::min(hi_y, h - 1 - s.size_y - std::max(span_y, 0.0));
      if (lo_x > hi_x || lo_y > hi_y) {
        // Motion span too large for the frame: drop the velocity.
        s.vx = 0.0;
        s.vy = 0.0;
        lo_x = s.size_x;
        hi_x = w - 1 - s.size_x;
        lo_y = s.size_y;
        hi_y = h - 1 - s.size_y;
      }
    }
    for (int attempt = 0; attempt < 64; ++attempt) {
      s.cx = rng.uniform(lo_x, hi_x);
      s.cy = rng.uniform(lo_y, hi_y);
      bool clear = true;
      for (const ShapeState& other : shapes) {
        const double min_dx = s.size_x + other.size_x;
        const double min_dy = s.size_y + other.size_y;
        if (std::abs(s.cx - other.cx) < min_dx &&
            std::abs(s.cy - other.cy) < min_dy) {
          clear = false;
          break;
        }
      }
      if (clear) break;
    }
    shapes.push_back(s);
  }

  SynthClip clip;
  clip.labeling = InstanceLabeling(cfg.dims);
  for (size_t k = 0; k < shapes.size(); ++k) {
    InstanceTrajectory traj;
    traj.id = static_cast<int>(k) + 1;
    traj.kind = shapes[k].kind;
    traj.size_x = shapes[k].size_x;
    traj.size_y = shapes[k].size_y;
    traj.centers.reserve(static_cast<size_t>(t_len));
    clip.trajectories.push_back(std::move(traj));
  }

  for (int f = 0; f < t_len; ++f) {
    for (size_t k = 0; k < shapes.size(); ++k) {
      const ShapeState& s = shapes[k];
      const double cx = s.cx + s.vx * f;
      const double cy = s.cy + s.vy * f;
      clip.trajectories[k].centers.push_back({cx, cy});
      const int id = static_cast<int>(k) + 1;
      // Rasterize clipped to the frame; later (higher) ids overwrite.
      const int x0 = std::max(0, static_cast<int>(std::floor(cx - s.size_x)));
      const int x1 = std::min(w - 1, static_cast<int>(std::ceil(cx + s.size_x)));
      const int y0 = std::max(0, static_cast<int>(std::floor(cy - s.size_y)));
      const int y1 = std::min(h - 1, static_cast<int>(std::ceil(cy + s.size_y)));
      for (int py = y0; py <= y1; ++py)
        for (int px = x0; px <= x1; ++px)
          if (inside_shape(s, cx, cy, px, py))
            clip.labeling.set_label(linear_index(cfg.dims, f, py, px), id);
    }
  }
  return clip;
}

void AffineJitterConfig::validate() const {
  if (max_rotation_deg < 0.0) throw ConfigError("rotation range must be >= 0");
  if (max_translation_frac < 0.0)
    throw ConfigError("translation range must be >= 0");
  if (!(min_scale > 0.0 && max_scale >= min_scale))
    throw ConfigError("invalid scale range");
}

InstanceLabeling apply_affine_to_labels(const InstanceLabeling& base,
                                        const AffineTransform& transform) {
  if (base.dims().t_len != 1)
    throw ConfigError("apply_affine_to_labels: base must be a single frame");
  const int w = base.dims().width;
  const int h = base.dims().height;
  const double cx = (w - 1) / 2.0;
  const double cy = (h - 1) / 2.0;
  const double cosr = std::cos(transform.rotation_rad);
  const double sinr = std::sin(transform.rotation_rad);

  InstanceLabeling out(base.dims());
  // Inverse map: destination pixel -> source pixel of the base frame.
  for (int py = 0; py < h; ++py) {
    for (int px = 0; px < w; ++px) {
      const double dx = px - cx - transform.translate_x;
      const double dy = py - cy - transform.translate_y;
      const double sx = (cosr * dx + sinr * dy) / transform.scale + cx;
      const double sy = (-sinr * dx + cosr * dy) / transform.scale + cy;
      const int ix = static_cast<int>(std::lround(sx));
      const int iy = static_cast<int>(std::lround(sy));
      int label = 0;
      if (ix >= 0 && ix < w && iy >= 0 && iy < h)
        label = base.label(linear_index(base.dims(), 0, iy, ix));
      out.set_label(linear_index(base.dims(), 0, py, px), label);
    }
  }
  return out;
}

InstanceLabeling augment_image_to_clip(const InstanceLabeling& base,
                                       int t_len,
                                       const AffineJitterConfig& cfg) {
  cfg.validate();
  if (base.dims().t_len != 1)
    throw ConfigError("augment_image_to_clip: base must be a single frame");
  if (t_len < 1) throw ConfigError("augment_image_to_clip: t_len must be >= 1");

  const int w = base.dims().width;
  const int h = base.dims().height;
  const VolumeDims out_dims{t_len, h, w};
  InstanceLabeling out(out_dims);
  const Index frame_px = static_cast<Index>(h) * w;

  // Frame 0 is the untransformed base.
  for (Index p = 0; p < frame_px; ++p) out.set_label(p, base.label(p));

  Rng rng(cfg.seed);
  for (int f = 1; f < t_len; ++f) {
    // Transforms are sampled independently per frame, never accumulated.
    AffineTransform tf;
    tf.rotation_rad = rng.uniform(-cfg.max_rotation_deg, cfg.max_rotation_deg) *
                      (3.141592653589793 / 180.0);
    tf.translate_x =
        rng.uniform(-cfg.max_translation_frac, cfg.max_translation_frac) * w;
    tf.translate_y =
        rng.uniform(-cfg.max_translation_frac, cfg.max_translation_frac) * h;
    tf.scale = rng.uniform(cfg.min_scale, cfg.max_scale);

    const InstanceLabeling frame = apply_affine_to_labels(base, tf);
    const Index dst = static_cast<Index>(f) * frame_px;
    for (Index p = 0; p < frame_px; ++p)
      out.set_label(dst + p, frame.label(p));
  }
  return out;
}

}  // namespace tubeseg
