#include "tubeseg/mixing.hpp"

#include <sstream>

#include "tubeseg/error.hpp"

namespace tubeseg {

MixingKind mixing_kind_from_string(std::string_view name) {
  if (name == "identity") return MixingKind::identity;
  if (name == "xy") return MixingKind::xy;
  if (name == "xyt") return MixingKind::xyt;
  if (name == "xyf") return MixingKind::xyf;
  if (name == "xytf") return MixingKind::xytf;
  if (name == "xyff") return MixingKind::xyff;
  if (name == "xyfff") return MixingKind::xyfff;
  throw ConfigError("unknown mixing kind: " + std::string(name));
}

std::string to_string(MixingKind kind) {
  switch (kind) {
    case MixingKind::identity: return "identity";
    case MixingKind::xy: return "xy";
    case MixingKind::xyt: return "xyt";
    case MixingKind::xyf: return "xyf";
    case MixingKind::xytf: return "xytf";
    case MixingKind::xyff: return "xyff";
    case MixingKind::xyfff: return "xyfff";
  }
  return "?";
}

int MixingSpec::embedding_dim() const {
  switch (kind) {
    case MixingKind::identity: return 2;
    case MixingKind::xy: return 2;
    case MixingKind::xyt: return 3;
    case MixingKind::xyf: return 3;
    case MixingKind::xytf: return 4;
    case MixingKind::xyff: return 4;
    case MixingKind::xyfff: return 5;
  }
  return 0;
}

int MixingSpec::num_coord_dims() const {
  switch (kind) {
    case MixingKind::identity: return 0;
    case MixingKind::xy:
    case MixingKind::xyf:
    case MixingKind::xyff:
    case MixingKind::xyfff: return 2;
    case MixingKind::xyt:
    case MixingKind::xytf: return 3;
  }
  return 0;
}

bool MixingSpec::has_temporal_dim() const {
  return kind == MixingKind::xyt || kind == MixingKind::xytf;
}

void MixingSpec::validate() const {
  if (!(v_free > 0.0)) throw ConfigError("v_free must be positive");
}

void mixing_offset(const MixingSpec& spec, const PixelCoord& coord,
                   std::span<double> out) {
  const int e = spec.embedding_dim();
  for (int d = 0; d < e; ++d) out[d] = 0.0;
  if (spec.num_coord_dims() == 0) return;
  out[0] = coord.x;
  out[1] = coord.y;
  if (spec.has_temporal_dim()) out[2] = coord.t;
}

FieldMatrix apply_mixing(const FieldMatrix& raw, const VolumeDims& dims,
                         const MixingSpec& spec) {
  if (raw.cols != spec.embedding_dim()) {
    std::ostringstream msg;
    msg << "embedding dim " << raw.cols << " does not match mixing kind "
        << to_string(spec.kind) << " (expects " << spec.embedding_dim() << ")";
    throw ConfigError(msg.str());
  }
  if (raw.rows != dims.num_pixels())
    throw ConfigError("embedding row count does not match volume");
  FieldMatrix out = raw;
  if (spec.kind == MixingKind::identity) return out;
  const bool temporal = spec.has_temporal_dim();
  for (Index i = 0; i < raw.rows; ++i) {
    const PixelCoord c = coord_at(dims, i);
    auto r = out.row(i);
    r[0] += c.x;
    r[1] += c.y;
    if (temporal) r[2] += c.t;
  }
  return out;
}

FieldMatrix apply_variance_policy(const FieldMatrix& raw,
                                  const MixingSpec& spec) {
  if (raw.cols != spec.embedding_dim())
    throw ConfigError("variance dim does not match mixing kind");
  spec.validate();
  for (double v : raw.data)
    if (!(v > 0.0)) throw ConfigError("variances must be strictly positive");
  FieldMatrix out = raw;
  const int first_free = spec.embedding_dim() - spec.num_free_dims();
  for (Index i = 0; i < out.rows; ++i) {
    auto r = out.row(i);
    for (int d = first_free; d < out.cols; ++d) r[d] = spec.v_free;
  }
  return out;
}

}  // namespace tubeseg
