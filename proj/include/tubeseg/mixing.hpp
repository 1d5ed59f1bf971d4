// Embedding mixing functions and the free-dimension variance policy.
//
// A mixing function adds a fixed per-pixel offset vector to the raw
// embeddings: the normalized spatial coordinates (x, y), optionally the
// temporal coordinate t, and zero for the remaining "free" dimensions.
// Free-dimension variances are pinned to a fixed value so the model cannot
// inflate them into uselessness. The identity kind performs no offset and
// has no free dimensions (nothing is pinned).
#pragma once

#include <string>
#include <string_view>

#include "tubeseg/fields.hpp"
#include "tubeseg/volume.hpp"

namespace tubeseg {

enum class MixingKind { identity, xy, xyt, xyf, xytf, xyff, xyfff };

MixingKind mixing_kind_from_string(std::string_view name);
std::string to_string(MixingKind kind);

struct MixingSpec {
  MixingKind kind = MixingKind::xyff;
  double v_free = 0.05;

  // Embedding dimensionality: identity/xy -> 2, xyt/xyf -> 3,
  // xytf/xyff -> 4, xyfff -> 5.
  int embedding_dim() const;
  // Leading dimensions that receive coordinate offsets (0, 2 or 3).
  int num_coord_dims() const;
  bool has_temporal_dim() const;
  // Trailing zero-offset dimensions whose variance gets pinned. Identity has
  // none: with no coordinate offsets there is nothing to pin against.
  int num_free_dims() const {
    return num_coord_dims() == 0 ? 0 : embedding_dim() - num_coord_dims();
  }

  void validate() const;  // v_free > 0
};

// Per-pixel offset vector of length embedding_dim(); order is x, y,
// then t when present, then zeros.
void mixing_offset(const MixingSpec& spec, const PixelCoord& coord,
                   std::span<double> out);

// Element-wise addition of the offset at every pixel. Identity returns the
// input unchanged. Throws ConfigError when raw.cols != spec.embedding_dim().
FieldMatrix apply_mixing(const FieldMatrix& raw, const VolumeDims& dims,
                         const MixingSpec& spec);

// Coordinate-dimension variances pass through; every free-dimension
// variance is replaced by v_free. Throws ConfigError on dimension mismatch
// or a non-positive input variance.
FieldMatrix apply_variance_policy(const FieldMatrix& raw,
                                  const MixingSpec& spec);

}  // namespace tubeseg
