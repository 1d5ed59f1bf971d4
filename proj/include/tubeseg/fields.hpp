#pragma once

#include <span>
#include <vector>

#include "tubeseg/volume.hpp"

namespace tubeseg {

// Dense row-major rows x cols matrix of doubles.
struct FieldMatrix {
  Index rows = 0;
  int cols = 0;
  std::vector<double> data;

  FieldMatrix() = default;
  FieldMatrix(Index rows_, int cols_, double fill = 0.0)
      : rows(rows_), cols(cols_),
        data(static_cast<size_t>(rows_) * cols_, fill) {}

  std::span<double> row(Index i) {
    return {data.data() + static_cast<size_t>(i) * cols,
            static_cast<size_t>(cols)};
  }
  std::span<const double> row(Index i) const {
    return {data.data() + static_cast<size_t>(i) * cols,
            static_cast<size_t>(cols)};
  }
  double& at(Index i, int d) {
    return data[static_cast<size_t>(i) * cols + d];
  }
  double at(Index i, int d) const {
    return data[static_cast<size_t>(i) * cols + d];
  }
};

// Model output triple over one clip: mixed embeddings, positive variances
// (free dimensions already pinned) and the center heat map in [0,1].
struct FieldSet {
  VolumeDims dims;
  FieldMatrix embeddings;      // N x E
  FieldMatrix variances;       // N x E, all entries > 0
  std::vector<double> heat;    // N, values in [0,1]

  int embedding_dim() const { return embeddings.cols; }

  // Throws ConfigError when shapes disagree or value ranges are violated.
  void validate() const;
};

}  // namespace tubeseg
