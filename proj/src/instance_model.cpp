#include "tubeseg/instance_model.hpp"

#include <cmath>

#include "tubeseg/error.hpp"

namespace tubeseg {

void FieldSet::validate() const {
  validate_dims(dims);
  const Index n = dims.num_pixels();
  if (embeddings.rows != n || variances.rows != n ||
      static_cast<Index>(heat.size()) != n)
    throw ConfigError("field set row counts do not match volume");
  if (embeddings.cols != variances.cols)
    throw ConfigError("embedding and variance dims differ");
  for (double v : variances.data)
    if (!(v > 0.0)) throw ConfigError("variances must be strictly positive");
  for (double h : heat)
    if (!(h >= 0.0 && h <= 1.0))
      throw ConfigError("heat values must lie in [0,1]");
}

GaussianInstance instance_stats(const FieldMatrix& embedding_rows,
                                const FieldMatrix& variance_rows) {
  if (embedding_rows.rows == 0) throw ConfigError("empty instance");
  if (embedding_rows.rows != variance_rows.rows ||
      embedding_rows.cols != variance_rows.cols)
    throw ConfigError("instance_stats: shape mismatch");
  const int e = embedding_rows.cols;
  GaussianInstance g;
  g.mean.assign(e, 0.0);
  g.variances.assign(e, 0.0);
  for (Index i = 0; i < embedding_rows.rows; ++i) {
    auto er = embedding_rows.row(i);
    auto vr = variance_rows.row(i);
    for (int d = 0; d < e; ++d) {
      g.mean[d] += er[d];
      if (!(vr[d] > 0.0))
        throw ConfigError("instance_stats: non-positive variance");
      g.variances[d] += vr[d];
    }
  }
  const double inv = 1.0 / static_cast<double>(embedding_rows.rows);
  for (int d = 0; d < e; ++d) {
    g.mean[d] *= inv;
    g.variances[d] *= inv;
  }
  return g;
}

GaussianInstance instance_stats(const FieldMatrix& embeddings,
                                const FieldMatrix& variances,
                                std::span<const Index> pixels) {
  if (pixels.empty()) throw ConfigError("empty instance");
  const int e = embeddings.cols;
  GaussianInstance g;
  g.mean.assign(e, 0.0);
  g.variances.assign(e, 0.0);
  for (Index i : pixels) {
    auto er = embeddings.row(i);
    auto vr = variances.row(i);
    for (int d = 0; d < e; ++d) {
      g.mean[d] += er[d];
      if (!(vr[d] > 0.0))
        throw ConfigError("instance_stats: non-positive variance");
      g.variances[d] += vr[d];
    }
  }
  const double inv = 1.0 / static_cast<double>(pixels.size());
  for (int d = 0; d < e; ++d) {
    g.mean[d] *= inv;
    g.variances[d] *= inv;
  }
  return g;
}

namespace {

constexpr double kTwoPi = 6.283185307179586;

double normalization_constant(const GaussianInstance& g) {
  double det = 1.0;
  for (double v : g.variances) det *= v;
  const double e = static_cast<double>(g.variances.size());
  return std::pow(kTwoPi, -0.5 * e) / std::sqrt(det);
}

}  // namespace

double gaussian_prob(std::span<const double> e, const GaussianInstance& g,
                     ProbMode mode) {
  if (e.size() != g.mean.size())
    throw ConfigError("gaussian_prob: dimension mismatch");
  double q = 0.0;
  for (size_t d = 0; d < e.size(); ++d) {
    const double diff = e[d] - g.mean[d];
    q += diff * diff / g.variances[d];
  }
  const double kernel = std::exp(-0.5 * q);
  return mode == ProbMode::unnormalized ? kernel
                                        : normalization_constant(g) * kernel;
}

std::vector<double> prob_field(const FieldMatrix& embeddings,
                               const GaussianInstance& g, ProbMode mode) {
  if (embeddings.cols != static_cast<int>(g.mean.size()))
    throw ConfigError("prob_field: dimension mismatch");
  const double norm =
      mode == ProbMode::normalized ? normalization_constant(g) : 1.0;
  std::vector<double> probs(static_cast<size_t>(embeddings.rows));
  const int e = embeddings.cols;
  for (Index i = 0; i < embeddings.rows; ++i) {
    auto r = embeddings.row(i);
    double q = 0.0;
    for (int d = 0; d < e; ++d) {
      const double diff = r[d] - g.mean[d];
      q += diff * diff / g.variances[d];
    }
    probs[static_cast<size_t>(i)] = norm * std::exp(-0.5 * q);
  }
  return probs;
}

MaskTube threshold_mask(const VolumeDims& dims, std::span<const double> probs,
                        double threshold) {
  if (static_cast<Index>(probs.size()) != dims.num_pixels())
    throw ConfigError("threshold_mask: size mismatch");
  std::vector<Index> idx;
  for (Index i = 0; i < dims.num_pixels(); ++i)
    if (probs[static_cast<size_t>(i)] > threshold) idx.push_back(i);
  return MaskTube::from_indices(dims, idx);
}

}  // namespace tubeseg
