// Training objective: Lovasz-hinge embedding loss, variance smoothness and
// center heat-map regression, with analytic gradients with respect to the
// per-pixel fields.
#pragma once

#include <span>
#include <vector>

#include "tubeseg/fields.hpp"
#include "tubeseg/instance_model.hpp"
#include "tubeseg/volume.hpp"

namespace tubeseg {

struct LossWeights {
  double emb = 1.0;
  double smooth = 1.0;
  double center = 1.0;
};

struct LossConfig {
  LossWeights weights;
  double logit_eps = 1e-6;  // clamp for the probability-to-score logit
  ProbMode prob_mode = ProbMode::unnormalized;
};

struct LossBreakdown {
  double emb = 0.0;
  double smooth = 0.0;
  double center = 0.0;
  double total = 0.0;  // weighted sum of the three components
};

struct LovaszResult {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d score, per pixel
};

// Lovasz extension of the Jaccard loss over hinge errors. Scores are
// per-pixel margins F_i; ground truth gives labels y_i in {+1,-1}. Hinge
// errors m_i = max(0, 1 - F_i * y_i) are sorted in decreasing order and
// weighted by the discrete Jaccard-loss increments along the sorted prefix
// chain. An all-background ground truth yields loss 0 and zero gradient.
LovaszResult lovasz_hinge(std::span<const double> scores, const MaskTube& gt);

struct EmbeddingLossResult {
  double loss = 0.0;
  FieldMatrix d_embeddings;  // N x E
  FieldMatrix d_variances;   // N x E
};

// Mean Lovasz hinge over instances. Per instance: Gaussian parameters are
// the means of the instance pixels' embeddings and variances, the score
// field is logit(clamp(p, eps, 1-eps)) of the per-pixel membership
// probability, and the hinge is taken against the instance's mask over all
// pixels. Gradients flow through the logit, the probability and the
// averaged Gaussian parameters into every contributing pixel.
EmbeddingLossResult embedding_loss(const FieldSet& fields,
                                   const InstanceLabeling& gt,
                                   const LossConfig& cfg);

struct SmoothnessResult {
  double loss = 0.0;
  FieldMatrix grad;  // same shape as the input rows
};

// Mean squared deviation of variance rows from their mean row, summed over
// dimensions: (1/N_j) * sum_rows |v - v_bar|^2.
SmoothnessResult smoothness_loss(const FieldMatrix& variance_rows);

struct CenterLossResult {
  double loss = 0.0;
  std::vector<double> d_heat;  // N
};

// L2 regression of the heat map onto the per-pixel membership probability
// of the owning instance (0 for background). Targets are detached: the
// gradient flows into the heat map only.
CenterLossResult center_loss(const FieldSet& fields,
                             const InstanceLabeling& gt, ProbMode mode);

struct TotalLossResult {
  LossBreakdown breakdown;
  FieldMatrix d_embeddings;
  FieldMatrix d_variances;
  std::vector<double> d_heat;
};

// Weighted sum of the three loss terms plus combined gradients.
// Throws ConfigError when gt has no instances.
TotalLossResult total_loss(const FieldSet& fields, const InstanceLabeling& gt,
                           const LossConfig& cfg);

}  // namespace tubeseg
