// Sequential cluster peeling: repeatedly seed at the highest remaining heat
// value, cut out the seed Gaussian's 0.5-probability region, and mask the
// claimed pixels from further consideration.
#pragma once

#include <vector>

#include "tubeseg/fields.hpp"
#include "tubeseg/instance_model.hpp"
#include "tubeseg/volume.hpp"

namespace tubeseg {

struct SeedInfo {
  Index seed_index = 0;
  double seed_heat = 0.0;
  GaussianInstance gaussian;  // read from the fields at the seed pixel
};

struct ClusterResult {
  InstanceLabeling labeling;
  // instances[k-1] describes instance id k; extraction order has
  // non-increasing seed heat.
  std::vector<SeedInfo> instances;
};

struct ClusterConfig {
  double heat_threshold = 0.5;  // stop when the best remaining heat drops below
  int min_pixels = 8;           // smaller tubes are rejected (seed masked only)
  ProbMode prob_mode = ProbMode::unnormalized;

  void validate() const;
};

// Deterministic: heat argmax ties break toward the lowest linear index;
// probabilities are evaluated over remaining pixels only, so extracted
// tubes are pairwise disjoint.
ClusterResult cluster_instances(const FieldSet& fields,
                                const ClusterConfig& cfg);

// Highest per-class mean of the logits over the mask pixels; ties break
// toward the lowest class index. Throws ConfigError on an empty mask.
int assign_category(const MaskTube& instance_mask,
                    const FieldMatrix& class_logits);

}  // namespace tubeseg
