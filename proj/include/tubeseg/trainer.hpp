// Direct per-pixel field optimization: the raw embedding, variance and
// heat-logit fields are free parameters driven by the total loss with
// SGD + momentum. Stands in for a network at desk scale.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tubeseg/fields.hpp"
#include "tubeseg/losses.hpp"
#include "tubeseg/mixing.hpp"
#include "tubeseg/volume.hpp"

namespace tubeseg {

// Unconstrained parameters. The derived FieldSet applies the mixing offset
// to raw embeddings, softplus + the free-dimension pin to raw variances,
// and a sigmoid to heat logits, so variances stay positive and heat stays
// inside (0,1).
struct RawFields {
  VolumeDims dims;
  FieldMatrix raw_embeddings;       // N x E
  FieldMatrix raw_variances;        // N x E
  std::vector<double> heat_logits;  // N
};

struct OptimConfig {
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double lr_decay = 1.0;  // per-step multiplicative factor
  int max_steps = 1000;
  double tolerance = 0.0;  // |loss[k] - loss[k-50]| below this stops early
  std::uint64_t seed = 1;

  void validate() const;
};

double softplus(double x);
double inverse_softplus(double y);

FieldSet forward_fields(const RawFields& raw, const MixingSpec& spec);

// Seeded initialization: embeddings ~ N(0, 1e-3), variances at the raw
// value mapping to sigma^2 = 0.1, heat logits at -2.
RawFields init_raw_fields(const VolumeDims& dims, const MixingSpec& spec,
                          std::uint64_t seed);

struct RawGradients {
  FieldMatrix d_raw_embeddings;
  FieldMatrix d_raw_variances;
  std::vector<double> d_heat_logits;
};

// Chain FieldSet-level gradients back through mixing, the variance
// reparameterization/pin and the heat sigmoid.
RawGradients backward_fields(const RawFields& raw, const FieldSet& derived,
                             const TotalLossResult& loss,
                             const MixingSpec& spec);

struct OptimizeResult {
  RawFields fields;
  std::vector<LossBreakdown> history;  // one entry per evaluated step
};

// Runs SGD with momentum and exponential learning-rate decay on the raw
// fields. Deterministic per seed. Throws DivergenceError when the loss
// becomes non-finite, ConfigError when gt has no instance.
OptimizeResult optimize_fields(const InstanceLabeling& gt,
                               const MixingSpec& spec, const OptimConfig& opt,
                               const LossConfig& loss_cfg);

// Checkpoint text format: "dims T H W" header, then per field a
// "field <name> <cols> <rows>" line followed by one row per line of
// full-precision ASCII floats.
void save_raw_fields(const RawFields& raw, std::ostream& out);
RawFields load_raw_fields(std::istream& in);
void save_raw_fields_file(const RawFields& raw, const std::string& path);
RawFields load_raw_fields_file(const std::string& path);

void save_loss_history(const std::vector<LossBreakdown>& history,
                       const OptimConfig& opt, const std::string& path);

}  // namespace tubeseg
