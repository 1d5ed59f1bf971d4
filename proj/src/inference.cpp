#include "tubeseg/inference.hpp"

#include <algorithm>
#include <cmath>

#include "tubeseg/error.hpp"

namespace tubeseg {

void ClusterConfig::validate() const {
  if (!(heat_threshold > 0.0 && heat_threshold < 1.0))
    throw ConfigError("heat_threshold must lie in (0,1)");
  if (min_pixels < 1) throw ConfigError("min_pixels must be >= 1");
}

ClusterResult cluster_instances(const FieldSet& fields,
                                const ClusterConfig& cfg) {
  cfg.validate();
  fields.validate();
  const Index n = fields.dims.num_pixels();
  const int e = fields.embedding_dim();

  ClusterResult res;
  res.labeling = InstanceLabeling(fields.dims);

  std::vector<std::uint8_t> remaining(static_cast<size_t>(n), 1);
  Index num_remaining = n;
  std::vector<Index> tube;

  while (num_remaining > 0) {
    // Highest remaining heat; lowest index wins ties.
    Index seed = -1;
    double best = -1.0;
    for (Index i = 0; i < n; ++i) {
      if (!remaining[static_cast<size_t>(i)]) continue;
      const double h = fields.heat[static_cast<size_t>(i)];
      if (h > best) {
        best = h;
        seed = i;
      }
    }
    if (seed < 0 || best < cfg.heat_threshold) break;

    GaussianInstance g;
    auto er = fields.embeddings.row(seed);
    auto vr = fields.variances.row(seed);
    g.mean.assign(er.begin(), er.end());
    g.variances.assign(vr.begin(), vr.end());
    const double norm_const =
        cfg.prob_mode == ProbMode::normalized
            ? gaussian_prob(g.mean, g, ProbMode::normalized)
            : 1.0;

    tube.clear();
    for (Index i = 0; i < n; ++i) {
      if (!remaining[static_cast<size_t>(i)]) continue;
      auto row = fields.embeddings.row(i);
      double q = 0.0;
      for (int d = 0; d < e; ++d) {
        const double diff = row[d] - g.mean[d];
        q += diff * diff / g.variances[d];
      }
      if (norm_const * std::exp(-0.5 * q) > 0.5) tube.push_back(i);
    }

    if (static_cast<Index>(tube.size()) >= cfg.min_pixels) {
      const int id = static_cast<int>(res.instances.size()) + 1;
      for (Index i : tube) {
        res.labeling.set_label(i, id);
        remaining[static_cast<size_t>(i)] = 0;
      }
      num_remaining -= static_cast<Index>(tube.size());
      res.instances.push_back(SeedInfo{seed, best, std::move(g)});
    } else {
      // Rejected seed: mask only the seed pixel so the loop terminates.
      remaining[static_cast<size_t>(seed)] = 0;
      --num_remaining;
    }
  }
  return res;
}

int assign_category(const MaskTube& instance_mask,
                    const FieldMatrix& class_logits) {
  if (instance_mask.empty())
    throw ConfigError("assign_category: empty instance mask");
  if (class_logits.rows != instance_mask.dims().num_pixels())
    throw ConfigError("assign_category: logit field size mismatch");
  if (class_logits.cols < 1)
    throw ConfigError("assign_category: need at least one class");

  std::vector<double> mean(static_cast<size_t>(class_logits.cols), 0.0);
  Index count = 0;
  for (const Run& r : instance_mask.runs()) {
    for (Index i = r.start; i < r.start + r.length; ++i) {
      auto row = class_logits.row(i);
      for (int c = 0; c < class_logits.cols; ++c) mean[static_cast<size_t>(c)] += row[c];
      ++count;
    }
  }
  for (double& v : mean) v /= static_cast<double>(count);
  // max_element keeps the first maximum: lowest class index wins ties.
  return static_cast<int>(
      std::max_element(mean.begin(), mean.end()) - mean.begin());
}

}  // namespace tubeseg
