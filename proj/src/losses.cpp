#include "tubeseg/losses.hpp"

#include <algorithm>
#include <cmath>

#include "tubeseg/error.hpp"

namespace tubeseg {

LovaszResult lovasz_hinge(std::span<const double> scores, const MaskTube& gt) {
  if (static_cast<Index>(scores.size()) != gt.dims().num_pixels())
    throw ConfigError("lovasz_hinge: score field size mismatch");
  LovaszResult res;
  res.grad.assign(scores.size(), 0.0);
  const Index num_fg = gt.pixel_count();
  if (num_fg == 0) return res;

  const auto fg = gt.to_dense();

  // Only strictly positive hinge errors matter: zero-error pixels sort after
  // every positive one and contribute nothing to the loss or the gradient.
  struct ErrorEntry {
    double error;
    Index pixel;
  };
  std::vector<ErrorEntry> active;
  for (size_t i = 0; i < scores.size(); ++i) {
    const double y = fg[i] ? 1.0 : -1.0;
    const double m = 1.0 - y * scores[i];
    if (m > 0.0) active.push_back({m, static_cast<Index>(i)});
  }
  std::sort(active.begin(), active.end(),
            [](const ErrorEntry& a, const ErrorEntry& b) {
              if (a.error != b.error) return a.error > b.error;
              return a.pixel < b.pixel;
            });

  // Walk the sorted prefix chain: treating the first k pixels as errors,
  // the Jaccard loss is |S_k| / |G u S_k|; its increments weight the errors.
  Index missed_fg = 0;   // |G| - |G n S_k^c| growth -> fg pixels in S_k
  Index union_size = num_fg;
  double prev_delta = 0.0;
  for (const ErrorEntry& entry : active) {
    if (fg[static_cast<size_t>(entry.pixel)])
      ++missed_fg;
    else
      ++union_size;
    const double delta =
        1.0 - static_cast<double>(num_fg - missed_fg) /
                  static_cast<double>(union_size);
    const double g = delta - prev_delta;
    prev_delta = delta;
    res.loss += entry.error * g;
    const double y = fg[static_cast<size_t>(entry.pixel)] ? 1.0 : -1.0;
    res.grad[static_cast<size_t>(entry.pixel)] = -y * g;
  }
  return res;
}

namespace {

struct InstancePixels {
  int id;
  std::vector<Index> pixels;
};

std::vector<InstancePixels> collect_instances(const InstanceLabeling& gt) {
  std::vector<InstancePixels> out;
  for (int id : gt.instance_ids()) out.push_back({id, gt.pixels_of(id)});
  return out;
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

}  // namespace

EmbeddingLossResult embedding_loss(const FieldSet& fields,
                                   const InstanceLabeling& gt,
                                   const LossConfig& cfg) {
  if (!(gt.dims() == fields.dims))
    throw ConfigError("embedding_loss: labeling dims mismatch");
  const auto instances = collect_instances(gt);
  if (instances.empty()) throw ConfigError("embedding_loss: no instances");

  const Index n = fields.dims.num_pixels();
  const int e = fields.embedding_dim();
  const double eps = cfg.logit_eps;
  EmbeddingLossResult res;
  res.d_embeddings = FieldMatrix(n, e);
  res.d_variances = FieldMatrix(n, e);

  const double inst_scale = 1.0 / static_cast<double>(instances.size());
  std::vector<double> scores(static_cast<size_t>(n));
  std::vector<double> probs(static_cast<size_t>(n));

  for (const auto& inst : instances) {
    const GaussianInstance g =
        instance_stats(fields.embeddings, fields.variances, inst.pixels);
    probs = prob_field(fields.embeddings, g, cfg.prob_mode);
    for (Index i = 0; i < n; ++i) {
      const double pc =
          std::clamp(probs[static_cast<size_t>(i)], eps, 1.0 - eps);
      scores[static_cast<size_t>(i)] = logit(pc);
    }
    const MaskTube mask = gt.mask_for(inst.id);
    const LovaszResult lov = lovasz_hinge(scores, mask);
    res.loss += inst_scale * lov.loss;

    // Backward through logit, probability, and the averaged mean/variance.
    std::vector<double> d_mean(e, 0.0), d_var(e, 0.0);
    for (Index i = 0; i < n; ++i) {
      const double df = lov.grad[static_cast<size_t>(i)];
      if (df == 0.0) continue;
      const double p = probs[static_cast<size_t>(i)];
      if (p <= eps || p >= 1.0 - eps) continue;  // clamp is flat here
      const double s = df / (p * (1.0 - p));     // d score / d prob
      auto er = fields.embeddings.row(i);
      auto de = res.d_embeddings.row(i);
      for (int d = 0; d < e; ++d) {
        const double w = (er[d] - g.mean[d]) / g.variances[d];
        de[d] += inst_scale * s * (-p * w);
        d_mean[d] += s * p * w;
        double dvar = 0.5 * p * w * w;
        if (cfg.prob_mode == ProbMode::normalized)
          dvar -= 0.5 * p / g.variances[d];
        d_var[d] += s * dvar;
      }
    }
    const double share =
        inst_scale / static_cast<double>(inst.pixels.size());
    for (Index k : inst.pixels) {
      auto de = res.d_embeddings.row(k);
      auto dv = res.d_variances.row(k);
      for (int d = 0; d < e; ++d) {
        de[d] += share * d_mean[d];
        dv[d] += share * d_var[d];
      }
    }
  }
  return res;
}

SmoothnessResult smoothness_loss(const FieldMatrix& variance_rows) {
  if (variance_rows.rows == 0)
    throw ConfigError("smoothness_loss: empty instance");
  const Index n = variance_rows.rows;
  const int e = variance_rows.cols;
  std::vector<double> mean(e, 0.0);
  for (Index i = 0; i < n; ++i) {
    auto r = variance_rows.row(i);
    for (int d = 0; d < e; ++d) mean[d] += r[d];
  }
  for (int d = 0; d < e; ++d) mean[d] /= static_cast<double>(n);

  SmoothnessResult res;
  res.grad = FieldMatrix(n, e);
  for (Index i = 0; i < n; ++i) {
    auto r = variance_rows.row(i);
    auto gr = res.grad.row(i);
    for (int d = 0; d < e; ++d) {
      const double dev = r[d] - mean[d];
      res.loss += dev * dev;
      gr[d] = 2.0 * dev / static_cast<double>(n);
    }
  }
  res.loss /= static_cast<double>(n);
  return res;
}

CenterLossResult center_loss(const FieldSet& fields,
                             const InstanceLabeling& gt, ProbMode mode) {
  if (!(gt.dims() == fields.dims))
    throw ConfigError("center_loss: labeling dims mismatch");
  const Index n = fields.dims.num_pixels();
  std::vector<double> target(static_cast<size_t>(n), 0.0);
  for (const auto& inst : collect_instances(gt)) {
    const GaussianInstance g =
        instance_stats(fields.embeddings, fields.variances, inst.pixels);
    for (Index i : inst.pixels)
      target[static_cast<size_t>(i)] =
          gaussian_prob(fields.embeddings.row(i), g, mode);
  }
  CenterLossResult res;
  res.d_heat.assign(static_cast<size_t>(n), 0.0);
  for (Index i = 0; i < n; ++i) {
    const double diff =
        fields.heat[static_cast<size_t>(i)] - target[static_cast<size_t>(i)];
    res.loss += diff * diff;
    res.d_heat[static_cast<size_t>(i)] = 2.0 * diff / static_cast<double>(n);
  }
  res.loss /= static_cast<double>(n);
  return res;
}

TotalLossResult total_loss(const FieldSet& fields, const InstanceLabeling& gt,
                           const LossConfig& cfg) {
  const auto ids = gt.instance_ids();
  if (ids.empty()) throw ConfigError("total_loss: no instances");
  const Index n = fields.dims.num_pixels();
  const int e = fields.embedding_dim();

  TotalLossResult res;
  res.d_embeddings = FieldMatrix(n, e);
  res.d_variances = FieldMatrix(n, e);
  res.d_heat.assign(static_cast<size_t>(n), 0.0);

  EmbeddingLossResult emb = embedding_loss(fields, gt, cfg);
  res.breakdown.emb = emb.loss;
  const double we = cfg.weights.emb;
  for (size_t i = 0; i < emb.d_embeddings.data.size(); ++i) {
    res.d_embeddings.data[i] += we * emb.d_embeddings.data[i];
    res.d_variances.data[i] += we * emb.d_variances.data[i];
  }

  // Smoothness: per instance over its variance rows, averaged.
  const double inst_scale = 1.0 / static_cast<double>(ids.size());
  for (int id : ids) {
    const auto pixels = gt.pixels_of(id);
    FieldMatrix rows(static_cast<Index>(pixels.size()), e);
    for (size_t r = 0; r < pixels.size(); ++r) {
      auto src = fields.variances.row(pixels[r]);
      std::copy(src.begin(), src.end(), rows.row(static_cast<Index>(r)).begin());
    }
    const SmoothnessResult sm = smoothness_loss(rows);
    res.breakdown.smooth += inst_scale * sm.loss;
    const double ws = cfg.weights.smooth * inst_scale;
    for (size_t r = 0; r < pixels.size(); ++r) {
      auto gr = sm.grad.row(static_cast<Index>(r));
      auto dst = res.d_variances.row(pixels[r]);
      for (int d = 0; d < e; ++d) dst[d] += ws * gr[d];
    }
  }

  const CenterLossResult ctr = center_loss(fields, gt, cfg.prob_mode);
  res.breakdown.center = ctr.loss;
  for (Index i = 0; i < n; ++i)
    res.d_heat[static_cast<size_t>(i)] =
        cfg.weights.center * ctr.d_heat[static_cast<size_t>(i)];

  res.breakdown.total = cfg.weights.emb * res.breakdown.emb +
                        cfg.weights.smooth * res.breakdown.smooth +
                        cfg.weights.center * res.breakdown.center;
  return res;
}

}  // namespace tubeseg
