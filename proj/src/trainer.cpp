#include "tubeseg/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "tubeseg/error.hpp"
#include "tubeseg/rng.hpp"

namespace tubeseg {

void OptimConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw ConfigError("momentum must lie in [0,1)");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0))
    throw ConfigError("lr_decay must lie in (0,1]");
  if (max_steps < 0) throw ConfigError("max_steps must be >= 0");
  if (tolerance < 0.0) throw ConfigError("tolerance must be >= 0");
}

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double inverse_softplus(double y) { return std::log(std::expm1(y)); }

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

FieldSet forward_fields(const RawFields& raw, const MixingSpec& spec) {
  const Index n = raw.dims.num_pixels();
  if (raw.raw_embeddings.rows != n || raw.raw_variances.rows != n ||
      static_cast<Index>(raw.heat_logits.size()) != n)
    throw ConfigError("raw field row counts do not match volume");
  if (raw.raw_embeddings.cols != spec.embedding_dim() ||
      raw.raw_variances.cols != spec.embedding_dim())
    throw ConfigError("raw field dims do not match mixing kind");

  FieldSet fs;
  fs.dims = raw.dims;
  fs.embeddings = apply_mixing(raw.raw_embeddings, raw.dims, spec);
  FieldMatrix positive = raw.raw_variances;
  for (double& v : positive.data) v = softplus(v);
  fs.variances = apply_variance_policy(positive, spec);
  fs.heat.resize(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i)
    fs.heat[static_cast<size_t>(i)] =
        sigmoid(raw.heat_logits[static_cast<size_t>(i)]);
  return fs;
}

RawFields init_raw_fields(const VolumeDims& dims, const MixingSpec& spec,
                          std::uint64_t seed) {
  validate_dims(dims);
  const Index n = dims.num_pixels();
  const int e = spec.embedding_dim();
  RawFields raw;
  raw.dims = dims;
  raw.raw_embeddings = FieldMatrix(n, e);
  Rng rng(seed);
  for (double& v : raw.raw_embeddings.data) v = rng.normal(0.0, 1e-3);
  raw.raw_variances = FieldMatrix(n, e, inverse_softplus(0.1));
  raw.heat_logits.assign(static_cast<size_t>(n), -2.0);
  return raw;
}

RawGradients backward_fields(const RawFields& raw, const FieldSet& derived,
                             const TotalLossResult& loss,
                             const MixingSpec& spec) {
  const Index n = raw.dims.num_pixels();
  const int e = spec.embedding_dim();
  RawGradients g;
  // Mixing adds a constant per-pixel offset, so embedding gradients pass
  // through unchanged.
  g.d_raw_embeddings = loss.d_embeddings;
  g.d_raw_variances = FieldMatrix(n, e);
  const int coord_dims = e - spec.num_free_dims();
  for (Index i = 0; i < n; ++i) {
    auto src = loss.d_variances.row(i);
    auto dst = g.d_raw_variances.row(i);
    auto rv = raw.raw_variances.row(i);
    for (int d = 0; d < coord_dims; ++d)
      dst[d] = src[d] * sigmoid(rv[d]);  // d softplus = sigmoid
    // free dims are pinned to a constant: no gradient reaches the raw value
  }
  g.d_heat_logits.assign(static_cast<size_t>(n), 0.0);
  for (Index i = 0; i < n; ++i) {
    const double h = derived.heat[static_cast<size_t>(i)];
    g.d_heat_logits[static_cast<size_t>(i)] =
        loss.d_heat[static_cast<size_t>(i)] * h * (1.0 - h);
  }
  return g;
}

OptimizeResult optimize_fields(const InstanceLabeling& gt,
                               const MixingSpec& spec, const OptimConfig& opt,
                               const LossConfig& loss_cfg) {
  opt.validate();
  spec.validate();
  if (gt.instance_ids().empty())
    throw ConfigError("optimize_fields: ground truth has no instances");

  OptimizeResult res;
  res.fields = init_raw_fields(gt.dims(), spec, opt.seed);
  RawFields& raw = res.fields;

  const Index n = raw.dims.num_pixels();
  const int e = spec.embedding_dim();
  FieldMatrix vel_emb(n, e), vel_var(n, e);
  std::vector<double> vel_heat(static_cast<size_t>(n), 0.0);

  double lr = opt.learning_rate;
  for (int step = 0; step < opt.max_steps; ++step) {
    const FieldSet fs = forward_fields(raw, spec);
    const TotalLossResult loss = total_loss(fs, gt, loss_cfg);
    if (!std::isfinite(loss.breakdown.total)) {
      std::ostringstream msg;
      msg << "non-finite loss at step " << step << " (lr " << lr << ")";
      throw DivergenceError(msg.str());
    }
    res.history.push_back(loss.breakdown);

    const size_t k = res.history.size();
    if (opt.tolerance > 0.0 && k > 50 &&
        std::abs(res.history[k - 1].total - res.history[k - 51].total) <
            opt.tolerance)
      break;

    const RawGradients grads = backward_fields(raw, fs, loss, spec);
    for (size_t i = 0; i < raw.raw_embeddings.data.size(); ++i) {
      vel_emb.data[i] =
          opt.momentum * vel_emb.data[i] - lr * grads.d_raw_embeddings.data[i];
      raw.raw_embeddings.data[i] += vel_emb.data[i];
      vel_var.data[i] =
          opt.momentum * vel_var.data[i] - lr * grads.d_raw_variances.data[i];
      raw.raw_variances.data[i] += vel_var.data[i];
    }
    for (size_t i = 0; i < raw.heat_logits.size(); ++i) {
      vel_heat[i] = opt.momentum * vel_heat[i] - lr * grads.d_heat_logits[i];
      raw.heat_logits[i] += vel_heat[i];
    }
    lr *= opt.lr_decay;
  }
  return res;
}

namespace {

void write_value(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out << buf;
}

void write_matrix(std::ostream& out, const std::string& name,
                  const FieldMatrix& m) {
  out << "field " << name << " " << m.cols << " " << m.rows << "\n";
  for (Index i = 0; i < m.rows; ++i) {
    auto r = m.row(i);
    for (int d = 0; d < m.cols; ++d) {
      if (d) out << " ";
      write_value(out, r[d]);
    }
    out << "\n";
  }
}

FieldMatrix read_matrix(std::istream& in, const std::string& expected_name) {
  std::string tag, name;
  int cols;
  Index rows;
  if (!(in >> tag >> name >> cols >> rows) || tag != "field" ||
      name != expected_name)
    throw IoError("expected 'field " + expected_name + " E N' header");
  if (cols < 1 || rows < 0) throw IoError("bad field shape");
  FieldMatrix m(rows, cols);
  for (double& v : m.data)
    if (!(in >> v)) throw IoError("truncated field data for " + expected_name);
  return m;
}

}  // namespace

void save_raw_fields(const RawFields& raw, std::ostream& out) {
  const auto& d = raw.dims;
  out << "dims " << d.t_len << " " << d.height << " " << d.width << "\n";
  write_matrix(out, "raw_embeddings", raw.raw_embeddings);
  write_matrix(out, "raw_variances", raw.raw_variances);
  FieldMatrix heat(static_cast<Index>(raw.heat_logits.size()), 1);
  heat.data = raw.heat_logits;
  write_matrix(out, "heat_logits", heat);
}

RawFields load_raw_fields(std::istream& in) {
  std::string tag;
  RawFields raw;
  if (!(in >> tag >> raw.dims.t_len >> raw.dims.height >> raw.dims.width) ||
      tag != "dims")
    throw IoError("expected 'dims T H W' header");
  validate_dims(raw.dims);
  raw.raw_embeddings = read_matrix(in, "raw_embeddings");
  raw.raw_variances = read_matrix(in, "raw_variances");
  const FieldMatrix heat = read_matrix(in, "heat_logits");
  if (heat.cols != 1) throw IoError("heat_logits must have one column");
  raw.heat_logits = heat.data;
  const Index n = raw.dims.num_pixels();
  if (raw.raw_embeddings.rows != n || raw.raw_variances.rows != n ||
      static_cast<Index>(raw.heat_logits.size()) != n)
    throw IoError("field rows do not match volume size");
  if (raw.raw_embeddings.cols != raw.raw_variances.cols)
    throw IoError("embedding and variance column counts differ");
  return raw;
}

void save_raw_fields_file(const RawFields& raw, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  save_raw_fields(raw, out);
  if (!out) throw IoError("write failed: " + path);
}

RawFields load_raw_fields_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  return load_raw_fields(in);
}

void save_loss_history(const std::vector<LossBreakdown>& history,
                       const OptimConfig& opt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "step,total,emb,smooth,center,lr\n";
  double lr = opt.learning_rate;
  for (size_t i = 0; i < history.size(); ++i) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", i,
                  history[i].total, history[i].emb, history[i].smooth,
                  history[i].center, lr);
    out << buf;
    lr *= opt.lr_decay;
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace tubeseg
