#include "tubeseg/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tubeseg/error.hpp"

namespace tubeseg {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
    return s.substr(1, s.size() - 2);
  return s;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value for " + key + ": " + value);
  }
}

long parse_int(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad integer value for " + key + ": " + value);
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw ConfigError("bad boolean value for " + key + ": " + value);
}

std::vector<ShapeKind> parse_shapes(const std::string& value) {
  std::vector<ShapeKind> kinds;
  std::stringstream ss(unquote(value));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item == "rectangle")
      kinds.push_back(ShapeKind::rectangle);
    else if (item == "disk")
      kinds.push_back(ShapeKind::disk);
    else
      throw ConfigError("unknown shape kind: " + item);
  }
  if (kinds.empty()) throw ConfigError("shapes list is empty");
  return kinds;
}

std::string shapes_to_string(const std::vector<ShapeKind>& kinds) {
  std::string out;
  for (size_t i = 0; i < kinds.size(); ++i) {
    if (i) out += ",";
    out += kinds[i] == ShapeKind::rectangle ? "rectangle" : "disk";
  }
  return out;
}

}  // namespace

PipelineConfig PipelineConfig::defaults() {
  PipelineConfig cfg;
  cfg.clip_dims = VolumeDims{8, 48, 48};
  cfg.mixing.kind = MixingKind::xyff;
  cfg.mixing.v_free = 0.05;
  cfg.loss = LossConfig{};
  cfg.cluster = ClusterConfig{};
  cfg.stitching = StitchingConfig{};
  cfg.optim.learning_rate = 200.0;
  cfg.optim.momentum = 0.9;
  cfg.optim.lr_decay = 0.999;
  cfg.optim.max_steps = 3000;
  cfg.optim.tolerance = 0.0;
  cfg.optim.seed = 1;
  cfg.synth = SynthConfig{};
  cfg.synth_video_len = 24;
  cfg.synth.dims = VolumeDims{cfg.synth_video_len, 48, 48};
  return cfg;
}

namespace {

void apply_entry(PipelineConfig& cfg, const std::string& section,
                 const std::string& key, const std::string& value) {
  auto unknown = [&]() -> ConfigError {
    return ConfigError("unknown config key " + section + "." + key);
  };
  if (section == "dims") {
    if (key == "t") cfg.clip_dims.t_len = static_cast<int>(parse_int(key, value));
    else if (key == "height") cfg.clip_dims.height = static_cast<int>(parse_int(key, value));
    else if (key == "width") cfg.clip_dims.width = static_cast<int>(parse_int(key, value));
    else throw unknown();
  } else if (section == "mixing") {
    if (key == "mixing") cfg.mixing.kind = mixing_kind_from_string(unquote(value));
    else if (key == "v_free") cfg.mixing.v_free = parse_double(key, value);
    else throw unknown();
  } else if (section == "losses") {
    if (key == "w_emb") cfg.loss.weights.emb = parse_double(key, value);
    else if (key == "w_smooth") cfg.loss.weights.smooth = parse_double(key, value);
    else if (key == "w_center") cfg.loss.weights.center = parse_double(key, value);
    else if (key == "epsilon") cfg.loss.logit_eps = parse_double(key, value);
    else throw unknown();
  } else if (section == "inference") {
    if (key == "heat_threshold") cfg.cluster.heat_threshold = parse_double(key, value);
    else if (key == "min_pixels") cfg.cluster.min_pixels = static_cast<int>(parse_int(key, value));
    else if (key == "prob_mode") {
      const std::string mode = unquote(value);
      if (mode == "unnormalized") cfg.cluster.prob_mode = ProbMode::unnormalized;
      else if (mode == "normalized") cfg.cluster.prob_mode = ProbMode::normalized;
      else throw ConfigError("unknown prob_mode: " + mode);
      cfg.loss.prob_mode = cfg.cluster.prob_mode;
    } else throw unknown();
  } else if (section == "stitching") {
    if (key == "overlap") cfg.stitching.overlap = static_cast<int>(parse_int(key, value));
    else if (key == "min_assoc_iou") cfg.stitching.min_assoc_iou = parse_double(key, value);
    else throw unknown();
  } else if (section == "optimizer") {
    if (key == "lr") cfg.optim.learning_rate = parse_double(key, value);
    else if (key == "momentum") cfg.optim.momentum = parse_double(key, value);
    else if (key == "decay") cfg.optim.lr_decay = parse_double(key, value);
    else if (key == "steps") cfg.optim.max_steps = static_cast<int>(parse_int(key, value));
    else if (key == "tolerance") cfg.optim.tolerance = parse_double(key, value);
    else if (key == "seed") cfg.optim.seed = static_cast<std::uint64_t>(parse_int(key, value));
    else throw unknown();
  } else if (section == "synth") {
    if (key == "video_len") cfg.synth_video_len = static_cast<int>(parse_int(key, value));
    else if (key == "num_instances") cfg.synth.num_instances = static_cast<int>(parse_int(key, value));
    else if (key == "shapes") cfg.synth.shape_kinds = parse_shapes(value);
    else if (key == "min_speed") cfg.synth.min_speed = parse_double(key, value);
    else if (key == "max_speed") cfg.synth.max_speed = parse_double(key, value);
    else if (key == "min_size") cfg.synth.min_size = parse_double(key, value);
    else if (key == "max_size") cfg.synth.max_size = parse_double(key, value);
    else if (key == "allow_exit") cfg.synth.allow_exit = parse_bool(key, value);
    else if (key == "seed") cfg.synth.seed = static_cast<std::uint64_t>(parse_int(key, value));
    else throw unknown();
  } else {
    throw ConfigError("unknown config section [" + section + "]");
  }
}

}  // namespace

PipelineConfig PipelineConfig::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config: " + path);
  PipelineConfig cfg = defaults();
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("bad section header at line " + std::to_string(line_no));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key = value at line " + std::to_string(line_no));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty())
      throw ConfigError("key outside any section at line " + std::to_string(line_no));
    apply_entry(cfg, section, key, value);
  }
  cfg.synth.dims = VolumeDims{cfg.synth_video_len, cfg.clip_dims.height,
                              cfg.clip_dims.width};
  cfg.validate();
  return cfg;
}

void PipelineConfig::apply_override(const std::string& spec) {
  const size_t eq = spec.find('=');
  const size_t dot = spec.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw ConfigError("override must look like section.key=value: " + spec);
  const std::string section = trim(spec.substr(0, dot));
  const std::string key = trim(spec.substr(dot + 1, eq - dot - 1));
  const std::string value = trim(spec.substr(eq + 1));
  apply_entry(*this, section, key, value);
  synth.dims = VolumeDims{synth_video_len, clip_dims.height, clip_dims.width};
}

void PipelineConfig::validate() const {
  validate_dims(clip_dims);
  mixing.validate();
  cluster.validate();
  optim.validate();
  if (!(loss.logit_eps > 0.0 && loss.logit_eps < 0.5))
    throw ConfigError("losses.epsilon must lie in (0, 0.5)");
  if (stitching.overlap < 0 || stitching.overlap >= clip_dims.t_len)
    throw ConfigError("stitching.overlap must lie in [0, dims.t)");
  if (!(stitching.min_assoc_iou >= 0.0 && stitching.min_assoc_iou <= 1.0))
    throw ConfigError("stitching.min_assoc_iou must lie in [0,1]");
  if (synth_video_len < 1) throw ConfigError("synth.video_len must be >= 1");
  synth.validate();
}

std::string PipelineConfig::to_text() const {
  std::ostringstream out;
  char buf[96];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%g", v);
    return std::string(buf);
  };
  out << "[dims]\n"
      << "t = " << clip_dims.t_len << "\n"
      << "height = " << clip_dims.height << "\n"
      << "width = " << clip_dims.width << "\n\n";
  out << "[mixing]\n"
      << "mixing = \"" << to_string(mixing.kind) << "\"\n"
      << "v_free = " << num(mixing.v_free) << "\n\n";
  out << "[losses]\n"
      << "w_emb = " << num(loss.weights.emb) << "\n"
      << "w_smooth = " << num(loss.weights.smooth) << "\n"
      << "w_center = " << num(loss.weights.center) << "\n"
      << "epsilon = " << num(loss.logit_eps) << "\n\n";
  out << "[inference]\n"
      << "heat_threshold = " << num(cluster.heat_threshold) << "\n"
      << "min_pixels = " << cluster.min_pixels << "\n"
      << "prob_mode = \""
      << (cluster.prob_mode == ProbMode::unnormalized ? "unnormalized"
                                                      : "normalized")
      << "\"\n\n";
  out << "[stitching]\n"
      << "overlap = " << stitching.overlap << "\n"
      << "min_assoc_iou = " << num(stitching.min_assoc_iou) << "\n\n";
  out << "[optimizer]\n"
      << "lr = " << num(optim.learning_rate) << "\n"
      << "momentum = " << num(optim.momentum) << "\n"
      << "decay = " << num(optim.lr_decay) << "\n"
      << "steps = " << optim.max_steps << "\n"
      << "tolerance = " << num(optim.tolerance) << "\n"
      << "seed = " << optim.seed << "\n\n";
  out << "[synth]\n"
      << "video_len = " << synth_video_len << "\n"
      << "num_instances = " << synth.num_instances << "\n"
      << "shapes = \"" << shapes_to_string(synth.shape_kinds) << "\"\n"
      << "min_speed = " << num(synth.min_speed) << "\n"
      << "max_speed = " << num(synth.max_speed) << "\n"
      << "min_size = " << num(synth.min_size) << "\n"
      << "max_size = " << num(synth.max_size) << "\n"
      << "allow_exit = " << (synth.allow_exit ? "true" : "false") << "\n"
      << "seed = " << synth.seed << "\n";
  return out.str();
}

}  // namespace tubeseg
