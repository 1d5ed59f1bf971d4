// Pipeline configuration: a sectioned key = value text file with strict
// validation and command-line overrides.
#pragma once

#include <string>

#include "tubeseg/inference.hpp"
#include "tubeseg/losses.hpp"
#include "tubeseg/mixing.hpp"
#include "tubeseg/synth.hpp"
#include "tubeseg/trainer.hpp"
#include "tubeseg/volume.hpp"

namespace tubeseg {

struct StitchingConfig {
  int overlap = 4;            // shared frames between consecutive clips
  double min_assoc_iou = 0.1; // association gate
};

struct PipelineConfig {
  VolumeDims clip_dims{8, 48, 48};  // [dims] t / height / width
  MixingSpec mixing;                // [mixing]
  LossConfig loss;                  // [losses]
  ClusterConfig cluster;            // [inference]
  StitchingConfig stitching;        // [stitching]
  OptimConfig optim;                // [optimizer]
  SynthConfig synth;                // [synth]; synth.dims.t_len is video_len
  int synth_video_len = 24;

  // Desk-scale defaults; the optimizer schedule here is calibrated for
  // direct per-pixel fields rather than network weights.
  static PipelineConfig defaults();

  // Parses the file on top of the defaults. Unknown sections or keys are
  // rejected. Throws ConfigError / IoError.
  static PipelineConfig from_file(const std::string& path);

  // Applies one "section.key=value" override.
  void apply_override(const std::string& spec);

  // Cross-field validation; throws ConfigError.
  void validate() const;

  std::string to_text() const;
};

}  // namespace tubeseg
