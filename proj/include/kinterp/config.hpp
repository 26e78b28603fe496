#pragma once

#include <cstdint>
#include <string>

#include "kinterp/data.hpp"
#include "kinterp/losses.hpp"
#include "kinterp/model.hpp"

namespace kinterp {

struct TrainSettings {
  float lr_start = 1e-3f;
  float lr_decay = 0.5f;
  int lr_decay_every = 20;   // epochs per halving
  float lr_floor = 6.25e-5f; // lr_start * lr_decay^4
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  int batch_size = 8;   // desk preset: 4
  int max_epochs = 100; // desk preset: 5
  bool grad_clip = false;
  float grad_clip_norm = 1.0f;
  AugmentationPolicy augment;
};

// Stepped decay with a floor: lr(e) = max(start * decay^(e/every), floor).
float learning_rate_at(const TrainSettings& t, int epoch);

struct PerceptualSettings {
  PerceptualMode mode = PerceptualMode::fixed_random;
  std::string plugin_path;  // used when mode == external_plugin
  uint64_t seed = 401;      // used when mode == fixed_random
};

PerceptualExtractor make_perceptual(const PerceptualSettings& s);

struct DataSettings {
  std::string root = "data";
  std::string train_split = "train.txt";  // resolved relative to root
  std::string test_split = "test.txt";
  int train_count = 2000;
  int test_count = 200;
  int height = 64;
  int width = 64;

  std::string train_split_path() const;
  std::string test_split_path() const;
  GenerateOptions generate_options(uint64_t seed) const;
};

// The complete declarative description of a run. Files are JSON trees whose
// paths follow the dotted key names below; a flat object with dotted keys
// ("cfse.enabled": true) is accepted as well. Unknown keys are rejected.
//
//   preset                  "desk" | "full" (selects every default below)
//   seed                    master RNG seed
//   model.kernel_size       deformable taps per axis (odd)
//   model.dilation          tap spacing
//   model.base_channels     feature extractor width
//   model.hierarchies       encoder levels (3 published wiring, 5 ablation)
//   model.compensation      multi-stage skip compensation on/off
//   regression.mode         linear | quadratic | linear_combination |
//                           unidirectional_fwd | unidirectional_bwd |
//                           second_order_unidirectional | joint_bidirectional
//   regression.shared_branches, regression.hidden_channels
//   cfse.enabled            bool
//   cfse.source_features    "f2f3" | "f1f2"
//   cfse.gridnet            "on" | "off"
//   loss.lambda_vgg, loss.lambda_d, loss.epsilon, loss.deformation_coarse
//   perceptual.mode         fixed_random | external_plugin | disabled
//   perceptual.path, perceptual.seed
//   train.lr_start, train.lr_decay, train.lr_decay_every, train.lr_floor,
//   train.beta1, train.beta2, train.batch_size, train.max_epochs,
//   train.grad_clip, train.grad_clip_norm,
//   train.augment.horizontal_flip / .vertical_flip / .temporal_reversal
//   data.root, data.train_split, data.test_split, data.train_count,
//   data.test_count, data.height, data.width
struct RunConfig {
  std::string preset = "desk";
  uint64_t seed = 1;
  ModelConfig model;
  TrainSettings train;
  LossWeights loss;
  PerceptualSettings perceptual;
  DataSettings data;
};

// All defaults for a named preset ("desk" or "full").
RunConfig default_run_config(const std::string& preset = "desk");

// Parses JSON text: applies `preset` first, then every other key on top of
// that preset's defaults. Throws std::invalid_argument on unknown keys or
// out-of-vocabulary values, naming the offending key.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

// Full tree with every field populated — the provenance echo for run records.
std::string run_config_to_json(const RunConfig& cfg, bool pretty = true);

}  // namespace kinterp
