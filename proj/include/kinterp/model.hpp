#pragma once

#include <array>
#include <cstdint>

#include "kinterp/featnet.hpp"
#include "kinterp/regressor.hpp"
#include "kinterp/synth.hpp"

namespace kinterp {

// Everything needed to assemble the interpolation network. kernel_size and
// dilation describe the deformable taps and are propagated into the
// regression config by the constructor (one kernel geometry per model).
struct ModelConfig {
  FeatureNetConfig features;
  int kernel_size = 5;
  int dilation = 1;
  RegressorConfig regression;
  CfseConfig cfse;
  SynthesisConfig synthesis;
};

// Published-scale configuration (~5.7M trainable parameters).
ModelConfig full_model_preset();
// Desk-scale configuration (<1M parameters) for fast end-to-end runs.
ModelConfig desk_model_preset();

// The assembled middle-frame interpolator: hierarchical feature extraction,
// motion decoupling, joint regression, fine synthesis and (optionally) the
// coarse-to-fine enhancement. Move-only: parameters are shared nodes and a
// copy would alias them.
class Model {
 public:
  Model() = default;
  Model(const ModelConfig& cfg, uint64_t seed);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  struct Output {
    Var final_frame;  // clamped to [0,1]
    Var tilde;        // fine prediction before clamping / enhancement
    SynthesisResult fine_synthesis;
    MotionSet fine_motions;
    RegressedMotions fine_regressed;
    CfseModule::Result cfse;  // populated only when cfse_active
    bool cfse_active = false;
  };

  // frames in temporal order {-2,-1,+1,+2}; predicts the middle instant.
  Output forward(const std::array<Var, 4>& frames) const;

  ParamStore& params() { return ps_; }
  const ParamStore& params() const { return ps_; }
  int64_t count_parameters() const { return ps_.parameter_count(); }
  const ModelConfig& config() const { return cfg_; }

 private:
  ModelConfig cfg_;
  ParamStore ps_;
  FeatureNet feat_;
  MotionHeads heads_;
  Regressor reg_;
  CfseModule cfse_;
};

}  // namespace kinterp
