#pragma once

#include <array>
#include <string>
#include <vector>

#include "kinterp/featnet.hpp"
#include "kinterp/regressor.hpp"

namespace kinterp {

enum class CfseSources { f2f3, f1f2 };
CfseSources parse_cfse_sources(const std::string& s);
const char* to_string(CfseSources s);

struct CfseConfig {
  bool enabled = true;
  CfseSources sources = CfseSources::f2f3;
  bool gridnet = true;
  std::array<int, 3> grid_channels = {32, 64, 96};  // per grid row, fine to coarse
  int grid_columns = 4;                             // half downsample, half upsample
};

// One coarse-scale reconstruction: the same decouple/regress/synthesize
// pipeline run on pooled frames and a coarse feature.
struct CoarseScale {
  int downscale = 1;  // spatial divisor relative to full resolution
  MotionSet motions;
  RegressedMotions regressed;
  SynthesisResult synthesis;
};

// I_0 = lambda * tilde + (1 - lambda) * bar, clamped to [0,1].
Var final_blend(const Var& tilde, const Var& bar, const Var& lambda_map);

// Coarse-to-fine synthesis enhancement: reconstructs the middle frame at two
// coarse scales from pyramid features, fuses them with the fine prediction
// into a refinement frame, and blends the two with a learned per-pixel
// coefficient seeded from the occlusion map.
class CfseModule {
 public:
  CfseModule() = default;
  // base_channels is the feature extractor's shallowest width (levels carry
  // base, 2*base, 4*base channels).
  CfseModule(ParamStore& ps, const std::string& name, const CfseConfig& cfg, int base_channels,
             int kernel_size, int dilation, Rng rng);

  struct Result {
    Var final_frame;  // clamped blend
    Var bar;          // fused coarse-to-fine frame
    Var lambda;       // per-pixel blend coefficient in [0,1]
    std::vector<CoarseScale> coarse;  // deep (1/8) then shallow (1/4)
  };

  // tilde is the full-resolution prediction; `reg` is the shared regression
  // engine (the same parameters serve every scale).
  Result fuse(const FeaturePyramid& pyr, const std::array<Var, 4>& frames, const Var& tilde,
              const MotionSet& fine_motions, const Regressor& reg,
              const SynthesisConfig& syn_cfg) const;

  // Exposed for tests: reconstruct the coarse scales only.
  std::vector<CoarseScale> coarse_reconstruct(const FeaturePyramid& pyr,
                                              const std::array<Var, 4>& frames,
                                              const Regressor& reg,
                                              const SynthesisConfig& syn_cfg) const;

  const CfseConfig& config() const { return cfg_; }

 private:
  struct ResBlock {
    Conv2d c1, c2;
    Var operator()(const Var& x) const;
  };

  Var grid_fuse(const FeaturePyramid& pyr, const Var& tilde,
                const std::vector<CoarseScale>& coarse) const;
  Var simple_fuse(const Var& tilde, const std::vector<CoarseScale>& coarse) const;
  const Var& shallow_feature(const FeaturePyramid& pyr) const;

  CfseConfig cfg_;
  MotionHeads heads_deep_;     // on the 1/8-scale feature
  MotionHeads heads_shallow_;  // on the 1/4-scale feature
  // grid fusion
  Conv2d in_row_[3];
  std::vector<std::vector<ResBlock>> lateral_;  // [row][column]
  std::vector<Conv2d> down_;                    // per down-phase column, rows 1..2
  std::vector<Conv2d> up_;                      // per up-phase column, rows 0..1
  Conv2d grid_out_;                             // zero-init
  Conv2d simple_out_;                           // zero-init, used when gridnet is off
  Conv2d lambda_head_;                          // zero-init, on concat(tilde, bar)
};

}  // namespace kinterp
