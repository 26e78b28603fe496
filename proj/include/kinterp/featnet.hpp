#pragma once

#include <vector>

#include "kinterp/layers.hpp"
#include "kinterp/motion.hpp"

namespace kinterp {

struct FeatureNetConfig {
  int base_channels = 64;   // width of the shallowest level; doubles per level
  int frame_channels = 3;   // channels of each input frame
  int num_frames = 4;
  int hierarchies = 3;      // encoder levels (3 published wiring, 5 ablation)
  bool compensation = true; // multi-stage skip compensation between stages
};

// Named intermediate features of the hierarchical extractor. For the
// three-level wiring: encoder = {F0, F1, F2} at H/2, H/4, H/8;
// merged = {F3, F5} at H/4, H/2; parallel = F4 at H/2; fused = F6 at H.
struct FeaturePyramid {
  Var input_concat;          // channel concatenation of the input frames
  std::vector<Var> encoder;  // level l at spatial scale H / 2^(l+1)
  std::vector<Var> merged;   // descending decoder levels, deepest first
  Var parallel;              // shallow branch from encoder level 1 (empty when
                             // compensation is off)
  Var fused;                 // full-resolution fusion feature
};

// Hierarchical encoder-decoder: each encoder level is three 3x3 convolutions
// (leaky rectifier slope 0.1) followed by 2x average pooling; the decoder
// mirrors it with three convolutions followed by bilinear 2x upsampling, and
// (with compensation on) adds the same-scale encoder feature at every merge
// plus one shallow parallel branch at the last merge.
class FeatureNet {
 public:
  FeatureNet() = default;
  FeatureNet(ParamStore& ps, const std::string& name, const FeatureNetConfig& cfg, Rng rng);

  // frames must hold exactly cfg.num_frames same-shaped frames whose H and W
  // are divisible by 2^hierarchies.
  FeaturePyramid forward(const std::vector<Var>& frames) const;

  int level_channels(int level) const;  // encoder width at `level`
  int fused_channels() const { return cfg_.base_channels; }
  const FeatureNetConfig& config() const { return cfg_; }

 private:
  struct ConvTriple {
    std::vector<Conv2d> convs;
    Var operator()(Var x) const;
  };
  ConvTriple make_triple(ParamStore& ps, const std::string& name, int in_ch, int out_ch,
                         Rng rng);

  FeatureNetConfig cfg_;
  std::vector<ConvTriple> enc_;    // level l: c_{l-1} -> c_l (input: frame concat)
  std::vector<ConvTriple> dec_;    // deepest-first: c_{l+1} -> c_l
  ConvTriple parallel_;            // c_1 -> c_0 shallow branch
  ConvTriple fuse_;                // c_0 -> base, producing the fused feature
};

// Five sub-heads decoupling a feature map into the four reference motion
// fields (per field: K^2 weight logits -> per-pixel softmax, K^2 alpha,
// K^2 beta) and the occlusion map (1 channel -> sigmoid).
class MotionHeads {
 public:
  MotionHeads() = default;
  MotionHeads(ParamStore& ps, const std::string& name, int in_ch, int kernel_size,
              int dilation, Rng rng, Init init = Init::orthogonal);

  MotionSet operator()(const Var& feature) const;
  int kernel_size() const { return K_; }

 private:
  MotionField decouple_one(const Conv2d& head, const Var& feature) const;
  Conv2d head_m2_, head_m1_, head_p1_, head_p2_, head_occ_;
  int K_ = 0;
  int dilation_ = 1;
};

}  // namespace kinterp
