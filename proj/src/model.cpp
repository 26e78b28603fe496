#include "kinterp/model.hpp"

#include <stdexcept>
#include <vector>

namespace kinterp {

ModelConfig full_model_preset() {
  ModelConfig cfg;
  cfg.features.base_channels = 64;
  cfg.kernel_size = 5;
  cfg.regression.hidden_channels = 0;  // 3 * K * K
  cfg.cfse.grid_channels = {32, 64, 96};
  cfg.synthesis.reference_scale = 0.5f;  // average the two references per side
  return cfg;
}

ModelConfig desk_model_preset() {
  ModelConfig cfg;
  cfg.features.base_channels = 16;
  cfg.kernel_size = 3;
  cfg.regression.hidden_channels = 8;
  cfg.cfse.grid_channels = {8, 16, 24};
  cfg.synthesis.reference_scale = 0.5f;
  return cfg;
}

Model::Model(const ModelConfig& cfg, uint64_t seed) : cfg_(cfg) {
  if (cfg_.kernel_size < 1 || cfg_.kernel_size % 2 == 0)
    throw std::invalid_argument("model: kernel_size must be odd and positive");
  if (cfg_.dilation < 1) throw std::invalid_argument("model: dilation must be positive");
  // One kernel geometry per model: the regression stage inherits it.
  cfg_.regression.kernel_size = cfg_.kernel_size;
  cfg_.regression.dilation = cfg_.dilation;

  Rng rng(seed);
  feat_ = FeatureNet(ps_, "feat", cfg_.features, rng.fork(0));
  heads_ = MotionHeads(ps_, "fine", feat_.fused_channels(), cfg_.kernel_size, cfg_.dilation,
                       rng.fork(1));
  reg_ = Regressor(ps_, "reg", cfg_.regression, rng.fork(2));
  cfse_ = CfseModule(ps_, "cfse", cfg_.cfse, cfg_.features.base_channels, cfg_.kernel_size,
                     cfg_.dilation, rng.fork(3));
}

Model::Output Model::forward(const std::array<Var, 4>& frames) const {
  Output out;
  FeaturePyramid pyr =
      feat_.forward(std::vector<Var>(frames.begin(), frames.end()));
  out.fine_motions = heads_(pyr.fused);
  out.fine_regressed = reg_.regress(out.fine_motions);
  out.fine_synthesis =
      synthesize_intermediate(frames, out.fine_motions, out.fine_regressed, cfg_.synthesis);
  out.tilde = out.fine_synthesis.predicted;
  if (cfg_.cfse.enabled) {
    out.cfse = cfse_.fuse(pyr, frames, out.tilde, out.fine_motions, reg_, cfg_.synthesis);
    out.final_frame = out.cfse.final_frame;
    out.cfse_active = true;
  } else {
    out.final_frame = clamp01(out.tilde);
  }
  return out;
}

}  // namespace kinterp
