#include "kinterp/synth.hpp"

#include <stdexcept>
#include <utility>

namespace kinterp {

namespace {

constexpr float kSlope = 0.1f;

Var pool_n(Var x, int times) {
  for (int i = 0; i < times; ++i) x = avgpool2(x);
  return x;
}

std::array<Var, 4> pool_frames(const std::array<Var, 4>& frames, int times) {
  std::array<Var, 4> out;
  for (int i = 0; i < 4; ++i) out[i] = pool_n(frames[i], times);
  return out;
}

}  // namespace

CfseSources parse_cfse_sources(const std::string& s) {
  if (s == "f2f3") return CfseSources::f2f3;
  if (s == "f1f2") return CfseSources::f1f2;
  throw std::invalid_argument("unknown coarse-source selection '" + s +
                              "' (expected f2f3 or f1f2)");
}

const char* to_string(CfseSources s) {
  return s == CfseSources::f2f3 ? "f2f3" : "f1f2";
}

Var final_blend(const Var& tilde, const Var& bar, const Var& lambda_map) {
  if (!tilde || !bar || !lambda_map) throw std::invalid_argument("final_blend: null input");
  check_same_shape(tilde->value, bar->value, "final_blend frames");
  check_shape(lambda_map->value, {1, tilde->value.dim(1), tilde->value.dim(2)},
              "final_blend lambda");
  return clamp01(add(mul_map(lambda_map, tilde), mul_map(affine(lambda_map, -1.0f, 1.0f), bar)));
}

Var CfseModule::ResBlock::operator()(const Var& x) const {
  return add(x, c2(leaky_relu(c1(leaky_relu(x, kSlope)), kSlope)));
}

CfseModule::CfseModule(ParamStore& ps, const std::string& name, const CfseConfig& cfg,
                       int base_channels, int kernel_size, int dilation, Rng rng)
    : cfg_(cfg) {
  if (!cfg.enabled) return;  // inert: fuse() on a disabled module throws
  if (base_channels <= 0) throw std::invalid_argument("coarse synthesis: base_channels must be positive");
  const int deep_ch = 4 * base_channels;     // encoder level 2 width
  const int shallow_ch = 2 * base_channels;  // encoder level 1 / quarter-scale decoder width
  heads_deep_ = MotionHeads(ps, name + ".deep", deep_ch, kernel_size, dilation, rng.fork(1));
  heads_shallow_ =
      MotionHeads(ps, name + ".shallow", shallow_ch, kernel_size, dilation, rng.fork(2));
  lambda_head_ = Conv2d(ps, name + ".lambda", 6, 1, 1, rng.fork(3), Init::zero);
  if (cfg.gridnet) {
    if (cfg.grid_columns < 2 || cfg.grid_columns % 2 != 0)
      throw std::invalid_argument("coarse synthesis: grid_columns must be even and >= 2");
    const auto& ch = cfg.grid_channels;
    for (int c : ch)
      if (c <= 0) throw std::invalid_argument("coarse synthesis: grid channels must be positive");
    in_row_[0] = Conv2d(ps, name + ".grid.in0", 3 + base_channels, ch[0], 3, rng.fork(10),
                        Init::orthogonal, kLeakyReluGain);
    in_row_[1] = Conv2d(ps, name + ".grid.in1", base_channels, ch[1], 3, rng.fork(11),
                        Init::orthogonal, kLeakyReluGain);
    in_row_[2] = Conv2d(ps, name + ".grid.in2", 6 + shallow_ch, ch[2], 3, rng.fork(12),
                        Init::orthogonal, kLeakyReluGain);
    lateral_.resize(3);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < cfg.grid_columns; ++c) {
        const std::string base = name + ".grid.lat.r" + std::to_string(r) + "c" + std::to_string(c);
        lateral_[r].push_back(
            ResBlock{Conv2d(ps, base + ".a", ch[r], ch[r], 3, rng.fork(100 + r * 16 + c),
                            Init::orthogonal, kLeakyReluGain),
                     Conv2d(ps, base + ".b", ch[r], ch[r], 3, rng.fork(200 + r * 16 + c),
                            Init::orthogonal, kLeakyReluGain)});
      }
    }
    const int half = cfg.grid_columns / 2;
    for (int c = 0; c < half; ++c) {
      for (int r = 1; r < 3; ++r) {
        down_.push_back(Conv2d(ps,
                               name + ".grid.down.c" + std::to_string(c) + "r" + std::to_string(r),
                               ch[r - 1], ch[r], 3, rng.fork(300 + c * 4 + r), Init::orthogonal,
                               kLeakyReluGain));
        up_.push_back(Conv2d(ps, name + ".grid.up.c" + std::to_string(c) + "r" + std::to_string(r - 1),
                             ch[r], ch[r - 1], 3, rng.fork(400 + c * 4 + r), Init::orthogonal,
                             kLeakyReluGain));
      }
    }
    grid_out_ = Conv2d(ps, name + ".grid.out", ch[0], 3, 3, rng.fork(5), Init::zero);
  } else {
    simple_out_ = Conv2d(ps, name + ".fuse", 9, 3, 3, rng.fork(6), Init::zero);
  }
}

const Var& CfseModule::shallow_feature(const FeaturePyramid& pyr) const {
  if (cfg_.sources == CfseSources::f1f2) return pyr.encoder[1];
  // quarter-scale decoder feature: merged is deepest-first, the quarter scale
  // sits one before the last entry when three or more hierarchies exist.
  return pyr.merged[pyr.merged.size() - 2];
}

std::vector<CoarseScale> CfseModule::coarse_reconstruct(const FeaturePyramid& pyr,
                                                        const std::array<Var, 4>& frames,
                                                        const Regressor& reg,
                                                        const SynthesisConfig& syn_cfg) const {
  if (!cfg_.enabled) throw std::logic_error("coarse synthesis is disabled in this configuration");
  if (pyr.encoder.size() < 3 || pyr.merged.size() < 2)
    throw std::invalid_argument("coarse synthesis needs at least three hierarchy levels");
  for (const Var& f : frames)
    if (!f) throw std::invalid_argument("coarse synthesis: null frame");

  std::vector<CoarseScale> out(2);
  out[0].downscale = 8;
  out[0].motions = heads_deep_(pyr.encoder[2]);
  out[0].regressed = reg.regress(out[0].motions);
  out[0].synthesis =
      synthesize_intermediate(pool_frames(frames, 3), out[0].motions, out[0].regressed, syn_cfg);

  out[1].downscale = 4;
  out[1].motions = heads_shallow_(shallow_feature(pyr));
  out[1].regressed = reg.regress(out[1].motions);
  out[1].synthesis =
      synthesize_intermediate(pool_frames(frames, 2), out[1].motions, out[1].regressed, syn_cfg);
  return out;
}

Var CfseModule::grid_fuse(const FeaturePyramid& pyr, const Var& tilde,
                          const std::vector<CoarseScale>& coarse) const {
  const Var& half_feat = pyr.merged.back();       // half resolution
  const Var& quarter_feat = shallow_feature(pyr); // quarter resolution
  Var deep_up = upsample2(coarse[0].synthesis.predicted);  // eighth -> quarter

  std::array<Var, 3> x;
  x[0] = in_row_[0](concat_channels({tilde, pyr.fused}));
  x[1] = in_row_[1](half_feat);
  x[2] = in_row_[2](concat_channels({coarse[1].synthesis.predicted, deep_up, quarter_feat}));

  const int half = cfg_.grid_columns / 2;
  for (int c = 0; c < cfg_.grid_columns; ++c) {
    if (c < half) {  // downsampling phase: information flows to coarser rows
      x[0] = lateral_[0][c](x[0]);
      x[1] = add(lateral_[1][c](x[1]), down_[c * 2 + 0](avgpool2(x[0])));
      x[2] = add(lateral_[2][c](x[2]), down_[c * 2 + 1](avgpool2(x[1])));
    } else {  // upsampling phase: information flows back to finer rows
      const int u = c - half;
      x[2] = lateral_[2][c](x[2]);
      x[1] = add(lateral_[1][c](x[1]), upsample2(up_[u * 2 + 1](x[2])));
      x[0] = add(lateral_[0][c](x[0]), upsample2(up_[u * 2 + 0](x[1])));
    }
  }
  return grid_out_(leaky_relu(x[0], kSlope));
}

Var CfseModule::simple_fuse(const Var& tilde, const std::vector<CoarseScale>& coarse) const {
  Var deep = coarse[0].synthesis.predicted;
  for (int i = 0; i < 3; ++i) deep = upsample2(deep);
  Var shallow = coarse[1].synthesis.predicted;
  for (int i = 0; i < 2; ++i) shallow = upsample2(shallow);
  return simple_out_(concat_channels({tilde, shallow, deep}));
}

CfseModule::Result CfseModule::fuse(const FeaturePyramid& pyr, const std::array<Var, 4>& frames,
                                    const Var& tilde, const MotionSet& fine_motions,
                                    const Regressor& reg, const SynthesisConfig& syn_cfg) const {
  if (!cfg_.enabled) throw std::logic_error("coarse-to-fine synthesis is disabled");
  if (!tilde) throw std::invalid_argument("coarse-to-fine synthesis: null fine prediction");

  Result r;
  r.coarse = coarse_reconstruct(pyr, frames, reg, syn_cfg);
  r.bar = cfg_.gridnet ? grid_fuse(pyr, tilde, r.coarse) : simple_fuse(tilde, r.coarse);
  check_same_shape(r.bar->value, tilde->value, "coarse-to-fine fusion output");
  // Per-pixel blend coefficient seeded from the occlusion logit: with the
  // zero-initialised head it starts as the occlusion map itself and training
  // moves it from there.
  r.lambda = sigmoid(
      add(fine_motions.occlusion_logit, lambda_head_(concat_channels({tilde, r.bar}))));
  r.final_frame = final_blend(tilde, r.bar, r.lambda);
  return r;
}

}  // namespace kinterp
