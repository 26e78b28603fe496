#include "kinterp/featnet.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace kinterp {

namespace {

constexpr float kLeakySlope = 0.1f;

int level_width(int base, int level) {
  // Geometric doubling capped at four times the base width.
  return base * (1 << std::min(level, 2));
}

}  // namespace

Var FeatureNet::ConvTriple::operator()(Var x) const {
  for (const Conv2d& c : convs) x = leaky_relu(c(x), kLeakySlope);
  return x;
}

FeatureNet::ConvTriple FeatureNet::make_triple(ParamStore& ps, const std::string& name,
                                               int in_ch, int out_ch, Rng rng) {
  ConvTriple t;
  t.convs.emplace_back(ps, name + ".c0", in_ch, out_ch, 3, rng.fork(0), Init::orthogonal,
                       kLeakyReluGain);
  t.convs.emplace_back(ps, name + ".c1", out_ch, out_ch, 3, rng.fork(1), Init::orthogonal,
                       kLeakyReluGain);
  t.convs.emplace_back(ps, name + ".c2", out_ch, out_ch, 3, rng.fork(2), Init::orthogonal,
                       kLeakyReluGain);
  return t;
}

FeatureNet::FeatureNet(ParamStore& ps, const std::string& name, const FeatureNetConfig& cfg,
                       Rng rng)
    : cfg_(cfg) {
  if (cfg.hierarchies < 2) throw std::invalid_argument("FeatureNet: need at least 2 levels");
  if (cfg.base_channels < 1 || cfg.frame_channels < 1 || cfg.num_frames < 1)
    throw std::invalid_argument("FeatureNet: channel counts must be positive");
  int stream = 0;
  int in_ch = cfg.num_frames * cfg.frame_channels;
  for (int l = 0; l < cfg.hierarchies; ++l) {
    enc_.push_back(make_triple(ps, name + ".enc" + std::to_string(l), in_ch,
                               level_width(cfg.base_channels, l), rng.fork(stream++)));
    in_ch = level_width(cfg.base_channels, l);
  }
  for (int l = cfg.hierarchies - 2; l >= 0; --l) {
    dec_.push_back(make_triple(ps, name + ".dec" + std::to_string(l),
                               level_width(cfg.base_channels, l + 1),
                               level_width(cfg.base_channels, l), rng.fork(stream++)));
  }
  if (cfg.compensation) {
    parallel_ = make_triple(ps, name + ".par", level_width(cfg.base_channels, 1),
                            level_width(cfg.base_channels, 0), rng.fork(stream++));
  }
  fuse_ = make_triple(ps, name + ".fuse", level_width(cfg.base_channels, 0),
                      cfg.base_channels, rng.fork(stream++));
}

int FeatureNet::level_channels(int level) const {
  if (level < 0 || level >= cfg_.hierarchies)
    throw std::invalid_argument("FeatureNet::level_channels: level out of range");
  return level_width(cfg_.base_channels, level);
}

FeaturePyramid FeatureNet::forward(const std::vector<Var>& frames) const {
  if (static_cast<int>(frames.size()) != cfg_.num_frames)
    throw std::invalid_argument("FeatureNet::forward: expected " +
                                std::to_string(cfg_.num_frames) + " frames, got " +
                                std::to_string(frames.size()));
  if (frames[0]->value.rank() != 3)
    throw std::invalid_argument("FeatureNet::forward: frames must be {C,H,W}");
  const int H = frames[0]->value.dim(1);
  const int W = frames[0]->value.dim(2);
  const int div = 1 << cfg_.hierarchies;
  if (H % div != 0 || W % div != 0)
    throw std::invalid_argument("FeatureNet::forward: spatial size must be divisible by " +
                                std::to_string(div));
  for (const Var& f : frames) {
    check_shape(f->value, {cfg_.frame_channels, H, W}, "FeatureNet::forward frame");
  }

  FeaturePyramid pyr;
  pyr.input_concat = concat_channels(frames);

  Var x = pyr.input_concat;
  for (int l = 0; l < cfg_.hierarchies; ++l) {
    x = avgpool2(enc_[l](x));
    pyr.encoder.push_back(x);
  }

  // Decoder chain, deepest merge first; each step restores one scale.
  Var d = pyr.encoder.back();
  for (int i = 0; i < static_cast<int>(dec_.size()); ++i) {
    const int level = cfg_.hierarchies - 2 - i;  // scale this step lands on
    d = upsample2(dec_[i](d));
    if (cfg_.compensation) {
      d = add(d, pyr.encoder[level]);
      if (level == 0) {
        pyr.parallel = upsample2(parallel_(pyr.encoder[1]));
        d = add(d, pyr.parallel);
      }
    }
    pyr.merged.push_back(d);
  }

  pyr.fused = upsample2(fuse_(d));
  return pyr;
}

MotionHeads::MotionHeads(ParamStore& ps, const std::string& name, int in_ch, int kernel_size,
                         int dilation, Rng rng, Init init)
    : K_(kernel_size), dilation_(dilation) {
  if (kernel_size < 1 || kernel_size % 2 == 0)
    throw std::invalid_argument("MotionHeads: kernel size must be odd and positive");
  const int taps = kernel_size * kernel_size;
  head_m2_ = Conv2d(ps, name + ".m2", in_ch, 3 * taps, 3, rng.fork(0), init);
  head_m1_ = Conv2d(ps, name + ".m1", in_ch, 3 * taps, 3, rng.fork(1), init);
  head_p1_ = Conv2d(ps, name + ".p1", in_ch, 3 * taps, 3, rng.fork(2), init);
  head_p2_ = Conv2d(ps, name + ".p2", in_ch, 3 * taps, 3, rng.fork(3), init);
  head_occ_ = Conv2d(ps, name + ".occ", in_ch, 1, 3, rng.fork(4), init);
}

MotionField MotionHeads::decouple_one(const Conv2d& head, const Var& feature) const {
  const int taps = K_ * K_;
  const Var raw = head(feature);
  MotionField f;
  f.K = K_;
  f.dilation = dilation_;
  f.weights = softmax_channels(slice_channels(raw, 0, taps));
  f.alpha = slice_channels(raw, taps, taps);
  f.beta = slice_channels(raw, 2 * taps, taps);
  return f;
}

MotionSet MotionHeads::operator()(const Var& feature) const {
  MotionSet set;
  set.m_m2 = decouple_one(head_m2_, feature);
  set.m_m1 = decouple_one(head_m1_, feature);
  set.m_p1 = decouple_one(head_p1_, feature);
  set.m_p2 = decouple_one(head_p2_, feature);
  set.occlusion_logit = head_occ_(feature);
  set.occlusion = sigmoid(set.occlusion_logit);
  return set;
}

}  // namespace kinterp
