#include "kinterp/losses.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <stdexcept>

#include "kinterp/layers.hpp"

namespace kinterp {

namespace {
constexpr float kSlope = 0.1f;
constexpr int kStageChannels[] = {3, 16, 32, 64};
constexpr int kStages = 3;
constexpr char kMagic[8] = {'K', 'P', 'E', 'R', 'C', '1', 0, 0};
}  // namespace

PerceptualMode parse_perceptual_mode(const std::string& s) {
  if (s == "fixed_random") return PerceptualMode::fixed_random;
  if (s == "external_plugin") return PerceptualMode::external_plugin;
  if (s == "disabled") return PerceptualMode::disabled;
  throw std::invalid_argument("unknown perceptual mode '" + s + "'");
}

const char* to_string(PerceptualMode m) {
  switch (m) {
    case PerceptualMode::fixed_random: return "fixed_random";
    case PerceptualMode::external_plugin: return "external_plugin";
    case PerceptualMode::disabled: return "disabled";
  }
  return "?";
}

PerceptualExtractor PerceptualExtractor::fixed_random(uint64_t seed) {
  PerceptualExtractor ex;
  ex.mode_ = PerceptualMode::fixed_random;
  Rng rng(seed);
  for (int s = 0; s < kStages; ++s) {
    Tensor w({kStageChannels[s + 1], kStageChannels[s], 3, 3});
    orthogonal_init(w, rng.fork(s), kLeakyReluGain);
    ex.weights_.push_back(leaf(std::move(w), false));
    ex.biases_.push_back(leaf(Tensor::zeros({kStageChannels[s + 1]}), false));
  }
  return ex;
}

PerceptualExtractor PerceptualExtractor::make_disabled() {
  PerceptualExtractor ex;
  ex.mode_ = PerceptualMode::disabled;
  return ex;
}

void PerceptualExtractor::save(const std::string& path) const {
  if (mode_ == PerceptualMode::disabled)
    throw std::logic_error("cannot serialize a disabled perceptual extractor");
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("cannot write perceptual filter file: " + path);
  std::fwrite(kMagic, 1, sizeof(kMagic), f);
  int32_t stages = static_cast<int32_t>(weights_.size());
  std::fwrite(&stages, sizeof(stages), 1, f);
  for (int s = 0; s < stages; ++s) {
    const Tensor& w = weights_[s]->value;
    int32_t dims[3] = {w.dim(0), w.dim(1), w.dim(2)};
    std::fwrite(dims, sizeof(dims), 1, f);
    std::fwrite(w.data(), sizeof(float), static_cast<size_t>(w.numel()), f);
    const Tensor& b = biases_[s]->value;
    std::fwrite(b.data(), sizeof(float), static_cast<size_t>(b.numel()), f);
  }
  std::fclose(f);
}

PerceptualExtractor PerceptualExtractor::from_file(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw std::runtime_error("cannot open perceptual filter file: " + path);
  char magic[8];
  if (std::fread(magic, 1, sizeof(magic), f) != sizeof(magic) ||
      std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    std::fclose(f);
    throw std::runtime_error("not a perceptual filter file: " + path);
  }
  int32_t stages = 0;
  if (std::fread(&stages, sizeof(stages), 1, f) != 1 || stages < 1 || stages > 16) {
    std::fclose(f);
    throw std::runtime_error("corrupt perceptual filter file: " + path);
  }
  PerceptualExtractor ex;
  ex.mode_ = PerceptualMode::external_plugin;
  for (int s = 0; s < stages; ++s) {
    int32_t dims[3];
    if (std::fread(dims, sizeof(dims), 1, f) != 1 || dims[0] < 1 || dims[1] < 1 ||
        dims[2] < 1 || dims[2] % 2 == 0) {
      std::fclose(f);
      throw std::runtime_error("corrupt perceptual filter file: " + path);
    }
    Tensor w({dims[0], dims[1], dims[2], dims[2]});
    Tensor b({dims[0]});
    if (std::fread(w.data(), sizeof(float), static_cast<size_t>(w.numel()), f) !=
            static_cast<size_t>(w.numel()) ||
        std::fread(b.data(), sizeof(float), static_cast<size_t>(b.numel()), f) !=
            static_cast<size_t>(b.numel())) {
      std::fclose(f);
      throw std::runtime_error("truncated perceptual filter file: " + path);
    }
    ex.weights_.push_back(leaf(std::move(w), false));
    ex.biases_.push_back(leaf(std::move(b), false));
  }
  std::fclose(f);
  return ex;
}

Var PerceptualExtractor::features(const Var& frame) const {
  if (mode_ == PerceptualMode::disabled)
    throw std::logic_error("perceptual extractor is disabled");
  if (!frame || frame->value.rank() != 3)
    throw std::invalid_argument("perceptual features expect a {C,H,W} frame");
  Var x = frame;
  for (size_t s = 0; s < weights_.size(); ++s) {
    if (x->value.dim(0) != weights_[s]->value.dim(1))
      throw std::invalid_argument("perceptual filter channel mismatch at stage " +
                                  std::to_string(s));
    x = avgpool2(leaky_relu(conv2d(x, weights_[s], biases_[s]), kSlope));
  }
  return x;
}

Var charbonnier_loss(const Var& pred, const Var& target, float eps) {
  if (!pred || !target) throw std::invalid_argument("charbonnier_loss: null input");
  check_same_shape(pred->value, target->value, "charbonnier_loss");
  if (eps < 0.0f) throw std::invalid_argument("charbonnier_loss: negative epsilon");
  Var d = sub(pred, target);
  return mean_all(sqrt_v(affine(mul(d, d), 1.0f, eps * eps)));
}

Var perceptual_loss(const Var& pred, const Var& target, const PerceptualExtractor& ex) {
  if (ex.mode() == PerceptualMode::disabled) return constant(Tensor::scalar(0.0f));
  if (!pred || !target) throw std::invalid_argument("perceptual_loss: null input");
  check_same_shape(pred->value, target->value, "perceptual_loss");
  Var d = sub(ex.features(pred), ex.features(target));
  return mean_all(mul(d, d));
}

namespace {

// Sum of |x[c,i,j+1] - x[c,i,j]| + |x[c,i+1,j] - x[c,i,j]| over all taps and
// positions. Degenerate axes (size 1) contribute nothing.
Var axis_variation(const Var& x) {
  const int H = x->value.dim(1), W = x->value.dim(2);
  Var total;
  if (W > 1) {
    Var horiz = sub(slice_spatial(x, 0, 1, H, W - 1), slice_spatial(x, 0, 0, H, W - 1));
    total = sum_all(abs_v(horiz));
  }
  if (H > 1) {
    Var vert = sum_all(
        abs_v(sub(slice_spatial(x, 1, 0, H - 1, W), slice_spatial(x, 0, 0, H - 1, W))));
    total = total ? add(total, vert) : vert;
  }
  if (!total) total = constant(Tensor::scalar(0.0f));
  return total;
}

}  // namespace

Var deformation_loss(const MotionField& field) {
  validate_motion_field(field, false, "deformation_loss");
  const float px = static_cast<float>(field.height()) * static_cast<float>(field.width());
  Var tv = add(axis_variation(field.alpha), axis_variation(field.beta));
  return affine(tv, 1.0f / px, 0.0f);
}

Var deformation_loss(const RegressedMotions& regressed) {
  return add(deformation_loss(regressed.forward_m), deformation_loss(regressed.backward_m));
}

LossBreakdown total_loss(const Var& pred, const Var& target,
                         const std::vector<const RegressedMotions*>& regressed,
                         const LossWeights& w, const PerceptualExtractor& ex) {
  if (w.lambda_vgg < 0.0f || w.lambda_d < 0.0f || w.epsilon < 0.0f)
    throw std::invalid_argument("total_loss: negative weight");
  LossBreakdown out;
  out.charbonnier = charbonnier_loss(pred, target, w.epsilon);
  out.perceptual = perceptual_loss(pred, target, ex);
  out.deformation = constant(Tensor::scalar(0.0f));
  for (const RegressedMotions* r : regressed) {
    if (!r) throw std::invalid_argument("total_loss: null regressed entry");
    out.deformation = add(out.deformation, deformation_loss(*r));
  }
  out.total = add(add(out.charbonnier, affine(out.perceptual, w.lambda_vgg, 0.0f)),
                  affine(out.deformation, w.lambda_d, 0.0f));
  return out;
}

}  // namespace kinterp
