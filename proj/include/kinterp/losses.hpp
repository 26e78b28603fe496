#pragma once

#include <string>
#include <vector>

#include "kinterp/motion.hpp"
#include "kinterp/rng.hpp"

namespace kinterp {

struct LossWeights {
  float lambda_vgg = 0.005f;  // perceptual term weight
  float lambda_d = 0.01f;     // deformation term weight
  float epsilon = 0.001f;     // Charbonnier knee
  // Also penalise the coarse-scale regressed fields when the enhancement is
  // active (the deformation term applies to every regressed field present).
  bool deformation_coarse = true;
};

enum class PerceptualMode { fixed_random, external_plugin, disabled };
PerceptualMode parse_perceptual_mode(const std::string& s);
const char* to_string(PerceptualMode m);

// Frozen convolutional feature pyramid for the perceptual term. The hermetic
// default draws orthogonal filters from a fixed seed; a plug-in file can
// substitute externally trained filters of the same layout. Weights are
// constants, never trainable.
class PerceptualExtractor {
 public:
  // Three stages of conv3x3 + leaky rectifier + 2x pool: 3->16->32->64.
  static PerceptualExtractor fixed_random(uint64_t seed = 401);
  static PerceptualExtractor from_file(const std::string& path);
  static PerceptualExtractor make_disabled();

  // Serialize the filter stack (the from_file format).
  void save(const std::string& path) const;

  Var features(const Var& frame) const;  // throws when disabled
  PerceptualMode mode() const { return mode_; }

 private:
  PerceptualExtractor() = default;
  PerceptualMode mode_ = PerceptualMode::disabled;
  std::vector<Var> weights_;  // per stage
  std::vector<Var> biases_;
};

// Mean over elements of sqrt(diff^2 + eps^2); equals eps for identical inputs.
Var charbonnier_loss(const Var& pred, const Var& target, float eps);

// Mean squared distance between frozen extractor features; the disabled mode
// contributes a constant zero.
Var perceptual_loss(const Var& pred, const Var& target, const PerceptualExtractor& ex);

// Anisotropic total variation (L1) of the sampling offsets, summed over taps
// and both axes, divided by the pixel count so the weight is
// resolution-independent. Constant offsets cost zero.
Var deformation_loss(const MotionField& field);
// Forward plus backward regressed fields.
Var deformation_loss(const RegressedMotions& regressed);

struct LossBreakdown {
  Var total;
  Var charbonnier;
  Var perceptual;   // already weighted terms kept separately unweighted
  Var deformation;
};

// total = charbonnier + lambda_vgg * perceptual + lambda_d * deformation,
// the deformation term summed over every entry of `regressed`.
LossBreakdown total_loss(const Var& pred, const Var& target,
                         const std::vector<const RegressedMotions*>& regressed,
                         const LossWeights& w, const PerceptualExtractor& ex);

}  // namespace kinterp
