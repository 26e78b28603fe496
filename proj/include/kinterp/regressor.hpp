#pragma once

#include <array>
#include <string>
#include <vector>

#include "kinterp/layers.hpp"
#include "kinterp/motion.hpp"

namespace kinterp {

// Ablation modes for the motion-regression stage. String forms (used by the
// `regression.mode` config key) match the enumerator names exactly.
enum class RegressionMode {
  linear,                       // no regressed motion: plain occlusion blend
  quadratic,                    // per-branch quadratic fit, no temporal combiner
  linear_combination,           // closed-form second-order combination only
  unidirectional_fwd,           // learned forward branch only
  unidirectional_bwd,           // learned backward branch only
  second_order_unidirectional,  // both branches run serially, shared state
  joint_bidirectional           // independent learned branches
};

RegressionMode parse_regression_mode(const std::string& s);
const char* to_string(RegressionMode m);
// True for modes that run the learned temporal combiner.
bool mode_uses_combiner(RegressionMode m);

struct RegressorConfig {
  int kernel_size = 5;
  int dilation = 1;
  int hidden_channels = 0;  // 0 -> 3 * K * K
  RegressionMode mode = RegressionMode::joint_bidirectional;
  bool shared_branches = true;  // share combiner weights between directions
};

// Joint non-linear motion regression: combines the decoupled reference
// motions into the middle-instant forward/backward motions, the arbitration
// coefficient theta, and the offset-frame gate, according to the configured
// mode. Only the parameters the mode actually uses are created.
class Regressor {
 public:
  enum class Branch { forward, backward };

  Regressor() = default;
  Regressor(ParamStore& ps, const std::string& name, const RegressorConfig& cfg, Rng rng);

  RegressedMotions regress(const MotionSet& motions) const;

  // Runs the branch recurrence over the ordered variation sequence (length
  // exactly 2) and adds the zero-initialised head's residual to the given
  // closed-form combination: offsets add directly, weight logits add before
  // the per-pixel softmax. With a zero head this returns the closed form.
  MotionField combine_variations(const std::vector<MotionField>& variations,
                                 const MotionField& closed_form_combination,
                                 Branch branch = Branch::forward) const;

  const RegressorConfig& config() const { return cfg_; }
  int hidden_channels() const { return hidden_; }

 private:
  struct BranchRun {
    MotionField field;
    Var hidden;  // final hidden state
  };
  BranchRun run_branch(const std::vector<MotionField>& variations,
                       const MotionField& closed_form, const ConvLSTMCell& cell,
                       const Conv2d& head, ConvLSTMCell::State* state_io) const;
  const ConvLSTMCell& cell_for(Branch b) const;
  const Conv2d& head_for(Branch b) const;

  RegressorConfig cfg_;
  int hidden_ = 0;
  ConvLSTMCell cell_f_, cell_b_;  // cell_b_ unused when branches are shared
  Conv2d head_f_, head_b_;        // hidden -> motion residual, zero-init
  Conv2d theta_head_;             // branch hiddens -> 1, zero-init
  Conv2d gate_head_;              // branch hiddens (or occlusion logit) -> 1, zero-init
};

// Frame synthesis around the regressed motions. Kernel geometry travels with
// the motion fields themselves.
struct SynthesisConfig {
  // Multiplies every warped reference in the basic blend. 1 evaluates the
  // published formula literally (four identical frames then sum to twice the
  // input); presets use 0.5 so a static scene reproduces itself at step 0.
  float reference_scale = 1.0f;
};

struct SynthesisResult {
  Var basic;      // occlusion blend of the four warped references
  Var offset;     // arbitrated blend of the two regressed warps
  Var predicted;  // basic + gate * offset
};

// frames are ordered {-2,-1,+1,+2}. The offset term warps frame -1 by the
// forward regressed motion and frame +1 by the backward one, arbitrated by
// theta; a null gate means scale 1.
SynthesisResult synthesize_intermediate(const std::array<Var, 4>& frames,
                                        const MotionSet& motions,
                                        const RegressedMotions& regressed,
                                        const SynthesisConfig& cfg = {});

}  // namespace kinterp
