#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "kinterp/motion.hpp"
#include "kinterp/rng.hpp"
#include "kinterp/tensor.hpp"

namespace kinterp {

// Synthetic kinematic scenes: flat background plus a few solid or two-tone
// sprites following per-axis quadratic trajectories. Because every position
// is analytic, a scene doubles as an exact oracle for the motion-regression
// closed forms and for warp consistency.

enum class TrajectoryFamily { linear, quadratic, piecewise_quadratic };
TrajectoryFamily parse_trajectory_family(const std::string& s);
const char* to_string(TrajectoryFamily f);

enum class SpriteShape { rectangle, disc, two_tone };
SpriteShape parse_sprite_shape(const std::string& s);
const char* to_string(SpriteShape s);

// One axis of the kinematic model p(t) = p0 + v·t + a·t²/2, with independent
// (v, a) branches before and after t = 0 for multi-stage trajectories. The
// motion emitted for sample time t is M_t = p(0) − p(t), and the sprite is
// drawn at screen position s(t) = s0 + M_t. Under the gather-style warp
// (which samples the source at x + offset), warping frame t with M_t then
// lands exactly on the sprite, so both the closed-form examples (constant
// velocity v ⇒ M_{−1} = v, regressed residual 0; pure acceleration a ⇒
// M_{∓1} = −a/2, residual −a) and warp consistency hold with one convention.
// Note the sprite's screen velocity is therefore −v.
struct AxisMotion {
  float v_pre = 0.0f, a_pre = 0.0f;    // branch for t < 0
  float v_post = 0.0f, a_post = 0.0f;  // branch for t ≥ 0
  // M_t = p(0) − p(t) in pixels.
  double displacement(double t) const {
    const double v = t < 0 ? v_pre : v_post;
    const double a = t < 0 ? a_pre : a_post;
    return -(v * t + 0.5 * a * t * t);
  }
};

struct Sprite {
  SpriteShape shape = SpriteShape::rectangle;
  uint64_t texture_seed = 0;  // colours/two-tone split derive from this
  float row0 = 0.0f, col0 = 0.0f;      // centre at t = 0
  float half_h = 4.0f, half_w = 4.0f;  // disc: radius = half_h
  AxisMotion row_motion, col_motion;
};

// Colours derived from a sprite's texture seed (pure function, so manifests
// only need the seed).
struct SpriteTexture {
  std::array<float, 3> primary{};
  std::array<float, 3> secondary{};
  int split_axis = 0;       // 0: horizontal boundary (rows), 1: vertical
  float split_frac = 0.0f;  // boundary offset relative to the half extent
};
SpriteTexture derive_texture(uint64_t seed);

struct KinematicScene {
  int height = 64, width = 64;
  uint64_t seed = 0;  // drives the background colour
  TrajectoryFamily family = TrajectoryFamily::linear;
  std::vector<Sprite> sprites;
};

// Everything the oracle knows about one scene: the four reference frames at
// t ∈ {−2,−1,+1,+2}, the target at t = 0, dense analytic motion fields with
// identity-centre kernels, and the closed-form regression values (uniform
// kernel weights — the weight channel of the regression of identical one-hot
// kernels is the uniform softmax; theta is the neutral 0.5).
struct GeneratedScene {
  std::array<Tensor, 4> inputs;
  Tensor target;
  MotionSet true_motions;
  RegressedMotions true_regressed;
};

// Renders the scene at an arbitrary sample time with 4x supersampling; the
// sprite position is evaluated analytically, never quantized.
Tensor render_frame(const KinematicScene& scene, double t);

GeneratedScene generate_scene(const KinematicScene& scene, int kernel_size, int dilation);

// Draws a random scene of the family whose sprites (including their motion
// reach over t ∈ [−3,3] and the dilated oracle-field boxes) stay ≥ 1 px
// inside the canvas and never interact with each other.
KinematicScene random_scene(TrajectoryFamily family, int height, int width, Rng& rng);

// Manifest records (one JSON object per scene; exact float roundtrip).
std::string scene_to_json(const KinematicScene& scene);
KinematicScene scene_from_json(const std::string& text);

}  // namespace kinterp
