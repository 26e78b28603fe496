#pragma once

#include "kinterp/autodiff.hpp"

namespace kinterp {

// One deformable motion field: per-pixel kernel weights plus vertical (alpha)
// and horizontal (beta) sampling offsets for each of the K*K taps. Decoupled
// and regressed fields carry softmax-normalised weights (per pixel they sum
// to 1); all-zero fields act as inactive sentinels whose warp is identically
// zero (used by modes that disable the offset-frame path).
struct MotionField {
  Var weights;  // {K*K,H,W}
  Var alpha;    // {K*K,H,W}, rows
  Var beta;     // {K*K,H,W}, cols
  int K = 3;
  int dilation = 1;

  int height() const { return weights->value.dim(1); }
  int width() const { return weights->value.dim(2); }
};

// Motion fields of the four reference frames toward the middle instant, in
// temporal order {-2,-1,+1,+2}, plus the shared occlusion map.
struct MotionSet {
  MotionField m_m2, m_m1, m_p1, m_p2;
  Var occlusion;        // {1,H,W} in [0,1]
  Var occlusion_logit;  // pre-sigmoid occlusion, kept for heads seeded from it
};

struct RegressedMotions {
  MotionField forward_m;   // motion applied to frame -1
  MotionField backward_m;  // motion applied to frame +1
  Var theta;               // {1,H,W} arbitration in [0,1]
  // Unbounded per-pixel scale on the offset frame, from a zero-initialised
  // head: the predicted frame starts as the plain occlusion blend and
  // training grows the offset path where it helps. Null means scale 1
  // (literal formula evaluation).
  Var gate;
};

MotionField make_zero_motion(int K, int dilation, int H, int W);
// One-hot centre-tap weights, zero offsets: warping with it is the identity.
MotionField make_identity_motion(int K, int dilation, int H, int W);

void validate_motion_field(const MotionField& f, bool require_normalized,
                           const char* what);
void validate_motion_set(const MotionSet& s, const char* what);

// Second-order forward/backward extrapolation of the middle-instant motion
// from three reference motions:
//   forward : ((m1 - mm1) - 2 (mm1 - mm2)) / 3
//   backward: ((mm1 - m1) - 2 (m1 - m2)) / 3
// The *_combination forms apply the linear map channel-wise to weights and
// offsets (exact linear maps; a constant-velocity sequence regresses to zero
// on the offset channels). The *_motion forms additionally normalise the
// combined weight channel with a per-pixel softmax over the taps so the
// result satisfies the kernel-mass invariant; three identical inputs combine
// to the zero map, whose softmax is the uniform kernel.
MotionField regress_forward_combination(const MotionField& mm2, const MotionField& mm1,
                                        const MotionField& m1);
MotionField regress_backward_combination(const MotionField& m2, const MotionField& m1,
                                         const MotionField& mm1);
MotionField regress_forward_motion(const MotionField& mm2, const MotionField& mm1,
                                   const MotionField& m1);
MotionField regress_backward_motion(const MotionField& m2, const MotionField& m1,
                                    const MotionField& mm1);
// Replace the weight channel with its per-pixel softmax over taps.
MotionField normalize_weights(const MotionField& f);

// Per-branch quadratic fit of the offset channels of an ordered motion triple
// treated as unit-spaced samples (-1, 0, +1) around `mid`:
//   velocity     = (next - prev) / 2
//   acceleration = (next - 2 mid + prev) / 2
// so mid + t*velocity + t^2*acceleration interpolates all three.
struct OffsetPair {
  Var alpha;
  Var beta;
};
struct QuadraticFit {
  OffsetPair velocity;
  OffsetPair acceleration;
};
QuadraticFit solve_individual_quadratic(const MotionField& prev, const MotionField& mid,
                                        const MotionField& next);

// Evaluate the fitted offsets at instant t past `mid`.
OffsetPair eval_quadratic(const MotionField& mid, const QuadraticFit& fit, float t);

// occluded-aware combination of warped reference frames:
//   out = O * sum(forward_frames) + (1 - O) * sum(backward_frames)
// The sums are literal; callers that need a per-side average scale the inputs.
Var blend_occlusion(const std::vector<Var>& forward_frames,
                    const std::vector<Var>& backward_frames, const Var& occlusion);

}  // namespace kinterp
