#include "kinterp/motion.hpp"

#include <cmath>
#include <string>

namespace kinterp {

MotionField make_zero_motion(int K, int dilation, int H, int W) {
  MotionField f;
  f.K = K;
  f.dilation = dilation;
  f.weights = constant(Tensor({K * K, H, W}));
  f.alpha = constant(Tensor({K * K, H, W}));
  f.beta = constant(Tensor({K * K, H, W}));
  return f;
}

MotionField make_identity_motion(int K, int dilation, int H, int W) {
  MotionField f = make_zero_motion(K, dilation, H, W);
  Tensor w({K * K, H, W});
  const int centre = (K * K - 1) / 2;
  for (int i = 0; i < H; ++i)
    for (int j = 0; j < W; ++j) w.at(centre, i, j) = 1.0f;
  f.weights = constant(std::move(w));
  return f;
}

void validate_motion_field(const MotionField& f, bool require_normalized, const char* what) {
  const std::string w(what);
  if (!f.weights || !f.alpha || !f.beta) throw std::invalid_argument(w + ": null field");
  const int T = f.K * f.K;
  if (f.K <= 0 || f.K % 2 == 0) throw std::invalid_argument(w + ": K must be odd positive");
  if (f.dilation <= 0) throw std::invalid_argument(w + ": dilation must be positive");
  for (const Var& v : {f.weights, f.alpha, f.beta}) {
    if (v->value.rank() != 3 || v->value.dim(0) != T) {
      throw std::invalid_argument(w + ": field shape " + v->value.shape_str() +
                                  " does not match K=" + std::to_string(f.K));
    }
    check_same_shape(v->value, f.weights->value, w.c_str());
    if (!all_finite(v->value)) throw std::invalid_argument(w + ": non-finite entries");
  }
  if (require_normalized) {
    const Tensor& wt = f.weights->value;
    const int64_t HW = static_cast<int64_t>(wt.dim(1)) * wt.dim(2);
    for (int64_t i = 0; i < HW; ++i) {
      float s = 0.0f;
      for (int t = 0; t < T; ++t) s += wt[t * HW + i];
      if (std::fabs(s - 1.0f) > 1e-4f) {
        throw std::invalid_argument(w + ": kernel weights not normalised (sum=" +
                                    std::to_string(s) + ")");
      }
    }
  }
}

void validate_motion_set(const MotionSet& s, const char* what) {
  for (const MotionField* f : {&s.m_m2, &s.m_m1, &s.m_p1, &s.m_p2}) {
    validate_motion_field(*f, false, what);
  }
  if (!s.occlusion || s.occlusion->value.dim(0) != 1) {
    throw std::invalid_argument(std::string(what) + ": occlusion must be {1,H,W}");
  }
  for (int64_t i = 0; i < s.occlusion->value.numel(); ++i) {
    const float v = s.occlusion->value[i];
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw std::invalid_argument(std::string(what) + ": occlusion outside [0,1]");
    }
  }
}

namespace {
MotionField second_order_comb(const MotionField& a, const MotionField& b, const MotionField& c) {
  // ((c - b) - 2 (b - a)) / 3 == (2/3) a - b + (1/3) c, channel-wise.
  MotionField out;
  out.K = a.K;
  out.dilation = a.dilation;
  constexpr float ca = 2.0f / 3.0f, cb = -1.0f, cc = 1.0f / 3.0f;
  out.weights = lincomb3(a.weights, b.weights, c.weights, ca, cb, cc);
  out.alpha = lincomb3(a.alpha, b.alpha, c.alpha, ca, cb, cc);
  out.beta = lincomb3(a.beta, b.beta, c.beta, ca, cb, cc);
  return out;
}
}  // namespace

MotionField normalize_weights(const MotionField& f) {
  MotionField out = f;
  out.weights = softmax_channels(f.weights);
  return out;
}

MotionField regress_forward_combination(const MotionField& mm2, const MotionField& mm1,
                                        const MotionField& m1) {
  if (mm2.K != mm1.K || mm1.K != m1.K) {
    throw std::invalid_argument("regress_forward_motion: mixed kernel sizes");
  }
  return second_order_comb(mm2, mm1, m1);
}

MotionField regress_backward_combination(const MotionField& m2, const MotionField& m1,
                                         const MotionField& mm1) {
  if (m2.K != m1.K || m1.K != mm1.K) {
    throw std::invalid_argument("regress_backward_motion: mixed kernel sizes");
  }
  return second_order_comb(m2, m1, mm1);
}

MotionField regress_forward_motion(const MotionField& mm2, const MotionField& mm1,
                                   const MotionField& m1) {
  return normalize_weights(regress_forward_combination(mm2, mm1, m1));
}

MotionField regress_backward_motion(const MotionField& m2, const MotionField& m1,
                                    const MotionField& mm1) {
  return normalize_weights(regress_backward_combination(m2, m1, mm1));
}

QuadraticFit solve_individual_quadratic(const MotionField& prev, const MotionField& mid,
                                        const MotionField& next) {
  QuadraticFit fit;
  fit.velocity.alpha = lincomb3(next.alpha, mid.alpha, prev.alpha, 0.5f, 0.0f, -0.5f);
  fit.velocity.beta = lincomb3(next.beta, mid.beta, prev.beta, 0.5f, 0.0f, -0.5f);
  fit.acceleration.alpha = lincomb3(next.alpha, mid.alpha, prev.alpha, 0.5f, -1.0f, 0.5f);
  fit.acceleration.beta = lincomb3(next.beta, mid.beta, prev.beta, 0.5f, -1.0f, 0.5f);
  return fit;
}

OffsetPair eval_quadratic(const MotionField& mid, const QuadraticFit& fit, float t) {
  OffsetPair out;
  out.alpha = lincomb3(mid.alpha, fit.velocity.alpha, fit.acceleration.alpha, 1.0f, t, t * t);
  out.beta = lincomb3(mid.beta, fit.velocity.beta, fit.acceleration.beta, 1.0f, t, t * t);
  return out;
}

Var blend_occlusion(const std::vector<Var>& forward_frames,
                    const std::vector<Var>& backward_frames, const Var& occlusion) {
  if (forward_frames.empty() || backward_frames.empty()) {
    throw std::invalid_argument("blend_occlusion: empty frame list");
  }
  Var fsum = forward_frames[0];
  for (size_t i = 1; i < forward_frames.size(); ++i) fsum = add(fsum, forward_frames[i]);
  Var bsum = backward_frames[0];
  for (size_t i = 1; i < backward_frames.size(); ++i) bsum = add(bsum, backward_frames[i]);
  return add(mul_map(occlusion, fsum), mul_map(affine(occlusion, -1.0f, 1.0f), bsum));
}

}  // namespace kinterp
