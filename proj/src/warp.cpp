#include "kinterp/warp.hpp"

namespace kinterp {

Var deformable_warp(const Var& frame, const MotionField& motion) {
  if (!frame || frame->value.rank() != 3) {
    throw std::invalid_argument("deformable_warp: frame must be {C,H,W}");
  }
  if (motion.height() != frame->value.dim(1) || motion.width() != frame->value.dim(2)) {
    throw std::invalid_argument("deformable_warp: motion field size " +
                                motion.weights->value.shape_str() + " does not match frame " +
                                frame->value.shape_str());
  }
  return warp(frame, motion.weights, motion.alpha, motion.beta, motion.K, motion.dilation);
}

std::array<Var, 4> warp_all_references(const std::array<Var, 4>& frames, const MotionSet& set) {
  return {deformable_warp(frames[0], set.m_m2), deformable_warp(frames[1], set.m_m1),
          deformable_warp(frames[2], set.m_p1), deformable_warp(frames[3], set.m_p2)};
}

}  // namespace kinterp
