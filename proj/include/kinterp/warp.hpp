#pragma once

#include <array>

#include "kinterp/motion.hpp"

namespace kinterp {

struct WarpConfig {
  int kernel_size = 5;
  int dilation = 1;
};

// Deformable-kernel warp of a {C,H,W} frame:
//   out[c,i,j] = sum_{p,q} W_pq(i,j) * frame(c, i + d*p + alpha_pq(i,j),
//                                             j + d*q + beta_pq(i,j))
// bilinear sampling, clamp-to-edge borders. Differentiable in the frame and
// all three field channels.
Var deformable_warp(const Var& frame, const MotionField& motion);

// Warp each reference frame {-2,-1,+1,+2} with its own motion field.
std::array<Var, 4> warp_all_references(const std::array<Var, 4>& frames, const MotionSet& set);

}  // namespace kinterp
