#pragma once

#include <vector>

#include "kinterp/tensor.hpp"

namespace kinterp {

// Evaluation-only image metrics. All accumulation runs in double precision so
// the reported numbers are stable across kernel implementations and thread
// counts. Inputs are {C,H,W} tensors with intensities in [0,1].

// Peak signal-to-noise ratio against a unit dynamic range: 10*log10(1/MSE).
// Identical images would be +inf, so the value is capped at 100 dB (any MSE
// below 1e-10 reports exactly 100).
double psnr(const Tensor& a, const Tensor& b);

// Structural similarity with the standard 11x11 Gaussian window (sigma 1.5)
// and constants C1=(0.01)^2, C2=(0.03)^2 for unit dynamic range. Only fully
// valid window positions contribute (no padding), channels are averaged, and
// the result is symmetric in its arguments. Requires H,W >= 11.
double ssim(const Tensor& a, const Tensor& b);

// Stacks one scanline from each frame into a {C, T, W} image whose vertical
// axis is time: static content yields identical rows, uniform horizontal
// motion yields diagonal stripes. `row` indexes into [0, H).
Tensor temporal_profile(const std::vector<Tensor>& frames, int row);

}  // namespace kinterp
