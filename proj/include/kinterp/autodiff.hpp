#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "kinterp/tensor.hpp"

namespace kinterp {

// Minimal reverse-mode autodiff. A Var is a shared node in a per-sample
// expression DAG; ops record a backprop closure only when some input needs
// gradients, so the same functions serve both training and plain inference.
struct Node {
  Tensor value;
  Tensor grad;  // allocated lazily, same shape as value
  bool requires_grad = false;
  // Reductions and scalar arithmetic on {1} nodes keep a double-precision
  // shadow of the value; losses and finite-difference checks read it to avoid
  // float32 cancellation.
  double hi = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;
};

using Var = std::shared_ptr<Node>;

// Double-precision view of a scalar node (falls back to the float value).
double scalar_value(const Var& v);

Var constant(Tensor v);
Var leaf(Tensor v, bool requires_grad = true);
Tensor& ensure_grad(Node& n);

// Accumulates gradients of `root` (a {1} scalar) into every reachable leaf
// with requires_grad. Leaf grads are accumulated, not reset; call zero_grad
// between steps.
void backward(const Var& root);

// Elementwise; shapes must match (mul(a,a) doubles the gradient as expected).
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
// s*a + c, elementwise with scalars s,c.
Var affine(const Var& a, float s, float c);
// ca*a + cb*b + cc*c elementwise, as a single node.
Var lincomb3(const Var& a, const Var& b, const Var& c, float ca, float cb, float cc);
// Multiply {C,H,W} by a {1,H,W} map, broadcasting over channels.
Var mul_map(const Var& map, const Var& x);

Var leaky_relu(const Var& a, float slope);
Var sigmoid(const Var& a);
Var tanh_v(const Var& a);
Var abs_v(const Var& a);
// Elementwise sqrt; gradient defined as 0 where the value is exactly 0.
Var sqrt_v(const Var& a);
// Clamp to [0,1]; gradient passes only where the input was inside the range.
Var clamp01(const Var& a);

Var concat_channels(const std::vector<Var>& xs);
Var slice_channels(const Var& a, int c0, int count);
Var slice_spatial(const Var& a, int i0, int j0, int h, int w);
// Per-pixel softmax across all channels of a {C,H,W} tensor.
Var softmax_channels(const Var& a);

// Kernel-backed ops ({C,H,W} layout, see kernels.hpp for semantics).
Var conv2d(const Var& x, const Var& w, const Var& b);
Var avgpool2(const Var& x);
Var upsample2(const Var& x);
Var warp(const Var& frame, const Var& Wt, const Var& A, const Var& B, int K, int dil);

// Reductions to a {1} scalar (double accumulation).
Var sum_all(const Var& a);
Var mean_all(const Var& a);

// Central-difference gradient verification. `build` must construct a fresh
// scalar graph from the current leaf values each call. Probes are sampled
// deterministically from `seed`; relative error uses max(|analytic|,|fd|) as
// the denominator and ignores entries where both are below `floor`.
struct GradCheckReport {
  double max_rel_err = 0.0;
  // Median over probes. Deep stacks of kinked activations make a few probes
  // straddle a slope break no matter how small the step is, which inflates
  // the max; systematic gradient bugs shift every probe, so the median keeps
  // discriminating.
  double median_rel_err = 0.0;
  int64_t probes = 0;
};
GradCheckReport gradient_check(const std::vector<Var>& leaves,
                               const std::function<Var()>& build, double step,
                               int probes_per_leaf, uint64_t seed, double floor = 1e-4);

}  // namespace kinterp
