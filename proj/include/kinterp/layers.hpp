#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kinterp/autodiff.hpp"
#include "kinterp/rng.hpp"

namespace kinterp {

// Ordered registry of trainable leaves. Creation order is the serialization
// order, so checkpoints are stable across runs of the same configuration.
class ParamStore {
 public:
  Var create(const std::string& name, std::vector<int> shape);
  const std::vector<std::pair<std::string, Var>>& items() const { return items_; }
  int64_t parameter_count() const;
  void zero_grads();
  Var find(const std::string& name) const;

 private:
  std::vector<std::pair<std::string, Var>> items_;
};

enum class Init { orthogonal, zero };

// Variance-preserving gain for convolutions followed by the slope-0.1 leaky
// rectifier: sqrt(2 / (1 + 0.1^2)). Orthonormal filters keep the variance of
// their input, but the rectifier halves it; scaling the weights by this gain
// keeps activation magnitudes stable through deep conv stacks.
inline constexpr float kLeakyReluGain = 1.40719509f;

// Fills a {OC, IC*K*K}-viewed weight with an orthogonal matrix (orthonormal
// rows or columns, whichever dimension is smaller) scaled by `gain`,
// deterministic in rng.
void orthogonal_init(Tensor& w, Rng rng, float gain = 1.0f);

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(ParamStore& ps, const std::string& name, int in_ch, int out_ch, int k, Rng rng,
         Init init = Init::orthogonal, float gain = 1.0f);
  Var operator()(const Var& x) const { return conv2d(x, w_, b_); }
  int out_channels() const { return w_->value.dim(0); }

 private:
  Var w_, b_;
};

// Single ConvLSTM cell; gate convolution maps [x, h] to 4*hidden channels
// (input, forget, output gates sigmoid; candidate tanh).
class ConvLSTMCell {
 public:
  ConvLSTMCell() = default;
  ConvLSTMCell(ParamStore& ps, const std::string& name, int in_ch, int hidden_ch, int k, Rng rng);

  struct State {
    Var h, c;
  };
  State initial_state(int H, int W) const;
  State step(const Var& x, const State& s) const;
  int hidden_channels() const { return hidden_; }

 private:
  Conv2d gates_;
  int hidden_ = 0;
};

}  // namespace kinterp
