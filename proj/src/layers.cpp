#include "kinterp/layers.hpp"

#include <cmath>

namespace kinterp {

Var ParamStore::create(const std::string& name, std::vector<int> shape) {
  for (const auto& [n, v] : items_) {
    if (n == name) throw std::invalid_argument("ParamStore: duplicate parameter " + name);
  }
  Var v = leaf(Tensor(std::move(shape)), true);
  items_.emplace_back(name, v);
  return v;
}

int64_t ParamStore::parameter_count() const {
  int64_t n = 0;
  for (const auto& [name, v] : items_) n += v->value.numel();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& [name, v] : items_) v->grad = Tensor();
}

Var ParamStore::find(const std::string& name) const {
  for (const auto& [n, v] : items_) {
    if (n == name) return v;
  }
  throw std::invalid_argument("ParamStore: no parameter named " + name);
}

void orthogonal_init(Tensor& w, Rng rng, float gain) {
  const int rows = w.dim(0);
  int64_t cols64 = 1;
  for (int i = 1; i < w.rank(); ++i) cols64 *= w.dim(i);
  const int cols = static_cast<int>(cols64);
  const bool tall = rows > cols;  // orthonormalise the shorter index set
  const int nvec = tall ? cols : rows;
  const int dim = tall ? rows : cols;
  std::vector<std::vector<double>> v(nvec, std::vector<double>(dim));
  for (auto& row : v)
    for (auto& x : row) x = rng.normal();
  // Modified Gram-Schmidt.
  for (int i = 0; i < nvec; ++i) {
    for (int j = 0; j < i; ++j) {
      double dot = 0.0;
      for (int k = 0; k < dim; ++k) dot += v[i][k] * v[j][k];
      for (int k = 0; k < dim; ++k) v[i][k] -= dot * v[j][k];
    }
    double norm = 0.0;
    for (int k = 0; k < dim; ++k) norm += v[i][k] * v[i][k];
    norm = std::sqrt(norm);
    if (norm < 1e-12) norm = 1.0;
    for (int k = 0; k < dim; ++k) v[i][k] /= norm;
  }
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      w[static_cast<int64_t>(r) * cols + c] =
          static_cast<float>(gain * (tall ? v[c][r] : v[r][c]));
    }
}

Conv2d::Conv2d(ParamStore& ps, const std::string& name, int in_ch, int out_ch, int k, Rng rng,
               Init init, float gain) {
  w_ = ps.create(name + ".w", {out_ch, in_ch, k, k});
  b_ = ps.create(name + ".b", {out_ch});
  if (init == Init::orthogonal) orthogonal_init(w_->value, rng, gain);
}

ConvLSTMCell::ConvLSTMCell(ParamStore& ps, const std::string& name, int in_ch, int hidden_ch,
                           int k, Rng rng)
    : gates_(ps, name + ".gates", in_ch + hidden_ch, 4 * hidden_ch, k, rng), hidden_(hidden_ch) {}

ConvLSTMCell::State ConvLSTMCell::initial_state(int H, int W) const {
  return {constant(Tensor({hidden_, H, W})), constant(Tensor({hidden_, H, W}))};
}

ConvLSTMCell::State ConvLSTMCell::step(const Var& x, const State& s) const {
  Var z = gates_(concat_channels({x, s.h}));
  Var i = sigmoid(slice_channels(z, 0, hidden_));
  Var f = sigmoid(slice_channels(z, hidden_, hidden_));
  Var o = sigmoid(slice_channels(z, 2 * hidden_, hidden_));
  Var g = tanh_v(slice_channels(z, 3 * hidden_, hidden_));
  Var c = add(mul(f, s.c), mul(i, g));
  return {mul(o, tanh_v(c)), c};
}

}  // namespace kinterp
