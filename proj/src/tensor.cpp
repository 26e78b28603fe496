#include "kinterp/tensor.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

namespace kinterp {

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
  int64_t n = 1;
  for (int d : shape_) {
    if (d <= 0) throw std::invalid_argument("Tensor: non-positive dimension");
    n *= d;
  }
  data_.assign(static_cast<size_t>(n), 0.0f);
}

Tensor Tensor::full(std::vector<int> shape, float v) {
  Tensor t(std::move(shape));
  t.fill(v);
  return t;
}

Tensor Tensor::scalar(float v) {
  Tensor t({1});
  t[0] = v;
  return t;
}

void Tensor::fill(float v) {
  for (auto& x : data_) x = v;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "{";
  for (size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
  os << "}";
  return os.str();
}

void check_shape(const Tensor& t, const std::vector<int>& expect, const std::string& what) {
  if (t.shape() != expect) {
    Tensor e;
    std::ostringstream os;
    os << what << ": expected shape {";
    for (size_t i = 0; i < expect.size(); ++i) os << (i ? "," : "") << expect[i];
    os << "}, got " << t.shape_str();
    throw std::invalid_argument(os.str());
  }
}

void check_same_shape(const Tensor& a, const Tensor& b, const std::string& what) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(what + ": shape mismatch " + a.shape_str() + " vs " +
                                b.shape_str());
  }
}

bool all_finite(const Tensor& t) {
  for (int64_t i = 0; i < t.numel(); ++i) {
    if (!std::isfinite(t[i])) return false;
  }
  return true;
}

float max_abs_diff(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "max_abs_diff");
  float m = 0.0f;
  for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

float max_abs(const Tensor& t) {
  float m = 0.0f;
  for (int64_t i = 0; i < t.numel(); ++i) m = std::max(m, std::fabs(t[i]));
  return m;
}

}  // namespace kinterp
