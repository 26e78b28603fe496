#pragma once

#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace kinterp {

// Dense row-major float tensor. Rank is small (<= 4): images are {C,H,W},
// conv weights {OC,IC,KH,KW}, per-channel biases {C}, scalars {1}.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::initializer_list<int> shape) : Tensor(std::vector<int>(shape)) {}

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<int> shape, float v);
  static Tensor scalar(float v);

  const std::vector<int>& shape() const { return shape_; }
  int dim(int i) const { return shape_.at(static_cast<size_t>(i)); }
  int rank() const { return static_cast<int>(shape_.size()); }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  float& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  float operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  // 3-D accessor for {C,H,W} tensors.
  float& at(int c, int i, int j) {
    return data_[(static_cast<size_t>(c) * shape_[1] + i) * shape_[2] + j];
  }
  float at(int c, int i, int j) const {
    return data_[(static_cast<size_t>(c) * shape_[1] + i) * shape_[2] + j];
  }

  void fill(float v);
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  std::string shape_str() const;

 private:
  std::vector<int> shape_;
  std::vector<float> data_;
};

// Throws std::invalid_argument with a message naming `what` on mismatch.
void check_shape(const Tensor& t, const std::vector<int>& expect, const std::string& what);
void check_same_shape(const Tensor& a, const Tensor& b, const std::string& what);
bool all_finite(const Tensor& t);

float max_abs_diff(const Tensor& a, const Tensor& b);
float max_abs(const Tensor& t);

}  // namespace kinterp
