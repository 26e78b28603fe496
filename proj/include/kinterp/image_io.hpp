#pragma once

#include <string>

#include "kinterp/tensor.hpp"

namespace kinterp {

// 8-bit image file I/O. Tensors are {3,H,W} RGB with values in [0,1];
// files are written as PNG. Reading scales 255 -> 1.0 exactly; writing
// rounds to the nearest 8-bit level after clamping, so an 8-bit roundtrip
// is lossless.
Tensor read_image(const std::string& path);
void write_image(const std::string& path, const Tensor& image);

}  // namespace kinterp
