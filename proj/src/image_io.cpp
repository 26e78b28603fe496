#include "kinterp/image_io.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kinterp {

Tensor read_image(const std::string& path) {
  cv::Mat bgr = cv::imread(path, cv::IMREAD_COLOR);
  if (bgr.empty()) throw std::runtime_error("cannot read image: " + path);
  if (bgr.type() != CV_8UC3)
    throw std::runtime_error("unsupported pixel format in " + path);
  const int H = bgr.rows, W = bgr.cols;
  Tensor out({3, H, W});
  for (int i = 0; i < H; ++i) {
    const uint8_t* row = bgr.ptr<uint8_t>(i);
    for (int j = 0; j < W; ++j) {
      out.at(0, i, j) = row[3 * j + 2] / 255.0f;  // R
      out.at(1, i, j) = row[3 * j + 1] / 255.0f;  // G
      out.at(2, i, j) = row[3 * j + 0] / 255.0f;  // B
    }
  }
  return out;
}

void write_image(const std::string& path, const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 3)
    throw std::invalid_argument("write_image: expected a {3,H,W} tensor, got " +
                                image.shape_str());
  const int H = image.dim(1), W = image.dim(2);
  cv::Mat bgr(H, W, CV_8UC3);
  auto to_byte = [](float v) {
    return static_cast<uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
  };
  for (int i = 0; i < H; ++i) {
    uint8_t* row = bgr.ptr<uint8_t>(i);
    for (int j = 0; j < W; ++j) {
      row[3 * j + 2] = to_byte(image.at(0, i, j));
      row[3 * j + 1] = to_byte(image.at(1, i, j));
      row[3 * j + 0] = to_byte(image.at(2, i, j));
    }
  }
  if (!cv::imwrite(path, bgr))
    throw std::runtime_error("cannot write image: " + path);
}

}  // namespace kinterp
