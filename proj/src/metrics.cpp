#include "kinterp/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace kinterp {

double psnr(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "psnr");
  if (a.empty()) throw std::invalid_argument("psnr: empty input");
  double se = 0.0;
  const int64_t n = a.numel();
  for (int64_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    se += d * d;
  }
  const double mse = se / static_cast<double>(n);
  if (mse < 1e-10) return 100.0;
  return -10.0 * std::log10(mse);
}

namespace {

constexpr int kWin = 11;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::vector<double> gaussian_window() {
  std::vector<double> g(kWin);
  const double sigma = 1.5;
  double sum = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - (kWin - 1) / 2.0;
    g[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += g[i];
  }
  for (double& v : g) v /= sum;
  return g;
}

// Valid-mode separable Gaussian blur of one {H,W} channel plane.
std::vector<double> blur_valid(const std::vector<double>& img, int H, int W,
                               const std::vector<double>& g) {
  const int Wv = W - kWin + 1, Hv = H - kWin + 1;
  std::vector<double> rows(static_cast<size_t>(H) * Wv);
  for (int i = 0; i < H; ++i)
    for (int j = 0; j < Wv; ++j) {
      double s = 0.0;
      for (int k = 0; k < kWin; ++k) s += g[k] * img[static_cast<size_t>(i) * W + j + k];
      rows[static_cast<size_t>(i) * Wv + j] = s;
    }
  std::vector<double> out(static_cast<size_t>(Hv) * Wv);
  for (int i = 0; i < Hv; ++i)
    for (int j = 0; j < Wv; ++j) {
      double s = 0.0;
      for (int k = 0; k < kWin; ++k) s += g[k] * rows[static_cast<size_t>(i + k) * Wv + j];
      out[static_cast<size_t>(i) * Wv + j] = s;
    }
  return out;
}

}  // namespace

double ssim(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "ssim");
  if (a.rank() != 3) throw std::invalid_argument("ssim: expected a {C,H,W} tensor");
  const int C = a.dim(0), H = a.dim(1), W = a.dim(2);
  if (H < kWin || W < kWin)
    throw std::invalid_argument("ssim: image smaller than the 11x11 window (" +
                                a.shape_str() + ")");
  const std::vector<double> g = gaussian_window();
  const int Hv = H - kWin + 1, Wv = W - kWin + 1;
  const size_t plane = static_cast<size_t>(H) * W;

  double channel_sum = 0.0;
  std::vector<double> x(plane), y(plane), xx(plane), yy(plane), xy(plane);
  for (int c = 0; c < C; ++c) {
    for (size_t i = 0; i < plane; ++i) {
      x[i] = a[static_cast<int64_t>(c * plane + i)];
      y[i] = b[static_cast<int64_t>(c * plane + i)];
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const std::vector<double> mx = blur_valid(x, H, W, g);
    const std::vector<double> my = blur_valid(y, H, W, g);
    const std::vector<double> mxx = blur_valid(xx, H, W, g);
    const std::vector<double> myy = blur_valid(yy, H, W, g);
    const std::vector<double> mxy = blur_valid(xy, H, W, g);
    double acc = 0.0;
    for (size_t i = 0; i < static_cast<size_t>(Hv) * Wv; ++i) {
      const double vx = mxx[i] - mx[i] * mx[i];
      const double vy = myy[i] - my[i] * my[i];
      const double cov = mxy[i] - mx[i] * my[i];
      acc += ((2.0 * mx[i] * my[i] + kC1) * (2.0 * cov + kC2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + kC1) * (vx + vy + kC2));
    }
    channel_sum += acc / (static_cast<double>(Hv) * Wv);
  }
  return channel_sum / C;
}

Tensor temporal_profile(const std::vector<Tensor>& frames, int row) {
  if (frames.empty()) throw std::invalid_argument("temporal_profile: no frames");
  const Tensor& first = frames.front();
  if (first.rank() != 3)
    throw std::invalid_argument("temporal_profile: expected {C,H,W} frames");
  const int C = first.dim(0), H = first.dim(1), W = first.dim(2);
  if (row < 0 || row >= H)
    throw std::invalid_argument("temporal_profile: row " + std::to_string(row) +
                                " outside [0," + std::to_string(H) + ")");
  const int T = static_cast<int>(frames.size());
  Tensor out({C, T, W});
  for (int t = 0; t < T; ++t) {
    check_same_shape(frames[static_cast<size_t>(t)], first, "temporal_profile");
    for (int c = 0; c < C; ++c)
      for (int j = 0; j < W; ++j)
        out.at(c, t, j) = frames[static_cast<size_t>(t)].at(c, row, j);
  }
  return out;
}

}  // namespace kinterp
