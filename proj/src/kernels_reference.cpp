// Serial reference implementations. Deliberately plain loops: these are the
// oracle the fast backend is checked against.
#include <algorithm>
#include <cmath>

#include "kinterp/kernels.hpp"

namespace kinterp::kernels {

void conv2d_forward_ref(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& y) {
  const int IC = x.dim(0), H = x.dim(1), W = x.dim(2);
  const int OC = w.dim(0), K = w.dim(2), P = K / 2;
  for (int oc = 0; oc < OC; ++oc) {
    for (int i = 0; i < H; ++i) {
      for (int j = 0; j < W; ++j) {
        double acc = b.empty() ? 0.0 : b[oc];
        for (int ic = 0; ic < IC; ++ic) {
          for (int kh = 0; kh < K; ++kh) {
            const int a = i + kh - P;
            if (a < 0 || a >= H) continue;
            for (int kw = 0; kw < K; ++kw) {
              const int c = j + kw - P;
              if (c < 0 || c >= W) continue;
              acc += static_cast<double>(x.at(ic, a, c)) *
                     w[((static_cast<int64_t>(oc) * IC + ic) * K + kh) * K + kw];
            }
          }
        }
        y.at(oc, i, j) = static_cast<float>(acc);
      }
    }
  }
}

void conv2d_backward_input_ref(const Tensor& w, const Tensor& gy, Tensor& gx) {
  const int OC = w.dim(0), IC = w.dim(1), K = w.dim(2), P = K / 2;
  const int H = gy.dim(1), W = gy.dim(2);
  for (int ic = 0; ic < IC; ++ic) {
    for (int a = 0; a < H; ++a) {
      for (int c = 0; c < W; ++c) {
        double acc = 0.0;
        for (int oc = 0; oc < OC; ++oc) {
          for (int kh = 0; kh < K; ++kh) {
            const int i = a - kh + P;
            if (i < 0 || i >= H) continue;
            for (int kw = 0; kw < K; ++kw) {
              const int j = c - kw + P;
              if (j < 0 || j >= W) continue;
              acc += static_cast<double>(gy.at(oc, i, j)) *
                     w[((static_cast<int64_t>(oc) * IC + ic) * K + kh) * K + kw];
            }
          }
        }
        gx.at(ic, a, c) += static_cast<float>(acc);
      }
    }
  }
}

void conv2d_backward_weight_ref(const Tensor& x, const Tensor& gy, Tensor& gw, Tensor* gb) {
  const int IC = x.dim(0), H = x.dim(1), W = x.dim(2);
  const int OC = gy.dim(0), K = gw.dim(2), P = K / 2;
  for (int oc = 0; oc < OC; ++oc) {
    for (int ic = 0; ic < IC; ++ic) {
      for (int kh = 0; kh < K; ++kh) {
        for (int kw = 0; kw < K; ++kw) {
          double acc = 0.0;
          const int i0 = std::max(0, P - kh), i1 = std::min(H, H + P - kh);
          const int j0 = std::max(0, P - kw), j1 = std::min(W, W + P - kw);
          for (int i = i0; i < i1; ++i) {
            for (int j = j0; j < j1; ++j) {
              acc += static_cast<double>(gy.at(oc, i, j)) * x.at(ic, i + kh - P, j + kw - P);
            }
          }
          gw[((static_cast<int64_t>(oc) * IC + ic) * K + kh) * K + kw] += static_cast<float>(acc);
        }
      }
    }
  }
  if (gb) {
    for (int oc = 0; oc < OC; ++oc) {
      double acc = 0.0;
      for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) acc += gy.at(oc, i, j);
      (*gb)[oc] += static_cast<float>(acc);
    }
  }
}

void avgpool2_forward_ref(const Tensor& x, Tensor& y) {
  const int C = x.dim(0), Ho = y.dim(1), Wo = y.dim(2);
  for (int c = 0; c < C; ++c)
    for (int i = 0; i < Ho; ++i)
      for (int j = 0; j < Wo; ++j)
        y.at(c, i, j) = 0.25f * (x.at(c, 2 * i, 2 * j) + x.at(c, 2 * i, 2 * j + 1) +
                                 x.at(c, 2 * i + 1, 2 * j) + x.at(c, 2 * i + 1, 2 * j + 1));
}

void avgpool2_backward_ref(const Tensor& gy, Tensor& gx) {
  const int C = gy.dim(0), Ho = gy.dim(1), Wo = gy.dim(2);
  for (int c = 0; c < C; ++c)
    for (int i = 0; i < Ho; ++i)
      for (int j = 0; j < Wo; ++j) {
        const float g = 0.25f * gy.at(c, i, j);
        gx.at(c, 2 * i, 2 * j) += g;
        gx.at(c, 2 * i, 2 * j + 1) += g;
        gx.at(c, 2 * i + 1, 2 * j) += g;
        gx.at(c, 2 * i + 1, 2 * j + 1) += g;
      }
}

namespace {
// Source coordinate and blend weight for one upsampled index (scale 2,
// half-pixel centres). r0/r1 are clamped source rows, f the weight of r1.
inline void up2_coords(int dst, int src_size, int& r0, int& r1, float& f) {
  const float s = 0.5f * (dst + 0.5f) - 0.5f;
  const int lo = static_cast<int>(std::floor(s));
  f = s - lo;
  r0 = std::clamp(lo, 0, src_size - 1);
  r1 = std::clamp(lo + 1, 0, src_size - 1);
}
}  // namespace

void upsample2_forward_ref(const Tensor& x, Tensor& y) {
  const int C = x.dim(0), Hs = x.dim(1), Ws = x.dim(2);
  const int Ho = y.dim(1), Wo = y.dim(2);
  for (int c = 0; c < C; ++c)
    for (int i = 0; i < Ho; ++i) {
      int r0, r1;
      float fi;
      up2_coords(i, Hs, r0, r1, fi);
      for (int j = 0; j < Wo; ++j) {
        int c0, c1;
        float fj;
        up2_coords(j, Ws, c0, c1, fj);
        y.at(c, i, j) = (1 - fi) * ((1 - fj) * x.at(c, r0, c0) + fj * x.at(c, r0, c1)) +
                        fi * ((1 - fj) * x.at(c, r1, c0) + fj * x.at(c, r1, c1));
      }
    }
}

void upsample2_backward_ref(const Tensor& gy, Tensor& gx) {
  const int C = gy.dim(0), Ho = gy.dim(1), Wo = gy.dim(2);
  const int Hs = gx.dim(1), Ws = gx.dim(2);
  for (int c = 0; c < C; ++c)
    for (int i = 0; i < Ho; ++i) {
      int r0, r1;
      float fi;
      up2_coords(i, Hs, r0, r1, fi);
      for (int j = 0; j < Wo; ++j) {
        int c0, c1;
        float fj;
        up2_coords(j, Ws, c0, c1, fj);
        const float g = gy.at(c, i, j);
        gx.at(c, r0, c0) += (1 - fi) * (1 - fj) * g;
        gx.at(c, r0, c1) += (1 - fi) * fj * g;
        gx.at(c, r1, c0) += fi * (1 - fj) * g;
        gx.at(c, r1, c1) += fi * fj * g;
      }
    }
}

void warp_forward_ref(const Tensor& frame, const Tensor& Wt, const Tensor& A, const Tensor& B,
                      int K, int dil, Tensor& out) {
  const int C = frame.dim(0), H = frame.dim(1), W = frame.dim(2);
  const int half = (K - 1) / 2, T = K * K;
  for (int i = 0; i < H; ++i) {
    for (int j = 0; j < W; ++j) {
      for (int c = 0; c < C; ++c) out.at(c, i, j) = 0.0f;
      for (int t = 0; t < T; ++t) {
        const float wgt = Wt.at(t, i, j);
        const int dp = dil * (t / K - half), dq = dil * (t % K - half);
        const float y = i + dp + A.at(t, i, j);
        const float x = j + dq + B.at(t, i, j);
        const int y0 = static_cast<int>(std::floor(y));
        const int x0 = static_cast<int>(std::floor(x));
        const float fy = y - y0, fx = x - x0;
        const int r0 = std::clamp(y0, 0, H - 1), r1 = std::clamp(y0 + 1, 0, H - 1);
        const int c0 = std::clamp(x0, 0, W - 1), c1 = std::clamp(x0 + 1, 0, W - 1);
        for (int c = 0; c < C; ++c) {
          const float v = (1 - fy) * ((1 - fx) * frame.at(c, r0, c0) + fx * frame.at(c, r0, c1)) +
                          fy * ((1 - fx) * frame.at(c, r1, c0) + fx * frame.at(c, r1, c1));
          out.at(c, i, j) += wgt * v;
        }
      }
    }
  }
}

void warp_backward_ref(const Tensor& frame, const Tensor& Wt, const Tensor& A, const Tensor& B,
                       int K, int dil, const Tensor& gout, Tensor* gframe, Tensor* gW, Tensor* gA,
                       Tensor* gB) {
  const int C = frame.dim(0), H = frame.dim(1), W = frame.dim(2);
  const int half = (K - 1) / 2, T = K * K;
  for (int i = 0; i < H; ++i) {
    for (int j = 0; j < W; ++j) {
      for (int t = 0; t < T; ++t) {
        const float wgt = Wt.at(t, i, j);
        const int dp = dil * (t / K - half), dq = dil * (t % K - half);
        const float y = i + dp + A.at(t, i, j);
        const float x = j + dq + B.at(t, i, j);
        const int y0 = static_cast<int>(std::floor(y));
        const int x0 = static_cast<int>(std::floor(x));
        const float fy = y - y0, fx = x - x0;
        const int r0 = std::clamp(y0, 0, H - 1), r1 = std::clamp(y0 + 1, 0, H - 1);
        const int c0 = std::clamp(x0, 0, W - 1), c1 = std::clamp(x0 + 1, 0, W - 1);
        float gw_acc = 0.0f, ga_acc = 0.0f, gb_acc = 0.0f;
        for (int c = 0; c < C; ++c) {
          const float g = gout.at(c, i, j);
          const float v00 = frame.at(c, r0, c0), v01 = frame.at(c, r0, c1);
          const float v10 = frame.at(c, r1, c0), v11 = frame.at(c, r1, c1);
          const float v = (1 - fy) * ((1 - fx) * v00 + fx * v01) +
                          fy * ((1 - fx) * v10 + fx * v11);
          gw_acc += g * v;
          // d(sample)/dy collapses to 0 when both rows clamp to the same line.
          ga_acc += g * wgt * ((1 - fx) * (v10 - v00) + fx * (v11 - v01));
          gb_acc += g * wgt * ((1 - fy) * (v01 - v00) + fy * (v11 - v10));
          if (gframe) {
            gframe->at(c, r0, c0) += g * wgt * (1 - fy) * (1 - fx);
            gframe->at(c, r0, c1) += g * wgt * (1 - fy) * fx;
            gframe->at(c, r1, c0) += g * wgt * fy * (1 - fx);
            gframe->at(c, r1, c1) += g * wgt * fy * fx;
          }
        }
        if (gW) gW->at(t, i, j) += gw_acc;
        if (gA) gA->at(t, i, j) += ga_acc;
        if (gB) gB->at(t, i, j) += gb_acc;
      }
    }
  }
}

}  // namespace kinterp::kernels
