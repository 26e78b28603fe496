// Fast backend: conv lowers to im2col + BLAS sgemm, everything else is the
// reference loop body parallelised with OpenMP over disjoint output slices, so
// results are reproducible for any thread count.
#include <cblas.h>

#include <algorithm>
#include <cmath>

#include "kinterp/kernels.hpp"

namespace kinterp::kernels {

namespace {

// cols[(ic*K+kh)*K+kw, i*W+j] = x[ic, i+kh-P, j+kw-P], zero outside.
void im2col(const Tensor& x, int K, Tensor& cols) {
  const int IC = x.dim(0), H = x.dim(1), W = x.dim(2), P = K / 2;
  const int rows = IC * K * K;
  float* cp = cols.data();
  const float* xp = x.data();
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) {
    const int ic = r / (K * K), kh = (r / K) % K, kw = r % K;
    float* dst = cp + static_cast<int64_t>(r) * H * W;
    const float* src = xp + static_cast<int64_t>(ic) * H * W;
    for (int i = 0; i < H; ++i, dst += W) {
      const int a = i + kh - P;
      if (a < 0 || a >= H) {
        std::fill(dst, dst + W, 0.0f);
        continue;
      }
      const int jlo = std::max(0, P - kw), jhi = std::min(W, W + P - kw);
      if (jlo > 0) std::fill(dst, dst + jlo, 0.0f);
      std::copy(src + static_cast<int64_t>(a) * W + jlo + kw - P,
                src + static_cast<int64_t>(a) * W + jhi + kw - P, dst + jlo);
      if (jhi < W) std::fill(dst + jhi, dst + W, 0.0f);
    }
  }
}

void col2im_accumulate(const Tensor& cols, int IC, int H, int W, int K, Tensor& gx) {
  const int P = K / 2;
#pragma omp parallel for schedule(static)
  for (int ic = 0; ic < IC; ++ic) {
    for (int kh = 0; kh < K; ++kh) {
      for (int kw = 0; kw < K; ++kw) {
        const int r = (ic * K + kh) * K + kw;
        const float* src = cols.data() + static_cast<int64_t>(r) * H * W;
        const int ilo = std::max(0, P - kh), ihi = std::min(H, H + P - kh);
        const int jlo = std::max(0, P - kw), jhi = std::min(W, W + P - kw);
        for (int i = ilo; i < ihi; ++i) {
          float* dst = &gx.at(ic, i + kh - P, jlo + kw - P);
          const float* s = src + static_cast<int64_t>(i) * W + jlo;
          for (int j = jlo; j < jhi; ++j) *dst++ += *s++;
        }
      }
    }
  }
}

}  // namespace

void conv2d_forward_fast(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& y,
                         Tensor* cols_out) {
  const int IC = x.dim(0), H = x.dim(1), W = x.dim(2);
  const int OC = w.dim(0), K = w.dim(2);
  const int HW = H * W, CK = IC * K * K;
  const float* cols_ptr;
  Tensor scratch;
  if (K == 1) {
    cols_ptr = x.data();  // im2col is the identity for 1x1 kernels
  } else {
    Tensor& cols = cols_out ? *cols_out : scratch;
    if (cols.shape() != std::vector<int>{CK, HW}) cols = Tensor({CK, HW});
    im2col(x, K, cols);
    cols_ptr = cols.data();
  }
  cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, OC, HW, CK, 1.0f, w.data(), CK, cols_ptr,
              HW, 0.0f, y.data(), HW);
  if (!b.empty()) {
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < OC; ++oc) {
      float* yp = y.data() + static_cast<int64_t>(oc) * HW;
      const float bv = b[oc];
      for (int i = 0; i < HW; ++i) yp[i] += bv;
    }
  }
}

void conv2d_backward_input_fast(const Tensor& w, const Tensor& gy, Tensor& gx) {
  const int OC = w.dim(0), IC = w.dim(1), K = w.dim(2);
  const int H = gy.dim(1), W = gy.dim(2), HW = H * W, CK = IC * K * K;
  if (K == 1) {
    Tensor tmp({IC, H, W});
    cblas_sgemm(CblasRowMajor, CblasTrans, CblasNoTrans, CK, HW, OC, 1.0f, w.data(), CK, gy.data(),
                HW, 0.0f, tmp.data(), HW);
#pragma omp parallel for schedule(static)
    for (int ic = 0; ic < IC; ++ic) {
      const float* s = tmp.data() + static_cast<int64_t>(ic) * HW;
      float* d = gx.data() + static_cast<int64_t>(ic) * HW;
      for (int i = 0; i < HW; ++i) d[i] += s[i];
    }
    return;
  }
  Tensor colsg({CK, HW});
  cblas_sgemm(CblasRowMajor, CblasTrans, CblasNoTrans, CK, HW, OC, 1.0f, w.data(), CK, gy.data(),
              HW, 0.0f, colsg.data(), HW);
  col2im_accumulate(colsg, IC, H, W, K, gx);
}

void conv2d_backward_weight_fast(const Tensor& x, const Tensor& gy, Tensor& gw, Tensor* gb,
                                 const Tensor* cols) {
  const int IC = x.dim(0), H = x.dim(1), W = x.dim(2);
  const int OC = gy.dim(0), K = gw.dim(2);
  const int HW = H * W, CK = IC * K * K;
  const float* cols_ptr;
  Tensor scratch;
  if (K == 1) {
    cols_ptr = x.data();
  } else if (cols && cols->shape() == std::vector<int>{CK, HW}) {
    cols_ptr = cols->data();
  } else {
    scratch = Tensor({CK, HW});
    im2col(x, K, scratch);
    cols_ptr = scratch.data();
  }
  cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasTrans, OC, CK, HW, 1.0f, gy.data(), HW, cols_ptr,
              HW, 1.0f, gw.data(), CK);
  if (gb) {
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < OC; ++oc) {
      double acc = 0.0;
      const float* gp = gy.data() + static_cast<int64_t>(oc) * HW;
      for (int i = 0; i < HW; ++i) acc += gp[i];
      (*gb)[oc] += static_cast<float>(acc);
    }
  }
}

void avgpool2_forward_fast(const Tensor& x, Tensor& y) {
  const int C = x.dim(0), Ho = y.dim(1), Wo = y.dim(2);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < C; ++c)
    for (int i = 0; i < Ho; ++i)
      for (int j = 0; j < Wo; ++j)
        y.at(c, i, j) = 0.25f * (x.at(c, 2 * i, 2 * j) + x.at(c, 2 * i, 2 * j + 1) +
                                 x.at(c, 2 * i + 1, 2 * j) + x.at(c, 2 * i + 1, 2 * j + 1));
}

void avgpool2_backward_fast(const Tensor& gy, Tensor& gx) {
  const int C = gy.dim(0), Ho = gy.dim(1), Wo = gy.dim(2);
#pragma omp parallel for schedule(static)
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
inline void up2_coords(int dst, int src_size, int& r0, int& r1, float& f) {
  const float s = 0.5f * (dst + 0.5f) - 0.5f;
  const int lo = static_cast<int>(std::floor(s));
  f = s - lo;
  r0 = std::clamp(lo, 0, src_size - 1);
  r1 = std::clamp(lo + 1, 0, src_size - 1);
}
}  // namespace

void upsample2_forward_fast(const Tensor& x, Tensor& y) {
  const int C = x.dim(0), Hs = x.dim(1), Ws = x.dim(2);
  const int Ho = y.dim(1), Wo = y.dim(2);
#pragma omp parallel for schedule(static) collapse(2)
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

void upsample2_backward_fast(const Tensor& gy, Tensor& gx) {
  const int C = gy.dim(0), Ho = gy.dim(1), Wo = gy.dim(2);
  const int Hs = gx.dim(1), Ws = gx.dim(2);
#pragma omp parallel for schedule(static)
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

void warp_forward_fast(const Tensor& frame, const Tensor& Wt, const Tensor& A, const Tensor& B,
                       int K, int dil, Tensor& out) {
  const int C = frame.dim(0), H = frame.dim(1), W = frame.dim(2);
  const int half = (K - 1) / 2, T = K * K;
#pragma omp parallel for schedule(static)
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

void warp_backward_fast(const Tensor& frame, const Tensor& Wt, const Tensor& A, const Tensor& B,
                        int K, int dil, const Tensor& gout, Tensor* gframe, Tensor* gW, Tensor* gA,
                        Tensor* gB) {
  const int C = frame.dim(0), H = frame.dim(1), W = frame.dim(2);
  const int half = (K - 1) / 2, T = K * K;
  // Pass 1: per-tap gradients; every (t,i,j) cell is written by one thread.
  if (gW || gA || gB) {
#pragma omp parallel for schedule(static)
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
            gw_acc += g * ((1 - fy) * ((1 - fx) * v00 + fx * v01) +
                           fy * ((1 - fx) * v10 + fx * v11));
            ga_acc += g * wgt * ((1 - fx) * (v10 - v00) + fx * (v11 - v01));
            gb_acc += g * wgt * ((1 - fy) * (v01 - v00) + fy * (v11 - v10));
          }
          if (gW) gW->at(t, i, j) += gw_acc;
          if (gA) gA->at(t, i, j) += ga_acc;
          if (gB) gB->at(t, i, j) += gb_acc;
        }
      }
    }
  }
  // Pass 2: frame gradient; scatters stay inside one channel plane, so
  // parallelising over channels is race-free with a fixed accumulation order.
  if (gframe) {
#pragma omp parallel for schedule(static)
    for (int c = 0; c < C; ++c) {
      for (int i = 0; i < H; ++i) {
        for (int j = 0; j < W; ++j) {
          const float g = gout.at(c, i, j);
          if (g == 0.0f) continue;
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
            gframe->at(c, r0, c0) += g * wgt * (1 - fy) * (1 - fx);
            gframe->at(c, r0, c1) += g * wgt * (1 - fy) * fx;
            gframe->at(c, r1, c0) += g * wgt * fy * (1 - fx);
            gframe->at(c, r1, c1) += g * wgt * fy * fx;
          }
        }
      }
    }
  }
}

}  // namespace kinterp::kernels
