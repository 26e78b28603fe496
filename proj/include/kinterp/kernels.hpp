#pragma once

#include "kinterp/tensor.hpp"

namespace kinterp::kernels {

// Two interchangeable implementations of every hot loop. `reference` is the
// plain serial code kept as the behavioural oracle; `fast` uses OpenMP worker
// loops and BLAS matrix products. Tests cross-check them, tools/bench_kernels
// times them. The fast path is the default.
enum class Backend { reference, fast };

Backend backend();
void set_backend(Backend b);

struct BackendScope {
  explicit BackendScope(Backend b) : prev_(backend()) { set_backend(b); }
  ~BackendScope() { set_backend(prev_); }

 private:
  Backend prev_;
};

// 2-D convolution, stride 1, zero "same" padding, odd square kernel.
// x {IC,H,W}, w {OC,IC,K,K}, b {OC} (may be empty), y {OC,H,W}.
// If `cols` is non-null the fast path stores the im2col buffer there for
// reuse by conv2d_backward_weight.
void conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& y,
                    Tensor* cols = nullptr);
void conv2d_backward_input(const Tensor& w, const Tensor& gy, Tensor& gx);
void conv2d_backward_weight(const Tensor& x, const Tensor& gy, Tensor& gw, Tensor* gb,
                            const Tensor* cols = nullptr);

// 2x2 average pooling (H, W even). x {C,H,W} -> y {C,H/2,W/2}.
void avgpool2_forward(const Tensor& x, Tensor& y);
void avgpool2_backward(const Tensor& gy, Tensor& gx);

// Bilinear x2 upsampling, half-pixel centres (align_corners = false),
// clamp-to-edge at the border. x {C,H,W} -> y {C,2H,2W}.
void upsample2_forward(const Tensor& x, Tensor& y);
void upsample2_backward(const Tensor& gy, Tensor& gx);

// Deformable-kernel warp: out[c,i,j] = sum_t Wt[t,i,j] *
//   sample(frame, c, i + d*pt + A[t,i,j], j + d*qt + B[t,i,j])
// where t runs over the K*K taps, (pt,qt) in [-(K-1)/2, (K-1)/2]^2, d is the
// dilation, and sample() is bilinear with clamp-to-edge. Sampling clamped at a
// border contributes zero positional gradient.
// frame {C,H,W}; Wt, A, B {K*K,H,W}; out {C,H,W}.
void warp_forward(const Tensor& frame, const Tensor& Wt, const Tensor& A, const Tensor& B,
                  int K, int dil, Tensor& out);
void warp_backward(const Tensor& frame, const Tensor& Wt, const Tensor& A, const Tensor& B,
                   int K, int dil, const Tensor& gout, Tensor* gframe, Tensor* gW, Tensor* gA,
                   Tensor* gB);

}  // namespace kinterp::kernels
