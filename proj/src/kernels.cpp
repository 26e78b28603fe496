#include "kinterp/kernels.hpp"

extern "C" void openblas_set_num_threads(int);

namespace kinterp::kernels {

// Per-op entry points declared in the two backend translation units.
void conv2d_forward_ref(const Tensor&, const Tensor&, const Tensor&, Tensor&);
void conv2d_backward_input_ref(const Tensor&, const Tensor&, Tensor&);
void conv2d_backward_weight_ref(const Tensor&, const Tensor&, Tensor&, Tensor*);
void avgpool2_forward_ref(const Tensor&, Tensor&);
void avgpool2_backward_ref(const Tensor&, Tensor&);
void upsample2_forward_ref(const Tensor&, Tensor&);
void upsample2_backward_ref(const Tensor&, Tensor&);
void warp_forward_ref(const Tensor&, const Tensor&, const Tensor&, const Tensor&, int, int,
                      Tensor&);
void warp_backward_ref(const Tensor&, const Tensor&, const Tensor&, const Tensor&, int, int,
                       const Tensor&, Tensor*, Tensor*, Tensor*, Tensor*);

void conv2d_forward_fast(const Tensor&, const Tensor&, const Tensor&, Tensor&, Tensor*);
void conv2d_backward_input_fast(const Tensor&, const Tensor&, Tensor&);
void conv2d_backward_weight_fast(const Tensor&, const Tensor&, Tensor&, Tensor*, const Tensor*);
void avgpool2_forward_fast(const Tensor&, Tensor&);
void avgpool2_backward_fast(const Tensor&, Tensor&);
void upsample2_forward_fast(const Tensor&, Tensor&);
void upsample2_backward_fast(const Tensor&, Tensor&);
void warp_forward_fast(const Tensor&, const Tensor&, const Tensor&, const Tensor&, int, int,
                       Tensor&);
void warp_backward_fast(const Tensor&, const Tensor&, const Tensor&, const Tensor&, int, int,
                        const Tensor&, Tensor*, Tensor*, Tensor*, Tensor*);

namespace {
Backend g_backend = [] {
  // BLAS runs single-threaded; parallelism lives in our own OpenMP loops and
  // training results must not depend on the BLAS thread pool.
  openblas_set_num_threads(1);
  return Backend::fast;
}();
}

Backend backend() { return g_backend; }
void set_backend(Backend b) { g_backend = b; }

void conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& y, Tensor* cols) {
  if (x.rank() != 3 || w.rank() != 4 || w.dim(1) != x.dim(0) || w.dim(2) != w.dim(3) ||
      w.dim(2) % 2 == 0) {
    throw std::invalid_argument("conv2d_forward: bad shapes x=" + x.shape_str() +
                                " w=" + w.shape_str());
  }
  if (g_backend == Backend::reference) {
    conv2d_forward_ref(x, w, b, y);
  } else {
    conv2d_forward_fast(x, w, b, y, cols);
  }
}

void conv2d_backward_input(const Tensor& w, const Tensor& gy, Tensor& gx) {
  if (g_backend == Backend::reference) {
    conv2d_backward_input_ref(w, gy, gx);
  } else {
    conv2d_backward_input_fast(w, gy, gx);
  }
}

void conv2d_backward_weight(const Tensor& x, const Tensor& gy, Tensor& gw, Tensor* gb,
                            const Tensor* cols) {
  if (g_backend == Backend::reference) {
    conv2d_backward_weight_ref(x, gy, gw, gb);
  } else {
    conv2d_backward_weight_fast(x, gy, gw, gb, cols);
  }
}

void avgpool2_forward(const Tensor& x, Tensor& y) {
  if (x.dim(1) % 2 || x.dim(2) % 2) {
    throw std::invalid_argument("avgpool2_forward: odd spatial size " + x.shape_str());
  }
  if (g_backend == Backend::reference) {
    avgpool2_forward_ref(x, y);
  } else {
    avgpool2_forward_fast(x, y);
  }
}

void avgpool2_backward(const Tensor& gy, Tensor& gx) {
  if (g_backend == Backend::reference) {
    avgpool2_backward_ref(gy, gx);
  } else {
    avgpool2_backward_fast(gy, gx);
  }
}

void upsample2_forward(const Tensor& x, Tensor& y) {
  if (g_backend == Backend::reference) {
    upsample2_forward_ref(x, y);
  } else {
    upsample2_forward_fast(x, y);
  }
}

void upsample2_backward(const Tensor& gy, Tensor& gx) {
  if (g_backend == Backend::reference) {
    upsample2_backward_ref(gy, gx);
  } else {
    upsample2_backward_fast(gy, gx);
  }
}

void warp_forward(const Tensor& frame, const Tensor& Wt, const Tensor& A, const Tensor& B, int K,
                  int dil, Tensor& out) {
  const int T = K * K;
  if (Wt.dim(0) != T || A.dim(0) != T || B.dim(0) != T || Wt.dim(1) != frame.dim(1) ||
      Wt.dim(2) != frame.dim(2)) {
    throw std::invalid_argument("warp_forward: field shapes do not match frame/K");
  }
  if (g_backend == Backend::reference) {
    warp_forward_ref(frame, Wt, A, B, K, dil, out);
  } else {
    warp_forward_fast(frame, Wt, A, B, K, dil, out);
  }
}

void warp_backward(const Tensor& frame, const Tensor& Wt, const Tensor& A, const Tensor& B, int K,
                   int dil, const Tensor& gout, Tensor* gframe, Tensor* gW, Tensor* gA,
                   Tensor* gB) {
  if (g_backend == Backend::reference) {
    warp_backward_ref(frame, Wt, A, B, K, dil, gout, gframe, gW, gA, gB);
  } else {
    warp_backward_fast(frame, Wt, A, B, K, dil, gout, gframe, gW, gA, gB);
  }
}

}  // namespace kinterp::kernels
