// Times the serial reference kernels against the fast (OpenMP + BLAS)
// backend on training-sized workloads and reports the agreement between the
// two, since the fast path is only useful if it computes the same thing.
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include "kinterp/kernels.hpp"
#include "kinterp/rng.hpp"

using namespace kinterp;
namespace kk = kinterp::kernels;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

double time_ms(const std::function<void()>& fn, int iters) {
  fn();  // warm up
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < iters; ++i) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / iters;
}

void report(const std::string& name, double ref_ms, double fast_ms, float diff) {
  std::printf("%-28s ref %8.3f ms   fast %8.3f ms   speedup %5.2fx   max|diff| %.2e\n",
              name.c_str(), ref_ms, fast_ms, ref_ms / fast_ms, static_cast<double>(diff));
}

}  // namespace

int main(int argc, char** argv) {
  int iters = 5;
  if (argc > 1) {
    if (std::string(argv[1]) == "--quick") {
      iters = 1;
    } else {
      iters = std::atoi(argv[1]);
      if (iters < 1) {
        std::fprintf(stderr, "usage: %s [iterations | --quick]\n", argv[0]);
        return 2;
      }
    }
  }
  std::printf("threads: %d, iterations per measurement: %d\n", omp_get_max_threads(), iters);

  Rng rng(1234);

  {
    const int IC = 32, OC = 32, H = 64, W = 64, K = 3;
    Tensor x = random_tensor({IC, H, W}, rng);
    Tensor w = random_tensor({OC, IC, K, K}, rng);
    Tensor b = random_tensor({OC}, rng);
    Tensor y_ref({OC, H, W}), y_fast({OC, H, W});
    double ref_ms = time_ms(
        [&] {
          kk::BackendScope s(kk::Backend::reference);
          kk::conv2d_forward(x, w, b, y_ref);
        },
        iters);
    double fast_ms = time_ms(
        [&] {
          kk::BackendScope s(kk::Backend::fast);
          kk::conv2d_forward(x, w, b, y_fast);
        },
        iters);
    report("conv2d 32x32x3x3 @64x64 fwd", ref_ms, fast_ms, max_abs_diff(y_ref, y_fast));

    Tensor gy = random_tensor({OC, H, W}, rng);
    Tensor gx_ref({IC, H, W}), gx_fast({IC, H, W});
    Tensor gw_ref({OC, IC, K, K}), gw_fast({OC, IC, K, K});
    Tensor gb_ref({OC}), gb_fast({OC});
    ref_ms = time_ms(
        [&] {
          kk::BackendScope s(kk::Backend::reference);
          gx_ref.fill(0.0f);
          gw_ref.fill(0.0f);
          gb_ref.fill(0.0f);
          kk::conv2d_backward_input(w, gy, gx_ref);
          kk::conv2d_backward_weight(x, gy, gw_ref, &gb_ref);
        },
        iters);
    fast_ms = time_ms(
        [&] {
          kk::BackendScope s(kk::Backend::fast);
          gx_fast.fill(0.0f);
          gw_fast.fill(0.0f);
          gb_fast.fill(0.0f);
          kk::conv2d_backward_input(w, gy, gx_fast);
          kk::conv2d_backward_weight(x, gy, gw_fast, &gb_fast);
        },
        iters);
    report("conv2d 32x32x3x3 @64x64 bwd", ref_ms, fast_ms,
           std::max(max_abs_diff(gx_ref, gx_fast), max_abs_diff(gw_ref, gw_fast)));
  }

  {
    const int K = 5, T = K * K, H = 64, W = 64;
    Tensor frame = random_tensor({3, H, W}, rng, 0.0, 1.0);
    Tensor Wt = random_tensor({T, H, W}, rng, 0.0, 1.0);
    Tensor A = random_tensor({T, H, W}, rng, -3.0, 3.0);
    Tensor B = random_tensor({T, H, W}, rng, -3.0, 3.0);
    Tensor out_ref({3, H, W}), out_fast({3, H, W});
    double ref_ms = time_ms(
        [&] {
          kk::BackendScope s(kk::Backend::reference);
          kk::warp_forward(frame, Wt, A, B, K, 1, out_ref);
        },
        iters);
    double fast_ms = time_ms(
        [&] {
          kk::BackendScope s(kk::Backend::fast);
          kk::warp_forward(frame, Wt, A, B, K, 1, out_fast);
        },
        iters);
    report("warp K=5 @64x64 fwd", ref_ms, fast_ms, max_abs_diff(out_ref, out_fast));

    Tensor gout = random_tensor({3, H, W}, rng);
    Tensor gf_ref({3, H, W}), gW_ref({T, H, W}), gA_ref({T, H, W}), gB_ref({T, H, W});
    Tensor gf_fast({3, H, W}), gW_fast({T, H, W}), gA_fast({T, H, W}), gB_fast({T, H, W});
    ref_ms = time_ms(
        [&] {
          kk::BackendScope s(kk::Backend::reference);
          kk::warp_backward(frame, Wt, A, B, K, 1, gout, &gf_ref, &gW_ref, &gA_ref, &gB_ref);
        },
        iters);
    fast_ms = time_ms(
        [&] {
          kk::BackendScope s(kk::Backend::fast);
          kk::warp_backward(frame, Wt, A, B, K, 1, gout, &gf_fast, &gW_fast, &gA_fast, &gB_fast);
        },
        iters);
    report("warp K=5 @64x64 bwd", ref_ms, fast_ms,
           std::max(max_abs_diff(gW_ref, gW_fast), max_abs_diff(gf_ref, gf_fast)));
  }

  {
    const int C = 32, H = 64, W = 64;
    Tensor x = random_tensor({C, H, W}, rng);
    Tensor yp_ref({C, H / 2, W / 2}), yp_fast({C, H / 2, W / 2});
    Tensor yu_ref({C, 2 * H, 2 * W}), yu_fast({C, 2 * H, 2 * W});
    double ref_ms = time_ms(
        [&] {
          kk::BackendScope s(kk::Backend::reference);
          kk::avgpool2_forward(x, yp_ref);
        },
        iters);
    double fast_ms = time_ms(
        [&] {
          kk::BackendScope s(kk::Backend::fast);
          kk::avgpool2_forward(x, yp_fast);
        },
        iters);
    report("avgpool2 32ch @64x64", ref_ms, fast_ms, max_abs_diff(yp_ref, yp_fast));

    ref_ms = time_ms(
        [&] {
          kk::BackendScope s(kk::Backend::reference);
          kk::upsample2_forward(x, yu_ref);
        },
        iters);
    fast_ms = time_ms(
        [&] {
          kk::BackendScope s(kk::Backend::fast);
          kk::upsample2_forward(x, yu_fast);
        },
        iters);
    report("upsample2 32ch @64x64", ref_ms, fast_ms, max_abs_diff(yu_ref, yu_fast));
  }

  return 0;
}
