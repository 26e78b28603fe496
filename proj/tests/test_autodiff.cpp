#include <doctest.h>

#include <cmath>

#include "kinterp/autodiff.hpp"
#include "kinterp/rng.hpp"

using namespace kinterp;

namespace {

Var random_leaf(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<float>(rng.uniform(lo, hi));
  return leaf(std::move(t), true);
}

}  // namespace

TEST_CASE("backward on a scalar chain gives exact derivatives") {
  // f(x) = mean(3x + 1) over 4 elements -> df/dx_i = 3/4.
  Var x = leaf(Tensor::full({4}, 2.0f), true);
  Var y = mean_all(affine(x, 3.0f, 1.0f));
  CHECK(y->value[0] == doctest::Approx(7.0f));
  backward(y);
  for (int i = 0; i < 4; ++i) CHECK(x->grad[i] == doctest::Approx(0.75f));
}

TEST_CASE("mul of a node with itself doubles the gradient") {
  Var x = leaf(Tensor::full({1}, 3.0f), true);
  Var y = sum_all(mul(x, x));
  backward(y);
  CHECK(x->grad[0] == doctest::Approx(6.0f));
}

TEST_CASE("gradient of shared subexpression accumulates across uses") {
  Var x = leaf(Tensor::full({1}, 2.0f), true);
  Var h = affine(x, 2.0f, 0.0f);        // h = 2x
  Var y = sum_all(add(h, mul(h, h)));   // y = 2x + 4x^2 -> dy/dx = 2 + 8x = 18
  backward(y);
  CHECK(x->grad[0] == doctest::Approx(18.0f));
}

TEST_CASE("elementwise and shaping ops pass finite-difference checks") {
  Rng rng(42);
  Var a = random_leaf({3, 6, 5}, rng);
  Var b = random_leaf({3, 6, 5}, rng);
  Var m = random_leaf({1, 6, 5}, rng);

  auto check = [&](const std::function<Var()>& f) {
    auto rep = gradient_check({a, b, m}, f, 1e-3, 24, 9);
    CHECK(rep.max_rel_err < 1e-3);
  };
  check([&] { return mean_all(mul(add(a, b), sub(a, b))); });
  check([&] { return mean_all(mul_map(m, a)); });
  check([&] { return mean_all(leaky_relu(a, 0.1f)); });
  check([&] { return mean_all(sigmoid(mul(a, b))); });
  check([&] { return mean_all(tanh_v(a)); });
  check([&] { return mean_all(lincomb3(a, b, a, 0.4f, -1.2f, 0.25f)); });
  check([&] { return mean_all(concat_channels({a, b, mul(a, b)})); });
  check([&] { return mean_all(slice_channels(concat_channels({a, b}), 2, 3)); });
  check([&] { return mean_all(slice_spatial(a, 1, 2, 4, 3)); });
  check([&] { return mean_all(softmax_channels(a)); });
  check([&] { return mean_all(mul(softmax_channels(a), b)); });
}

TEST_CASE("abs and sqrt have guarded gradients") {
  Rng rng(43);
  Var a = random_leaf({2, 4, 4}, rng, 0.5, 2.0);  // away from the sqrt kink
  auto rep = gradient_check({a}, [&] { return mean_all(sqrt_v(a)); }, 1e-4, 20, 3);
  CHECK(rep.max_rel_err < 1e-3);

  Var z = leaf(Tensor::zeros({2}), true);
  Var s = sum_all(sqrt_v(z));
  backward(s);
  CHECK(z->grad[0] == 0.0f);  // defined as zero at the origin

  Var n = leaf(Tensor::full({2}, -1.5f), true);
  Var an = sum_all(abs_v(n));
  backward(an);
  CHECK(n->grad[0] == doctest::Approx(-1.0f));
}

TEST_CASE("clamp01 blocks gradient outside the unit interval") {
  Tensor t({3});
  t[0] = -0.5f;
  t[1] = 0.5f;
  t[2] = 1.5f;
  Var x = leaf(std::move(t), true);
  Var y = sum_all(clamp01(x));
  backward(y);
  CHECK(x->grad[0] == 0.0f);
  CHECK(x->grad[1] == 1.0f);
  CHECK(x->grad[2] == 0.0f);
}

TEST_CASE("softmax_channels output sums to one per pixel") {
  Rng rng(44);
  Var a = random_leaf({7, 5, 4}, rng, -4.0, 4.0);
  Var s = softmax_channels(a);
  const int64_t HW = 20;
  for (int64_t i = 0; i < HW; ++i) {
    float sum = 0.0f;
    for (int c = 0; c < 7; ++c) sum += s->value[c * HW + i];
    CHECK(sum == doctest::Approx(1.0f).epsilon(1e-5));
  }
}

TEST_CASE("conv2d gradients match finite differences") {
  Rng rng(45);
  Var x = random_leaf({2, 6, 5}, rng);
  Var w = random_leaf({3, 2, 3, 3}, rng);
  Var b = random_leaf({3}, rng);
  // The loss is a polynomial of degree two in every leaf, so the central
  // difference is exact up to float rounding; a large step dilutes that noise.
  auto rep = gradient_check(
      {x, w, b}, [&] { return sum_all(mul(conv2d(x, w, b), conv2d(x, w, b))); }, 2e-2, 30, 7);
  CHECK(rep.max_rel_err < 1e-3);
}

TEST_CASE("pool and upsample gradients match finite differences") {
  Rng rng(46);
  Var x = random_leaf({2, 6, 6}, rng);
  auto rep1 = gradient_check({x}, [&] { return sum_all(mul(avgpool2(x), avgpool2(x))); },
                             1e-3, 25, 7);
  CHECK(rep1.max_rel_err < 1e-3);
  auto rep2 = gradient_check({x}, [&] { return sum_all(mul(upsample2(x), upsample2(x))); },
                             1e-3, 25, 7);
  CHECK(rep2.max_rel_err < 1e-3);
}

TEST_CASE("warp gradients match finite differences away from bilinear kinks") {
  Rng rng(47);
  const int K = 3, T = 9, H = 8, W = 8;
  Var frame = random_leaf({2, H, W}, rng, 0.0, 1.0);
  Var wt = random_leaf({T, H, W}, rng, 0.1, 0.9);
  // Offsets biased to |frac| around 0.3..0.45 so the probe stays inside one
  // bilinear cell, keeping the loss piecewise-quadratic over the probe range;
  // the central difference is then exact up to float rounding and a large
  // step dilutes that noise.
  Tensor ta({T, H, W}), tb({T, H, W});
  for (int64_t i = 0; i < ta.numel(); ++i) {
    ta[i] = static_cast<float>((rng.uniform() < 0.5 ? -1 : 1) * rng.uniform(0.3, 0.45));
    tb[i] = static_cast<float>((rng.uniform() < 0.5 ? -1 : 1) * rng.uniform(0.3, 0.45));
  }
  Var A = leaf(std::move(ta), true);
  Var B = leaf(std::move(tb), true);
  auto rep = gradient_check(
      {frame, wt, A, B}, [&] { return sum_all(mul(warp(frame, wt, A, B, K, 1),
                                                   warp(frame, wt, A, B, K, 1))); },
      2e-2, 40, 7);
  CHECK(rep.max_rel_err < 1e-3);
}

TEST_CASE("backward rejects non-scalar roots") {
  Var x = leaf(Tensor::zeros({2, 2}), true);
  CHECK_THROWS_AS(backward(add(x, x)), std::invalid_argument);
}
