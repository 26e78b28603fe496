#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "kinterp/regressor.hpp"
#include "kinterp/rng.hpp"
#include "kinterp/warp.hpp"

using namespace kinterp;

namespace {

MotionField random_normalized_motion(int K, int H, int W, Rng& rng, double mag = 1.5) {
  Tensor wt({K * K, H, W}), a({K * K, H, W}), b({K * K, H, W});
  for (int64_t i = 0; i < wt.numel(); ++i) {
    wt[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
    a[i] = static_cast<float>(rng.uniform(-mag, mag));
    b[i] = static_cast<float>(rng.uniform(-mag, mag));
  }
  MotionField f;
  f.K = K;
  f.dilation = 1;
  f.weights = softmax_channels(leaf(std::move(wt), false));
  f.alpha = leaf(std::move(a), false);
  f.beta = leaf(std::move(b), false);
  return f;
}

MotionSet random_motion_set(int K, int H, int W, Rng& rng) {
  MotionSet s;
  s.m_m2 = random_normalized_motion(K, H, W, rng);
  s.m_m1 = random_normalized_motion(K, H, W, rng);
  s.m_p1 = random_normalized_motion(K, H, W, rng);
  s.m_p2 = random_normalized_motion(K, H, W, rng);
  Tensor logit({1, H, W});
  for (int64_t i = 0; i < logit.numel(); ++i)
    logit[i] = static_cast<float>(rng.uniform(-2.0, 2.0));
  s.occlusion_logit = leaf(std::move(logit), false);
  s.occlusion = sigmoid(s.occlusion_logit);
  return s;
}

MotionSet reversed_set(const MotionSet& s) {
  MotionSet r;
  r.m_m2 = s.m_p2;
  r.m_m1 = s.m_p1;
  r.m_p1 = s.m_m1;
  r.m_p2 = s.m_m2;
  r.occlusion_logit = affine(s.occlusion_logit, -1.0f, 0.0f);
  r.occlusion = sigmoid(r.occlusion_logit);
  return r;
}

Var random_frame(int C, int H, int W, Rng& rng) {
  Tensor t({C, H, W});
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<float>(rng.uniform(0.0, 1.0));
  return leaf(std::move(t), false);
}

void randomize_params(ParamStore& ps, Rng rng) {
  for (const auto& [name, p] : ps.items()) {
    for (int64_t i = 0; i < p->value.numel(); ++i)
      p->value[i] = static_cast<float>(rng.uniform(-0.4, 0.4));
  }
}

Regressor make_regressor(ParamStore& ps, RegressionMode mode, int K, uint64_t seed,
                         bool shared = true) {
  RegressorConfig cfg;
  cfg.kernel_size = K;
  cfg.hidden_channels = 6;
  cfg.mode = mode;
  cfg.shared_branches = shared;
  return Regressor(ps, "reg", cfg, Rng(seed));
}

}  // namespace

TEST_CASE("regression mode names parse and print exactly") {
  const std::vector<std::string> names = {
      "linear",
      "quadratic",
      "linear_combination",
      "unidirectional_fwd",
      "unidirectional_bwd",
      "second_order_unidirectional",
      "joint_bidirectional"};
  for (const std::string& n : names) {
    CHECK(std::string(to_string(parse_regression_mode(n))) == n);
  }
  CHECK_THROWS_AS(parse_regression_mode("cubic"), std::invalid_argument);
  CHECK_THROWS_AS(parse_regression_mode("Linear"), std::invalid_argument);
}

TEST_CASE("zero-initialised combiner reproduces the closed form exactly") {
  const int K = 3, H = 6, W = 5;
  ParamStore ps;
  Regressor reg = make_regressor(ps, RegressionMode::joint_bidirectional, K, 5);
  Rng rng(8);
  MotionSet s = random_motion_set(K, H, W, rng);
  RegressedMotions r = reg.regress(s);
  MotionField closed_f = regress_forward_motion(s.m_m2, s.m_m1, s.m_p1);
  MotionField closed_b = regress_backward_motion(s.m_p2, s.m_p1, s.m_m1);
  CHECK(max_abs_diff(r.forward_m.weights->value, closed_f.weights->value) == 0.0f);
  CHECK(max_abs_diff(r.forward_m.alpha->value, closed_f.alpha->value) == 0.0f);
  CHECK(max_abs_diff(r.forward_m.beta->value, closed_f.beta->value) == 0.0f);
  CHECK(max_abs_diff(r.backward_m.alpha->value, closed_b.alpha->value) == 0.0f);
  // theta starts at the occlusion map, the gate at zero.
  CHECK(max_abs_diff(r.theta->value, s.occlusion->value) == 0.0f);
  CHECK(max_abs(r.gate->value) == 0.0f);
}

TEST_CASE("zero variations with a zero head leave zero motion offsets") {
  const int K = 3, H = 4, W = 4;
  ParamStore ps;
  Regressor reg = make_regressor(ps, RegressionMode::unidirectional_fwd, K, 6);
  MotionField z = make_zero_motion(K, 1, H, W);
  MotionField out = reg.combine_variations({z, z}, z);
  CHECK(max_abs(out.alpha->value) == 0.0f);
  CHECK(max_abs(out.beta->value) == 0.0f);
  // zero weight logits softmax to the uniform kernel
  CHECK(out.weights->value[0] == doctest::Approx(1.0f / 9.0f));
}

TEST_CASE("combiner rejects wrong sequence lengths and absent combiners") {
  const int K = 3, H = 4, W = 4;
  MotionField z = make_zero_motion(K, 1, H, W);
  ParamStore ps;
  Regressor reg = make_regressor(ps, RegressionMode::joint_bidirectional, K, 6);
  CHECK_THROWS_AS(reg.combine_variations({z}, z), std::invalid_argument);
  CHECK_THROWS_AS(reg.combine_variations({z, z, z}, z), std::invalid_argument);
  ParamStore ps2;
  Regressor lin = make_regressor(ps2, RegressionMode::linear, K, 6);
  CHECK_THROWS_AS(lin.combine_variations({z, z}, z), std::invalid_argument);
}

TEST_CASE("linear mode blends references only") {
  const int K = 3, H = 5, W = 4;
  ParamStore ps;
  Regressor reg = make_regressor(ps, RegressionMode::linear, K, 7);
  CHECK(ps.parameter_count() == 0);
  Rng rng(9);
  MotionSet s = random_motion_set(K, H, W, rng);
  RegressedMotions r = reg.regress(s);
  CHECK(max_abs(r.forward_m.weights->value) == 0.0f);
  CHECK(max_abs(r.forward_m.alpha->value) == 0.0f);
  CHECK(max_abs(r.backward_m.weights->value) == 0.0f);
  CHECK(!r.gate);
  // A zero-mass kernel warps everything to zero, so the offset frame vanishes.
  std::array<Var, 4> frames;
  for (auto& f : frames) f = random_frame(3, H, W, rng);
  SynthesisResult syn = synthesize_intermediate(frames, s, r);
  CHECK(max_abs(syn.offset->value) == 0.0f);
  CHECK(max_abs_diff(syn.predicted->value, syn.basic->value) == 0.0f);
}

TEST_CASE("unidirectional modes pin theta and silence the other branch") {
  const int K = 3, H = 5, W = 4;
  Rng rng(10);
  MotionSet s = random_motion_set(K, H, W, rng);

  ParamStore psf;
  RegressedMotions rf = make_regressor(psf, RegressionMode::unidirectional_fwd, K, 3).regress(s);
  CHECK(max_abs(rf.theta->value) == 1.0f);
  CHECK(*std::min_element(rf.theta->value.data(), rf.theta->value.data() + H * W) == 1.0f);
  CHECK(max_abs(rf.backward_m.weights->value) == 0.0f);
  validate_motion_field(rf.forward_m, true, "fwd regressed");

  ParamStore psb;
  RegressedMotions rb = make_regressor(psb, RegressionMode::unidirectional_bwd, K, 3).regress(s);
  CHECK(max_abs(rb.theta->value) == 0.0f);
  CHECK(max_abs(rb.forward_m.weights->value) == 0.0f);
  validate_motion_field(rb.backward_m, true, "bwd regressed");
}

TEST_CASE("quadratic mode evaluates the per-branch fit at the middle instant") {
  const int K = 3, H = 4, W = 4;
  ParamStore ps;
  Regressor reg = make_regressor(ps, RegressionMode::quadratic, K, 11);
  Rng rng(12);
  MotionSet s = random_motion_set(K, H, W, rng);
  RegressedMotions r = reg.regress(s);
  // closed coefficients of mid + 0.5 v + 0.25 a on unit-spaced samples
  Var expect_a = lincomb3(s.m_m1.alpha, s.m_p1.alpha, s.m_m2.alpha, 0.75f, 0.375f, -0.125f);
  Var expect_b = lincomb3(s.m_p1.beta, s.m_m1.beta, s.m_p2.beta, 0.75f, 0.375f, -0.125f);
  CHECK(max_abs_diff(r.forward_m.alpha->value, expect_a->value) < 1e-6f);
  CHECK(max_abs_diff(r.backward_m.beta->value, expect_b->value) < 1e-6f);
  validate_motion_field(r.forward_m, true, "quadratic regressed");
  CHECK(max_abs_diff(r.theta->value, s.occlusion->value) == 0.0f);
}

TEST_CASE("learned modes differ once parameters move off initialisation") {
  const int K = 3, H = 5, W = 5;
  Rng data(13);
  MotionSet s = random_motion_set(K, H, W, data);

  auto run = [&](RegressionMode mode) {
    ParamStore ps;
    Regressor reg = make_regressor(ps, mode, K, 21);
    randomize_params(ps, Rng(77));
    return reg.regress(s);
  };
  RegressedMotions joint = run(RegressionMode::joint_bidirectional);
  RegressedMotions serial = run(RegressionMode::second_order_unidirectional);
  RegressedMotions lincomb = run(RegressionMode::linear_combination);
  RegressedMotions quad = run(RegressionMode::quadratic);

  // identical parameter vectors, but the serial mode chains combiner state,
  // so its backward branch sees a different trajectory
  CHECK(max_abs_diff(joint.forward_m.alpha->value, serial.forward_m.alpha->value) == 0.0f);
  CHECK(max_abs_diff(joint.backward_m.alpha->value, serial.backward_m.alpha->value) > 1e-6f);
  CHECK(max_abs_diff(joint.forward_m.alpha->value, lincomb.forward_m.alpha->value) > 1e-6f);
  CHECK(max_abs_diff(lincomb.forward_m.alpha->value, quad.forward_m.alpha->value) > 1e-6f);

  for (const RegressedMotions* r : {&joint, &serial, &lincomb, &quad}) {
    for (int64_t i = 0; i < r->theta->value.numel(); ++i) {
      CHECK(r->theta->value[i] >= 0.0f);
      CHECK(r->theta->value[i] <= 1.0f);
    }
    validate_motion_field(r->forward_m, true, "regressed fwd");
    validate_motion_field(r->backward_m, true, "regressed bwd");
  }
}

TEST_CASE("per-mode parameter budgets are ordered by machinery used") {
  const int K = 3;
  auto count = [&](RegressionMode mode, bool shared = true) {
    ParamStore ps;
    make_regressor(ps, mode, K, 3, shared);
    return ps.parameter_count();
  };
  CHECK(count(RegressionMode::linear) == 0);
  CHECK(count(RegressionMode::quadratic) == count(RegressionMode::linear_combination));
  CHECK(count(RegressionMode::quadratic) > 0);
  CHECK(count(RegressionMode::unidirectional_fwd) > count(RegressionMode::quadratic));
  CHECK(count(RegressionMode::second_order_unidirectional) >
        count(RegressionMode::unidirectional_fwd));
  CHECK(count(RegressionMode::joint_bidirectional) ==
        count(RegressionMode::second_order_unidirectional));
  CHECK(count(RegressionMode::joint_bidirectional, false) >
        count(RegressionMode::joint_bidirectional, true));
}

TEST_CASE("every combiner parameter receives gradient on a random problem") {
  const int K = 3, H = 4, W = 4;
  ParamStore ps;
  Regressor reg = make_regressor(ps, RegressionMode::joint_bidirectional, K, 31);
  randomize_params(ps, Rng(32));
  Rng rng(33);
  MotionSet s = random_motion_set(K, H, W, rng);
  std::array<Var, 4> frames;
  for (auto& f : frames) f = random_frame(3, H, W, rng);

  RegressedMotions r = reg.regress(s);
  SynthesisResult syn = synthesize_intermediate(frames, s, r);
  backward(sum_all(mul(syn.predicted, syn.predicted)));
  for (const auto& [name, p] : ps.items()) {
    INFO("parameter ", name);
    REQUIRE(!p->grad.empty());
    CHECK(max_abs(p->grad) > 0.0f);
  }
}

TEST_CASE("closed-form path is equivariant under temporal reversal") {
  const int K = 3, H = 6, W = 6;
  ParamStore ps;
  Regressor reg = make_regressor(ps, RegressionMode::linear_combination, K, 41);
  Rng rng(42);
  MotionSet s = random_motion_set(K, H, W, rng);
  MotionSet rs = reversed_set(s);
  RegressedMotions a = reg.regress(s);
  RegressedMotions b = reg.regress(rs);

  CHECK(max_abs_diff(a.forward_m.alpha->value, b.backward_m.alpha->value) == 0.0f);
  CHECK(max_abs_diff(a.forward_m.weights->value, b.backward_m.weights->value) == 0.0f);
  CHECK(max_abs_diff(a.backward_m.beta->value, b.forward_m.beta->value) == 0.0f);
  for (int64_t i = 0; i < a.theta->value.numel(); ++i) {
    CHECK(a.theta->value[i] == doctest::Approx(1.0f - b.theta->value[i]).epsilon(1e-5));
  }

  std::array<Var, 4> frames;
  for (auto& f : frames) f = random_frame(3, H, W, rng);
  std::array<Var, 4> rframes = {frames[3], frames[2], frames[1], frames[0]};
  Tensor fwd = synthesize_intermediate(frames, s, a).predicted->value;
  Tensor rev = synthesize_intermediate(rframes, rs, b).predicted->value;
  CHECK(max_abs_diff(fwd, rev) < 1e-5f);
}

TEST_CASE("regression is deterministic given the seed") {
  const int K = 3, H = 5, W = 5;
  Rng rng(50);
  MotionSet s = random_motion_set(K, H, W, rng);
  ParamStore ps1, ps2;
  Regressor r1 = make_regressor(ps1, RegressionMode::joint_bidirectional, K, 99);
  Regressor r2 = make_regressor(ps2, RegressionMode::joint_bidirectional, K, 99);
  randomize_params(ps1, Rng(5));
  randomize_params(ps2, Rng(5));
  RegressedMotions a = r1.regress(s);
  RegressedMotions b = r2.regress(s);
  CHECK(max_abs_diff(a.forward_m.alpha->value, b.forward_m.alpha->value) == 0.0f);
  CHECK(max_abs_diff(a.theta->value, b.theta->value) == 0.0f);
  CHECK(max_abs_diff(a.gate->value, b.gate->value) == 0.0f);
}

TEST_CASE("synthesis evaluates the blend formulas literally") {
  const int K = 3, H = 4, W = 5;
  Tensor x({3, H, W});
  Rng rng(60);
  for (int64_t i = 0; i < x.numel(); ++i) x[i] = static_cast<float>(rng.uniform(0.2, 0.8));
  Var X = constant(x);
  std::array<Var, 4> frames = {X, X, X, X};

  MotionSet s;
  s.m_m2 = make_identity_motion(K, 1, H, W);
  s.m_m1 = make_identity_motion(K, 1, H, W);
  s.m_p1 = make_identity_motion(K, 1, H, W);
  s.m_p2 = make_identity_motion(K, 1, H, W);
  s.occlusion_logit = constant(Tensor::zeros({1, H, W}));
  s.occlusion = sigmoid(s.occlusion_logit);  // 0.5 everywhere

  RegressedMotions reg;
  reg.forward_m = make_identity_motion(K, 1, H, W);
  reg.backward_m = make_identity_motion(K, 1, H, W);
  reg.theta = constant(Tensor::full({1, H, W}, 0.5f));

  // literal evaluation: basic blend doubles a static scene, the offset frame
  // reproduces it, so the prediction is three times the input
  SynthesisResult syn = synthesize_intermediate(frames, s, reg);
  CHECK(max_abs_diff(syn.basic->value, [&] {
          Tensor t = x;
          for (int64_t i = 0; i < t.numel(); ++i) t[i] *= 2.0f;
          return t;
        }()) < 1e-6f);
  CHECK(max_abs_diff(syn.offset->value, x) < 1e-6f);

  // halving the reference contribution restores the static scene in the blend
  SynthesisConfig cfg;
  cfg.reference_scale = 0.5f;
  SynthesisResult half = synthesize_intermediate(frames, s, reg, cfg);
  CHECK(max_abs_diff(half.basic->value, x) < 1e-6f);

  // a zero gate removes the offset path entirely
  RegressedMotions gated = reg;
  gated.gate = constant(Tensor::zeros({1, H, W}));
  SynthesisResult g = synthesize_intermediate(frames, s, gated, cfg);
  CHECK(max_abs_diff(g.predicted->value, g.basic->value) == 0.0f);
}
