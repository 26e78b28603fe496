#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <string>

#include "kinterp/metrics.hpp"
#include "kinterp/scenegen.hpp"
#include "kinterp/warp.hpp"

using namespace kinterp;

namespace {

KinematicScene single_sprite_scene(AxisMotion row_m, AxisMotion col_m) {
  KinematicScene sc;
  sc.height = 48;
  sc.width = 48;
  sc.seed = 900;
  Sprite s;
  s.shape = SpriteShape::two_tone;
  s.texture_seed = 17;
  s.row0 = 24.0f;
  s.col0 = 24.0f;
  s.half_h = 5.0f;
  s.half_w = 4.0f;
  s.row_motion = row_m;
  s.col_motion = col_m;
  sc.sprites.push_back(s);
  return sc;
}

AxisMotion constant_velocity(float v) {
  AxisMotion m;
  m.v_pre = m.v_post = v;
  return m;
}

AxisMotion pure_acceleration(float a) {
  AxisMotion m;
  m.a_pre = m.a_post = a;
  return m;
}

float field_value_at(const MotionField& f, int i, int j) { return f.alpha->value.at(0, i, j); }

}  // namespace

TEST_CASE("constant-velocity scenes carry linear offsets and zero residuals") {
  GeneratedScene g =
      generate_scene(single_sprite_scene(constant_velocity(1.0f), AxisMotion{}), 3, 1);

  // M_{-1} alpha offset is exactly +1 px on the sprite, M_{-2} is +2, and the
  // mirrored future motions negate: M_{+1} = -1, M_{+2} = -2.
  CHECK(field_value_at(g.true_motions.m_m1, 24, 24) == 1.0f);
  CHECK(field_value_at(g.true_motions.m_m2, 24, 24) == 2.0f);
  CHECK(field_value_at(g.true_motions.m_p1, 24, 24) == -1.0f);
  CHECK(field_value_at(g.true_motions.m_p2, 24, 24) == -2.0f);
  CHECK(g.true_motions.m_m1.beta->value.at(0, 24, 24) == 0.0f);

  // Away from the sprite the background is static.
  CHECK(field_value_at(g.true_motions.m_m2, 2, 2) == 0.0f);

  // Constant velocity leaves nothing for the second-order residual.
  CHECK(max_abs(g.true_regressed.forward_m.alpha->value) == 0.0f);
  CHECK(max_abs(g.true_regressed.backward_m.alpha->value) == 0.0f);
  CHECK(max_abs(g.true_regressed.forward_m.beta->value) == 0.0f);
}

TEST_CASE("pure-acceleration scenes regress to minus the acceleration") {
  const float a = 0.9f;
  GeneratedScene g =
      generate_scene(single_sprite_scene(pure_acceleration(a), AxisMotion{}), 3, 1);

  CHECK(field_value_at(g.true_motions.m_m2, 24, 24) == doctest::Approx(-2 * a).epsilon(1e-7));
  CHECK(field_value_at(g.true_motions.m_m1, 24, 24) == doctest::Approx(-a / 2).epsilon(1e-7));
  CHECK(field_value_at(g.true_motions.m_p1, 24, 24) == doctest::Approx(-a / 2).epsilon(1e-7));
  CHECK(field_value_at(g.true_regressed.forward_m, 24, 24) ==
        doctest::Approx(-a).epsilon(1e-7));
  CHECK(field_value_at(g.true_regressed.backward_m, 24, 24) ==
        doctest::Approx(-a).epsilon(1e-7));
}

TEST_CASE("closed-form regression matches the analytic oracle on random scenes") {
  Rng rng(91);
  for (TrajectoryFamily family : {TrajectoryFamily::linear, TrajectoryFamily::quadratic,
                                  TrajectoryFamily::piecewise_quadratic}) {
    for (int trial = 0; trial < 12; ++trial) {
      KinematicScene sc = random_scene(family, 64, 64, rng);
      GeneratedScene g = generate_scene(sc, 3, 1);
      MotionField fwd = regress_forward_motion(g.true_motions.m_m2, g.true_motions.m_m1,
                                               g.true_motions.m_p1);
      MotionField bwd = regress_backward_motion(g.true_motions.m_p2, g.true_motions.m_p1,
                                                g.true_motions.m_m1);
      CAPTURE(std::string(to_string(family)));
      CAPTURE(trial);
      CHECK(max_abs_diff(fwd.alpha->value, g.true_regressed.forward_m.alpha->value) <= 1e-5f);
      CHECK(max_abs_diff(fwd.beta->value, g.true_regressed.forward_m.beta->value) <= 1e-5f);
      CHECK(max_abs_diff(bwd.alpha->value, g.true_regressed.backward_m.alpha->value) <= 1e-5f);
      CHECK(max_abs_diff(bwd.beta->value, g.true_regressed.backward_m.beta->value) <= 1e-5f);
      // Identical one-hot kernels combine to the uniform kernel.
      CHECK(max_abs_diff(fwd.weights->value, g.true_regressed.forward_m.weights->value) <=
            1e-6f);
    }
  }
}

TEST_CASE("warping each reference with its true motion reconstructs the target") {
  Rng rng(92);
  for (TrajectoryFamily family : {TrajectoryFamily::linear, TrajectoryFamily::quadratic,
                                  TrajectoryFamily::piecewise_quadratic}) {
    for (int trial = 0; trial < 3; ++trial) {
      KinematicScene sc = random_scene(family, 64, 64, rng);
      GeneratedScene g = generate_scene(sc, 3, 1);
      const std::array<const MotionField*, 4> fields = {
          &g.true_motions.m_m2, &g.true_motions.m_m1, &g.true_motions.m_p1,
          &g.true_motions.m_p2};
      for (int n = 0; n < 4; ++n) {
        Var warped = deformable_warp(constant(g.inputs[static_cast<size_t>(n)]), *fields[n]);
        const double db = psnr(warped->value, g.target);
        CAPTURE(std::string(to_string(family)));
        CAPTURE(trial);
        CAPTURE(n);
        CHECK(db >= 40.0);
      }
    }
  }
}

TEST_CASE("static scenes repeat the target in every frame with zero motion truth") {
  Rng rng(93);
  KinematicScene sc = random_scene(TrajectoryFamily::linear, 48, 48, rng);
  for (Sprite& s : sc.sprites) {
    s.row_motion = AxisMotion{};
    s.col_motion = AxisMotion{};
  }
  GeneratedScene g = generate_scene(sc, 3, 1);
  for (const Tensor& frame : g.inputs) CHECK(max_abs_diff(frame, g.target) == 0.0f);
  CHECK(max_abs(g.true_motions.m_m2.alpha->value) == 0.0f);
  CHECK(max_abs(g.true_motions.m_p2.beta->value) == 0.0f);
  CHECK(max_abs(g.true_regressed.forward_m.alpha->value) == 0.0f);

  // Identity warp on the static truth is bit-exact.
  Var warped = deformable_warp(constant(g.inputs[0]), g.true_motions.m_m1);
  CHECK(max_abs_diff(warped->value, g.target) == 0.0f);
}

TEST_CASE("sprites that exit the canvas are rejected by name") {
  KinematicScene sc = single_sprite_scene(constant_velocity(30.0f), AxisMotion{});
  CHECK_THROWS_WITH_AS(generate_scene(sc, 3, 1),
                       doctest::Contains("sprite 0"), std::invalid_argument);
  CHECK_THROWS_AS(generate_scene(single_sprite_scene(AxisMotion{}, AxisMotion{}), 4, 1),
                  std::invalid_argument);
}

TEST_CASE("renderer anti-aliases sprite edges at fractional positions") {
  KinematicScene sc = single_sprite_scene(AxisMotion{}, AxisMotion{});
  sc.sprites[0].row0 = 24.3f;
  sc.sprites[0].shape = SpriteShape::disc;
  Tensor img = render_frame(sc, 0.0);
  int partial = 0;
  const SpriteTexture tex = derive_texture(17);
  for (int i = 0; i < 48; ++i)
    for (int j = 0; j < 48; ++j) {
      const float v = img.at(0, i, j);
      const float lo = std::min(tex.primary[0], img.at(0, 0, 0));
      const float hi = std::max(tex.primary[0], img.at(0, 0, 0));
      if (v > lo + 1e-3f && v < hi - 1e-3f) ++partial;
    }
  CHECK(partial > 8);  // a ring of blended edge pixels exists
  CHECK(all_finite(img));
}

TEST_CASE("scene manifests roundtrip exactly through JSON") {
  Rng rng(94);
  for (int trial = 0; trial < 6; ++trial) {
    KinematicScene sc = random_scene(TrajectoryFamily::piecewise_quadratic, 64, 64, rng);
    KinematicScene back = scene_from_json(scene_to_json(sc));
    REQUIRE(back.sprites.size() == sc.sprites.size());
    CHECK(back.height == sc.height);
    CHECK(back.width == sc.width);
    CHECK(back.seed == sc.seed);
    CHECK(back.family == sc.family);
    for (size_t i = 0; i < sc.sprites.size(); ++i) {
      const Sprite &a = sc.sprites[i], &b = back.sprites[i];
      CHECK(a.shape == b.shape);
      CHECK(a.texture_seed == b.texture_seed);
      CHECK(a.row0 == b.row0);
      CHECK(a.col0 == b.col0);
      CHECK(a.half_h == b.half_h);
      CHECK(a.half_w == b.half_w);
      CHECK(a.row_motion.v_pre == b.row_motion.v_pre);
      CHECK(a.row_motion.a_pre == b.row_motion.a_pre);
      CHECK(a.col_motion.v_post == b.col_motion.v_post);
      CHECK(a.col_motion.a_post == b.col_motion.a_post);
    }
    // Re-rendering from the parsed manifest is bit-identical.
    CHECK(max_abs_diff(render_frame(sc, -2.0), render_frame(back, -2.0)) == 0.0f);
  }
  CHECK_THROWS(scene_from_json("{\"height\": 64}"));
  CHECK_THROWS_AS(parse_trajectory_family("cubic"), std::invalid_argument);
  CHECK_THROWS_AS(parse_sprite_shape("triangle"), std::invalid_argument);
}
