#include "kinterp/regressor.hpp"

#include <stdexcept>

#include "kinterp/warp.hpp"

namespace kinterp {

namespace {

const char* kModeNames[] = {"linear",
                            "quadratic",
                            "linear_combination",
                            "unidirectional_fwd",
                            "unidirectional_bwd",
                            "second_order_unidirectional",
                            "joint_bidirectional"};

MotionField sub_fields(const MotionField& a, const MotionField& b) {
  MotionField v;
  v.K = a.K;
  v.dilation = a.dilation;
  v.weights = sub(a.weights, b.weights);
  v.alpha = sub(a.alpha, b.alpha);
  v.beta = sub(a.beta, b.beta);
  return v;
}

Var constant_map(int H, int W, float value) {
  return constant(Tensor::full({1, H, W}, value));
}

}  // namespace

RegressionMode parse_regression_mode(const std::string& s) {
  for (int i = 0; i < 7; ++i) {
    if (s == kModeNames[i]) return static_cast<RegressionMode>(i);
  }
  throw std::invalid_argument("unknown regression mode: " + s);
}

const char* to_string(RegressionMode m) { return kModeNames[static_cast<int>(m)]; }

bool mode_uses_combiner(RegressionMode m) {
  switch (m) {
    case RegressionMode::unidirectional_fwd:
    case RegressionMode::unidirectional_bwd:
    case RegressionMode::second_order_unidirectional:
    case RegressionMode::joint_bidirectional:
      return true;
    default:
      return false;
  }
}

Regressor::Regressor(ParamStore& ps, const std::string& name, const RegressorConfig& cfg,
                     Rng rng)
    : cfg_(cfg) {
  const int K = cfg.kernel_size;
  if (K < 1 || K % 2 == 0) throw std::invalid_argument("Regressor: kernel size must be odd");
  const int taps = K * K;
  hidden_ = cfg.hidden_channels > 0 ? cfg.hidden_channels : 3 * taps;

  switch (cfg.mode) {
    case RegressionMode::linear:
      break;  // no offset-frame path at all
    case RegressionMode::quadratic:
    case RegressionMode::linear_combination:
      gate_head_ = Conv2d(ps, name + ".gate", 1, 1, 1, rng.fork(3), Init::zero);
      break;
    case RegressionMode::unidirectional_fwd:
    case RegressionMode::unidirectional_bwd:
      cell_f_ = ConvLSTMCell(ps, name + ".cell", 3 * taps, hidden_, 3, rng.fork(0));
      head_f_ = Conv2d(ps, name + ".res", hidden_, 3 * taps, 1, rng.fork(1), Init::zero);
      gate_head_ = Conv2d(ps, name + ".gate", hidden_, 1, 1, rng.fork(3), Init::zero);
      break;
    case RegressionMode::second_order_unidirectional:
      cell_f_ = ConvLSTMCell(ps, name + ".cell", 3 * taps, hidden_, 3, rng.fork(0));
      head_f_ = Conv2d(ps, name + ".res", hidden_, 3 * taps, 1, rng.fork(1), Init::zero);
      theta_head_ = Conv2d(ps, name + ".theta", 2 * hidden_, 1, 1, rng.fork(2), Init::zero);
      gate_head_ = Conv2d(ps, name + ".gate", 2 * hidden_, 1, 1, rng.fork(3), Init::zero);
      break;
    case RegressionMode::joint_bidirectional:
      cell_f_ = ConvLSTMCell(ps, name + ".cell", 3 * taps, hidden_, 3, rng.fork(0));
      head_f_ = Conv2d(ps, name + ".res", hidden_, 3 * taps, 1, rng.fork(1), Init::zero);
      if (!cfg.shared_branches) {
        cell_b_ = ConvLSTMCell(ps, name + ".cell_b", 3 * taps, hidden_, 3, rng.fork(4));
        head_b_ = Conv2d(ps, name + ".res_b", hidden_, 3 * taps, 1, rng.fork(5), Init::zero);
      }
      theta_head_ = Conv2d(ps, name + ".theta", 2 * hidden_, 1, 1, rng.fork(2), Init::zero);
      gate_head_ = Conv2d(ps, name + ".gate", 2 * hidden_, 1, 1, rng.fork(3), Init::zero);
      break;
  }
}

const ConvLSTMCell& Regressor::cell_for(Branch b) const {
  if (b == Branch::backward && cfg_.mode == RegressionMode::joint_bidirectional &&
      !cfg_.shared_branches)
    return cell_b_;
  return cell_f_;
}

const Conv2d& Regressor::head_for(Branch b) const {
  if (b == Branch::backward && cfg_.mode == RegressionMode::joint_bidirectional &&
      !cfg_.shared_branches)
    return head_b_;
  return head_f_;
}

Regressor::BranchRun Regressor::run_branch(const std::vector<MotionField>& variations,
                                           const MotionField& closed_form,
                                           const ConvLSTMCell& cell, const Conv2d& head,
                                           ConvLSTMCell::State* state_io) const {
  if (variations.size() != 2)
    throw std::invalid_argument("combine_variations: expected exactly 2 variation grids, got " +
                                std::to_string(variations.size()));
  const int H = closed_form.height();
  const int W = closed_form.width();
  const int taps = closed_form.K * closed_form.K;
  for (const MotionField& v : variations) {
    if (v.K != closed_form.K || v.height() != H || v.width() != W)
      throw std::invalid_argument("combine_variations: variation grid shape mismatch");
  }

  ConvLSTMCell::State st = state_io ? *state_io : cell.initial_state(H, W);
  for (const MotionField& v : variations) {
    st = cell.step(concat_channels({v.weights, v.alpha, v.beta}), st);
  }
  if (state_io) *state_io = st;

  const Var res = head(st.h);
  BranchRun out;
  out.hidden = st.h;
  out.field.K = closed_form.K;
  out.field.dilation = closed_form.dilation;
  out.field.weights = softmax_channels(add(closed_form.weights, slice_channels(res, 0, taps)));
  out.field.alpha = add(closed_form.alpha, slice_channels(res, taps, taps));
  out.field.beta = add(closed_form.beta, slice_channels(res, 2 * taps, taps));
  return out;
}

MotionField Regressor::combine_variations(const std::vector<MotionField>& variations,
                                          const MotionField& closed_form_combination,
                                          Branch branch) const {
  if (!mode_uses_combiner(cfg_.mode))
    throw std::invalid_argument("combine_variations: mode " + std::string(to_string(cfg_.mode)) +
                                " has no temporal combiner");
  return run_branch(variations, closed_form_combination, cell_for(branch), head_for(branch),
                    nullptr)
      .field;
}

RegressedMotions Regressor::regress(const MotionSet& motions) const {
  validate_motion_set(motions, "Regressor::regress");
  const MotionField& m_m2 = motions.m_m2;
  const MotionField& m_m1 = motions.m_m1;
  const MotionField& m_p1 = motions.m_p1;
  const MotionField& m_p2 = motions.m_p2;
  if (m_m1.K != cfg_.kernel_size)
    throw std::invalid_argument("Regressor::regress: motion kernel size " +
                                std::to_string(m_m1.K) + " does not match configured " +
                                std::to_string(cfg_.kernel_size));
  const int K = cfg_.kernel_size;
  const int H = m_m1.height();
  const int W = m_m1.width();

  RegressedMotions out;
  switch (cfg_.mode) {
    case RegressionMode::linear: {
      out.forward_m = make_zero_motion(K, m_m1.dilation, H, W);
      out.backward_m = make_zero_motion(K, m_m1.dilation, H, W);
      out.theta = motions.occlusion;
      break;
    }
    case RegressionMode::linear_combination: {
      out.forward_m = regress_forward_motion(m_m2, m_m1, m_p1);
      out.backward_m = regress_backward_motion(m_p2, m_p1, m_m1);
      out.theta = motions.occlusion;
      out.gate = gate_head_(motions.occlusion_logit);
      break;
    }
    case RegressionMode::quadratic: {
      // Independent per-branch quadratic fits over unit-spaced samples,
      // evaluated halfway between the two nearest references (the middle
      // instant). No temporal combiner.
      const QuadraticFit qf = solve_individual_quadratic(m_m2, m_m1, m_p1);
      const OffsetPair of = eval_quadratic(m_m1, qf, 0.5f);
      out.forward_m.K = K;
      out.forward_m.dilation = m_m1.dilation;
      out.forward_m.weights =
          softmax_channels(lincomb3(m_m1.weights, m_p1.weights, m_m2.weights, 0.75f, 0.375f,
                                    -0.125f));
      out.forward_m.alpha = of.alpha;
      out.forward_m.beta = of.beta;
      const QuadraticFit qb = solve_individual_quadratic(m_p2, m_p1, m_m1);
      const OffsetPair ob = eval_quadratic(m_p1, qb, 0.5f);
      out.backward_m.K = K;
      out.backward_m.dilation = m_p1.dilation;
      out.backward_m.weights =
          softmax_channels(lincomb3(m_p1.weights, m_m1.weights, m_p2.weights, 0.75f, 0.375f,
                                    -0.125f));
      out.backward_m.alpha = ob.alpha;
      out.backward_m.beta = ob.beta;
      out.theta = motions.occlusion;
      out.gate = gate_head_(motions.occlusion_logit);
      break;
    }
    case RegressionMode::unidirectional_fwd: {
      BranchRun rf = run_branch({sub_fields(m_m1, m_m2), sub_fields(m_p1, m_m1)},
                                regress_forward_combination(m_m2, m_m1, m_p1), cell_f_, head_f_,
                                nullptr);
      out.forward_m = rf.field;
      out.backward_m = make_zero_motion(K, m_m1.dilation, H, W);
      out.theta = constant_map(H, W, 1.0f);
      out.gate = gate_head_(rf.hidden);
      break;
    }
    case RegressionMode::unidirectional_bwd: {
      BranchRun rb = run_branch({sub_fields(m_p1, m_p2), sub_fields(m_m1, m_p1)},
                                regress_backward_combination(m_p2, m_p1, m_m1), cell_f_, head_f_,
                                nullptr);
      out.backward_m = rb.field;
      out.forward_m = make_zero_motion(K, m_m1.dilation, H, W);
      out.theta = constant_map(H, W, 0.0f);
      out.gate = gate_head_(rb.hidden);
      break;
    }
    case RegressionMode::second_order_unidirectional: {
      // Serial passes through one shared combiner: the backward pass resumes
      // from the forward pass's final state.
      ConvLSTMCell::State st = cell_f_.initial_state(H, W);
      BranchRun rf = run_branch({sub_fields(m_m1, m_m2), sub_fields(m_p1, m_m1)},
                                regress_forward_combination(m_m2, m_m1, m_p1), cell_f_, head_f_,
                                &st);
      BranchRun rb = run_branch({sub_fields(m_p1, m_p2), sub_fields(m_m1, m_p1)},
                                regress_backward_combination(m_p2, m_p1, m_m1), cell_f_, head_f_,
                                &st);
      out.forward_m = rf.field;
      out.backward_m = rb.field;
      const Var hcat = concat_channels({rf.hidden, rb.hidden});
      out.theta = sigmoid(add(motions.occlusion_logit, theta_head_(hcat)));
      out.gate = gate_head_(hcat);
      break;
    }
    case RegressionMode::joint_bidirectional: {
      BranchRun rf = run_branch({sub_fields(m_m1, m_m2), sub_fields(m_p1, m_m1)},
                                regress_forward_combination(m_m2, m_m1, m_p1),
                                cell_for(Branch::forward), head_for(Branch::forward), nullptr);
      BranchRun rb = run_branch({sub_fields(m_p1, m_p2), sub_fields(m_m1, m_p1)},
                                regress_backward_combination(m_p2, m_p1, m_m1),
                                cell_for(Branch::backward), head_for(Branch::backward), nullptr);
      out.forward_m = rf.field;
      out.backward_m = rb.field;
      const Var hcat = concat_channels({rf.hidden, rb.hidden});
      out.theta = sigmoid(add(motions.occlusion_logit, theta_head_(hcat)));
      out.gate = gate_head_(hcat);
      break;
    }
  }
  return out;
}

SynthesisResult synthesize_intermediate(const std::array<Var, 4>& frames,
                                        const MotionSet& motions,
                                        const RegressedMotions& regressed,
                                        const SynthesisConfig& cfg) {
  std::array<Var, 4> warped = warp_all_references(frames, motions);
  std::vector<Var> fwd = {warped[0], warped[1]};
  std::vector<Var> bwd = {warped[2], warped[3]};
  if (cfg.reference_scale != 1.0f) {
    for (Var& w : fwd) w = affine(w, cfg.reference_scale, 0.0f);
    for (Var& w : bwd) w = affine(w, cfg.reference_scale, 0.0f);
  }

  SynthesisResult out;
  out.basic = blend_occlusion(fwd, bwd, motions.occlusion);
  const Var warp_f = deformable_warp(frames[1], regressed.forward_m);
  const Var warp_b = deformable_warp(frames[2], regressed.backward_m);
  out.offset = add(mul_map(regressed.theta, warp_f),
                   mul_map(affine(regressed.theta, -1.0f, 1.0f), warp_b));
  const Var scaled = regressed.gate ? mul_map(regressed.gate, out.offset) : out.offset;
  out.predicted = add(out.basic, scaled);
  return out;
}

}  // namespace kinterp
