#include "kinterp/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "kinterp/kernels.hpp"
#include "kinterp/rng.hpp"

namespace kinterp {

Var constant(Tensor v) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  return n;
}

Var leaf(Tensor v, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  n->requires_grad = requires_grad;
  return n;
}

Tensor& ensure_grad(Node& n) {
  if (n.grad.empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

double scalar_value(const Var& v) {
  if (v->value.numel() != 1) throw std::invalid_argument("scalar_value: not a scalar node");
  return std::isnan(v->hi) ? static_cast<double>(v->value[0]) : v->hi;
}

namespace {

bool any_grad(const std::vector<Var>& xs) {
  for (const auto& x : xs)
    if (x->requires_grad) return true;
  return false;
}

Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> bp) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->parents = std::move(parents);
  if (any_grad(n->parents)) {
    n->requires_grad = true;
    n->backprop = std::move(bp);
  } else {
    n->parents.clear();
  }
  return n;
}

bool scalar_node(const Var& v) { return v->value.numel() == 1; }

double hi_of(const Var& v) {
  return std::isnan(v->hi) ? static_cast<double>(v->value[0]) : v->hi;
}

}  // namespace

void backward(const Var& root) {
  if (root->value.numel() != 1) throw std::invalid_argument("backward: root must be scalar");
  // Iterative post-order DFS over grad-requiring nodes.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, size_t>> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [n, idx] = stack.back();
    if (idx < n->parents.size()) {
      Node* p = n->parents[idx++].get();
      if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  ensure_grad(*root).fill(1.0f);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backprop) n->backprop(*n);
  }
}

Var add(const Var& a, const Var& b) {
  check_same_shape(a->value, b->value, "add");
  Tensor out(a->value.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] + b->value[i];
  Var r = make_op(std::move(out), {a, b}, [](Node& n) {
    for (auto& p : n.parents) {
      if (!p->requires_grad) continue;
      Tensor& g = ensure_grad(*p);
      for (int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i];
    }
  });
  if (scalar_node(r)) r->hi = hi_of(a) + hi_of(b);
  return r;
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a->value, b->value, "sub");
  Tensor out(a->value.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] - b->value[i];
  Var r = make_op(std::move(out), {a, b}, [](Node& n) {
    if (n.parents[0]->requires_grad) {
      Tensor& g = ensure_grad(*n.parents[0]);
      for (int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i];
    }
    if (n.parents[1]->requires_grad) {
      Tensor& g = ensure_grad(*n.parents[1]);
      for (int64_t i = 0; i < g.numel(); ++i) g[i] -= n.grad[i];
    }
  });
  if (scalar_node(r)) r->hi = hi_of(a) - hi_of(b);
  return r;
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a->value, b->value, "mul");
  Tensor out(a->value.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] * b->value[i];
  Var r = make_op(std::move(out), {a, b}, [](Node& n) {
    const Tensor& av = n.parents[0]->value;
    const Tensor& bv = n.parents[1]->value;
    if (n.parents[0]->requires_grad) {
      Tensor& g = ensure_grad(*n.parents[0]);
      for (int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i] * bv[i];
    }
    if (n.parents[1]->requires_grad) {
      Tensor& g = ensure_grad(*n.parents[1]);
      for (int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i] * av[i];
    }
  });
  if (scalar_node(r)) r->hi = hi_of(a) * hi_of(b);
  return r;
}

Var affine(const Var& a, float s, float c) {
  Tensor out(a->value.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = s * a->value[i] + c;
  Var r = make_op(std::move(out), {a}, [s](Node& n) {
    Tensor& g = ensure_grad(*n.parents[0]);
    for (int64_t i = 0; i < g.numel(); ++i) g[i] += s * n.grad[i];
  });
  if (scalar_node(r)) r->hi = static_cast<double>(s) * hi_of(a) + c;
  return r;
}

Var lincomb3(const Var& a, const Var& b, const Var& c, float ca, float cb, float cc) {
  check_same_shape(a->value, b->value, "lincomb3");
  check_same_shape(a->value, c->value, "lincomb3");
  Tensor out(a->value.shape());
  for (int64_t i = 0; i < out.numel(); ++i) {
    out[i] = ca * a->value[i] + cb * b->value[i] + cc * c->value[i];
  }
  Var r = make_op(std::move(out), {a, b, c}, [ca, cb, cc](Node& n) {
    const float coef[3] = {ca, cb, cc};
    for (int k = 0; k < 3; ++k) {
      if (!n.parents[k]->requires_grad) continue;
      Tensor& g = ensure_grad(*n.parents[k]);
      for (int64_t i = 0; i < g.numel(); ++i) g[i] += coef[k] * n.grad[i];
    }
  });
  if (scalar_node(r)) {
    r->hi = static_cast<double>(ca) * hi_of(a) + static_cast<double>(cb) * hi_of(b) +
            static_cast<double>(cc) * hi_of(c);
  }
  return r;
}

Var mul_map(const Var& map, const Var& x) {
  const Tensor& m = map->value;
  const Tensor& v = x->value;
  if (m.dim(0) != 1 || m.dim(1) != v.dim(1) || m.dim(2) != v.dim(2)) {
    throw std::invalid_argument("mul_map: map must be {1,H,W} matching x");
  }
  const int C = v.dim(0);
  const int64_t HW = static_cast<int64_t>(v.dim(1)) * v.dim(2);
  Tensor out(v.shape());
  for (int c = 0; c < C; ++c)
    for (int64_t i = 0; i < HW; ++i) out[c * HW + i] = m[i] * v[c * HW + i];
  return make_op(std::move(out), {map, x}, [C, HW](Node& n) {
    const Tensor& m = n.parents[0]->value;
    const Tensor& v = n.parents[1]->value;
    if (n.parents[0]->requires_grad) {
      Tensor& g = ensure_grad(*n.parents[0]);
      for (int64_t i = 0; i < HW; ++i) {
        float acc = 0.0f;
        for (int c = 0; c < C; ++c) acc += n.grad[c * HW + i] * v[c * HW + i];
        g[i] += acc;
      }
    }
    if (n.parents[1]->requires_grad) {
      Tensor& g = ensure_grad(*n.parents[1]);
      for (int c = 0; c < C; ++c)
        for (int64_t i = 0; i < HW; ++i) g[c * HW + i] += n.grad[c * HW + i] * m[i];
    }
  });
}

Var leaky_relu(const Var& a, float slope) {
  Tensor out(a->value.shape());
  for (int64_t i = 0; i < out.numel(); ++i) {
    const float v = a->value[i];
    out[i] = v >= 0.0f ? v : slope * v;
  }
  return make_op(std::move(out), {a}, [slope](Node& n) {
    const Tensor& av = n.parents[0]->value;
    Tensor& g = ensure_grad(*n.parents[0]);
    for (int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i] * (av[i] >= 0.0f ? 1.0f : slope);
  });
}

Var sigmoid(const Var& a) {
  Tensor out(a->value.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = 1.0f / (1.0f + std::exp(-a->value[i]));
  return make_op(std::move(out), {a}, [](Node& n) {
    Tensor& g = ensure_grad(*n.parents[0]);
    for (int64_t i = 0; i < g.numel(); ++i) {
      const float y = n.value[i];
      g[i] += n.grad[i] * y * (1.0f - y);
    }
  });
}

Var tanh_v(const Var& a) {
  Tensor out(a->value.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::tanh(a->value[i]);
  return make_op(std::move(out), {a}, [](Node& n) {
    Tensor& g = ensure_grad(*n.parents[0]);
    for (int64_t i = 0; i < g.numel(); ++i) {
      const float y = n.value[i];
      g[i] += n.grad[i] * (1.0f - y * y);
    }
  });
}

Var abs_v(const Var& a) {
  Tensor out(a->value.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::fabs(a->value[i]);
  return make_op(std::move(out), {a}, [](Node& n) {
    const Tensor& av = n.parents[0]->value;
    Tensor& g = ensure_grad(*n.parents[0]);
    for (int64_t i = 0; i < g.numel(); ++i) {
      const float s = av[i] > 0.0f ? 1.0f : (av[i] < 0.0f ? -1.0f : 0.0f);
      g[i] += n.grad[i] * s;
    }
  });
}

Var sqrt_v(const Var& a) {
  Tensor out(a->value.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::sqrt(a->value[i]);
  Var r = make_op(std::move(out), {a}, [](Node& n) {
    Tensor& g = ensure_grad(*n.parents[0]);
    for (int64_t i = 0; i < g.numel(); ++i) {
      const float y = n.value[i];
      if (y > 0.0f) g[i] += n.grad[i] * 0.5f / y;
    }
  });
  if (scalar_node(r)) r->hi = std::sqrt(hi_of(a));
  return r;
}

Var clamp01(const Var& a) {
  Tensor out(a->value.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::clamp(a->value[i], 0.0f, 1.0f);
  return make_op(std::move(out), {a}, [](Node& n) {
    const Tensor& av = n.parents[0]->value;
    Tensor& g = ensure_grad(*n.parents[0]);
    for (int64_t i = 0; i < g.numel(); ++i) {
      if (av[i] >= 0.0f && av[i] <= 1.0f) g[i] += n.grad[i];
    }
  });
}

Var concat_channels(const std::vector<Var>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat_channels: empty input");
  const int H = xs[0]->value.dim(1), W = xs[0]->value.dim(2);
  int C = 0;
  for (const auto& x : xs) {
    if (x->value.rank() != 3 || x->value.dim(1) != H || x->value.dim(2) != W) {
      throw std::invalid_argument("concat_channels: spatial mismatch");
    }
    C += x->value.dim(0);
  }
  Tensor out({C, H, W});
  int64_t off = 0;
  for (const auto& x : xs) {
    std::copy(x->value.data(), x->value.data() + x->value.numel(), out.data() + off);
    off += x->value.numel();
  }
  return make_op(std::move(out), xs, [](Node& n) {
    int64_t off = 0;
    for (auto& p : n.parents) {
      const int64_t len = p->value.numel();
      if (p->requires_grad) {
        Tensor& g = ensure_grad(*p);
        for (int64_t i = 0; i < len; ++i) g[i] += n.grad[off + i];
      }
      off += len;
    }
  });
}

Var slice_channels(const Var& a, int c0, int count) {
  const Tensor& v = a->value;
  if (c0 < 0 || count <= 0 || c0 + count > v.dim(0)) {
    throw std::invalid_argument("slice_channels: range out of bounds");
  }
  const int64_t HW = static_cast<int64_t>(v.dim(1)) * v.dim(2);
  Tensor out({count, v.dim(1), v.dim(2)});
  std::copy(v.data() + c0 * HW, v.data() + (c0 + count) * HW, out.data());
  return make_op(std::move(out), {a}, [c0, HW](Node& n) {
    Tensor& g = ensure_grad(*n.parents[0]);
    for (int64_t i = 0; i < n.grad.numel(); ++i) g[c0 * HW + i] += n.grad[i];
  });
}

Var slice_spatial(const Var& a, int i0, int j0, int h, int w) {
  const Tensor& v = a->value;
  if (i0 < 0 || j0 < 0 || h <= 0 || w <= 0 || i0 + h > v.dim(1) || j0 + w > v.dim(2)) {
    throw std::invalid_argument("slice_spatial: range out of bounds");
  }
  const int C = v.dim(0);
  Tensor out({C, h, w});
  for (int c = 0; c < C; ++c)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) out.at(c, i, j) = v.at(c, i0 + i, j0 + j);
  return make_op(std::move(out), {a}, [i0, j0](Node& n) {
    Tensor& g = ensure_grad(*n.parents[0]);
    const int C = n.grad.dim(0), h = n.grad.dim(1), w = n.grad.dim(2);
    for (int c = 0; c < C; ++c)
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) g.at(c, i0 + i, j0 + j) += n.grad.at(c, i, j);
  });
}

Var softmax_channels(const Var& a) {
  const Tensor& v = a->value;
  const int C = v.dim(0);
  const int64_t HW = static_cast<int64_t>(v.dim(1)) * v.dim(2);
  Tensor out(v.shape());
  for (int64_t i = 0; i < HW; ++i) {
    float mx = v[i];
    for (int c = 1; c < C; ++c) mx = std::max(mx, v[c * HW + i]);
    float denom = 0.0f;
    for (int c = 0; c < C; ++c) {
      const float e = std::exp(v[c * HW + i] - mx);
      out[c * HW + i] = e;
      denom += e;
    }
    for (int c = 0; c < C; ++c) out[c * HW + i] /= denom;
  }
  return make_op(std::move(out), {a}, [C, HW](Node& n) {
    Tensor& g = ensure_grad(*n.parents[0]);
    for (int64_t i = 0; i < HW; ++i) {
      float dot = 0.0f;
      for (int c = 0; c < C; ++c) dot += n.grad[c * HW + i] * n.value[c * HW + i];
      for (int c = 0; c < C; ++c) {
        g[c * HW + i] += n.value[c * HW + i] * (n.grad[c * HW + i] - dot);
      }
    }
  });
}

Var conv2d(const Var& x, const Var& w, const Var& b) {
  const int OC = w->value.dim(0);
  Tensor out({OC, x->value.dim(1), x->value.dim(2)});
  const bool needs_grad = x->requires_grad || w->requires_grad || b->requires_grad;
  auto cols = needs_grad ? std::make_shared<Tensor>() : nullptr;
  kernels::conv2d_forward(x->value, w->value, b->value, out, cols.get());
  return make_op(std::move(out), {x, w, b}, [cols](Node& n) {
    Node& x = *n.parents[0];
    Node& w = *n.parents[1];
    Node& b = *n.parents[2];
    if (w.requires_grad || b.requires_grad) {
      Tensor& gw = ensure_grad(w);
      Tensor* gb = b.requires_grad ? &ensure_grad(b) : nullptr;
      kernels::conv2d_backward_weight(x.value, n.grad, gw, gb, cols ? cols.get() : nullptr);
    }
    if (x.requires_grad) {
      kernels::conv2d_backward_input(w.value, n.grad, ensure_grad(x));
    }
  });
}

Var avgpool2(const Var& x) {
  Tensor out({x->value.dim(0), x->value.dim(1) / 2, x->value.dim(2) / 2});
  kernels::avgpool2_forward(x->value, out);
  return make_op(std::move(out), {x}, [](Node& n) {
    kernels::avgpool2_backward(n.grad, ensure_grad(*n.parents[0]));
  });
}

Var upsample2(const Var& x) {
  Tensor out({x->value.dim(0), x->value.dim(1) * 2, x->value.dim(2) * 2});
  kernels::upsample2_forward(x->value, out);
  return make_op(std::move(out), {x}, [](Node& n) {
    kernels::upsample2_backward(n.grad, ensure_grad(*n.parents[0]));
  });
}

Var warp(const Var& frame, const Var& Wt, const Var& A, const Var& B, int K, int dil) {
  Tensor out(frame->value.shape());
  kernels::warp_forward(frame->value, Wt->value, A->value, B->value, K, dil, out);
  return make_op(std::move(out), {frame, Wt, A, B}, [K, dil](Node& n) {
    Node& f = *n.parents[0];
    Node& w = *n.parents[1];
    Node& a = *n.parents[2];
    Node& b = *n.parents[3];
    kernels::warp_backward(f.value, w.value, a.value, b.value, K, dil, n.grad,
                           f.requires_grad ? &ensure_grad(f) : nullptr,
                           w.requires_grad ? &ensure_grad(w) : nullptr,
                           a.requires_grad ? &ensure_grad(a) : nullptr,
                           b.requires_grad ? &ensure_grad(b) : nullptr);
  });
}

Var sum_all(const Var& a) {
  double acc = 0.0;
  for (int64_t i = 0; i < a->value.numel(); ++i) acc += a->value[i];
  Var r = make_op(Tensor::scalar(static_cast<float>(acc)), {a}, [](Node& n) {
    Tensor& g = ensure_grad(*n.parents[0]);
    const float gv = n.grad[0];
    for (int64_t i = 0; i < g.numel(); ++i) g[i] += gv;
  });
  r->hi = acc;
  return r;
}

Var mean_all(const Var& a) {
  const int64_t count = a->value.numel();
  double acc = 0.0;
  for (int64_t i = 0; i < count; ++i) acc += a->value[i];
  Var r = make_op(Tensor::scalar(static_cast<float>(acc / count)), {a}, [count](Node& n) {
    Tensor& g = ensure_grad(*n.parents[0]);
    const float gv = n.grad[0] / count;
    for (int64_t i = 0; i < g.numel(); ++i) g[i] += gv;
  });
  r->hi = acc / count;
  return r;
}

GradCheckReport gradient_check(const std::vector<Var>& leaves,
                               const std::function<Var()>& build, double step,
                               int probes_per_leaf, uint64_t seed, double floor) {
  // Analytic pass.
  for (const auto& l : leaves) l->grad = Tensor();
  Var root = build();
  backward(root);
  std::vector<Tensor> analytic;
  for (const auto& l : leaves) {
    analytic.push_back(l->grad.empty() ? Tensor(l->value.shape()) : l->grad);
  }
  GradCheckReport rep;
  std::vector<double> rels;
  Rng rng(seed);
  for (size_t li = 0; li < leaves.size(); ++li) {
    Node& l = *leaves[li];
    const int64_t n = l.value.numel();
    for (int p = 0; p < probes_per_leaf; ++p) {
      const int64_t idx = static_cast<int64_t>(rng.next_u64() % static_cast<uint64_t>(n));
      const float orig = l.value[idx];
      l.value[idx] = static_cast<float>(orig + step);
      const double xp = l.value[idx];
      const double fp = scalar_value(build());
      l.value[idx] = static_cast<float>(orig - step);
      const double xm = l.value[idx];
      const double fm = scalar_value(build());
      l.value[idx] = orig;
      const double fd = (fp - fm) / (xp - xm);
      const double an = analytic[li][idx];
      const double denom = std::max(std::fabs(an), std::fabs(fd));
      if (denom < floor) continue;
      rels.push_back(std::fabs(an - fd) / denom);
      rep.max_rel_err = std::max(rep.max_rel_err, rels.back());
      rep.probes++;
    }
  }
  if (!rels.empty()) {
    std::nth_element(rels.begin(), rels.begin() + rels.size() / 2, rels.end());
    rep.median_rel_err = rels[rels.size() / 2];
  }
  return rep;
}

}  // namespace kinterp
