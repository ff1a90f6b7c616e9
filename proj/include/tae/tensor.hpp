#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "tae/errors.hpp"

namespace tae {

// Runtime toggle for post-op finite checks (off by default; enabled in tests).
void set_tensor_debug_checks(bool on);
bool tensor_debug_checks();

// Dense row-major n-d array. Real is float in production; the double
// instantiation exists for finite-difference gradient checks.
template <class Real>
struct NdArray {
  std::vector<int> shape;
  std::vector<Real> v;

  NdArray() = default;
  explicit NdArray(std::vector<int> s) : shape(std::move(s)), v(count(shape), Real(0)) {}

  static size_t count(const std::vector<int>& s) {
    size_t n = 1;
    for (int d : s) {
      if (d <= 0) throw std::invalid_argument("NdArray: nonpositive dim");
      n *= size_t(d);
    }
    return n;
  }

  size_t size() const { return v.size(); }
  int dim(int k) const { return shape[size_t(k)]; }
  Real* data() { return v.data(); }
  const Real* data() const { return v.data(); }
  Real& operator[](size_t i) { return v[i]; }
  Real operator[](size_t i) const { return v[i]; }

  bool same_shape(const NdArray& o) const { return shape == o.shape; }
  void fill(Real x) { std::fill(v.begin(), v.end(), x); }

  bool all_finite() const {
    for (Real x : v)
      if (!std::isfinite(double(x))) return false;
    return true;
  }

  template <class Other>
  NdArray<Other> cast() const {
    NdArray<Other> out(shape);
    for (size_t i = 0; i < v.size(); ++i) out.v[i] = Other(v[i]);
    return out;
  }
};

// --- autodiff graph ---------------------------------------------------------

template <class Real>
class Node;
template <class Real>
using NodePtr = std::shared_ptr<Node<Real>>;

template <class Real>
class Node {
 public:
  NdArray<Real> value;
  NdArray<Real> grad;  // allocated on demand
  bool requires_grad = false;
  std::vector<NodePtr<Real>> inputs;
  std::function<void(Node<Real>&)> backprop;  // accumulates into inputs' grads

  void ensure_grad() {
    if (grad.v.empty()) grad = NdArray<Real>(value.shape);
  }
};

template <class Real>
NodePtr<Real> make_leaf(NdArray<Real> value, bool requires_grad) {
  auto n = std::make_shared<Node<Real>>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  return n;
}

namespace detail {

template <class Real>
NodePtr<Real> make_op(NdArray<Real> value, std::vector<NodePtr<Real>> inputs,
                      std::function<void(Node<Real>&)> backprop) {
  auto n = std::make_shared<Node<Real>>();
  n->value = std::move(value);
  n->inputs = std::move(inputs);
  for (const auto& in : n->inputs)
    if (in->requires_grad) n->requires_grad = true;
  if (n->requires_grad) n->backprop = std::move(backprop);
  if (tensor_debug_checks() && !n->value.all_finite())
    throw NumericError("non-finite values produced by tensor op");
  return n;
}

template <class Real>
void topo_sort(Node<Real>* root, std::vector<Node<Real>*>& order) {
  // Iterative post-order DFS.
  std::vector<std::pair<Node<Real>*, size_t>> stack{{root, 0}};
  std::map<Node<Real>*, bool> seen;
  seen[root] = true;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node<Real>* child = node->inputs[next++].get();
      if (child->requires_grad && !seen[child]) {
        seen[child] = true;
        stack.push_back({child, 0});
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
}

}  // namespace detail

// Backpropagates from a scalar root.
template <class Real>
void backward(const NodePtr<Real>& root) {
  if (root->value.size() != 1) throw std::invalid_argument("backward: root must be scalar");
  if (!root->requires_grad) return;
  std::vector<Node<Real>*> order;
  detail::topo_sort(root.get(), order);
  for (Node<Real>* n : order) n->ensure_grad();
  root->grad.v[0] = Real(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<Real>* n = *it;
    if (n->backprop) {
      for (auto& in : n->inputs)
        if (in->requires_grad) in->ensure_grad();
      n->backprop(*n);
    }
  }
}

// --- raw convolution kernels ------------------------------------------------
// Cross-correlation convention (no kernel flip). pad is symmetric; "same"
// padding with odd k and even sizes uses pad = k/2. Accumulation order is
// fixed so results are bit-deterministic.

template <class Real>
void conv2d_raw_forward(const Real* in, int ci_n, int h, int w, const Real* kw, int co_n,
                        int k, const Real* bias, int stride, int pad, Real* out, int ho,
                        int wo) {
  for (int co = 0; co < co_n; ++co) {
    Real* oplane = out + size_t(co) * ho * wo;
    const Real b = bias ? bias[co] : Real(0);
    std::fill(oplane, oplane + size_t(ho) * wo, b);
    for (int ci = 0; ci < ci_n; ++ci) {
      const Real* iplane = in + size_t(ci) * h * w;
      const Real* kplane = kw + (size_t(co) * ci_n + ci) * k * k;
      for (int dy = 0; dy < k; ++dy) {
        for (int dx = 0; dx < k; ++dx) {
          const Real wv = kplane[dy * k + dx];
          if (wv == Real(0)) continue;
          // oy range with 0 <= oy*stride + dy - pad < h
          int oy0 = 0, oy1 = ho;
          while (oy0 < ho && oy0 * stride + dy - pad < 0) ++oy0;
          while (oy1 > oy0 && (oy1 - 1) * stride + dy - pad >= h) --oy1;
          int ox0 = 0, ox1 = wo;
          while (ox0 < wo && ox0 * stride + dx - pad < 0) ++ox0;
          while (ox1 > ox0 && (ox1 - 1) * stride + dx - pad >= w) --ox1;
          for (int oy = oy0; oy < oy1; ++oy) {
            const Real* irow = iplane + size_t(oy * stride + dy - pad) * w + (dx - pad);
            Real* orow = oplane + size_t(oy) * wo;
            if (stride == 1) {
              for (int ox = ox0; ox < ox1; ++ox) orow[ox] += wv * irow[ox];
            } else {
              for (int ox = ox0; ox < ox1; ++ox) orow[ox] += wv * irow[ox * stride];
            }
          }
        }
      }
    }
  }
}

template <class Real>
void conv2d_raw_backward_input(Real* gin, int ci_n, int h, int w, const Real* kw, int co_n,
                               int k, int stride, int pad, const Real* gout, int ho, int wo) {
  for (int co = 0; co < co_n; ++co) {
    const Real* gplane = gout + size_t(co) * ho * wo;
    for (int ci = 0; ci < ci_n; ++ci) {
      Real* iplane = gin + size_t(ci) * h * w;
      const Real* kplane = kw + (size_t(co) * ci_n + ci) * k * k;
      for (int dy = 0; dy < k; ++dy) {
        for (int dx = 0; dx < k; ++dx) {
          const Real wv = kplane[dy * k + dx];
          if (wv == Real(0)) continue;
          int oy0 = 0, oy1 = ho;
          while (oy0 < ho && oy0 * stride + dy - pad < 0) ++oy0;
          while (oy1 > oy0 && (oy1 - 1) * stride + dy - pad >= h) --oy1;
          int ox0 = 0, ox1 = wo;
          while (ox0 < wo && ox0 * stride + dx - pad < 0) ++ox0;
          while (ox1 > ox0 && (ox1 - 1) * stride + dx - pad >= w) --ox1;
          for (int oy = oy0; oy < oy1; ++oy) {
            Real* irow = iplane + size_t(oy * stride + dy - pad) * w + (dx - pad);
            const Real* grow = gplane + size_t(oy) * wo;
            if (stride == 1) {
              for (int ox = ox0; ox < ox1; ++ox) irow[ox] += wv * grow[ox];
            } else {
              for (int ox = ox0; ox < ox1; ++ox) irow[ox * stride] += wv * grow[ox];
            }
          }
        }
      }
    }
  }
}

template <class Real>
void conv2d_raw_backward_weights(const Real* in, int ci_n, int h, int w, Real* gkw,
                                 Real* gbias, int co_n, int k, int stride, int pad,
                                 const Real* gout, int ho, int wo) {
  for (int co = 0; co < co_n; ++co) {
    const Real* gplane = gout + size_t(co) * ho * wo;
    if (gbias) {
      Real s = 0;
      for (size_t i = 0; i < size_t(ho) * wo; ++i) s += gplane[i];
      gbias[co] += s;
    }
    for (int ci = 0; ci < ci_n; ++ci) {
      const Real* iplane = in + size_t(ci) * h * w;
      Real* kplane = gkw + (size_t(co) * ci_n + ci) * k * k;
      for (int dy = 0; dy < k; ++dy) {
        for (int dx = 0; dx < k; ++dx) {
          int oy0 = 0, oy1 = ho;
          while (oy0 < ho && oy0 * stride + dy - pad < 0) ++oy0;
          while (oy1 > oy0 && (oy1 - 1) * stride + dy - pad >= h) --oy1;
          int ox0 = 0, ox1 = wo;
          while (ox0 < wo && ox0 * stride + dx - pad < 0) ++ox0;
          while (ox1 > ox0 && (ox1 - 1) * stride + dx - pad >= w) --ox1;
          Real acc = 0;
          for (int oy = oy0; oy < oy1; ++oy) {
            const Real* irow = iplane + size_t(oy * stride + dy - pad) * w + (dx - pad);
            const Real* grow = gplane + size_t(oy) * wo;
            if (stride == 1) {
              for (int ox = ox0; ox < ox1; ++ox) acc += grow[ox] * irow[ox];
            } else {
              for (int ox = ox0; ox < ox1; ++ox) acc += grow[ox] * irow[ox * stride];
            }
          }
          kplane[dy * k + dx] += acc;
        }
      }
    }
  }
}

// --- graph ops ---------------------------------------------------------------

enum class Padding { same, valid };

// input [Ci,H,W], kernel [Co,Ci,k,k], optional bias [Co]; stride 1 or 2.
template <class Real>
NodePtr<Real> conv2d(const NodePtr<Real>& input, const NodePtr<Real>& kernel,
                     const NodePtr<Real>& bias, int stride, Padding padding) {
  const auto& is = input->value.shape;
  const auto& ks = kernel->value.shape;
  if (is.size() != 3 || ks.size() != 4) throw std::invalid_argument("conv2d: bad ranks");
  if (is[0] != ks[1]) throw std::invalid_argument("conv2d: channel mismatch");
  const int k = ks[2];
  if (k != ks[3] || k % 2 == 0) throw std::invalid_argument("conv2d: kernel must be odd square");
  if (stride != 1 && stride != 2) throw std::invalid_argument("conv2d: stride must be 1 or 2");
  if (bias && (bias->value.shape.size() != 1 || bias->value.shape[0] != ks[0]))
    throw std::invalid_argument("conv2d: bad bias shape");
  const int ci = is[0], h = is[1], w = is[2], co = ks[0];
  const int pad = padding == Padding::same ? k / 2 : 0;
  const int ho = (h + 2 * pad - k) / stride + 1;
  const int wo = (w + 2 * pad - k) / stride + 1;
  if (ho <= 0 || wo <= 0) throw std::invalid_argument("conv2d: empty output");

  NdArray<Real> out({co, ho, wo});
  conv2d_raw_forward(input->value.data(), ci, h, w, kernel->value.data(), co, k,
                     bias ? bias->value.data() : nullptr, stride, pad, out.data(), ho, wo);
  std::vector<NodePtr<Real>> ins{input, kernel};
  if (bias) ins.push_back(bias);
  return detail::make_op<Real>(
      std::move(out), std::move(ins), [=](Node<Real>& n) {
        const auto& in = n.inputs[0];
        const auto& kr = n.inputs[1];
        if (in->requires_grad)
          conv2d_raw_backward_input(in->grad.data(), ci, h, w, kr->value.data(), co, k,
                                    stride, pad, n.grad.data(), ho, wo);
        if (kr->requires_grad)
          conv2d_raw_backward_weights(in->value.data(), ci, h, w, kr->grad.data(),
                                      n.inputs.size() > 2 && n.inputs[2]->requires_grad
                                          ? n.inputs[2]->grad.data()
                                          : nullptr,
                                      co, k, stride, pad, n.grad.data(), ho, wo);
        else if (n.inputs.size() > 2 && n.inputs[2]->requires_grad) {
          const Real* g = n.grad.data();
          for (int c = 0; c < co; ++c) {
            Real s = 0;
            for (size_t i = 0; i < size_t(ho) * wo; ++i) s += g[size_t(c) * ho * wo + i];
            n.inputs[2]->grad[size_t(c)] += s;
          }
        }
      });
}

template <class Real>
NodePtr<Real> conv2d(const NodePtr<Real>& input, const NodePtr<Real>& kernel, int stride,
                     Padding padding) {
  return conv2d(input, kernel, NodePtr<Real>(), stride, padding);
}

// Feature matching: ee features [C,ke,ke] slide across scene features
// [C,Hs,Ws] with same padding. Gradients flow into both inputs.
template <class Real>
NodePtr<Real> cross_convolve(const NodePtr<Real>& scene_feat, const NodePtr<Real>& ee_feat) {
  const auto& ss = scene_feat->value.shape;
  const auto& es = ee_feat->value.shape;
  if (ss.size() != 3 || es.size() != 3) throw std::invalid_argument("cross_convolve: bad ranks");
  if (ss[0] != es[0]) throw std::invalid_argument("cross_convolve: channel mismatch");
  if (es[1] != es[2] || es[1] % 2 == 0)
    throw std::invalid_argument("cross_convolve: kernel extent must be odd square");
  // Reshape ee features to a 1-output-channel conv kernel; shapes share data
  // layout so this is a metadata change.
  NdArray<Real> kval({1, es[0], es[1], es[2]});
  kval.v = ee_feat->value.v;
  auto kernel = std::make_shared<Node<Real>>();
  kernel->value = std::move(kval);
  kernel->requires_grad = ee_feat->requires_grad;
  kernel->inputs = {ee_feat};
  if (kernel->requires_grad)
    kernel->backprop = [](Node<Real>& n) {
      auto& src = n.inputs[0];
      for (size_t i = 0; i < src->grad.size(); ++i) src->grad[i] += n.grad[i];
    };
  return conv2d(scene_feat, kernel, 1, Padding::same);
}

template <class Real>
NodePtr<Real> relu(const NodePtr<Real>& x) {
  NdArray<Real> out(x->value.shape);
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::max(Real(0), x->value[i]);
  return detail::make_op<Real>(std::move(out), {x}, [](Node<Real>& n) {
    auto& in = n.inputs[0];
    for (size_t i = 0; i < n.grad.size(); ++i)
      if (in->value[i] > Real(0)) in->grad[i] += n.grad[i];
  });
}

// 2x2 max pooling with stride 2; input [C,H,W] with even H, W.
template <class Real>
NodePtr<Real> max_pool2d(const NodePtr<Real>& x) {
  const auto& s = x->value.shape;
  if (s.size() != 3 || s[1] % 2 || s[2] % 2)
    throw std::invalid_argument("max_pool2d: need [C,H,W] with even H,W");
  const int c = s[0], h = s[1], w = s[2], ho = h / 2, wo = w / 2;
  NdArray<Real> out({c, ho, wo});
  auto arg = std::make_shared<std::vector<uint32_t>>(out.size());
  const Real* in = x->value.data();
  for (int cc = 0; cc < c; ++cc)
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox) {
        size_t best = (size_t(cc) * h + 2 * oy) * w + 2 * ox;
        Real bv = in[best];
        const size_t cand[3] = {best + 1, best + size_t(w), best + size_t(w) + 1};
        for (size_t idx : cand)
          if (in[idx] > bv) {
            bv = in[idx];
            best = idx;
          }
        const size_t o = (size_t(cc) * ho + oy) * wo + ox;
        out[o] = bv;
        (*arg)[o] = uint32_t(best);
      }
  return detail::make_op<Real>(std::move(out), {x}, [arg](Node<Real>& n) {
    auto& in = n.inputs[0];
    for (size_t i = 0; i < n.grad.size(); ++i) in->grad[(*arg)[i]] += n.grad[i];
  });
}

// Nearest-neighbor 2x upsampling; input [C,H,W].
template <class Real>
NodePtr<Real> upsample2x(const NodePtr<Real>& x) {
  const auto& s = x->value.shape;
  if (s.size() != 3) throw std::invalid_argument("upsample2x: need [C,H,W]");
  const int c = s[0], h = s[1], w = s[2];
  NdArray<Real> out({c, 2 * h, 2 * w});
  for (int cc = 0; cc < c; ++cc)
    for (int y = 0; y < 2 * h; ++y)
      for (int x2 = 0; x2 < 2 * w; ++x2)
        out[(size_t(cc) * 2 * h + y) * 2 * w + x2] =
            x->value[(size_t(cc) * h + y / 2) * w + x2 / 2];
  return detail::make_op<Real>(std::move(out), {x}, [c, h, w](Node<Real>& n) {
    auto& in = n.inputs[0];
    for (int cc = 0; cc < c; ++cc)
      for (int y = 0; y < 2 * h; ++y)
        for (int x2 = 0; x2 < 2 * w; ++x2)
          in->grad[(size_t(cc) * h + y / 2) * w + x2 / 2] +=
              n.grad[(size_t(cc) * 2 * h + y) * 2 * w + x2];
  });
}

template <class Real>
NodePtr<Real> add(const NodePtr<Real>& a, const NodePtr<Real>& b) {
  if (!a->value.same_shape(b->value)) throw std::invalid_argument("add: shape mismatch");
  NdArray<Real> out(a->value.shape);
  for (size_t i = 0; i < out.size(); ++i) out[i] = a->value[i] + b->value[i];
  return detail::make_op<Real>(std::move(out), {a, b}, [](Node<Real>& n) {
    for (auto& in : n.inputs)
      if (in->requires_grad)
        for (size_t i = 0; i < n.grad.size(); ++i) in->grad[i] += n.grad[i];
  });
}

// Concatenates along the channel axis; inputs [Ca,H,W] and [Cb,H,W].
template <class Real>
NodePtr<Real> concat_channels(const NodePtr<Real>& a, const NodePtr<Real>& b) {
  const auto& sa = a->value.shape;
  const auto& sb = b->value.shape;
  if (sa.size() != 3 || sb.size() != 3 || sa[1] != sb[1] || sa[2] != sb[2])
    throw std::invalid_argument("concat_channels: shape mismatch");
  NdArray<Real> out({sa[0] + sb[0], sa[1], sa[2]});
  std::copy(a->value.v.begin(), a->value.v.end(), out.v.begin());
  std::copy(b->value.v.begin(), b->value.v.end(), out.v.begin() + a->value.size());
  return detail::make_op<Real>(std::move(out), {a, b}, [](Node<Real>& n) {
    auto& a0 = n.inputs[0];
    auto& b0 = n.inputs[1];
    const size_t na = a0->value.size();
    if (a0->requires_grad)
      for (size_t i = 0; i < na; ++i) a0->grad[i] += n.grad[i];
    if (b0->requires_grad)
      for (size_t i = 0; i < b0->value.size(); ++i) b0->grad[i] += n.grad[na + i];
  });
}

template <class Real>
NodePtr<Real> scale(const NodePtr<Real>& x, Real factor) {
  NdArray<Real> out(x->value.shape);
  for (size_t i = 0; i < out.size(); ++i) out[i] = factor * x->value[i];
  return detail::make_op<Real>(std::move(out), {x}, [factor](Node<Real>& n) {
    auto& in = n.inputs[0];
    for (size_t i = 0; i < n.grad.size(); ++i) in->grad[i] += factor * n.grad[i];
  });
}

// Test utility: scalar projection sum(x * weights).
template <class Real>
NodePtr<Real> weighted_sum(const NodePtr<Real>& x, NdArray<Real> weights) {
  if (!x->value.same_shape(weights)) throw std::invalid_argument("weighted_sum: shape mismatch");
  NdArray<Real> out({1});
  Real acc = 0;
  for (size_t i = 0; i < weights.size(); ++i) acc += x->value[i] * weights[i];
  out[0] = acc;
  auto w = std::make_shared<NdArray<Real>>(std::move(weights));
  return detail::make_op<Real>(std::move(out), {x}, [w](Node<Real>& n) {
    auto& in = n.inputs[0];
    for (size_t i = 0; i < w->size(); ++i) in->grad[i] += (*w)[i] * n.grad[0];
  });
}

// Numerically stable sigmoid binary cross-entropy read at one flat index of
// the logit tensor. Gradients are zero everywhere else.
template <class Real>
NodePtr<Real> bce_at_index(const NodePtr<Real>& logits, size_t flat_index, int label) {
  if (flat_index >= logits->value.size())
    throw std::invalid_argument("bce_at_index: index out of range");
  if (label != 0 && label != 1) throw std::invalid_argument("bce_at_index: label must be 0/1");
  const double z = double(logits->value[flat_index]);
  const double y = double(label);
  const double loss = std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
  NdArray<Real> out({1});
  out[0] = Real(loss);
  return detail::make_op<Real>(std::move(out), {logits}, [flat_index, y, z](Node<Real>& n) {
    const double sig = 1.0 / (1.0 + std::exp(-z));
    n.inputs[0]->grad[flat_index] += Real((sig - y) * double(n.grad[0]));
  });
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// --- Adam --------------------------------------------------------------------

struct AdamParams {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <class Real>
class AdamState {
 public:
  AdamParams hyper;
  int64_t step_count = 0;

  explicit AdamState(AdamParams hp = {}) : hyper(hp) {}

  // params[i] and grads[i] must keep their shapes across calls.
  void step(std::vector<NdArray<Real>*> params, const std::vector<const NdArray<Real>*>& grads) {
    if (params.size() != grads.size()) throw std::invalid_argument("adam: size mismatch");
    if (m_.empty()) {
      for (auto* p : params) {
        m_.emplace_back(p->shape);
        v_.emplace_back(p->shape);
      }
    }
    ++step_count;
    const double b1 = hyper.beta1, b2 = hyper.beta2;
    const double bc1 = 1.0 - std::pow(b1, double(step_count));
    const double bc2 = 1.0 - std::pow(b2, double(step_count));
    for (size_t t = 0; t < params.size(); ++t) {
      NdArray<Real>& p = *params[t];
      const NdArray<Real>& g = *grads[t];
      NdArray<Real>& m = m_[t];
      NdArray<Real>& v = v_[t];
      for (size_t i = 0; i < p.size(); ++i) {
        const double gi = double(g[i]);
        const double mi = b1 * double(m[i]) + (1 - b1) * gi;
        const double vi = b2 * double(v[i]) + (1 - b2) * gi * gi;
        m[i] = Real(mi);
        v[i] = Real(vi);
        const double mhat = mi / bc1;
        const double vhat = vi / bc2;
        p[i] = Real(double(p[i]) - hyper.lr * mhat / (std::sqrt(vhat) + hyper.eps));
      }
    }
  }

 private:
  std::vector<NdArray<Real>> m_;
  std::vector<NdArray<Real>> v_;
};

// --- checkpoint file ---------------------------------------------------------
// magic "RTW1", u32le tensor count, then per tensor: u32le name length, name
// bytes, u32le rank, dims u32le, values f32le.

using NamedTensors = std::vector<std::pair<std::string, NdArray<float>>>;

void write_tensor_file(const std::filesystem::path& path, const NamedTensors& tensors);
NamedTensors read_tensor_file(const std::filesystem::path& path);

}  // namespace tae
