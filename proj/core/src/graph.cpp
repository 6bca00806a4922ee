#include "dwsnn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "dwsnn/error.hpp"

namespace dwsnn {

namespace {
bool g_strict_finite = false;
}

void Graph::set_strict_finite(bool on) { g_strict_finite = on; }
bool Graph::strict_finite() { return g_strict_finite; }

Graph::Graph() { nodes_.reserve(256); }

int Graph::push(Tensor value, std::vector<int> parents, BackwardFn fn) {
  if (g_strict_finite && !value.all_finite())
    throw Error(ErrorClass::State, "operation produced non-finite values");
  Node n;
  n.value = std::move(value);
  n.parents = std::move(parents);
  n.backward = std::move(fn);
  for (int p : n.parents) {
    if (p < 0 || p >= static_cast<int>(nodes_.size()))
      throw Error(ErrorClass::State, "dangling parent node");
    if (nodes_[p].requires_grad) n.requires_grad = true;
  }
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

const Graph::Node& Graph::node(NodeId id) const {
  if (!id.valid() || id.v >= static_cast<int>(nodes_.size()))
    throw Error(ErrorClass::State, "invalid node id");
  return nodes_[id.v];
}

NodeId Graph::leaf(Tensor value, bool requires_grad) {
  int i = push(std::move(value), {}, nullptr);
  nodes_[i].requires_grad = requires_grad;
  return {i};
}

const Tensor& Graph::value(NodeId id) const { return node(id).value; }

bool Graph::has_grad(NodeId id) const { return !node(id).grad.empty(); }

Tensor Graph::grad(NodeId id) const {
  const Node& n = node(id);
  if (n.grad.empty()) return Tensor::zeros(n.value.shape());
  return n.grad;
}

const Tensor* Graph::grad_ptr(NodeId id) const {
  const Node& n = node(id);
  return n.grad.empty() ? nullptr : &n.grad;
}

Tensor& Graph::grad_buffer(int idx) {
  Node& n = nodes_[idx];
  if (n.grad.empty()) n.grad = Tensor::zeros(n.value.shape());
  return n.grad;
}

bool Graph::needs_grad(int idx) const { return nodes_[idx].requires_grad; }

void Graph::backward(NodeId root) {
  const Node& r = node(root);
  if (r.value.size() != 1)
    throw Error(ErrorClass::Shape, "backward root must be scalar");
  grad_buffer(root.v)[0] = 1.0;
  for (int i = root.v; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this, i);
  }
}

NodeId Graph::matmul(NodeId a, NodeId b) {
  Tensor out = dwsnn::matmul(value(a), value(b));
  int ai = a.v, bi = b.v;
  return {push(std::move(out), {ai, bi}, [ai, bi](Graph& g, int self) {
    const Tensor& go = g.nodes_[self].grad;
    const Tensor& va = g.nodes_[ai].value;
    const Tensor& vb = g.nodes_[bi].value;
    if (g.needs_grad(ai)) matmul_accum(g.grad_buffer(ai), go, false, vb, true);
    if (g.needs_grad(bi)) matmul_accum(g.grad_buffer(bi), va, true, go, false);
  })};
}

NodeId Graph::add_bias(NodeId x, NodeId bias) {
  const Tensor& vx = value(x);
  const Tensor& vb = value(bias);
  if (vb.size() != vx.cols())
    throw Error(ErrorClass::Shape, "bias length must match feature dimension");
  Tensor out = vx;
  const std::size_t n = vx.rows(), f = vx.cols();
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < f; ++c) out[r * f + c] += vb[c];
  int xi = x.v, bi = bias.v;
  return {push(std::move(out), {xi, bi}, [xi, bi, n, f](Graph& g, int self) {
    const Tensor& go = g.nodes_[self].grad;
    if (g.needs_grad(xi)) g.grad_buffer(xi).add_inplace(go);
    if (g.needs_grad(bi)) {
      Tensor& gb = g.grad_buffer(bi);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < f; ++c) gb[c] += go[r * f + c];
    }
  })};
}

NodeId Graph::add(NodeId a, NodeId b) { return axpby(1.0, a, 1.0, b); }

NodeId Graph::mul(NodeId a, NodeId b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (!va.same_shape(vb)) throw Error(ErrorClass::Shape, "mul shape mismatch");
  Tensor out = va;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= vb[i];
  int ai = a.v, bi = b.v;
  return {push(std::move(out), {ai, bi}, [ai, bi](Graph& g, int self) {
    const Tensor& go = g.nodes_[self].grad;
    const Tensor& va = g.nodes_[ai].value;
    const Tensor& vb = g.nodes_[bi].value;
    if (g.needs_grad(ai)) {
      Tensor& ga = g.grad_buffer(ai);
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * vb[i];
    }
    if (g.needs_grad(bi)) {
      Tensor& gb = g.grad_buffer(bi);
      for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * va[i];
    }
  })};
}

NodeId Graph::scale(NodeId x, double c) {
  Tensor out = value(x);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= c;
  int xi = x.v;
  return {push(std::move(out), {xi}, [xi, c](Graph& g, int self) {
    if (!g.needs_grad(xi)) return;
    g.grad_buffer(xi).axpy_inplace(c, g.nodes_[self].grad);
  })};
}

NodeId Graph::add_scalar(NodeId x, double c) {
  Tensor out = value(x);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += c;
  int xi = x.v;
  return {push(std::move(out), {xi}, [xi](Graph& g, int self) {
    if (!g.needs_grad(xi)) return;
    g.grad_buffer(xi).add_inplace(g.nodes_[self].grad);
  })};
}

NodeId Graph::axpby(double alpha, NodeId x, double beta, NodeId y) {
  const Tensor& vx = value(x);
  const Tensor& vy = value(y);
  if (!vx.same_shape(vy))
    throw Error(ErrorClass::Shape, "axpby shape mismatch");
  Tensor out = vx;
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = alpha * out[i] + beta * vy[i];
  int xi = x.v, yi = y.v;
  return {push(std::move(out), {xi, yi}, [xi, yi, alpha, beta](Graph& g, int self) {
    const Tensor& go = g.nodes_[self].grad;
    if (g.needs_grad(xi)) g.grad_buffer(xi).axpy_inplace(alpha, go);
    if (g.needs_grad(yi)) g.grad_buffer(yi).axpy_inplace(beta, go);
  })};
}

NodeId Graph::sum(NodeId x) {
  const Tensor& vx = value(x);
  double s = 0.0;
  for (std::size_t i = 0; i < vx.size(); ++i) s += vx[i];
  int xi = x.v;
  return {push(Tensor::scalar(s), {xi}, [xi](Graph& g, int self) {
    if (!g.needs_grad(xi)) return;
    const double go = g.nodes_[self].grad[0];
    Tensor& gx = g.grad_buffer(xi);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go;
  })};
}

NodeId Graph::slice_rows(NodeId x, std::size_t row_begin, std::size_t row_end) {
  const Tensor& vx = value(x);
  if (row_begin >= row_end || row_end > vx.rows())
    throw Error(ErrorClass::Range, "slice_rows out of bounds");
  const std::size_t f = vx.cols();
  Tensor out({row_end - row_begin, f});
  std::copy(vx.data() + row_begin * f, vx.data() + row_end * f, out.data());
  int xi = x.v;
  return {push(std::move(out), {xi}, [xi, row_begin, f](Graph& g, int self) {
    if (!g.needs_grad(xi)) return;
    const Tensor& go = g.nodes_[self].grad;
    Tensor& gx = g.grad_buffer(xi);
    double* dst = gx.data() + row_begin * f;
    for (std::size_t i = 0; i < go.size(); ++i) dst[i] += go[i];
  })};
}

NodeId Graph::concat_rows(const std::vector<NodeId>& xs) {
  if (xs.empty()) throw Error(ErrorClass::Shape, "concat_rows of nothing");
  const std::size_t f = value(xs[0]).cols();
  std::size_t total = 0;
  for (NodeId id : xs) {
    if (value(id).cols() != f)
      throw Error(ErrorClass::Shape, "concat_rows column mismatch");
    total += value(id).rows();
  }
  Tensor out({total, f});
  std::vector<int> parents;
  std::vector<std::size_t> offsets;
  std::size_t row = 0;
  for (NodeId id : xs) {
    const Tensor& v = value(id);
    std::copy(v.data(), v.data() + v.size(), out.data() + row * f);
    parents.push_back(id.v);
    offsets.push_back(row);
    row += v.rows();
  }
  auto off = std::make_shared<std::vector<std::size_t>>(std::move(offsets));
  return {push(std::move(out), std::move(parents), [off, f](Graph& g, int self) {
    const Tensor& go = g.nodes_[self].grad;
    const auto& parents = g.nodes_[self].parents;
    for (std::size_t k = 0; k < parents.size(); ++k) {
      int p = parents[k];
      if (!g.needs_grad(p)) continue;
      Tensor& gp = g.grad_buffer(p);
      const double* src = go.data() + (*off)[k] * f;
      for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += src[i];
    }
  })};
}

NodeId Graph::max_over_time(NodeId stacked, std::size_t timesteps,
                            std::size_t batch) {
  const Tensor& vx = value(stacked);
  if (timesteps == 0) throw Error(ErrorClass::Range, "empty time axis");
  if (vx.rows() != timesteps * batch)
    throw Error(ErrorClass::Shape, "max_over_time row count mismatch");
  const std::size_t c = vx.cols();
  Tensor out({batch, c});
  auto argmax = std::make_shared<std::vector<std::size_t>>(batch * c);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = 0; j < c; ++j) {
      double best = -std::numeric_limits<double>::infinity();
      std::size_t best_row = 0;
      for (std::size_t t = 0; t < timesteps; ++t) {
        const double v = vx[(t * batch + b) * c + j];
        if (v > best) {  // strict: first occurrence wins ties
          best = v;
          best_row = t * batch + b;
        }
      }
      out[b * c + j] = best;
      (*argmax)[b * c + j] = best_row;
    }
  }
  int xi = stacked.v;
  return {push(std::move(out), {xi}, [xi, argmax, batch, c](Graph& g, int self) {
    if (!g.needs_grad(xi)) return;
    const Tensor& go = g.nodes_[self].grad;
    Tensor& gx = g.grad_buffer(xi);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t j = 0; j < c; ++j)
        gx[(*argmax)[b * c + j] * c + j] += go[b * c + j];
  })};
}

NodeId Graph::softmax_cross_entropy(NodeId logits,
                                    const std::vector<int>& labels) {
  const Tensor& vl = value(logits);
  const std::size_t b = vl.rows(), c = vl.cols();
  if (labels.size() != b)
    throw Error(ErrorClass::Shape, "label count must match batch size");
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= c)
      throw Error(ErrorClass::Range, "label out of range");
  if (!vl.all_finite())
    throw Error(ErrorClass::State, "non-finite logits");

  auto probs = std::make_shared<Tensor>(Tensor::zeros({b, c}));
  double loss = 0.0;
  for (std::size_t r = 0; r < b; ++r) {
    const double* row = vl.data() + r * c;
    double m = row[0];
    for (std::size_t j = 1; j < c; ++j) m = std::max(m, row[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(row[j] - m);
    const double logz = std::log(z) + m;
    for (std::size_t j = 0; j < c; ++j)
      (*probs)[r * c + j] = std::exp(row[j] - logz);
    loss -= row[labels[r]] - logz;
  }
  loss /= static_cast<double>(b);

  auto lab = std::make_shared<std::vector<int>>(labels);
  int li = logits.v;
  return {push(Tensor::scalar(loss), {li}, [li, probs, lab, b, c](Graph& g, int self) {
    if (!g.needs_grad(li)) return;
    const double go = g.nodes_[self].grad[0];
    Tensor& gl = g.grad_buffer(li);
    const double inv_b = 1.0 / static_cast<double>(b);
    for (std::size_t r = 0; r < b; ++r) {
      for (std::size_t j = 0; j < c; ++j)
        gl[r * c + j] += go * inv_b * (*probs)[r * c + j];
      gl[r * c + (*lab)[r]] -= go * inv_b;
    }
  })};
}

namespace {
struct BnSaved {
  Tensor xhat;                 // [N x F]
  std::vector<double> invstd;  // [F]
};
}  // namespace

NodeId Graph::batchnorm_train(NodeId x, NodeId gamma, NodeId beta,
                              Tensor& running_mean, Tensor& running_var,
                              double momentum, double epsilon) {
  const Tensor& vx = value(x);
  const std::size_t n = vx.rows(), f = vx.cols();
  if (n < 2)
    throw Error(ErrorClass::Shape,
                "degenerate batch: batchnorm train mode needs >= 2 rows");
  const Tensor& vg = value(gamma);
  const Tensor& vb = value(beta);
  if (vg.size() != f || vb.size() != f || running_mean.size() != f ||
      running_var.size() != f)
    throw Error(ErrorClass::Shape, "batchnorm parameter length mismatch");

  std::vector<double> mean(f, 0.0), var(f, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < f; ++c) mean[c] += vx[r * f + c];
  for (std::size_t c = 0; c < f; ++c) mean[c] /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < f; ++c) {
      const double d = vx[r * f + c] - mean[c];
      var[c] += d * d;
    }
  for (std::size_t c = 0; c < f; ++c) var[c] /= static_cast<double>(n);

  auto saved = std::make_shared<BnSaved>();
  saved->xhat = Tensor::zeros({n, f});
  saved->invstd.resize(f);
  for (std::size_t c = 0; c < f; ++c)
    saved->invstd[c] = 1.0 / std::sqrt(var[c] + epsilon);

  Tensor out({n, f});
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < f; ++c) {
      const double xh = (vx[r * f + c] - mean[c]) * saved->invstd[c];
      saved->xhat[r * f + c] = xh;
      out[r * f + c] = vg[c] * xh + vb[c];
    }

  // Running statistics track the unbiased variance.
  const double unbias = static_cast<double>(n) / static_cast<double>(n - 1);
  for (std::size_t c = 0; c < f; ++c) {
    running_mean[c] = (1.0 - momentum) * running_mean[c] + momentum * mean[c];
    running_var[c] =
        (1.0 - momentum) * running_var[c] + momentum * var[c] * unbias;
  }

  int xi = x.v, gi = gamma.v, bi = beta.v;
  return {push(std::move(out), {xi, gi, bi},
               [xi, gi, bi, saved, n, f](Graph& g, int self) {
    const Tensor& go = g.nodes_[self].grad;
    const Tensor& vg = g.nodes_[gi].value;
    if (g.needs_grad(bi)) {
      Tensor& gb = g.grad_buffer(bi);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < f; ++c) gb[c] += go[r * f + c];
    }
    if (g.needs_grad(gi)) {
      Tensor& gg = g.grad_buffer(gi);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < f; ++c)
          gg[c] += go[r * f + c] * saved->xhat[r * f + c];
    }
    if (g.needs_grad(xi)) {
      // dx = invstd/N * (N*dxhat - sum(dxhat) - xhat * sum(dxhat*xhat))
      std::vector<double> sum_dx(f, 0.0), sum_dxx(f, 0.0);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < f; ++c) {
          const double dxh = go[r * f + c] * vg[c];
          sum_dx[c] += dxh;
          sum_dxx[c] += dxh * saved->xhat[r * f + c];
        }
      Tensor& gx = g.grad_buffer(xi);
      const double inv_n = 1.0 / static_cast<double>(n);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < f; ++c) {
          const double dxh = go[r * f + c] * vg[c];
          gx[r * f + c] += saved->invstd[c] * inv_n *
                           (static_cast<double>(n) * dxh - sum_dx[c] -
                            saved->xhat[r * f + c] * sum_dxx[c]);
        }
    }
  })};
}

NodeId Graph::batchnorm_infer(NodeId x, NodeId gamma, NodeId beta,
                              const Tensor& running_mean,
                              const Tensor& running_var, double epsilon) {
  const Tensor& vx = value(x);
  const std::size_t n = vx.rows(), f = vx.cols();
  const Tensor& vg = value(gamma);
  const Tensor& vb = value(beta);
  if (vg.size() != f || vb.size() != f || running_mean.size() != f ||
      running_var.size() != f)
    throw Error(ErrorClass::Shape, "batchnorm parameter length mismatch");

  auto saved = std::make_shared<BnSaved>();
  saved->xhat = Tensor::zeros({n, f});
  saved->invstd.resize(f);
  for (std::size_t c = 0; c < f; ++c)
    saved->invstd[c] = 1.0 / std::sqrt(running_var[c] + epsilon);

  Tensor out({n, f});
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < f; ++c) {
      const double xh = (vx[r * f + c] - running_mean[c]) * saved->invstd[c];
      saved->xhat[r * f + c] = xh;
      out[r * f + c] = vg[c] * xh + vb[c];
    }

  int xi = x.v, gi = gamma.v, bi = beta.v;
  return {push(std::move(out), {xi, gi, bi},
               [xi, gi, bi, saved, n, f](Graph& g, int self) {
    const Tensor& go = g.nodes_[self].grad;
    const Tensor& vg = g.nodes_[gi].value;
    if (g.needs_grad(bi)) {
      Tensor& gb = g.grad_buffer(bi);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < f; ++c) gb[c] += go[r * f + c];
    }
    if (g.needs_grad(gi)) {
      Tensor& gg = g.grad_buffer(gi);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < f; ++c)
          gg[c] += go[r * f + c] * saved->xhat[r * f + c];
    }
    if (g.needs_grad(xi)) {
      Tensor& gx = g.grad_buffer(xi);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < f; ++c)
          gx[r * f + c] += go[r * f + c] * vg[c] * saved->invstd[c];
    }
  })};
}

NodeId Graph::custom(Tensor value, std::vector<int> parents, BackwardFn fn) {
  return {push(std::move(value), std::move(parents), std::move(fn))};
}

}  // namespace dwsnn
