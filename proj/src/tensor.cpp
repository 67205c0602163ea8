#include "ogsf/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "ogsf/error.hpp"
#include "ogsf/kernels.hpp"

namespace ogsf {

using detail::Node;

namespace {

Primitive g_fault_kind = Primitive::Leaf;
Real g_fault_factor = 1;

[[noreturn]] void dimension_error(std::string_view op, std::initializer_list<Shape> shapes,
                                  std::string_view detail = {}) {
  std::ostringstream os;
  os << op << ": shape mismatch";
  for (const auto& s : shapes) os << ' ' << shape_string(s);
  if (!detail.empty()) os << " (" << detail << ')';
  throw DimensionError(os.str());
}

// Output shape plus per-element source offsets for a broadcast binary op.
struct Broadcast {
  Shape out;
  bool same = false;
  std::vector<std::size_t> ia, ib;
};

Broadcast plan_broadcast(const Shape& a, const Shape& b, std::string_view op) {
  Broadcast bc;
  if (a == b) {
    bc.out = a;
    bc.same = true;
    return bc;
  }
  const std::size_t rank = std::max(a.size(), b.size());
  Shape pa(rank, 1), pb(rank, 1);
  std::copy(a.begin(), a.end(), pa.begin() + static_cast<std::ptrdiff_t>(rank - a.size()));
  std::copy(b.begin(), b.end(), pb.begin() + static_cast<std::ptrdiff_t>(rank - b.size()));
  bc.out.resize(rank);
  for (std::size_t d = 0; d < rank; ++d) {
    if (pa[d] != pb[d] && pa[d] != 1 && pb[d] != 1) dimension_error(op, {a, b});
    bc.out[d] = std::max(pa[d], pb[d]);
  }
  // Row-major strides, zeroed along broadcast axes.
  std::vector<std::size_t> sa(rank), sb(rank);
  std::size_t ra = 1, rb = 1;
  for (std::size_t d = rank; d-- > 0;) {
    sa[d] = pa[d] == 1 ? 0 : ra;
    sb[d] = pb[d] == 1 ? 0 : rb;
    ra *= pa[d];
    rb *= pb[d];
  }
  const std::size_t total = shape_numel(bc.out);
  bc.ia.resize(total);
  bc.ib.resize(total);
  std::vector<std::size_t> idx(rank, 0);
  std::size_t oa = 0, ob = 0;
  for (std::size_t o = 0; o < total; ++o) {
    bc.ia[o] = oa;
    bc.ib[o] = ob;
    for (std::size_t d = rank; d-- > 0;) {
      ++idx[d];
      oa += sa[d];
      ob += sb[d];
      if (idx[d] < bc.out[d]) break;
      oa -= sa[d] * idx[d];
      ob -= sb[d] * idx[d];
      idx[d] = 0;
    }
  }
  return bc;
}

Shape drop_axis(const Shape& s, std::size_t axis) {
  Shape out;
  for (std::size_t d = 0; d < s.size(); ++d)
    if (d != axis) out.push_back(s[d]);
  if (out.empty()) out.push_back(1);
  return out;
}

// Splits a shape around `axis` into (outer, length, inner) extents.
void split_axis(const Shape& s, std::size_t axis, std::size_t& outer, std::size_t& len,
                std::size_t& inner) {
  outer = 1;
  inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= s[d];
  len = s[axis];
  for (std::size_t d = axis + 1; d < s.size(); ++d) inner *= s[d];
}

void require_arity(std::string_view op, std::span<const Tensor> inputs, std::size_t n) {
  if (inputs.size() != n) {
    throw ContractError(std::string(op) + ": expected " + std::to_string(n) + " inputs, got " +
                        std::to_string(inputs.size()));
  }
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

namespace {

constexpr std::pair<Primitive, std::string_view> kNames[] = {
    {Primitive::Leaf, "leaf"},
    {Primitive::MatMul, "matmul"},
    {Primitive::Add, "add"},
    {Primitive::Mul, "mul"},
    {Primitive::ConcatLastAxis, "concat-last-axis"},
    {Primitive::LeakyRelu, "leaky-relu"},
    {Primitive::Sigmoid, "sigmoid"},
    {Primitive::ReduceMax, "reduce-max-over-axis"},
    {Primitive::ReduceSum, "reduce-sum-over-axis"},
    {Primitive::GatherRows, "gather-rows"},
    {Primitive::Scale, "scale"},
    {Primitive::Reshape, "reshape"},
    {Primitive::RowNorm, "row-norm"},
    {Primitive::Abs, "abs"},
    {Primitive::Reciprocal, "reciprocal"},
};

}  // namespace

std::string_view primitive_name(Primitive kind) {
  for (const auto& [k, name] : kNames)
    if (k == kind) return name;
  return "unknown";
}

Primitive primitive_from_name(std::string_view name) {
  for (const auto& [k, n] : kNames)
    if (n == name && k != Primitive::Leaf) return k;
  throw UnsupportedPrimitive("unsupported primitive '" + std::string(name) + "'");
}

// -- Tensor -----------------------------------------------------------------

Tensor Tensor::constant(Shape shape, std::vector<Real> values) {
  if (shape_numel(shape) != values.size()) {
    throw DimensionError("constant: shape " + shape_string(shape) + " needs " +
                         std::to_string(shape_numel(shape)) + " values, got " +
                         std::to_string(values.size()));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  return Tensor(std::move(node));
}

Tensor Tensor::constant_fill(Shape shape, Real value) {
  const auto n = shape_numel(shape);
  return constant(std::move(shape), std::vector<Real>(n, value));
}

Tensor Tensor::parameter(Shape shape, std::vector<Real> values) {
  Tensor t = constant(std::move(shape), std::move(values));
  t.node_->requires_grad = true;
  return t;
}

const Shape& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::dim(std::size_t axis) const { return node_->shape.at(axis); }
std::size_t Tensor::numel() const { return node_->value.size(); }
std::span<const Real> Tensor::values() const { return node_->value; }

std::span<Real> Tensor::mutable_values() {
  if (node_->kind != Primitive::Leaf) throw StateError("only leaf tensors may be mutated");
  return node_->value;
}

Real Tensor::item() const {
  if (numel() != 1) throw ContractError("item() on tensor of shape " + shape_string(shape()));
  return node_->value[0];
}

bool Tensor::requires_grad() const { return node_->requires_grad; }
bool Tensor::is_leaf() const { return node_->kind == Primitive::Leaf; }
Primitive Tensor::kind() const { return node_->kind; }
std::span<const std::size_t> Tensor::argmax() const { return node_->aux; }

Tensor make_node(Shape shape, std::vector<Real> value, Primitive kind, std::vector<Tensor> inputs,
                 detail::BackwardFn backward, std::vector<std::size_t> aux) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->kind = kind;
  node->aux = std::move(aux);
  for (auto& in : inputs) {
    if (in.node_->consumed) throw StateError("input to " + std::string(primitive_name(kind)) +
                                             " belongs to a consumed graph");
    node->requires_grad = node->requires_grad || in.node_->requires_grad;
  }
  if (node->requires_grad) {
    node->inputs.reserve(inputs.size());
    for (auto& in : inputs) node->inputs.push_back(std::move(in.node_));
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

// -- backward ---------------------------------------------------------------

std::vector<Real> Gradients::of(const Tensor& leaf) const {
  auto it = grads_.find(leaf.id());
  if (it == grads_.end()) return std::vector<Real>(leaf.numel(), Real{0});
  return it->second;
}

bool Gradients::contains(const Tensor& leaf) const { return grads_.count(leaf.id()) != 0; }

Gradients backward(const Tensor& loss) {
  Node* root = loss.node_.get();
  if (root == nullptr) throw ContractError("backward: undefined loss tensor");
  if (root->value.size() != 1)
    throw ContractError("backward: loss must be scalar, got shape " + shape_string(root->shape));
  if (root->consumed) throw StateError("backward: graph already consumed by a previous backward");

  // Post-order over nodes that participate in differentiation.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  if (root->requires_grad) {
    stack.emplace_back(root, 0);
    visited.insert(root);
  }
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) {
        if (child->consumed) throw StateError("backward: graph already consumed");
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  Gradients result;
  std::unordered_map<Node*, std::vector<Real>> grads;
  grads.reserve(order.size());
  if (root->requires_grad) grads[root] = {Real{1}};

  std::vector<std::span<Real>> in_grads;
  std::vector<Real> faulted;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    auto git = grads.find(node);
    if (git == grads.end()) continue;
    if (node->kind == Primitive::Leaf) {
      result.grads_.emplace(node, std::move(git->second));
      continue;
    }
    in_grads.assign(node->inputs.size(), std::span<Real>{});
    for (std::size_t i = 0; i < node->inputs.size(); ++i) {
      Node* in = node->inputs[i].get();
      if (!in->requires_grad) continue;
      auto& buf = grads[in];
      if (buf.empty()) buf.assign(in->value.size(), Real{0});
      in_grads[i] = buf;
    }
    // `grads` may rehash above; look the output gradient up again.
    std::span<const Real> gout = grads[node];
    if (node->kind == g_fault_kind) {
      faulted.assign(gout.begin(), gout.end());
      for (auto& g : faulted) g *= g_fault_factor;
      gout = faulted;
    }
    node->backward(*node, gout, in_grads);
    grads.erase(node);
  }

  for (Node* node : order) {
    if (node->kind == Primitive::Leaf) continue;
    node->consumed = true;
    node->backward = nullptr;
    node->inputs.clear();
  }
  if (!root->requires_grad) root->consumed = true;
  return result;
}

namespace testing {

ScopedBackwardFault::ScopedBackwardFault(Primitive kind, Real factor) {
  g_fault_kind = kind;
  g_fault_factor = factor;
}

ScopedBackwardFault::~ScopedBackwardFault() {
  g_fault_kind = Primitive::Leaf;
  g_fault_factor = 1;
}

}  // namespace testing

// -- primitives -------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    dimension_error("matmul", {a.shape(), b.shape()});
  const std::size_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
  std::vector<Real> out(n * m);
  kernels::gemm(a.values(), b.values(), out, n, k, m);
  return make_node({n, m}, std::move(out), Primitive::MatMul, {a, b},
                   [n, k, m](const Node& self, std::span<const Real> g,
                             std::span<const std::span<Real>> gin) {
                     const auto& av = self.inputs[0]->value;
                     const auto& bv = self.inputs[1]->value;
                     if (!gin[0].empty()) kernels::gemm_nt_acc(g, bv, gin[0], n, k, m);
                     if (!gin[1].empty()) kernels::gemm_tn_acc(av, g, gin[1], n, k, m);
                   });
}

Tensor add(const Tensor& a, const Tensor& b) {
  auto bc = std::make_shared<Broadcast>(plan_broadcast(a.shape(), b.shape(), "add"));
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<Real> out(shape_numel(bc->out));
  if (bc->same) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[bc->ia[i]] + bv[bc->ib[i]];
  }
  Shape shape = bc->out;
  return make_node(std::move(shape), std::move(out), Primitive::Add, {a, b},
                   [bc](const Node&, std::span<const Real> g,
                        std::span<const std::span<Real>> gin) {
                     for (std::size_t side = 0; side < 2; ++side) {
                       if (gin[side].empty()) continue;
                       auto& dst = gin[side];
                       if (bc->same) {
                         for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
                       } else {
                         const auto& map = side == 0 ? bc->ia : bc->ib;
                         for (std::size_t i = 0; i < g.size(); ++i) dst[map[i]] += g[i];
                       }
                     }
                   });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  auto bc = std::make_shared<Broadcast>(plan_broadcast(a.shape(), b.shape(), "mul"));
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<Real> out(shape_numel(bc->out));
  if (bc->same) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[bc->ia[i]] * bv[bc->ib[i]];
  }
  Shape shape = bc->out;
  return make_node(std::move(shape), std::move(out), Primitive::Mul, {a, b},
                   [bc](const Node& self, std::span<const Real> g,
                        std::span<const std::span<Real>> gin) {
                     const auto& av = self.inputs[0]->value;
                     const auto& bv = self.inputs[1]->value;
                     if (bc->same) {
                       if (!gin[0].empty())
                         for (std::size_t i = 0; i < g.size(); ++i) gin[0][i] += g[i] * bv[i];
                       if (!gin[1].empty())
                         for (std::size_t i = 0; i < g.size(); ++i) gin[1][i] += g[i] * av[i];
                     } else {
                       if (!gin[0].empty())
                         for (std::size_t i = 0; i < g.size(); ++i)
                           gin[0][bc->ia[i]] += g[i] * bv[bc->ib[i]];
                       if (!gin[1].empty())
                         for (std::size_t i = 0; i < g.size(); ++i)
                           gin[1][bc->ib[i]] += g[i] * av[bc->ia[i]];
                     }
                   });
}

Tensor concat_last_axis(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("concat-last-axis: no inputs");
  const Shape& first = parts[0].shape();
  const std::size_t rank = first.size();
  const std::size_t rows = shape_numel(first) / first.back();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != rank || !std::equal(s.begin(), s.end() - 1, first.begin()))
      dimension_error("concat-last-axis", {first, s});
    widths.push_back(s.back());
    total += s.back();
  }
  std::vector<Real> out(rows * total);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto v = parts[p].values();
    const std::size_t w = widths[p];
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(v.data() + r * w, w, out.data() + r * total + offset);
    offset += w;
  }
  Shape shape = first;
  shape.back() = total;
  return make_node(std::move(shape), std::move(out), Primitive::ConcatLastAxis,
                   std::vector<Tensor>(parts.begin(), parts.end()),
                   [widths, rows, total](const Node&, std::span<const Real> g,
                                         std::span<const std::span<Real>> gin) {
                     std::size_t offset = 0;
                     for (std::size_t p = 0; p < widths.size(); ++p) {
                       const std::size_t w = widths[p];
                       if (!gin[p].empty()) {
                         for (std::size_t r = 0; r < rows; ++r)
                           for (std::size_t c = 0; c < w; ++c)
                             gin[p][r * w + c] += g[r * total + offset + c];
                       }
                       offset += w;
                     }
                   });
}

Tensor leaky_relu(const Tensor& x, Real slope) {
  const auto xv = x.values();
  std::vector<Real> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > 0 ? xv[i] : slope * xv[i];
  return make_node(x.shape(), std::move(out), Primitive::LeakyRelu, {x},
                   [slope](const Node& self, std::span<const Real> g,
                           std::span<const std::span<Real>> gin) {
                     const auto& xv = self.inputs[0]->value;
                     for (std::size_t i = 0; i < g.size(); ++i)
                       gin[0][i] += xv[i] > 0 ? g[i] : slope * g[i];
                   });
}

Tensor sigmoid(const Tensor& x) {
  const auto xv = x.values();
  std::vector<Real> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (xv[i] >= 0) {
      out[i] = Real{1} / (Real{1} + std::exp(-xv[i]));
    } else {
      const Real e = std::exp(xv[i]);
      out[i] = e / (Real{1} + e);
    }
  }
  return make_node(x.shape(), std::move(out), Primitive::Sigmoid, {x},
                   [](const Node& self, std::span<const Real> g,
                      std::span<const std::span<Real>> gin) {
                     const auto& y = self.value;
                     for (std::size_t i = 0; i < g.size(); ++i)
                       gin[0][i] += g[i] * y[i] * (Real{1} - y[i]);
                   });
}

Tensor reduce_max(const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) dimension_error("reduce-max-over-axis", {x.shape()}, "axis out of range");
  std::size_t outer, len, inner;
  split_axis(x.shape(), axis, outer, len, inner);
  if (len == 0) dimension_error("reduce-max-over-axis", {x.shape()}, "empty axis");
  const auto xv = x.values();
  std::vector<Real> out(outer * inner);
  std::vector<std::size_t> arg(outer * inner);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      std::size_t best = o * len * inner + i;
      for (std::size_t l = 1; l < len; ++l) {
        const std::size_t at = (o * len + l) * inner + i;
        if (xv[at] > xv[best]) best = at;
      }
      out[o * inner + i] = xv[best];
      arg[o * inner + i] = best;
    }
  }
  return make_node(drop_axis(x.shape(), axis), std::move(out), Primitive::ReduceMax, {x},
                   [](const Node& self, std::span<const Real> g,
                      std::span<const std::span<Real>> gin) {
                     for (std::size_t i = 0; i < g.size(); ++i) gin[0][self.aux[i]] += g[i];
                   },
                   std::move(arg));
}

Tensor reduce_sum(const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) dimension_error("reduce-sum-over-axis", {x.shape()}, "axis out of range");
  std::size_t outer, len, inner;
  split_axis(x.shape(), axis, outer, len, inner);
  const auto xv = x.values();
  std::vector<Real> out(outer * inner, Real{0});
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t l = 0; l < len; ++l)
      for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] += xv[(o * len + l) * inner + i];
  return make_node(drop_axis(x.shape(), axis), std::move(out), Primitive::ReduceSum, {x},
                   [outer, len, inner](const Node&, std::span<const Real> g,
                                       std::span<const std::span<Real>> gin) {
                     for (std::size_t o = 0; o < outer; ++o)
                       for (std::size_t l = 0; l < len; ++l)
                         for (std::size_t i = 0; i < inner; ++i)
                           gin[0][(o * len + l) * inner + i] += g[o * inner + i];
                   });
}

Tensor gather_rows(const Tensor& x, std::vector<std::size_t> rows) {
  if (x.rank() < 1) dimension_error("gather-rows", {x.shape()});
  const std::size_t n = x.dim(0);
  const std::size_t width = n == 0 ? 0 : x.numel() / n;
  for (auto r : rows) {
    if (r >= n)
      throw ContractError("gather-rows: index " + std::to_string(r) + " out of range for " +
                          std::to_string(n) + " rows");
  }
  const auto xv = x.values();
  std::vector<Real> out(rows.size() * width);
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy_n(xv.data() + rows[i] * width, width, out.data() + i * width);
  Shape shape = x.shape();
  shape[0] = rows.size();
  return make_node(std::move(shape), std::move(out), Primitive::GatherRows, {x},
                   [width](const Node& self, std::span<const Real> g,
                           std::span<const std::span<Real>> gin) {
                     for (std::size_t i = 0; i < self.aux.size(); ++i) {
                       Real* dst = gin[0].data() + self.aux[i] * width;
                       const Real* src = g.data() + i * width;
                       for (std::size_t c = 0; c < width; ++c) dst[c] += src[c];
                     }
                   },
                   std::move(rows));
}

Tensor scale(const Tensor& x, Real factor) {
  const auto xv = x.values();
  std::vector<Real> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = factor * xv[i];
  return make_node(x.shape(), std::move(out), Primitive::Scale, {x},
                   [factor](const Node&, std::span<const Real> g,
                            std::span<const std::span<Real>> gin) {
                     for (std::size_t i = 0; i < g.size(); ++i) gin[0][i] += factor * g[i];
                   });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) dimension_error("reshape", {x.shape(), shape});
  const auto xv = x.values();
  return make_node(std::move(shape), std::vector<Real>(xv.begin(), xv.end()), Primitive::Reshape,
                   {x},
                   [](const Node&, std::span<const Real> g, std::span<const std::span<Real>> gin) {
                     for (std::size_t i = 0; i < g.size(); ++i) gin[0][i] += g[i];
                   });
}

Tensor row_norm(const Tensor& x) {
  if (x.rank() < 1) dimension_error("row-norm", {x.shape()});
  const std::size_t width = x.shape().back();
  const std::size_t rows = width == 0 ? 0 : x.numel() / width;
  const auto xv = x.values();
  std::vector<Real> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    Real s = 0;
    for (std::size_t c = 0; c < width; ++c) s += xv[r * width + c] * xv[r * width + c];
    out[r] = std::sqrt(s);
  }
  return make_node(drop_axis(x.shape(), x.rank() - 1), std::move(out), Primitive::RowNorm, {x},
                   [width](const Node& self, std::span<const Real> g,
                           std::span<const std::span<Real>> gin) {
                     const auto& xv = self.inputs[0]->value;
                     for (std::size_t r = 0; r < self.value.size(); ++r) {
                       const Real norm = self.value[r];
                       if (norm == Real{0}) continue;
                       const Real s = g[r] / norm;
                       for (std::size_t c = 0; c < width; ++c)
                         gin[0][r * width + c] += s * xv[r * width + c];
                     }
                   });
}

Tensor abs(const Tensor& x) {
  const auto xv = x.values();
  std::vector<Real> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::fabs(xv[i]);
  return make_node(x.shape(), std::move(out), Primitive::Abs, {x},
                   [](const Node& self, std::span<const Real> g,
                      std::span<const std::span<Real>> gin) {
                     const auto& xv = self.inputs[0]->value;
                     for (std::size_t i = 0; i < g.size(); ++i) {
                       if (xv[i] > 0) gin[0][i] += g[i];
                       else if (xv[i] < 0) gin[0][i] -= g[i];
                     }
                   });
}

Tensor reciprocal(const Tensor& x) {
  const auto xv = x.values();
  std::vector<Real> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = Real{1} / xv[i];
  return make_node(x.shape(), std::move(out), Primitive::Reciprocal, {x},
                   [](const Node& self, std::span<const Real> g,
                      std::span<const std::span<Real>> gin) {
                     const auto& y = self.value;
                     for (std::size_t i = 0; i < g.size(); ++i) gin[0][i] -= g[i] * y[i] * y[i];
                   });
}

Tensor sub(const Tensor& a, const Tensor& b) { return add(a, scale(b, Real{-1})); }

Tensor sum_all(const Tensor& x) { return reduce_sum(reshape(x, {x.numel()}), 0); }

Tensor apply_primitive(Primitive kind, std::span<const Tensor> in, const PrimitiveAttrs& attrs) {
  const auto name = primitive_name(kind);
  switch (kind) {
    case Primitive::MatMul:
      require_arity(name, in, 2);
      return matmul(in[0], in[1]);
    case Primitive::Add:
      require_arity(name, in, 2);
      return add(in[0], in[1]);
    case Primitive::Mul:
      require_arity(name, in, 2);
      return mul(in[0], in[1]);
    case Primitive::ConcatLastAxis:
      return concat_last_axis(in);
    case Primitive::LeakyRelu:
      require_arity(name, in, 1);
      return leaky_relu(in[0], attrs.slope);
    case Primitive::Sigmoid:
      require_arity(name, in, 1);
      return sigmoid(in[0]);
    case Primitive::ReduceMax:
      require_arity(name, in, 1);
      return reduce_max(in[0], attrs.axis);
    case Primitive::ReduceSum:
      require_arity(name, in, 1);
      return reduce_sum(in[0], attrs.axis);
    case Primitive::GatherRows:
      require_arity(name, in, 1);
      return gather_rows(in[0], attrs.indices);
    case Primitive::Scale:
      require_arity(name, in, 1);
      return scale(in[0], attrs.factor);
    case Primitive::Reshape:
      require_arity(name, in, 1);
      return reshape(in[0], attrs.shape);
    case Primitive::RowNorm:
      require_arity(name, in, 1);
      return row_norm(in[0]);
    case Primitive::Abs:
      require_arity(name, in, 1);
      return abs(in[0]);
    case Primitive::Reciprocal:
      require_arity(name, in, 1);
      return reciprocal(in[0]);
    case Primitive::Leaf:
      break;
  }
  throw UnsupportedPrimitive("unsupported primitive '" + std::string(name) + "'");
}

Tensor apply_primitive(std::string_view kind, std::span<const Tensor> inputs,
                       const PrimitiveAttrs& attrs) {
  return apply_primitive(primitive_from_name(kind), inputs, attrs);
}

}  // namespace ogsf
