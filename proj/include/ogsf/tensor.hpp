#pragma once

// Dense tensors with reverse-mode automatic differentiation.
//
// A Tensor is a cheap handle onto a graph node. Leaves are created with
// Tensor::constant or Tensor::parameter; every primitive returns a new node
// that remembers its inputs and a backward rule. backward() walks the graph
// once, returns the gradients of all reachable trainable leaves, and then
// consumes the graph.
//
// Gradients are written into per-call storage, never into leaf nodes, so
// independent graphs that share parameter leaves may be differentiated
// concurrently.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ogsf {

using Real = double;
using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

enum class Primitive {
  Leaf,
  MatMul,
  Add,
  Mul,
  ConcatLastAxis,
  LeakyRelu,
  Sigmoid,
  ReduceMax,
  ReduceSum,
  GatherRows,
  Scale,
  Reshape,
  RowNorm,
  Abs,
  Reciprocal,
};

std::string_view primitive_name(Primitive kind);
// Throws UnsupportedPrimitive for names outside the primitive set.
Primitive primitive_from_name(std::string_view name);

// Attributes consumed by the primitives that need them.
struct PrimitiveAttrs {
  Real slope = 0.1;                  // leaky-relu
  std::size_t axis = 0;              // reduce-max / reduce-sum
  Real factor = 1;                   // scale
  std::vector<std::size_t> indices;  // gather-rows
  Shape shape;                       // reshape
};

class Tensor;
class Gradients;

namespace detail {

struct Node;

// Backward rule: receives the node, the gradient flowing into its output and
// one gradient buffer per input (empty span when that input needs none).
using BackwardFn =
    std::function<void(const Node&, std::span<const Real>, std::span<const std::span<Real>>)>;

struct Node {
  Shape shape;
  std::vector<Real> value;
  Primitive kind = Primitive::Leaf;
  bool requires_grad = false;
  bool consumed = false;
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn backward;
  std::vector<std::size_t> aux;  // argmax positions, gather indices
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Shape shape, std::vector<Real> values);
  static Tensor constant_fill(Shape shape, Real value);
  // Trainable leaf.
  static Tensor parameter(Shape shape, std::vector<Real> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t dim(std::size_t axis) const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const;
  std::span<const Real> values() const;
  // Only leaves may be mutated in place (optimizer steps, checkpoint loads).
  std::span<Real> mutable_values();
  Real item() const;

  bool requires_grad() const;
  bool is_leaf() const;
  Primitive kind() const;
  // Argmax positions recorded by reduce-max (flat input offsets).
  std::span<const std::size_t> argmax() const;
  const detail::Node* id() const { return node_.get(); }

 private:
  friend Tensor make_node(Shape, std::vector<Real>, Primitive, std::vector<Tensor>,
                          detail::BackwardFn, std::vector<std::size_t>);
  friend Gradients backward(const Tensor& loss);
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

// Builds an interior node; exposed for fused layers outside this file.
Tensor make_node(Shape shape, std::vector<Real> value, Primitive kind, std::vector<Tensor> inputs,
                 detail::BackwardFn backward, std::vector<std::size_t> aux = {});

// Gradients of one backward pass, keyed by leaf identity.
class Gradients {
 public:
  // Zeros (of the leaf's size) when the leaf was not reachable from the loss.
  std::vector<Real> of(const Tensor& leaf) const;
  bool contains(const Tensor& leaf) const;
  std::size_t size() const { return grads_.size(); }

 private:
  friend Gradients backward(const Tensor& loss);
  std::unordered_map<const detail::Node*, std::vector<Real>> grads_;
};

// Requires a scalar loss. Consumes the graph; a second call throws StateError.
Gradients backward(const Tensor& loss);

// -- primitives -------------------------------------------------------------

// Dispatch by name, e.g. apply_primitive("sigmoid", {x}, {}).
Tensor apply_primitive(std::string_view kind, std::span<const Tensor> inputs,
                       const PrimitiveAttrs& attrs = {});
Tensor apply_primitive(Primitive kind, std::span<const Tensor> inputs,
                       const PrimitiveAttrs& attrs = {});

// (n x k) * (k x m)
Tensor matmul(const Tensor& a, const Tensor& b);
// Elementwise with numpy-style broadcasting.
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor concat_last_axis(std::span<const Tensor> parts);
Tensor leaky_relu(const Tensor& x, Real slope);
Tensor sigmoid(const Tensor& x);
// Removes `axis`; ties resolve to the lowest index along the axis.
Tensor reduce_max(const Tensor& x, std::size_t axis);
Tensor reduce_sum(const Tensor& x, std::size_t axis);
Tensor gather_rows(const Tensor& x, std::vector<std::size_t> rows);
Tensor scale(const Tensor& x, Real factor);
Tensor reshape(const Tensor& x, Shape shape);
// Euclidean norm over the last axis (zero subgradient at the origin).
Tensor row_norm(const Tensor& x);
Tensor abs(const Tensor& x);
Tensor reciprocal(const Tensor& x);

// Conveniences composed from the primitives above.
Tensor sub(const Tensor& a, const Tensor& b);
Tensor sum_all(const Tensor& x);

namespace testing {

// Multiplies the input gradients produced by one primitive's backward rule
// by `factor` while alive. Used to check that gradient verification catches
// broken rules.
class ScopedBackwardFault {
 public:
  ScopedBackwardFault(Primitive kind, Real factor);
  ~ScopedBackwardFault();
  ScopedBackwardFault(const ScopedBackwardFault&) = delete;
  ScopedBackwardFault& operator=(const ScopedBackwardFault&) = delete;
};

}  // namespace testing

}  // namespace ogsf
