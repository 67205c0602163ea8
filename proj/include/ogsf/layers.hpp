#pragma once

// Learnable point-set layers built from tensor primitives.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ogsf/checkpoint.hpp"
#include "ogsf/tensor.hpp"

namespace ogsf {

enum class Activation { None, LeakyRelu, Sigmoid };

// Per-point shared affine map (a 1x1 convolution over points) plus activation.
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::None;
  Tensor weight;  // in x out
  Tensor bias;    // out
};

// Kernel weights for each neighbour come from a small MLP on the relative
// position; the weighted neighbour features are summed and mapped by `output`.
struct PointConvLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<DenseLayer> weightnet;
  DenseLayer output;
};

struct DenseShape {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::None;
};

// Glorot-uniform weights in +-sqrt(6/(in+out)), zero bias.
DenseLayer init_dense(const DenseShape& shape, std::uint64_t seed);

// Weight MLP: 3 -> hidden (leaky-relu) -> in.
PointConvLayer init_pointconv(std::size_t in, std::size_t out, std::size_t hidden,
                              Activation activation, std::uint64_t seed);

Tensor dense(const Tensor& x, const DenseLayer& layer, Real slope = 0.1);
Tensor mlp_stack(const Tensor& features, std::span<const DenseLayer> layers, Real slope = 0.1);

// out_positions: m x 3, in_positions: n x 3, in_features: n x layer.in.
Tensor pointconv(std::span<const Real> out_positions, std::span<const Real> in_positions,
                 const Tensor& in_features, const PointConvLayer& layer, std::size_t k,
                 Real slope = 0.1);

void collect_params(const std::string& prefix, const DenseLayer& layer,
                    std::vector<NamedTensor>& out);
void collect_params(const std::string& prefix, const PointConvLayer& layer,
                    std::vector<NamedTensor>& out);

}  // namespace ogsf
