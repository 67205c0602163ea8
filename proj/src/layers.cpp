#include "ogsf/layers.hpp"

#include <cmath>
#include <random>

#include "ogsf/error.hpp"
#include "ogsf/geometry.hpp"

namespace ogsf {

DenseLayer init_dense(const DenseShape& shape, std::uint64_t seed) {
  if (shape.in == 0 || shape.out == 0)
    throw ContractError("init_dense: channel counts must be positive");
  std::mt19937_64 rng(seed);
  const Real bound = std::sqrt(Real{6} / static_cast<Real>(shape.in + shape.out));
  std::uniform_real_distribution<Real> dist(-bound, bound);
  std::vector<Real> w(shape.in * shape.out);
  for (auto& v : w) v = dist(rng);
  DenseLayer layer;
  layer.in = shape.in;
  layer.out = shape.out;
  layer.activation = shape.activation;
  layer.weight = Tensor::parameter({shape.in, shape.out}, std::move(w));
  layer.bias = Tensor::parameter({shape.out}, std::vector<Real>(shape.out, Real{0}));
  return layer;
}

PointConvLayer init_pointconv(std::size_t in, std::size_t out, std::size_t hidden,
                              Activation activation, std::uint64_t seed) {
  PointConvLayer layer;
  layer.in = in;
  layer.out = out;
  std::seed_seq seq{seed, std::uint64_t{0x9e3779b97f4a7c15ULL}};
  std::vector<std::uint64_t> seeds(3);
  seq.generate(seeds.begin(), seeds.end());
  layer.weightnet.push_back(init_dense({3, hidden, Activation::LeakyRelu}, seeds[0]));
  layer.weightnet.push_back(init_dense({hidden, in, Activation::None}, seeds[1]));
  layer.output = init_dense({in, out, activation}, seeds[2]);
  return layer;
}

Tensor dense(const Tensor& x, const DenseLayer& layer, Real slope) {
  if (x.rank() != 2 || x.dim(1) != layer.in)
    throw DimensionError("dense: input " + shape_string(x.shape()) + " for layer " +
                         std::to_string(layer.in) + "->" + std::to_string(layer.out));
  Tensor y = add(matmul(x, layer.weight), layer.bias);
  switch (layer.activation) {
    case Activation::LeakyRelu:
      return leaky_relu(y, slope);
    case Activation::Sigmoid:
      return sigmoid(y);
    case Activation::None:
      break;
  }
  return y;
}

Tensor mlp_stack(const Tensor& features, std::span<const DenseLayer> layers, Real slope) {
  Tensor x = features;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (i > 0 && layers[i].in != layers[i - 1].out)
      throw DimensionError("mlp_stack: layer " + std::to_string(i) + " expects " +
                           std::to_string(layers[i].in) + " channels, previous emits " +
                           std::to_string(layers[i - 1].out));
    x = dense(x, layers[i], slope);
  }
  return x;
}

Tensor pointconv(std::span<const Real> out_positions, std::span<const Real> in_positions,
                 const Tensor& in_features, const PointConvLayer& layer, std::size_t k,
                 Real slope) {
  const std::size_t n = in_positions.size() / 3;
  if (in_features.rank() != 2 || in_features.dim(0) != n || in_features.dim(1) != layer.in)
    throw DimensionError("pointconv: features " + shape_string(in_features.shape()) + " for " +
                         std::to_string(n) + " points and " + std::to_string(layer.in) +
                         " input channels");
  if (layer.weightnet.empty() || layer.weightnet.back().out != layer.in)
    throw DimensionError("pointconv: weight MLP must emit " + std::to_string(layer.in) +
                         " channels");
  const NeighborSet nb = k_nearest(out_positions, in_positions, k);
  const std::size_t m = nb.queries;
  std::vector<Real> rel(m * nb.k * 3);
  for (std::size_t q = 0; q < m; ++q) {
    for (std::size_t j = 0; j < nb.k; ++j) {
      const std::size_t src = nb.index(q, j);
      for (std::size_t c = 0; c < 3; ++c)
        rel[(q * nb.k + j) * 3 + c] = in_positions[3 * src + c] - out_positions[3 * q + c];
    }
  }
  const Tensor kernel = mlp_stack(Tensor::constant({m * nb.k, 3}, std::move(rel)),
                                  layer.weightnet, slope);
  const Tensor grouped = gather_rows(in_features, nb.indices);
  const Tensor summed = reduce_sum(reshape(mul(kernel, grouped), {m, nb.k, layer.in}), 1);
  return dense(summed, layer.output, slope);
}

void collect_params(const std::string& prefix, const DenseLayer& layer,
                    std::vector<NamedTensor>& out) {
  out.push_back({prefix + ".weight", layer.weight});
  out.push_back({prefix + ".bias", layer.bias});
}

void collect_params(const std::string& prefix, const PointConvLayer& layer,
                    std::vector<NamedTensor>& out) {
  for (std::size_t i = 0; i < layer.weightnet.size(); ++i)
    collect_params(prefix + ".weightnet" + std::to_string(i), layer.weightnet[i], out);
  collect_params(prefix + ".out", layer.output, out);
}

}  // namespace ogsf
