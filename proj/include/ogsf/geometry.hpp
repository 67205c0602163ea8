#pragma once

// Point-set primitives: farthest-point sampling, k-nearest neighbours and
// inverse-distance interpolation. Positions are flat row-major n x 3 arrays.

#include <cstddef>
#include <span>
#include <vector>

#include "ogsf/tensor.hpp"

namespace ogsf {

struct PointCloud {
  std::vector<Real> positions;  // n x 3, meters
  std::vector<Real> features;   // n x feature_dim
  std::size_t feature_dim = 0;

  std::size_t size() const { return positions.size() / 3; }
  // Throws ContractError on empty clouds, non-finite coordinates or a
  // feature block that does not match the point count.
  void validate() const;
};

struct NeighborSet {
  std::size_t queries = 0;
  std::size_t k = 0;
  std::vector<std::size_t> indices;  // queries x k
  std::vector<Real> distances;       // queries x k, ascending per query

  std::size_t index(std::size_t q, std::size_t j) const { return indices[q * k + j]; }
  Real distance(std::size_t q, std::size_t j) const { return distances[q * k + j]; }
};

// m distinct indices in selection order, starting with seed_index.
std::vector<std::size_t> farthest_point_sample(std::span<const Real> positions, std::size_t m,
                                               std::size_t seed_index = 0);

// K is clamped to the reference size.
NeighborSet k_nearest(std::span<const Real> query, std::span<const Real> reference, std::size_t k);

// Rows of `values` picked by `indices`, copied out of a flat n x width array.
std::vector<Real> gather_positions(std::span<const Real> positions,
                                   std::span<const std::size_t> indices);

// Normalised 1/(d + epsilon) weights over each query's neighbours.
std::vector<Real> inverse_distance_weights(const NeighborSet& neighbors, Real epsilon);

// Upsamples coarse_values (n_coarse x c) onto fine_positions. Weights are
// constants; gradient flows to coarse_values only.
Tensor inverse_distance_interpolate(std::span<const Real> coarse_positions,
                                    const Tensor& coarse_values,
                                    std::span<const Real> fine_positions, std::size_t k,
                                    Real epsilon = 1e-8);

}  // namespace ogsf
