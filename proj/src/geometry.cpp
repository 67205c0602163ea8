#include "ogsf/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ogsf/error.hpp"
#include "ogsf/kernels.hpp"

namespace ogsf {

namespace {

void require_xyz(std::span<const Real> positions, const char* what) {
  if (positions.size() % 3 != 0)
    throw DimensionError(std::string(what) + ": position array length " +
                         std::to_string(positions.size()) + " is not a multiple of 3");
}

}  // namespace

void PointCloud::validate() const {
  require_xyz(positions, "point cloud");
  const std::size_t n = size();
  if (n == 0) throw ContractError("point cloud: no points");
  for (auto v : positions)
    if (!std::isfinite(v)) throw ContractError("point cloud: non-finite coordinate");
  if (features.size() != n * feature_dim)
    throw ContractError("point cloud: " + std::to_string(features.size()) +
                        " feature values for " + std::to_string(n) + " points of width " +
                        std::to_string(feature_dim));
}

std::vector<std::size_t> farthest_point_sample(std::span<const Real> positions, std::size_t m,
                                               std::size_t seed_index) {
  require_xyz(positions, "farthest_point_sample");
  const std::size_t n = positions.size() / 3;
  if (m == 0) throw ContractError("farthest_point_sample: m must be positive");
  if (m > n)
    throw ContractError("farthest_point_sample: m=" + std::to_string(m) + " exceeds n=" +
                        std::to_string(n));
  if (seed_index >= n)
    throw ContractError("farthest_point_sample: seed index " + std::to_string(seed_index) +
                        " out of range");
  std::vector<std::size_t> selected(m);
  kernels::fps(positions, n, m, seed_index, selected);
  return selected;
}

NeighborSet k_nearest(std::span<const Real> query, std::span<const Real> reference,
                      std::size_t k) {
  require_xyz(query, "k_nearest");
  require_xyz(reference, "k_nearest");
  const std::size_t nr = reference.size() / 3;
  if (nr == 0) throw ContractError("k_nearest: empty reference set");
  if (k == 0) throw ContractError("k_nearest: K must be positive");
  NeighborSet out;
  out.queries = query.size() / 3;
  out.k = std::min(k, nr);
  out.indices.resize(out.queries * out.k);
  out.distances.resize(out.queries * out.k);
  kernels::knn(query, out.queries, reference, nr, out.k, out.indices, out.distances);
  return out;
}

std::vector<Real> gather_positions(std::span<const Real> positions,
                                   std::span<const std::size_t> indices) {
  std::vector<Real> out(indices.size() * 3);
  for (std::size_t i = 0; i < indices.size(); ++i)
    std::copy_n(positions.data() + 3 * indices[i], 3, out.data() + 3 * i);
  return out;
}

std::vector<Real> inverse_distance_weights(const NeighborSet& neighbors, Real epsilon) {
  std::vector<Real> w(neighbors.indices.size());
  for (std::size_t q = 0; q < neighbors.queries; ++q) {
    Real total = 0;
    for (std::size_t j = 0; j < neighbors.k; ++j) {
      const Real wj = Real{1} / (neighbors.distance(q, j) + epsilon);
      w[q * neighbors.k + j] = wj;
      total += wj;
    }
    for (std::size_t j = 0; j < neighbors.k; ++j) w[q * neighbors.k + j] /= total;
  }
  return w;
}

Tensor inverse_distance_interpolate(std::span<const Real> coarse_positions,
                                    const Tensor& coarse_values,
                                    std::span<const Real> fine_positions, std::size_t k,
                                    Real epsilon) {
  require_xyz(coarse_positions, "inverse_distance_interpolate");
  const std::size_t nc = coarse_positions.size() / 3;
  if (nc == 0) throw ContractError("inverse_distance_interpolate: empty coarse set");
  if (!(epsilon > 0)) throw ContractError("inverse_distance_interpolate: epsilon must be > 0");
  if (coarse_values.rank() != 2 || coarse_values.dim(0) != nc)
    throw DimensionError("inverse_distance_interpolate: values " +
                         shape_string(coarse_values.shape()) + " for " + std::to_string(nc) +
                         " coarse points");
  const NeighborSet nb = k_nearest(fine_positions, coarse_positions, k);
  const std::size_t channels = coarse_values.dim(1);
  const Tensor weights =
      Tensor::constant({nb.queries, nb.k, 1}, inverse_distance_weights(nb, epsilon));
  const Tensor gathered =
      reshape(gather_rows(coarse_values, nb.indices), {nb.queries, nb.k, channels});
  return reduce_sum(mul(gathered, weights), 1);
}

}  // namespace ogsf
