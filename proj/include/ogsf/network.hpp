#pragma once

// Coarse-to-fine scene-flow network with an occlusion-masked cost volume.
//
// Prediction levels are indexed 0 (finest) to 3 (coarsest). Each level holds
// points picked by farthest-point sampling from the level above it (level 0
// samples the raw input). Flow and occlusion are estimated at level 3 first,
// then upsampled, used to warp the target and to mask the cost volume, and
// refined level by level. A final interpolation carries level-0 predictions
// back to every input point.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "ogsf/checkpoint.hpp"
#include "ogsf/config.hpp"
#include "ogsf/geometry.hpp"
#include "ogsf/layers.hpp"
#include "ogsf/tensor.hpp"

namespace ogsf {

inline constexpr std::size_t kLevels = 4;

struct NetworkConfig {
  std::size_t input_feature_dim = 3;
  std::array<std::size_t, kLevels> level_counts{128, 32, 16, 8};
  std::array<std::size_t, kLevels> feature_widths{16, 24, 48, 80};
  std::array<std::size_t, kLevels> cv_widths{8, 16, 32, 64};
  std::size_t k_conv = 16;
  std::size_t k_cost = 16;
  std::size_t k_interp = 3;
  std::size_t k_warp = 3;
  std::size_t weightnet_hidden = 32;
  std::vector<std::size_t> predictor_conv_widths{32, 32};
  std::vector<std::size_t> predictor_mlp_widths{32, 16};
  std::size_t occ_hidden = 16;
  Real slope = 0.1;
  Real epsilon = 1e-8;
  // Multiply matching costs by the upsampled occlusion estimate.
  bool occlusion_mask = true;
  std::uint64_t seed = 1;

  static NetworkConfig desk();
  static NetworkConfig full();
  // `preset = desk|full` picks the base, remaining keys override it.
  static NetworkConfig from_config(const KeyValueConfig& kv);
  void validate() const;
};

struct LevelParams {
  DenseLayer cost_in;   // concat(c, g, q - p) -> d_cv
  DenseLayer cost_out;  // d_cv -> d_cv
  std::vector<PointConvLayer> trunk_conv;
  std::vector<DenseLayer> trunk_mlp;
  DenseLayer flow;
  DenseLayer occ_hidden;
  DenseLayer occ_out;
};

struct NetworkParams {
  std::array<PointConvLayer, kLevels> pyramid;  // shared by source and target
  std::array<LevelParams, kLevels> levels;

  static NetworkParams init(const NetworkConfig& config);
  // Stable order; names are dotted module paths.
  std::vector<NamedTensor> named() const;
};

// Layer family a parameter belongs to ("pyramid.conv", "cost.h",
// "predictor.conv", "predictor.mlp", "predictor.flow", "predictor.occ").
std::string param_family(const std::string& name);

struct PyramidLevel {
  std::vector<Real> positions;             // n_l x 3
  Tensor features;                         // n_l x d_l
  std::vector<std::size_t> parent_indices; // into level l-1 (the input for l = 0)
  std::vector<std::size_t> input_indices;  // into the original cloud

  std::size_t size() const { return positions.size() / 3; }
};

std::array<PyramidLevel, kLevels> build_pyramid(const PointCloud& cloud,
                                                const NetworkParams& params,
                                                const NetworkConfig& config);

// Backward warping of the target toward the source:
//   S_w = S + up_flow, f_b(q) = IDW mean of -up_flow over the K nearest S_w
//   points of q, T_w = T + f_b.
// Differentiable with respect to up_flow, including through the weights.
Tensor warp_target(std::span<const Real> source_positions, std::span<const Real> target_positions,
                   const Tensor& up_flow, std::size_t k, Real epsilon = 1e-8);

struct CostVolume {
  Tensor volume;       // n x d_cv, channel-wise max over neighbours
  Tensor costs;        // n x K x d_cv, masked per-neighbour costs
  Tensor matching;     // n x K x d_cv, h(c, g, q - p) before masking
  NeighborSet neighbors;
};

CostVolume cost_volume(std::span<const Real> source_positions, const Tensor& source_features,
                       const Tensor& warped_target, const Tensor& target_features,
                       const Tensor& occlusion, const DenseLayer& cost_in,
                       const DenseLayer& cost_out, std::size_t k, Real slope = 0.1,
                       bool apply_mask = true);

struct LevelPrediction {
  Tensor flow;       // n x 3 == up_flow + residual
  Tensor occlusion;  // n x 1, in [0, 1]
  Tensor residual;   // n x 3
  Tensor up_flow;
  Tensor up_occlusion;
};

LevelPrediction predict_level(std::span<const Real> source_positions,
                              const Tensor& source_features, const Tensor& volume,
                              const Tensor& up_flow, const Tensor& up_occlusion,
                              const LevelParams& params, const NetworkConfig& config);

struct ForwardResult {
  std::array<PyramidLevel, kLevels> source_levels;
  std::array<PyramidLevel, kLevels> target_levels;
  std::array<LevelPrediction, kLevels> levels;
  Tensor flow;       // n1 x 3 at input resolution
  Tensor occlusion;  // n1 x 1 at input resolution
};

ForwardResult forward(const PointCloud& source, const PointCloud& target,
                      const NetworkParams& params, const NetworkConfig& config);

}  // namespace ogsf
