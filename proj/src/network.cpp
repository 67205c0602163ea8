#include "ogsf/network.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <string>

#include "ogsf/error.hpp"

namespace ogsf {

namespace {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(index)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

template <std::size_t N>
std::array<std::size_t, N> to_array(const std::vector<std::size_t>& v, const char* key) {
  if (v.size() != N)
    throw ConfigError(std::string("config key '") + key + "' needs " + std::to_string(N) +
                      " values, got " + std::to_string(v.size()));
  std::array<std::size_t, N> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

std::vector<std::size_t> as_vector(const std::array<std::size_t, kLevels>& a) {
  return {a.begin(), a.end()};
}

}  // namespace

NetworkConfig NetworkConfig::desk() { return NetworkConfig{}; }

NetworkConfig NetworkConfig::full() {
  NetworkConfig c;
  c.level_counts = {2048, 512, 256, 128};
  c.feature_widths = {64, 96, 192, 320};
  c.cv_widths = {32, 64, 128, 256};
  c.predictor_conv_widths = {128, 128};
  c.predictor_mlp_widths = {128, 64};
  c.occ_hidden = 32;
  return c;
}

NetworkConfig NetworkConfig::from_config(const KeyValueConfig& kv) {
  const std::string preset = kv.get_string("preset", "desk");
  NetworkConfig c;
  if (preset == "full") {
    c = full();
  } else if (preset != "desk") {
    throw ConfigError("unknown preset '" + preset + "' (expected desk or full)");
  }
  c.input_feature_dim = kv.get_size("input_feature_dim", c.input_feature_dim);
  c.level_counts = to_array<kLevels>(kv.get_sizes("level_counts", as_vector(c.level_counts)),
                                     "level_counts");
  c.feature_widths = to_array<kLevels>(
      kv.get_sizes("feature_widths", as_vector(c.feature_widths)), "feature_widths");
  c.cv_widths =
      to_array<kLevels>(kv.get_sizes("cv_widths", as_vector(c.cv_widths)), "cv_widths");
  c.k_conv = kv.get_size("k_conv", c.k_conv);
  c.k_cost = kv.get_size("k_cost", c.k_cost);
  c.k_interp = kv.get_size("k_interp", c.k_interp);
  c.k_warp = kv.get_size("k_warp", c.k_warp);
  c.weightnet_hidden = kv.get_size("weightnet_hidden", c.weightnet_hidden);
  c.predictor_conv_widths = kv.get_sizes("predictor_conv_widths", c.predictor_conv_widths);
  c.predictor_mlp_widths = kv.get_sizes("predictor_mlp_widths", c.predictor_mlp_widths);
  c.occ_hidden = kv.get_size("occ_hidden", c.occ_hidden);
  c.slope = kv.get_real("slope", c.slope);
  c.epsilon = kv.get_real("epsilon", c.epsilon);
  c.occlusion_mask = kv.get_bool("occlusion_mask", c.occlusion_mask);
  c.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<std::int64_t>(c.seed)));
  c.validate();
  return c;
}

void NetworkConfig::validate() const {
  for (std::size_t l = 0; l < kLevels; ++l) {
    if (level_counts[l] == 0 || feature_widths[l] == 0 || cv_widths[l] == 0)
      throw ConfigError("network: level sizes and widths must be positive");
    if (l > 0 && level_counts[l] >= level_counts[l - 1])
      throw ConfigError("network: level_counts must be strictly decreasing");
  }
  if (input_feature_dim == 0) throw ConfigError("network: input_feature_dim must be positive");
  if (k_conv == 0 || k_cost == 0 || k_interp == 0 || k_warp == 0)
    throw ConfigError("network: neighbour counts must be positive");
  if (weightnet_hidden == 0 || occ_hidden == 0)
    throw ConfigError("network: hidden widths must be positive");
  for (auto w : predictor_conv_widths)
    if (w == 0) throw ConfigError("network: predictor_conv_widths must be positive");
  for (auto w : predictor_mlp_widths)
    if (w == 0) throw ConfigError("network: predictor_mlp_widths must be positive");
  if (!(slope >= 0) || !(epsilon > 0)) throw ConfigError("network: bad slope or epsilon");
}

NetworkParams NetworkParams::init(const NetworkConfig& config) {
  config.validate();
  NetworkParams p;
  std::uint64_t counter = 0;
  const auto next = [&] { return derive_seed(config.seed, counter++); };
  for (std::size_t l = 0; l < kLevels; ++l) {
    const std::size_t in = l == 0 ? config.input_feature_dim : config.feature_widths[l - 1];
    p.pyramid[l] = init_pointconv(in, config.feature_widths[l], config.weightnet_hidden,
                                  Activation::LeakyRelu, next());
  }
  for (std::size_t l = 0; l < kLevels; ++l) {
    const std::size_t d = config.feature_widths[l];
    const std::size_t dcv = config.cv_widths[l];
    LevelParams& lp = p.levels[l];
    lp.cost_in = init_dense({2 * d + 3, dcv, Activation::LeakyRelu}, next());
    lp.cost_out = init_dense({dcv, dcv, Activation::None}, next());
    std::size_t width = d + dcv + 4;
    for (auto w : config.predictor_conv_widths) {
      lp.trunk_conv.push_back(
          init_pointconv(width, w, config.weightnet_hidden, Activation::LeakyRelu, next()));
      width = w;
    }
    for (auto w : config.predictor_mlp_widths) {
      lp.trunk_mlp.push_back(init_dense({width, w, Activation::LeakyRelu}, next()));
      width = w;
    }
    lp.flow = init_dense({width, 3, Activation::None}, next());
    lp.occ_hidden = init_dense({width, config.occ_hidden, Activation::LeakyRelu}, next());
    lp.occ_out = init_dense({config.occ_hidden, 1, Activation::Sigmoid}, next());
  }
  return p;
}

std::vector<NamedTensor> NetworkParams::named() const {
  std::vector<NamedTensor> out;
  for (std::size_t l = 0; l < kLevels; ++l)
    collect_params("pyramid.l" + std::to_string(l) + ".conv", pyramid[l], out);
  for (std::size_t l = 0; l < kLevels; ++l) {
    const std::string base = "level" + std::to_string(l);
    const LevelParams& lp = levels[l];
    collect_params(base + ".cost.h0", lp.cost_in, out);
    collect_params(base + ".cost.h1", lp.cost_out, out);
    for (std::size_t i = 0; i < lp.trunk_conv.size(); ++i)
      collect_params(base + ".predictor.conv" + std::to_string(i), lp.trunk_conv[i], out);
    for (std::size_t i = 0; i < lp.trunk_mlp.size(); ++i)
      collect_params(base + ".predictor.mlp" + std::to_string(i), lp.trunk_mlp[i], out);
    collect_params(base + ".predictor.flow", lp.flow, out);
    collect_params(base + ".predictor.occ0", lp.occ_hidden, out);
    collect_params(base + ".predictor.occ1", lp.occ_out, out);
  }
  return out;
}

std::string param_family(const std::string& name) {
  if (name.rfind("pyramid.", 0) == 0) return "pyramid.conv";
  const auto first = name.find('.');
  if (first == std::string::npos) return name;
  const auto second = name.find('.', first + 1);
  const auto third = second == std::string::npos ? std::string::npos : name.find('.', second + 1);
  std::string family = name.substr(first + 1, third == std::string::npos
                                                  ? std::string::npos
                                                  : third - first - 1);
  while (!family.empty() && std::isdigit(static_cast<unsigned char>(family.back())))
    family.pop_back();
  return family;
}

std::array<PyramidLevel, kLevels> build_pyramid(const PointCloud& cloud,
                                                const NetworkParams& params,
                                                const NetworkConfig& config) {
  cloud.validate();
  if (cloud.feature_dim != config.input_feature_dim)
    throw DimensionError("build_pyramid: cloud has " + std::to_string(cloud.feature_dim) +
                         " feature channels, network expects " +
                         std::to_string(config.input_feature_dim));
  for (std::size_t l = 1; l < kLevels; ++l)
    if (config.level_counts[l] >= config.level_counts[l - 1])
      throw ContractError("build_pyramid: level counts must be strictly decreasing");
  if (config.level_counts[0] > cloud.size())
    throw ContractError("build_pyramid: level 0 needs " + std::to_string(config.level_counts[0]) +
                        " points, cloud has " + std::to_string(cloud.size()));

  std::array<PyramidLevel, kLevels> levels;
  std::span<const Real> prev_positions = cloud.positions;
  Tensor prev_features = Tensor::constant({cloud.size(), cloud.feature_dim}, cloud.features);
  std::vector<std::size_t> prev_input(cloud.size());
  for (std::size_t i = 0; i < prev_input.size(); ++i) prev_input[i] = i;

  for (std::size_t l = 0; l < kLevels; ++l) {
    PyramidLevel& level = levels[l];
    level.parent_indices = farthest_point_sample(prev_positions, config.level_counts[l], 0);
    level.positions = gather_positions(prev_positions, level.parent_indices);
    level.features = pointconv(level.positions, prev_positions, prev_features, params.pyramid[l],
                               config.k_conv, config.slope);
    level.input_indices.reserve(level.parent_indices.size());
    for (auto i : level.parent_indices) level.input_indices.push_back(prev_input[i]);
    prev_positions = level.positions;
    prev_features = level.features;
    prev_input = level.input_indices;
  }
  return levels;
}

Tensor warp_target(std::span<const Real> source_positions, std::span<const Real> target_positions,
                   const Tensor& up_flow, std::size_t k, Real epsilon) {
  const std::size_t n1 = source_positions.size() / 3;
  const std::size_t n2 = target_positions.size() / 3;
  if (n1 == 0 || n2 == 0) throw ContractError("warp_target: empty point cloud");
  if (up_flow.rank() != 2 || up_flow.dim(0) != n1 || up_flow.dim(1) != 3)
    throw DimensionError("warp_target: up_flow " + shape_string(up_flow.shape()) + " for " +
                         std::to_string(n1) + " source points");

  const Tensor source = Tensor::constant({n1, 3}, {source_positions.begin(), source_positions.end()});
  const Tensor target = Tensor::constant({n2, 3}, {target_positions.begin(), target_positions.end()});
  const Tensor warped_source = add(source, up_flow);

  const NeighborSet nb = k_nearest(target_positions, warped_source.values(), k);
  const std::size_t kk = nb.k;

  std::vector<Real> neg_target(n2 * kk * 3);
  for (std::size_t j = 0; j < n2; ++j)
    for (std::size_t t = 0; t < kk; ++t)
      for (std::size_t c = 0; c < 3; ++c)
        neg_target[(j * kk + t) * 3 + c] = -target_positions[3 * j + c];

  // w = 1 / (|p_w - q| + eps), normalised per target point.
  const Tensor offsets =
      add(gather_rows(warped_source, nb.indices), Tensor::constant({n2 * kk, 3}, std::move(neg_target)));
  const Tensor raw = reciprocal(add(row_norm(offsets), Tensor::constant({1}, {epsilon})));
  const Tensor raw2d = reshape(raw, {n2, kk});
  const Tensor total = reshape(reduce_sum(raw2d, 1), {n2, 1});
  const Tensor weights = reshape(mul(raw2d, reciprocal(total)), {n2, kk, 1});

  const Tensor flows = reshape(gather_rows(up_flow, nb.indices), {n2, kk, 3});
  const Tensor backward_flow = scale(reduce_sum(mul(flows, weights), 1), Real{-1});
  return add(target, backward_flow);
}

CostVolume cost_volume(std::span<const Real> source_positions, const Tensor& source_features,
                       const Tensor& warped_target, const Tensor& target_features,
                       const Tensor& occlusion, const DenseLayer& cost_in,
                       const DenseLayer& cost_out, std::size_t k, Real slope, bool apply_mask) {
  const std::size_t n = source_positions.size() / 3;
  if (warped_target.rank() != 2 || warped_target.dim(1) != 3)
    throw DimensionError("cost_volume: warped target " + shape_string(warped_target.shape()));
  const std::size_t n2 = warped_target.dim(0);
  if (n2 == 0) throw ContractError("cost_volume: empty warped target");
  if (source_features.rank() != 2 || source_features.dim(0) != n)
    throw DimensionError("cost_volume: source features " + shape_string(source_features.shape()) +
                         " for " + std::to_string(n) + " points");
  if (target_features.rank() != 2 || target_features.dim(0) != n2)
    throw DimensionError("cost_volume: target features " + shape_string(target_features.shape()) +
                         " for " + std::to_string(n2) + " points");
  if (occlusion.numel() != n)
    throw DimensionError("cost_volume: occlusion " + shape_string(occlusion.shape()) + " for " +
                         std::to_string(n) + " points");
  for (auto v : occlusion.values()) {
    if (!std::isfinite(v)) throw NumericError("cost_volume: non-finite occlusion value");
    if (!(v >= -1e-9 && v <= 1 + 1e-9))
      throw ContractError("cost_volume: occlusion values must lie in [0, 1]");
  }
  if (k == 0) throw ContractError("cost_volume: K must be positive");

  CostVolume cv;
  cv.neighbors = k_nearest(source_positions, warped_target.values(), k);
  const std::size_t kk = cv.neighbors.k;

  std::vector<std::size_t> repeat(n * kk);
  std::vector<Real> neg_source(n * kk * 3);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < kk; ++t) {
      repeat[i * kk + t] = i;
      for (std::size_t c = 0; c < 3; ++c)
        neg_source[(i * kk + t) * 3 + c] = -source_positions[3 * i + c];
    }
  }
  const Tensor relative = add(gather_rows(warped_target, cv.neighbors.indices),
                              Tensor::constant({n * kk, 3}, std::move(neg_source)));
  const Tensor parts[] = {gather_rows(source_features, repeat),
                          gather_rows(target_features, cv.neighbors.indices), relative};
  const Tensor h = dense(dense(concat_last_axis(parts), cost_in, slope), cost_out, slope);
  const std::size_t dcv = cost_out.out;
  cv.matching = reshape(h, {n, kk, dcv});
  cv.costs = apply_mask ? mul(cv.matching, reshape(occlusion, {n, 1, 1})) : cv.matching;
  cv.volume = reduce_max(cv.costs, 1);
  return cv;
}

LevelPrediction predict_level(std::span<const Real> source_positions,
                              const Tensor& source_features, const Tensor& volume,
                              const Tensor& up_flow, const Tensor& up_occlusion,
                              const LevelParams& params, const NetworkConfig& config) {
  const std::size_t n = source_positions.size() / 3;
  const auto rows_ok = [n](const Tensor& t, std::size_t width) {
    return t.rank() == 2 && t.dim(0) == n && (width == 0 || t.dim(1) == width);
  };
  if (!rows_ok(source_features, 0) || !rows_ok(volume, 0) || !rows_ok(up_flow, 3) ||
      !rows_ok(up_occlusion, 1)) {
    throw DimensionError("predict_level: inputs " + shape_string(source_features.shape()) + " " +
                         shape_string(volume.shape()) + " " + shape_string(up_flow.shape()) +
                         " " + shape_string(up_occlusion.shape()) + " for " +
                         std::to_string(n) + " points");
  }
  const Tensor parts[] = {source_features, volume, up_flow, up_occlusion};
  Tensor x = concat_last_axis(parts);
  for (const auto& conv : params.trunk_conv)
    x = pointconv(source_positions, source_positions, x, conv, config.k_conv, config.slope);
  x = mlp_stack(x, params.trunk_mlp, config.slope);

  LevelPrediction out;
  out.up_flow = up_flow;
  out.up_occlusion = up_occlusion;
  out.residual = dense(x, params.flow, config.slope);
  out.flow = add(up_flow, out.residual);
  out.occlusion = dense(dense(x, params.occ_hidden, config.slope), params.occ_out, config.slope);
  return out;
}

ForwardResult forward(const PointCloud& source, const PointCloud& target,
                      const NetworkParams& params, const NetworkConfig& config) {
  source.validate();
  target.validate();
  if (source.size() < config.level_counts[0] || target.size() < config.level_counts[0])
    throw ContractError("forward: clouds of " + std::to_string(source.size()) + " and " +
                        std::to_string(target.size()) + " points, level 0 needs " +
                        std::to_string(config.level_counts[0]));

  ForwardResult r;
  r.source_levels = build_pyramid(source, params, config);
  r.target_levels = build_pyramid(target, params, config);

  for (std::size_t step = 0; step < kLevels; ++step) {
    const std::size_t l = kLevels - 1 - step;
    const PyramidLevel& src = r.source_levels[l];
    const PyramidLevel& tgt = r.target_levels[l];
    Tensor up_flow, up_occ;
    if (l == kLevels - 1) {
      up_flow = Tensor::constant_fill({src.size(), 3}, Real{0});
      up_occ = Tensor::constant_fill({src.size(), 1}, Real{1});
    } else {
      const PyramidLevel& coarse = r.source_levels[l + 1];
      up_flow = inverse_distance_interpolate(coarse.positions, r.levels[l + 1].flow, src.positions,
                                             config.k_interp, config.epsilon);
      up_occ = inverse_distance_interpolate(coarse.positions, r.levels[l + 1].occlusion,
                                            src.positions, config.k_interp, config.epsilon);
    }
    const Tensor warped = warp_target(src.positions, tgt.positions, up_flow, config.k_warp,
                                      config.epsilon);
    const LevelParams& lp = params.levels[l];
    const CostVolume cv = cost_volume(src.positions, src.features, warped, tgt.features, up_occ,
                                      lp.cost_in, lp.cost_out, config.k_cost, config.slope,
                                      config.occlusion_mask);
    r.levels[l] = predict_level(src.positions, src.features, cv.volume, up_flow, up_occ, lp, config);
  }

  const PyramidLevel& finest = r.source_levels[0];
  r.flow = inverse_distance_interpolate(finest.positions, r.levels[0].flow, source.positions,
                                        config.k_interp, config.epsilon);
  r.occlusion = inverse_distance_interpolate(finest.positions, r.levels[0].occlusion,
                                             source.positions, config.k_interp, config.epsilon);
  return r;
}

}  // namespace ogsf
