#pragma once

// Scene pairs, the "OGSF" sample file, fixed-count resampling and a synthetic
// rigid-body scene generator.
//
// Sample file, little-endian:
//
//   magic "OGSF" | version u32 | flags u32 (bit0 gt_flow, bit1 gt_occ)
//   n1 u32 | n2 u32
//   float32: source xyz (n1x3), source rgb (n1x3), target xyz (n2x3),
//            target rgb (n2x3), [gt_flow (n1x3)], [gt_occ (n1)]
//
// A dataset is a manifest text file listing sample paths, one per line,
// relative to the manifest's directory. External datasets are brought in by
// filling a ScenePair through make_scene_pair and saving it.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "ogsf/geometry.hpp"

namespace ogsf {

inline constexpr std::uint32_t kSampleVersion = 1;

struct ScenePair {
  std::vector<float> source_positions;  // n1 x 3
  std::vector<float> source_rgb;        // n1 x 3
  std::vector<float> target_positions;  // n2 x 3
  std::vector<float> target_rgb;        // n2 x 3
  std::optional<std::vector<float>> gt_flow;  // n1 x 3
  // n1, 1 = has a correspondent. Labels are 0/1; predicted files hold
  // probabilities in [0, 1].
  std::optional<std::vector<float>> gt_occ;

  std::size_t n1() const { return source_positions.size() / 3; }
  std::size_t n2() const { return target_positions.size() / 3; }
  // Throws DataError on inconsistent sizes, non-finite values or occlusion
  // values outside [0, 1].
  void validate() const;
  bool has_binary_occlusion() const;

  PointCloud source_cloud() const;
  PointCloud target_cloud() const;
  std::vector<Real> flow() const;       // empty without gt_flow
  std::vector<Real> occlusion() const;  // empty without gt_occ
};

ScenePair make_scene_pair(std::span<const Real> source_positions, std::span<const Real> source_rgb,
                          std::span<const Real> target_positions, std::span<const Real> target_rgb,
                          std::span<const Real> gt_flow = {}, std::span<const Real> gt_occ = {});

std::vector<std::uint8_t> encode_sample(const ScenePair& pair);
ScenePair decode_sample(const std::vector<std::uint8_t>& bytes);
void save_sample(const ScenePair& pair, const std::filesystem::path& path);
ScenePair load_sample(const std::filesystem::path& path);

struct SynthConfig {
  std::size_t bodies = 2;
  std::size_t points_per_body = 256;
  Real max_rotation_deg = 5;   // about a random axis through the box centre
  Real max_translation = 0.3;  // per axis, meters
  Real carve_fraction = 0.2;
  Real noise_sigma = 0;
  Real box_spacing = 2;  // centre distance between neighbouring unit boxes
  std::uint64_t seed = 0;

  void validate() const;
};

// Bodies are uniform samples in disjoint unit boxes. The target holds each
// body moved rigidly, minus a carve of the round(carve_fraction * points)
// source points nearest a random anchor, plus noise, in shuffled order.
ScenePair synthesize_scene(const SynthConfig& config);

// n points drawn uniformly without replacement from each cloud, in draw order.
ScenePair resample_fixed(const ScenePair& pair, std::size_t n, std::uint64_t seed);

std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& manifest);
void write_manifest(const std::filesystem::path& manifest,
                    std::span<const std::filesystem::path> entries);

}  // namespace ogsf
