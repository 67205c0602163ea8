#pragma once

// Training losses and evaluation metrics.
//
// Per-level ground truth is the input ground truth picked at each level's
// sampled source indices.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ogsf/network.hpp"
#include "ogsf/tensor.hpp"

namespace ogsf {

struct LossWeights {
  std::array<Real, kLevels> alpha{0.02, 0.04, 0.08, 0.16};
  std::array<Real, kLevels> beta{0.028, 0.056, 0.112, 0.224};  // 1.4 * alpha
  Real lambda = 0.3;

  static LossWeights with_alpha(const std::array<Real, kLevels>& alpha, Real beta_ratio = 1.4);
};

// Sum_l alpha_l Sum_i (occ'_i + 1) |f_i - f'_i|.
Tensor flow_loss(std::span<const Tensor> level_flows, std::span<const std::vector<Real>> gt_flows,
                 std::span<const std::vector<Real>> gt_occ, std::span<const Real> alpha);
// Sum_l beta_l Sum_i |occ_i - occ'_i|.
Tensor occlusion_loss(std::span<const Tensor> level_occ, std::span<const std::vector<Real>> gt_occ,
                      std::span<const Real> beta);
Tensor total_loss(const Tensor& flow_term, const Tensor& occlusion_term, Real lambda);
// Sum_l alpha_l Sum_i |f_i - f'_i| (no occlusion labels needed).
Tensor fine_tune_loss(std::span<const Tensor> level_flows,
                      std::span<const std::vector<Real>> gt_flows, std::span<const Real> alpha);

struct LevelTargets {
  std::array<std::vector<Real>, kLevels> flow;  // n_l x 3
  std::array<std::vector<Real>, kLevels> occ;   // n_l, empty without labels
};

LevelTargets level_targets(const ForwardResult& result, std::span<const Real> gt_flow,
                           std::span<const Real> gt_occ);

std::array<Tensor, kLevels> level_flows(const ForwardResult& result);
std::array<Tensor, kLevels> level_occlusions(const ForwardResult& result);

inline constexpr std::array<Real, 5> kOutlierSweep{0.1, 0.2, 0.3, 0.4, 0.5};

struct OcclusionScores {
  Real accuracy = 0;
  Real f1 = 0;
};

struct MetricsReport {
  std::size_t frames = 1;
  Real epe_full = 0;
  std::optional<Real> epe;  // non-occluded points only
  Real acc05 = 0;
  Real acc10 = 0;
  Real outlier = 0;
  std::array<Real, kOutlierSweep.size()> outlier_sweep{};
  std::optional<Real> occ_accuracy;
  std::optional<Real> occ_f1;
};

// gt_occ may be empty (no labels). Flows are n x 3.
MetricsReport flow_metrics(std::span<const Real> pred_flow, std::span<const Real> gt_flow,
                           std::span<const Real> gt_occ = {});
// Label = prob >= threshold; F1 treats occluded (label 0) as the positive class.
OcclusionScores occlusion_metrics(std::span<const Real> probs, std::span<const Real> gt,
                                  Real threshold = 0.5);
// Uniform mean over frames; optional fields average over frames that have them.
MetricsReport aggregate_metrics(std::span<const MetricsReport> frames);

std::string to_key_value(const MetricsReport& report);
std::string to_json(const MetricsReport& report, int indent = 2);

}  // namespace ogsf
