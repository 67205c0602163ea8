#include "ogsf/objective.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "ogsf/error.hpp"

namespace ogsf {

namespace {

void check_levels(std::size_t levels, std::size_t gts, std::size_t weights, const char* what) {
  if (gts != levels)
    throw ContractError(std::string(what) + ": ground truth for " + std::to_string(gts) +
                        " of " + std::to_string(levels) + " levels");
  if (weights < levels)
    throw ContractError(std::string(what) + ": " + std::to_string(weights) +
                        " level weights for " + std::to_string(levels) + " levels");
}

// Per-point |f - f'| as a graph node (n).
Tensor endpoint_errors(const Tensor& flow, const std::vector<Real>& gt, const char* what) {
  if (flow.rank() != 2 || flow.dim(1) != 3 || gt.size() != flow.numel())
    throw DimensionError(std::string(what) + ": prediction " + shape_string(flow.shape()) +
                         " vs " + std::to_string(gt.size()) + " ground-truth values");
  std::vector<Real> neg(gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i) neg[i] = -gt[i];
  return row_norm(add(flow, Tensor::constant(flow.shape(), std::move(neg))));
}

}  // namespace

LossWeights LossWeights::with_alpha(const std::array<Real, kLevels>& alpha, Real beta_ratio) {
  LossWeights w;
  w.alpha = alpha;
  for (std::size_t l = 0; l < kLevels; ++l) w.beta[l] = beta_ratio * alpha[l];
  return w;
}

Tensor flow_loss(std::span<const Tensor> level_flows, std::span<const std::vector<Real>> gt_flows,
                 std::span<const std::vector<Real>> gt_occ, std::span<const Real> alpha) {
  if (level_flows.empty()) throw ContractError("flow_loss: no levels");
  check_levels(level_flows.size(), gt_flows.size(), alpha.size(), "flow_loss");
  if (gt_occ.size() != level_flows.size())
    throw ContractError("flow_loss: missing occlusion ground truth");
  Tensor total;
  for (std::size_t l = 0; l < level_flows.size(); ++l) {
    const Tensor err = endpoint_errors(level_flows[l], gt_flows[l], "flow_loss");
    if (gt_occ[l].size() != err.numel())
      throw DimensionError("flow_loss: " + std::to_string(gt_occ[l].size()) +
                           " occlusion labels for " + std::to_string(err.numel()) + " points");
    std::vector<Real> weight(gt_occ[l].size());
    for (std::size_t i = 0; i < weight.size(); ++i) weight[i] = gt_occ[l][i] + Real{1};
    const Tensor term =
        scale(sum_all(mul(err, Tensor::constant(err.shape(), std::move(weight)))), alpha[l]);
    total = total.defined() ? add(total, term) : term;
  }
  return total;
}

Tensor occlusion_loss(std::span<const Tensor> level_occ, std::span<const std::vector<Real>> gt_occ,
                      std::span<const Real> beta) {
  if (level_occ.empty()) throw ContractError("occlusion_loss: no levels");
  check_levels(level_occ.size(), gt_occ.size(), beta.size(), "occlusion_loss");
  Tensor total;
  for (std::size_t l = 0; l < level_occ.size(); ++l) {
    if (gt_occ[l].size() != level_occ[l].numel())
      throw DimensionError("occlusion_loss: prediction " + shape_string(level_occ[l].shape()) +
                           " vs " + std::to_string(gt_occ[l].size()) + " labels");
    std::vector<Real> neg(gt_occ[l].size());
    for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -gt_occ[l][i];
    const Tensor diff = add(level_occ[l], Tensor::constant(level_occ[l].shape(), std::move(neg)));
    const Tensor term = scale(sum_all(abs(diff)), beta[l]);
    total = total.defined() ? add(total, term) : term;
  }
  return total;
}

Tensor total_loss(const Tensor& flow_term, const Tensor& occlusion_term, Real lambda) {
  return add(flow_term, scale(occlusion_term, lambda));
}

Tensor fine_tune_loss(std::span<const Tensor> level_flows,
                      std::span<const std::vector<Real>> gt_flows, std::span<const Real> alpha) {
  if (level_flows.empty()) throw ContractError("fine_tune_loss: no levels");
  check_levels(level_flows.size(), gt_flows.size(), alpha.size(), "fine_tune_loss");
  Tensor total;
  for (std::size_t l = 0; l < level_flows.size(); ++l) {
    const Tensor term =
        scale(sum_all(endpoint_errors(level_flows[l], gt_flows[l], "fine_tune_loss")), alpha[l]);
    total = total.defined() ? add(total, term) : term;
  }
  return total;
}

LevelTargets level_targets(const ForwardResult& result, std::span<const Real> gt_flow,
                           std::span<const Real> gt_occ) {
  LevelTargets t;
  const std::size_t n = gt_flow.size() / 3;
  if (!gt_occ.empty() && gt_occ.size() != n)
    throw DimensionError("level_targets: " + std::to_string(gt_occ.size()) +
                         " occlusion labels for " + std::to_string(n) + " points");
  for (std::size_t l = 0; l < kLevels; ++l) {
    const auto& idx = result.source_levels[l].input_indices;
    t.flow[l].reserve(idx.size() * 3);
    for (auto i : idx) {
      if (i >= n) throw ContractError("level_targets: ground truth shorter than source cloud");
      for (std::size_t c = 0; c < 3; ++c) t.flow[l].push_back(gt_flow[3 * i + c]);
      if (!gt_occ.empty()) t.occ[l].push_back(gt_occ[i]);
    }
  }
  return t;
}

std::array<Tensor, kLevels> level_flows(const ForwardResult& result) {
  std::array<Tensor, kLevels> out;
  for (std::size_t l = 0; l < kLevels; ++l) out[l] = result.levels[l].flow;
  return out;
}

std::array<Tensor, kLevels> level_occlusions(const ForwardResult& result) {
  std::array<Tensor, kLevels> out;
  for (std::size_t l = 0; l < kLevels; ++l) out[l] = result.levels[l].occlusion;
  return out;
}

MetricsReport flow_metrics(std::span<const Real> pred_flow, std::span<const Real> gt_flow,
                           std::span<const Real> gt_occ) {
  if (pred_flow.size() != gt_flow.size() || pred_flow.size() % 3 != 0)
    throw DimensionError("flow_metrics: prediction has " + std::to_string(pred_flow.size()) +
                         " values, ground truth " + std::to_string(gt_flow.size()));
  const std::size_t n = pred_flow.size() / 3;
  if (n == 0) throw ContractError("flow_metrics: no points");
  if (!gt_occ.empty() && gt_occ.size() != n)
    throw DimensionError("flow_metrics: " + std::to_string(gt_occ.size()) +
                         " occlusion labels for " + std::to_string(n) + " points");

  MetricsReport r;
  Real sum_all = 0, sum_visible = 0;
  std::size_t visible = 0, acc05 = 0, acc10 = 0, outliers = 0;
  std::array<std::size_t, kOutlierSweep.size()> sweep{};
  for (std::size_t i = 0; i < n; ++i) {
    Real e2 = 0, g2 = 0;
    for (std::size_t c = 0; c < 3; ++c) {
      const Real d = pred_flow[3 * i + c] - gt_flow[3 * i + c];
      e2 += d * d;
      g2 += gt_flow[3 * i + c] * gt_flow[3 * i + c];
    }
    const Real e = std::sqrt(e2);
    const Real g = std::sqrt(g2);
    // Relative clauses only apply to non-zero ground truth.
    const bool has_rel = g > 0;
    const Real rel = has_rel ? e / g : 0;
    sum_all += e;
    if (!gt_occ.empty() && gt_occ[i] > Real{0.5}) {
      sum_visible += e;
      ++visible;
    }
    if (e < 0.05 || (has_rel && rel < 0.05)) ++acc05;
    if (e < 0.1 || (has_rel && rel < 0.1)) ++acc10;
    if (e > 0.3 || (has_rel && rel > 0.1)) ++outliers;
    for (std::size_t t = 0; t < kOutlierSweep.size(); ++t)
      if (e > kOutlierSweep[t]) ++sweep[t];
  }
  const auto nn = static_cast<Real>(n);
  r.epe_full = sum_all / nn;
  if (visible > 0) r.epe = sum_visible / static_cast<Real>(visible);
  r.acc05 = static_cast<Real>(acc05) / nn;
  r.acc10 = static_cast<Real>(acc10) / nn;
  r.outlier = static_cast<Real>(outliers) / nn;
  for (std::size_t t = 0; t < sweep.size(); ++t)
    r.outlier_sweep[t] = static_cast<Real>(sweep[t]) / nn;
  return r;
}

OcclusionScores occlusion_metrics(std::span<const Real> probs, std::span<const Real> gt,
                                  Real threshold) {
  if (probs.size() != gt.size())
    throw DimensionError("occlusion_metrics: " + std::to_string(probs.size()) +
                         " predictions vs " + std::to_string(gt.size()) + " labels");
  if (probs.empty()) throw ContractError("occlusion_metrics: no points");
  std::size_t correct = 0, tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool pred_visible = probs[i] >= threshold;
    const bool gt_visible = gt[i] > Real{0.5};
    if (pred_visible == gt_visible) ++correct;
    if (!pred_visible && !gt_visible) ++tp;
    if (!pred_visible && gt_visible) ++fp;
    if (pred_visible && !gt_visible) ++fn;
  }
  OcclusionScores s;
  s.accuracy = static_cast<Real>(correct) / static_cast<Real>(probs.size());
  const std::size_t denom = 2 * tp + fp + fn;
  s.f1 = denom == 0 ? Real{1} : static_cast<Real>(2 * tp) / static_cast<Real>(denom);
  return s;
}

MetricsReport aggregate_metrics(std::span<const MetricsReport> frames) {
  if (frames.empty()) throw ContractError("aggregate_metrics: no frames");
  MetricsReport r;
  r.frames = frames.size();
  Real epe = 0, occ_acc = 0, occ_f1 = 0;
  std::size_t n_epe = 0, n_occ = 0;
  for (const auto& f : frames) {
    r.epe_full += f.epe_full;
    r.acc05 += f.acc05;
    r.acc10 += f.acc10;
    r.outlier += f.outlier;
    for (std::size_t t = 0; t < r.outlier_sweep.size(); ++t) r.outlier_sweep[t] += f.outlier_sweep[t];
    if (f.epe) {
      epe += *f.epe;
      ++n_epe;
    }
    if (f.occ_accuracy && f.occ_f1) {
      occ_acc += *f.occ_accuracy;
      occ_f1 += *f.occ_f1;
      ++n_occ;
    }
  }
  const auto nf = static_cast<Real>(frames.size());
  r.epe_full /= nf;
  r.acc05 /= nf;
  r.acc10 /= nf;
  r.outlier /= nf;
  for (auto& v : r.outlier_sweep) v /= nf;
  if (n_epe > 0) r.epe = epe / static_cast<Real>(n_epe);
  if (n_occ > 0) {
    r.occ_accuracy = occ_acc / static_cast<Real>(n_occ);
    r.occ_f1 = occ_f1 / static_cast<Real>(n_occ);
  }
  return r;
}

std::string to_key_value(const MetricsReport& r) {
  std::ostringstream os;
  os << std::setprecision(6) << std::fixed;
  os << "frames = " << r.frames << '\n';
  os << "epe_full = " << r.epe_full << '\n';
  if (r.epe) os << "epe = " << *r.epe << '\n';
  os << "acc05 = " << r.acc05 << '\n';
  os << "acc10 = " << r.acc10 << '\n';
  os << "outlier = " << r.outlier << '\n';
  for (std::size_t t = 0; t < kOutlierSweep.size(); ++t)
    os << "outlier_at_" << std::setprecision(1) << kOutlierSweep[t] << std::setprecision(6)
       << " = " << r.outlier_sweep[t] << '\n';
  if (r.occ_accuracy) os << "occ_accuracy = " << *r.occ_accuracy << '\n';
  if (r.occ_f1) os << "occ_f1 = " << *r.occ_f1 << '\n';
  return os.str();
}

std::string to_json(const MetricsReport& r, int indent) {
  nlohmann::json j;
  j["frames"] = r.frames;
  j["epe_full"] = r.epe_full;
  if (r.epe) j["epe"] = *r.epe;
  j["acc05"] = r.acc05;
  j["acc10"] = r.acc10;
  j["outlier"] = r.outlier;
  nlohmann::json sweep = nlohmann::json::array();
  for (std::size_t t = 0; t < kOutlierSweep.size(); ++t)
    sweep.push_back({{"threshold", kOutlierSweep[t]}, {"ratio", r.outlier_sweep[t]}});
  j["outlier_sweep"] = sweep;
  if (r.occ_accuracy) j["occ_accuracy"] = *r.occ_accuracy;
  if (r.occ_f1) j["occ_f1"] = *r.occ_f1;
  return j.dump(indent);
}

}  // namespace ogsf
