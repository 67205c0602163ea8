#include "ogsf/harness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "ogsf/checkpoint.hpp"
#include "ogsf/error.hpp"
#include "ogsf/kernels.hpp"
#include "ogsf/optim.hpp"

namespace ogsf {

namespace {

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

KeyValueConfig with_prefix_stripped(const KeyValueConfig& kv, const std::string& prefix) {
  KeyValueConfig out;
  for (const auto& [k, v] : kv.entries())
    if (k.rfind(prefix, 0) == 0) out.set(k.substr(prefix.size()), v);
  return out;
}

std::filesystem::path optional_path(const KeyValueConfig& kv, const std::string& key) {
  const auto v = kv.get(key);
  return v && !v->empty() ? kv.resolve(*v) : std::filesystem::path{};
}

struct PairLoss {
  Tensor total;
  Tensor flow;
  Tensor occlusion;  // undefined for the fine-tune loss
};

PairLoss pair_loss(const ScenePair& pair, const NetworkParams& params,
                   const NetworkConfig& network, Real lambda, bool fine_tune) {
  const ForwardResult result = forward(pair.source_cloud(), pair.target_cloud(), params, network);
  const std::vector<Real> flow = pair.flow();
  const std::vector<Real> occ = fine_tune ? std::vector<Real>{} : pair.occlusion();
  const LevelTargets targets = level_targets(result, flow, occ);
  const auto flows = level_flows(result);
  const LossWeights weights;
  PairLoss out;
  if (fine_tune) {
    out.flow = fine_tune_loss(flows, targets.flow, weights.alpha);
    out.total = out.flow;
    return out;
  }
  out.flow = flow_loss(flows, targets.flow, targets.occ, weights.alpha);
  out.occlusion = occlusion_loss(level_occlusions(result), targets.occ, weights.beta);
  out.total = total_loss(out.flow, out.occlusion, lambda);
  return out;
}

void require_training_labels(const std::vector<ScenePair>& data, bool fine_tune,
                             const std::filesystem::path& manifest) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::string where = manifest.string() + " item " + std::to_string(i);
    if (!data[i].gt_flow) throw DataError(where + ": missing gt_flow");
    if (!fine_tune && !data[i].gt_occ)
      throw DataError(where + ": missing gt_occ (set fine_tune for flow-only data)");
    if (!fine_tune && !data[i].has_binary_occlusion())
      throw DataError(where + ": gt_occ must hold 0/1 labels");
  }
}

bool finite(std::span<const Real> v) {
  return std::all_of(v.begin(), v.end(), [](Real x) { return std::isfinite(x); });
}

std::string format_real(Real v, int precision = 6) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

}  // namespace

Real LrSchedule::at(std::size_t epoch) const {
  Real lr = initial;
  for (std::size_t b = interval; b <= epoch; b += interval) lr *= b < late_start ? decay : late_factor;
  return lr;
}

Real LambdaSchedule::at(std::size_t epoch) const {
  if (ramp == 0) return end;
  const Real t = static_cast<Real>(std::min(epoch, ramp)) / static_cast<Real>(ramp);
  return start + (end - start) * t;
}

RunConfig RunConfig::from_config(const KeyValueConfig& kv) {
  RunConfig c;
  c.mode = kv.get_string("mode", c.mode);
  c.dataset = optional_path(kv, "dataset");
  c.validation = optional_path(kv, "validation");
  c.checkpoint = optional_path(kv, "checkpoint");
  c.init_checkpoint = optional_path(kv, "init_checkpoint");
  c.out = optional_path(kv, "out");
  c.epochs = kv.get_size("epochs", c.epochs);
  c.batch_size = kv.get_size("batch_size", c.batch_size);
  c.points = kv.get_size("points", c.points);
  c.lr.initial = kv.get_real("lr.initial", c.lr.initial);
  c.lr.decay = kv.get_real("lr.decay", c.lr.decay);
  c.lr.interval = kv.get_size("lr.interval", c.lr.interval);
  c.lr.late_factor = kv.get_real("lr.late_factor", c.lr.late_factor);
  c.lr.late_start = kv.get_size("lr.late_start", c.lr.late_start);
  c.lambda.start = kv.get_real("lambda.start", c.lambda.start);
  c.lambda.end = kv.get_real("lambda.end", c.lambda.end);
  c.lambda.ramp = kv.get_size("lambda.ramp", c.lambda.ramp);
  c.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<std::int64_t>(c.seed)));
  c.fine_tune = kv.get_bool("fine_tune", c.fine_tune);
  c.export_ply = kv.get_bool("export_ply", c.export_ply);
  c.threads = static_cast<int>(kv.get_int("threads", c.threads));

  KeyValueConfig net;
  if (const auto ref = kv.get("network"); ref && !ref->empty())
    net = KeyValueConfig::load(kv.resolve(*ref));
  net.merge(with_prefix_stripped(kv, "network."));
  if (!net.has("seed")) net.set("seed", std::to_string(c.seed));
  c.network = NetworkConfig::from_config(net);

  c.gradcheck.points = kv.get_size("gradcheck.points", c.gradcheck.points);
  const auto levels = kv.get_sizes(
      "gradcheck.level_counts",
      {c.gradcheck.level_counts.begin(), c.gradcheck.level_counts.end()});
  if (levels.size() != kLevels)
    throw ConfigError("config key 'gradcheck.level_counts' needs " + std::to_string(kLevels) +
                      " values");
  std::copy(levels.begin(), levels.end(), c.gradcheck.level_counts.begin());
  c.gradcheck.per_family = kv.get_size("gradcheck.per_family", c.gradcheck.per_family);
  c.gradcheck.step = kv.get_real("gradcheck.step", c.gradcheck.step);
  c.gradcheck.tolerance = kv.get_real("gradcheck.tolerance", c.gradcheck.tolerance);

  c.synth_count = kv.get_size("synth.count", c.synth_count);
  c.synth.bodies = kv.get_size("synth.bodies", c.synth.bodies);
  c.synth.points_per_body = kv.get_size("synth.points_per_body", c.synth.points_per_body);
  c.synth.max_rotation_deg = kv.get_real("synth.max_rotation_deg", c.synth.max_rotation_deg);
  c.synth.max_translation = kv.get_real("synth.max_translation", c.synth.max_translation);
  c.synth.carve_fraction = kv.get_real("synth.carve_fraction", c.synth.carve_fraction);
  c.synth.noise_sigma = kv.get_real("synth.noise_sigma", c.synth.noise_sigma);
  c.synth.box_spacing = kv.get_real("synth.box_spacing", c.synth.box_spacing);
  c.synth.seed = static_cast<std::uint64_t>(
      kv.get_int("synth.seed", static_cast<std::int64_t>(c.synth.seed)));
  return c;
}

void RunConfig::validate() const {
  static const std::vector<std::string> modes{"train", "eval", "infer", "gradcheck", "synth"};
  if (std::find(modes.begin(), modes.end(), mode) == modes.end())
    throw ConfigError("unknown mode '" + mode + "' (train|eval|infer|gradcheck|synth)");
  if (!(lr.initial > 0) || !(lr.decay > 0) || !(lr.late_factor > 0) || lr.interval == 0)
    throw ConfigError("learning-rate schedule values must be positive");
  if (!(lambda.start > 0) || !(lambda.end > 0))
    throw ConfigError("lambda schedule values must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  network.validate();
  const auto need_file = [](const std::filesystem::path& p, const char* key) {
    if (p.empty()) throw ConfigError(std::string("config key '") + key + "' is required");
    if (!std::filesystem::exists(p))
      throw ConfigError(std::string("config key '") + key + "': '" + p.string() +
                        "' does not exist");
  };
  if (mode == "train") {
    need_file(dataset, "dataset");
    if (checkpoint.empty()) throw ConfigError("config key 'checkpoint' is required for training");
    if (!validation.empty()) need_file(validation, "validation");
    if (!init_checkpoint.empty()) need_file(init_checkpoint, "init_checkpoint");
  } else if (mode == "eval" || mode == "infer") {
    need_file(dataset, "dataset");
    need_file(checkpoint, "checkpoint");
  } else if (mode == "gradcheck") {
    if (!(gradcheck.step > 0) || !(gradcheck.tolerance > 0) || gradcheck.per_family == 0)
      throw ConfigError("gradcheck step, tolerance and per_family must be positive");
  } else if (mode == "synth") {
    if (out.empty()) throw ConfigError("config key 'out' is required for synth");
    try {
      synth.validate();
    } catch (const ContractError& e) {
      throw ConfigError(e.what());
    }
  }
}

std::string schedule_table(const RunConfig& config) {
  std::ostringstream os;
  os << "epoch lr lambda\n";
  for (std::size_t e = 0; e < config.epochs; ++e)
    os << e << ' ' << format_real(config.lr.at(e), 10) << ' '
       << format_real(config.lambda.at(e), 10) << '\n';
  return os.str();
}

NetworkParams load_params(const std::filesystem::path& checkpoint, const NetworkConfig& network) {
  NetworkParams params = NetworkParams::init(network);
  auto named = params.named();
  assign_checkpoint(load_checkpoint(checkpoint), named);
  return params;
}

std::vector<ScenePair> load_dataset(const std::filesystem::path& manifest) {
  std::vector<ScenePair> out;
  for (const auto& path : read_manifest(manifest)) out.push_back(load_sample(path));
  return out;
}

TrainResult run_train(const RunConfig& config, std::ostream& log) {
  config.validate();
  if (config.threads > 0) kernels::set_thread_count(config.threads);
  const std::vector<ScenePair> data = load_dataset(config.dataset);
  require_training_labels(data, config.fine_tune, config.dataset);
  std::vector<ScenePair> validation;
  if (!config.validation.empty()) validation = load_dataset(config.validation);

  TrainResult result{config.init_checkpoint.empty()
                         ? NetworkParams::init(config.network)
                         : load_params(config.init_checkpoint, config.network),
                     {},
                     {}};
  const std::vector<NamedTensor> named = result.params.named();
  std::vector<Tensor> leaves;
  for (const auto& nt : named) leaves.push_back(nt.tensor);
  AdamState adam(leaves, AdamConfig{config.lr.initial});

  if (config.checkpoint.has_parent_path())
    std::filesystem::create_directories(config.checkpoint.parent_path());
  {
    std::ofstream table(config.checkpoint.string() + ".schedule.txt");
    table << schedule_table(config);
  }
  if (config.epochs == 0) save_checkpoint(config.checkpoint, named);

  std::optional<Real> best;
  const std::size_t n = data.size();
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    EpochLog elog;
    elog.epoch = epoch;
    elog.learning_rate = config.lr.at(epoch);
    elog.lambda = config.lambda.at(epoch);
    adam.set_learning_rate(elog.learning_rate);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 shuffle_rng(mix_seed(config.seed, epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, n - start);
      std::vector<std::vector<std::vector<Real>>> item_grads(count);
      std::vector<std::array<Real, 3>> item_losses(count);
      std::vector<std::exception_ptr> errors(count);

#ifdef OGSF_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
      for (std::size_t b = 0; b < count; ++b) {
        try {
          const std::size_t item = order[start + b];
          const ScenePair pair = config.points == 0
                                     ? data[item]
                                     : resample_fixed(data[item], config.points,
                                                      mix_seed(config.seed, epoch, item));
          const PairLoss loss =
              pair_loss(pair, result.params, config.network, elog.lambda, config.fine_tune);
          item_losses[b] = {loss.total.item(), loss.flow.item(),
                            loss.occlusion.defined() ? loss.occlusion.item() : 0.0};
          const Gradients grads = backward(loss.total);
          item_grads[b].reserve(leaves.size());
          for (const auto& leaf : leaves) item_grads[b].push_back(grads.of(leaf));
        } catch (...) {
          errors[b] = std::current_exception();
        }
      }
      for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

      // Reduce in item order so the result does not depend on thread count.
      const Real inv = 1 / static_cast<Real>(count);
      std::vector<std::vector<Real>> grads(leaves.size());
      Real batch_loss = 0;
      for (std::size_t p = 0; p < leaves.size(); ++p) grads[p].assign(leaves[p].numel(), 0);
      for (std::size_t b = 0; b < count; ++b) {
        batch_loss += item_losses[b][0] * inv;
        elog.loss += item_losses[b][0];
        elog.flow_loss += item_losses[b][1];
        elog.occlusion_loss += item_losses[b][2];
        for (std::size_t p = 0; p < leaves.size(); ++p)
          for (std::size_t i = 0; i < grads[p].size(); ++i) grads[p][i] += item_grads[b][p][i] * inv;
      }
      if (!std::isfinite(batch_loss))
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch));
      for (const auto& g : grads)
        if (!finite(g)) throw NumericError("non-finite gradient at epoch " + std::to_string(epoch));
      adam_step(leaves, grads, adam);
      for (const auto& leaf : leaves)
        if (!finite(leaf.values()))
          throw NumericError("non-finite parameter after step at epoch " + std::to_string(epoch));
      result.steps.push_back({epoch, batch_loss});
    }
    elog.loss /= static_cast<Real>(n);
    elog.flow_loss /= static_cast<Real>(n);
    elog.occlusion_loss /= static_cast<Real>(n);

    save_checkpoint(config.checkpoint, named);
    if (!validation.empty()) {
      const EvalResult val = evaluate(validation, result.params, config.network);
      elog.validation_epe = val.aggregate.epe_full;
      if (!best || *elog.validation_epe < *best) {
        best = elog.validation_epe;
        save_checkpoint(config.checkpoint.string() + ".best", named);
      }
    }
    log << "epoch " << epoch << " loss=" << format_real(elog.loss)
        << " flow=" << format_real(elog.flow_loss) << " occ=" << format_real(elog.occlusion_loss)
        << " lr=" << format_real(elog.learning_rate, 10)
        << " lambda=" << format_real(elog.lambda, 10);
    if (elog.validation_epe) log << " val_epe_full=" << format_real(*elog.validation_epe);
    log << '\n';
    result.epochs.push_back(elog);
  }
  return result;
}

FramePrediction predict(const ScenePair& pair, const NetworkParams& params,
                        const NetworkConfig& network) {
  const ForwardResult result = forward(pair.source_cloud(), pair.target_cloud(), params, network);
  FramePrediction p;
  p.flow.assign(result.flow.values().begin(), result.flow.values().end());
  p.occlusion.assign(result.occlusion.values().begin(), result.occlusion.values().end());
  return p;
}

MetricsReport evaluate_frame(const FramePrediction& prediction, const ScenePair& pair) {
  if (!pair.gt_flow) throw DataError("evaluation needs gt_flow");
  const std::vector<Real> gt_flow = pair.flow();
  const std::vector<Real> gt_occ = pair.occlusion();
  MetricsReport report = flow_metrics(prediction.flow, gt_flow, gt_occ);
  if (!gt_occ.empty()) {
    const OcclusionScores occ = occlusion_metrics(prediction.occlusion, gt_occ);
    report.occ_accuracy = occ.accuracy;
    report.occ_f1 = occ.f1;
  }
  return report;
}

EvalResult evaluate(const std::vector<ScenePair>& frames, const NetworkParams& params,
                    const NetworkConfig& network) {
  EvalResult out;
  out.frames.resize(frames.size());
  std::vector<std::exception_ptr> errors(frames.size());
#ifdef OGSF_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::size_t i = 0; i < frames.size(); ++i) {
    try {
      out.frames[i] = evaluate_frame(predict(frames[i], params, network), frames[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  out.aggregate = aggregate_metrics(out.frames);
  return out;
}

EvalResult run_eval(const RunConfig& config, std::ostream& log) {
  config.validate();
  if (config.threads > 0) kernels::set_thread_count(config.threads);
  const NetworkParams params = load_params(config.checkpoint, config.network);
  const auto paths = read_manifest(config.dataset);
  std::vector<ScenePair> frames;
  for (const auto& p : paths) {
    frames.push_back(load_sample(p));
    if (!frames.back().gt_flow) throw DataError(p.string() + ": missing gt_flow");
    if (frames.back().gt_occ && !frames.back().has_binary_occlusion())
      throw DataError(p.string() + ": gt_occ must hold 0/1 labels");
  }
  EvalResult result = evaluate(frames, params, config.network);
  result.sources = paths;
  log << to_key_value(result.aggregate);
  if (!config.out.empty()) {
    if (config.out.has_parent_path()) std::filesystem::create_directories(config.out.parent_path());
    std::ofstream json(config.out);
    json << eval_json(result) << '\n';
    if (!json) throw IoError("cannot write report '" + config.out.string() + "'");
  }
  return result;
}

std::string eval_json(const EvalResult& result) {
  nlohmann::json j;
  j["aggregate"] = nlohmann::json::parse(to_json(result.aggregate));
  nlohmann::json frames = nlohmann::json::array();
  for (std::size_t i = 0; i < result.frames.size(); ++i) {
    nlohmann::json f = nlohmann::json::parse(to_json(result.frames[i]));
    if (i < result.sources.size()) f["source"] = result.sources[i].generic_string();
    frames.push_back(std::move(f));
  }
  j["frames"] = std::move(frames);
  return j.dump(2);
}

void write_ply(const std::filesystem::path& path, const ScenePair& pair,
               const FramePrediction& prediction) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  const std::size_t n1 = pair.n1(), n2 = pair.n2();
  out << "ply\nformat ascii 1.0\nelement vertex " << (n1 + n2 + n1)
      << "\nproperty float x\nproperty float y\nproperty float z\n"
         "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  const auto byte = [](Real v) {
    return static_cast<int>(std::lround(std::clamp(v, Real{0}, Real{1}) * 255));
  };
  const auto row = [&](Real x, Real y, Real z, int r, int g, int b) {
    out << x << ' ' << y << ' ' << z << ' ' << r << ' ' << g << ' ' << b << '\n';
  };
  for (std::size_t i = 0; i < n1; ++i)
    row(pair.source_positions[3 * i], pair.source_positions[3 * i + 1],
        pair.source_positions[3 * i + 2], byte(pair.source_rgb[3 * i]),
        byte(pair.source_rgb[3 * i + 1]), byte(pair.source_rgb[3 * i + 2]));
  for (std::size_t i = 0; i < n2; ++i)
    row(pair.target_positions[3 * i], pair.target_positions[3 * i + 1],
        pair.target_positions[3 * i + 2], byte(pair.target_rgb[3 * i]),
        byte(pair.target_rgb[3 * i + 1]), byte(pair.target_rgb[3 * i + 2]));
  for (std::size_t i = 0; i < n1; ++i) {
    const bool visible = prediction.occlusion[i] >= 0.5;
    row(pair.source_positions[3 * i] + prediction.flow[3 * i],
        pair.source_positions[3 * i + 1] + prediction.flow[3 * i + 1],
        pair.source_positions[3 * i + 2] + prediction.flow[3 * i + 2], visible ? 255 : 0, 0, 0);
  }
  if (!out) throw IoError("cannot write '" + path.string() + "'");
}

std::vector<std::filesystem::path> run_infer(const RunConfig& config, std::ostream& log) {
  config.validate();
  if (config.threads > 0) kernels::set_thread_count(config.threads);
  const NetworkParams params = load_params(config.checkpoint, config.network);
  std::vector<std::filesystem::path> written;
  for (const auto& input : read_manifest(config.dataset)) {
    const ScenePair pair = load_sample(input);
    const FramePrediction pred = predict(pair, params, config.network);
    const auto dir = config.out.empty() ? input.parent_path() : config.out;
    std::filesystem::create_directories(dir.empty() ? "." : dir);
    const auto stem = input.stem().string();
    ScenePair out = pair;
    out.gt_flow = std::vector<float>(pred.flow.begin(), pred.flow.end());
    out.gt_occ = std::vector<float>(pred.occlusion.begin(), pred.occlusion.end());
    const auto target = dir / (stem + ".pred.ogsf");
    save_sample(out, target);
    written.push_back(target);
    log << input.generic_string() << " -> " << target.generic_string();
    if (config.export_ply) {
      const auto ply = dir / (stem + ".pred.ply");
      write_ply(ply, pair, pred);
      log << ", " << ply.generic_string();
    }
    log << '\n';
  }
  return written;
}

GradcheckReport run_gradcheck(const RunConfig& config, std::ostream& log) {
  config.validate();
  NetworkConfig network = config.network;
  network.level_counts = config.gradcheck.level_counts;
  network.validate();

  SynthConfig synth;
  synth.bodies = 2;
  synth.points_per_body = config.gradcheck.points / 2;
  synth.carve_fraction = 0.2;
  synth.noise_sigma = 0.002;
  synth.seed = config.seed;
  const ScenePair pair = synthesize_scene(synth);

  const NetworkParams params = NetworkParams::init(network);
  const std::vector<NamedTensor> named = params.named();
  const Real lambda = config.lambda.start;
  const auto loss_value = [&] {
    return pair_loss(pair, params, network, lambda, config.fine_tune).total.item();
  };
  const Gradients grads = backward(pair_loss(pair, params, network, lambda, config.fine_tune).total);

  // (tensor, element) candidates grouped by family in first-seen order.
  std::vector<std::string> family_order;
  std::map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> candidates;
  for (std::size_t t = 0; t < named.size(); ++t) {
    const std::string family = param_family(named[t].name);
    if (!candidates.count(family)) family_order.push_back(family);
    for (std::size_t i = 0; i < named[t].tensor.numel(); ++i) candidates[family].push_back({t, i});
  }

  std::mt19937_64 rng(mix_seed(config.seed, 0x67726164));
  GradcheckReport report;
  constexpr Real kFloor = 1e-6;
  const auto rel_error = [](Real a, Real b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), kFloor});
  };
  for (const auto& family : family_order) {
    auto& pool = candidates[family];
    std::shuffle(pool.begin(), pool.end(), rng);
    FamilyCheck check;
    check.family = family;
    const std::size_t count = std::min(config.gradcheck.per_family, pool.size());
    for (std::size_t c = 0; c < count; ++c) {
      const auto [t, i] = pool[c];
      Tensor leaf = named[t].tensor;
      const Real analytic = grads.of(leaf)[i];
      const Real original = leaf.values()[i];
      const auto at = [&](Real delta) {
        leaf.mutable_values()[i] = original + delta;
        const Real v = loss_value();
        leaf.mutable_values()[i] = original;
        return v;
      };
      // Shrink h when the central difference straddles a kink or a
      // neighbour switch; there the analytic value is a one-sided slope.
      Real err = std::numeric_limits<Real>::infinity();
      for (Real h = config.gradcheck.step; h >= config.gradcheck.step * 1e-2; h /= 10) {
        const Real plus = at(h), minus = at(-h), centre = loss_value();
        err = std::min({err, rel_error(analytic, (plus - minus) / (2 * h)),
                        rel_error(analytic, (plus - centre) / h),
                        rel_error(analytic, (centre - minus) / h)});
        if (err <= config.gradcheck.tolerance) break;
      }
      ++check.checked;
      if (err > check.max_relative_error || check.worst_parameter.empty()) {
        check.max_relative_error = err;
        check.worst_parameter = named[t].name + "[" + std::to_string(i) + "]";
      }
    }
    check.passed = check.max_relative_error <= config.gradcheck.tolerance;
    report.passed = report.passed && check.passed;
    log << "family " << check.family << " checked=" << check.checked
        << " max_rel_err=" << format_real(check.max_relative_error, 3)
        << " worst=" << check.worst_parameter << (check.passed ? " PASS" : " FAIL") << '\n';
    report.families.push_back(check);
  }
  log << "gradcheck " << (report.passed ? "PASS" : "FAIL") << '\n';
  return report;
}

std::vector<std::filesystem::path> run_synth(const RunConfig& config, std::ostream& log) {
  config.validate();
  std::filesystem::create_directories(config.out);
  std::vector<std::filesystem::path> names;
  for (std::size_t i = 0; i < config.synth_count; ++i) {
    SynthConfig sc = config.synth;
    sc.seed = mix_seed(config.synth.seed, i);
    std::ostringstream name;
    name << "sample_" << std::setw(4) << std::setfill('0') << i << ".ogsf";
    save_sample(synthesize_scene(sc), config.out / name.str());
    names.emplace_back(name.str());
  }
  write_manifest(config.out / "manifest.txt", names);
  log << "wrote " << names.size() << " samples to " << config.out.generic_string() << '\n';
  return names;
}

int run_mode(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    if (config.mode == "train") {
      run_train(config, out);
    } else if (config.mode == "eval") {
      run_eval(config, out);
    } else if (config.mode == "infer") {
      run_infer(config, out);
    } else if (config.mode == "gradcheck") {
      if (!run_gradcheck(config, out).passed) return kExitGradcheck;
    } else if (config.mode == "synth") {
      run_synth(config, out);
    } else {
      config.validate();
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DimensionError& e) {
    err << "shape error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const Error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace ogsf
