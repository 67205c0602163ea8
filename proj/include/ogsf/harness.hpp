#pragma once

// Train / eval / infer / gradcheck / synth workflows behind the `ogsf` CLI.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ogsf/config.hpp"
#include "ogsf/data.hpp"
#include "ogsf/network.hpp"
#include "ogsf/objective.hpp"

namespace ogsf {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitData = 3,
  kExitNumeric = 4,
  kExitGradcheck = 5,
};

// lr(e) = initial * prod over boundaries b = interval, 2*interval, ... <= e of
// (b < late_start ? decay : late_factor).
struct LrSchedule {
  Real initial = 1e-3;
  Real decay = 0.85;
  std::size_t interval = 10;
  Real late_factor = 0.8;
  std::size_t late_start = 75;

  Real at(std::size_t epoch) const;
};

// Linear ramp from start to end over the first `ramp` epochs.
struct LambdaSchedule {
  Real start = 0.3;
  Real end = 0.6;
  std::size_t ramp = 45;

  Real at(std::size_t epoch) const;
};

struct GradcheckOptions {
  std::size_t points = 64;
  std::array<std::size_t, kLevels> level_counts{32, 16, 8, 4};
  std::size_t per_family = 10;
  Real step = 1e-6;
  Real tolerance = 1e-3;
};

struct RunConfig {
  std::string mode = "train";
  std::filesystem::path dataset;     // manifest
  std::filesystem::path validation;  // optional manifest for best-checkpoint tracking
  std::filesystem::path checkpoint;  // written by train, read by eval/infer
  std::filesystem::path init_checkpoint;  // optional train starting point
  std::filesystem::path out;
  std::size_t epochs = 1;
  std::size_t batch_size = 4;
  std::size_t points = 0;  // resample each frame to this many points; 0 keeps all
  LrSchedule lr;
  LambdaSchedule lambda;
  NetworkConfig network;
  std::uint64_t seed = 1;
  bool fine_tune = false;
  bool export_ply = false;
  int threads = 0;  // 0 leaves the OpenMP default
  GradcheckOptions gradcheck;
  SynthConfig synth;
  std::size_t synth_count = 1;

  // Keys are documented in the README. `network = <file>` loads a network
  // config; `network.<key>` entries override it.
  static RunConfig from_config(const KeyValueConfig& kv);
  void validate() const;
};

std::string schedule_table(const RunConfig& config);

struct StepLog {
  std::size_t epoch = 0;
  Real loss = 0;
};

struct EpochLog {
  std::size_t epoch = 0;
  Real loss = 0;
  Real flow_loss = 0;
  Real occlusion_loss = 0;
  Real learning_rate = 0;
  Real lambda = 0;
  std::optional<Real> validation_epe;
};

struct TrainResult {
  NetworkParams params;
  std::vector<EpochLog> epochs;
  std::vector<StepLog> steps;
};

// Loads a checkpoint into freshly initialised parameters for `network`.
NetworkParams load_params(const std::filesystem::path& checkpoint, const NetworkConfig& network);

std::vector<ScenePair> load_dataset(const std::filesystem::path& manifest);

TrainResult run_train(const RunConfig& config, std::ostream& log);

struct FramePrediction {
  std::vector<Real> flow;       // n1 x 3
  std::vector<Real> occlusion;  // n1
};

FramePrediction predict(const ScenePair& pair, const NetworkParams& params,
                        const NetworkConfig& network);
MetricsReport evaluate_frame(const FramePrediction& prediction, const ScenePair& pair);

struct EvalResult {
  MetricsReport aggregate;
  std::vector<MetricsReport> frames;
  std::vector<std::filesystem::path> sources;
};

EvalResult evaluate(const std::vector<ScenePair>& frames, const NetworkParams& params,
                    const NetworkConfig& network);
EvalResult run_eval(const RunConfig& config, std::ostream& log);
std::string eval_json(const EvalResult& result);

// Writes "<stem>.pred.ogsf" (and "<stem>.pred.ply") per input; returns the
// written sample paths.
std::vector<std::filesystem::path> run_infer(const RunConfig& config, std::ostream& log);
// Vertices: source (own rgb), target (own rgb), source + flow (black where
// occluded, red elsewhere).
void write_ply(const std::filesystem::path& path, const ScenePair& pair,
               const FramePrediction& prediction);

struct FamilyCheck {
  std::string family;
  std::size_t checked = 0;
  Real max_relative_error = 0;
  std::string worst_parameter;
  bool passed = true;
};

struct GradcheckReport {
  std::vector<FamilyCheck> families;
  bool passed = true;
};

GradcheckReport run_gradcheck(const RunConfig& config, std::ostream& log);

// Writes synth_count samples and "manifest.txt" into config.out.
std::vector<std::filesystem::path> run_synth(const RunConfig& config, std::ostream& log);

// Runs config.mode and maps failures onto exit codes; errors go to `err`.
int run_mode(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace ogsf
