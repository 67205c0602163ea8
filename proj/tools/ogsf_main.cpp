// ogsf <mode> --config <path> [overrides]

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ogsf/error.hpp"
#include "ogsf/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Occlusion-guided scene flow: train, eval, infer, gradcheck, synth"};
  std::string mode;
  std::string config_path;
  std::optional<std::int64_t> seed;
  std::optional<std::size_t> epochs;
  std::string checkpoint;
  std::string out;
  bool export_ply = false;
  bool fine_tune = false;
  std::vector<std::string> sets;

  app.add_option("mode", mode, "train | eval | infer | gradcheck | synth")
      ->required()
      ->check(CLI::IsMember({"train", "eval", "infer", "gradcheck", "synth"}));
  app.add_option("--config,-c", config_path, "key = value config file");
  app.add_option("--seed", seed, "override seed");
  app.add_option("--epochs", epochs, "override epochs");
  app.add_option("--checkpoint", checkpoint, "override checkpoint path");
  app.add_option("--out", out, "override output path");
  app.add_flag("--export-ply", export_ply, "infer: also write ASCII PLY geometry");
  app.add_flag("--fine-tune", fine_tune, "train on the flow-only loss");
  app.add_option("--set", sets, "extra key=value override (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ogsf::kExitConfig;
  }

  ogsf::RunConfig config;
  try {
    ogsf::KeyValueConfig kv;
    if (!config_path.empty()) kv = ogsf::KeyValueConfig::load(config_path);
    for (const auto& s : sets) kv.merge(ogsf::KeyValueConfig::parse(s, "--set"));
    kv.set("mode", mode);
    if (seed) kv.set("seed", std::to_string(*seed));
    if (epochs) kv.set("epochs", std::to_string(*epochs));
    if (export_ply) kv.set("export_ply", "true");
    if (fine_tune) kv.set("fine_tune", "true");
    config = ogsf::RunConfig::from_config(kv);
    // Command-line paths are relative to the working directory.
    if (!checkpoint.empty()) config.checkpoint = checkpoint;
    if (!out.empty()) config.out = out;
  } catch (const ogsf::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return ogsf::kExitConfig;
  }
  return ogsf::run_mode(config, std::cout, std::cerr);
}
