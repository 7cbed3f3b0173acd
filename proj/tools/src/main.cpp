#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <cstdlib>
#include <iostream>

#include "commands.hpp"
#include "proxymotion/errors.hpp"

#ifndef PROXYMOTION_VERSION
#define PROXYMOTION_VERSION "unknown"
#endif

namespace {

void setup_logging(const std::string& flag_level) {
  auto logger = spdlog::stderr_color_mt("proxymotion");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  std::string level = "info";
  if (const char* env = std::getenv("PROXYMOTION_LOG_LEVEL")) level = env;
  if (!flag_level.empty()) level = flag_level;
  spdlog::set_level(spdlog::level::from_str(level));
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = proxymotion::cli;
  CLI::App app{"Box-guided skeleton motion generation"};
  app.set_version_flag("--version", PROXYMOTION_VERSION);
  app.require_subcommand(1);
  std::string log_level;
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off (overrides PROXYMOTION_LOG_LEVEL)")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));

  cli::FitBoxesArgs fit;
  auto* fit_cmd = app.add_subcommand("fit-boxes", "Fit per-part boxes to a capture.jsonl");
  fit_cmd->add_option("capture", fit.capture)->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("-o,--output", fit.output)->required();
  fit_cmd->add_option("-c,--config", fit.config, "JSON with \"filter\" and \"normalize\"")->check(CLI::ExistingFile);

  cli::KeyframesArgs keys;
  auto* key_cmd = app.add_subcommand("keyframes", "Interpolate key box poses into a sequence");
  key_cmd->add_option("keys", keys.keys)->required()->check(CLI::ExistingFile);
  key_cmd->add_option("--between", keys.between, "in-between counts after each key, comma separated")
      ->required()
      ->delimiter(',')
      ->check(CLI::NonNegativeNumber);
  key_cmd->add_option("-o,--output", keys.output)->required();

  cli::SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth-dataset", "Generate the procedural training set");
  synth_cmd->add_option("config", synth.config, "JSON with \"procedural\", \"augment\", \"levels\"")
      ->check(CLI::ExistingFile);
  synth_cmd->add_option("-o,--output", synth.out_dir, "output directory")->required();
  synth_cmd->add_option("--seed", synth.seed);

  cli::TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train base and control networks");
  train_cmd->add_option("dataset", tr.dataset)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("-o,--output", tr.out_dir, "checkpoint directory")->required();
  train_cmd->add_option("-c,--config", tr.config, "JSON with \"model\", \"train\", \"seed\"")->check(CLI::ExistingFile);
  train_cmd->add_option("--seed", tr.seed);
  train_cmd->add_option("--steps-base", tr.steps_base)->check(CLI::PositiveNumber);
  train_cmd->add_option("--steps-control", tr.steps_control)->check(CLI::PositiveNumber);

  cli::GenerateArgs gen;
  auto* gen_cmd = app.add_subcommand("generate", "Sample a motion, optionally box-guided");
  gen_cmd->add_option("checkpoint", gen.checkpoint)->required()->check(CLI::ExistingDirectory);
  gen_cmd->add_option("-o,--output", gen.output)->required();
  gen_cmd->add_option("--boxes", gen.boxes)->check(CLI::ExistingFile);
  gen_cmd->add_option("--label", gen.label);
  gen_cmd->add_option("--seed", gen.seed)->required();
  gen_cmd->add_option("-c,--config", gen.config, "JSON with \"guidance\"")->check(CLI::ExistingFile);
  gen_cmd->add_option("--inner-steps", gen.inner_steps)->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--step-scale", gen.step_scale)->check(CLI::NonNegativeNumber);

  cli::EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Containment metrics of a motion against boxes");
  eval_cmd->add_option("motion", ev.motion)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("boxes", ev.boxes)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("-c,--config", ev.config, "JSON with \"guidance\"")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  setup_logging(log_level);

  try {
    nlohmann::json manifest;
    if (*fit_cmd) manifest = cli::fit_boxes(fit);
    if (*key_cmd) manifest = cli::keyframes(keys);
    if (*synth_cmd) manifest = cli::synth_dataset(synth);
    if (*train_cmd) manifest = cli::train(tr);
    if (*gen_cmd) manifest = cli::generate(gen);
    if (*eval_cmd) {
      std::cout << cli::evaluate(ev).dump(2) << "\n";
      return 0;
    }
    std::cerr << manifest.dump() << "\n";
    return 0;
  } catch (const proxymotion::Error& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
}
