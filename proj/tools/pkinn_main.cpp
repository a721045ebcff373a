#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "pkinn/errors.hpp"
#include "pkinn/pipeline.hpp"

namespace {

struct CliFlags {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::string noise;
  std::string mode;
  int epochs = 0;
  double lr = 0.0;
  std::string method;
};

void add_common_options(CLI::App* cmd, CliFlags& flags) {
  cmd->add_option("--config", flags.config_path,
                  "key=value configuration file");
  cmd->add_option("--out", flags.out_dir, "run directory");
  cmd->add_option("--seed", flags.seed, "master seed");
  cmd->add_option("--noise", flags.noise, "low|medium|high|all");
  cmd->add_option("--mode", flags.mode, "blackbox|parametric");
  cmd->add_option("--epochs", flags.epochs, "training epochs");
  cmd->add_option("--lr", flags.lr, "Adam learning rate");
  cmd->add_option("--method", flags.method, "stlsq|gp|both");
}

// Config file first, then any flag actually given wins.
pkinn::RunConfig resolve_config(const CLI::App* cmd, const CliFlags& flags) {
  pkinn::RunConfig config = flags.config_path.empty()
                                ? pkinn::RunConfig{}
                                : pkinn::load_config_file(flags.config_path);
  if (cmd->count("--out")) config.out_dir = flags.out_dir;
  if (cmd->count("--seed")) config.seed = flags.seed;
  if (cmd->count("--noise")) config.noise = flags.noise;
  if (cmd->count("--mode")) config.mode = flags.mode;
  if (cmd->count("--epochs")) config.epochs = flags.epochs;
  if (cmd->count("--lr")) config.learning_rate = flags.lr;
  if (cmd->count("--method")) config.method = flags.method;
  pkinn::validate(config);
  return config;
}

pkinn::NoiseLevel single_level(const pkinn::RunConfig& config,
                               const std::string& subcommand) {
  if (config.noise == "all") {
    throw pkinn::ConfigError(subcommand +
                             " needs one noise level (low|medium|high); run "
                             "`pipeline` for the full fan-out");
  }
  return pkinn::resolve_noise_level(config, config.noise);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Compartment-model surrogate training and equation discovery"};
  app.require_subcommand(1);
  CliFlags flags;

  CLI::App* simulate =
      app.add_subcommand("simulate", "generate clean and noisy datasets");
  CLI::App* train_cmd =
      app.add_subcommand("train", "fit the dual-network surrogate");
  CLI::App* discover_cmd = app.add_subcommand(
      "discover", "recover closed-form components from a checkpoint");
  CLI::App* evaluate_cmd = app.add_subcommand(
      "evaluate", "extrapolation and derivative-agreement reports");
  CLI::App* pipeline_cmd = app.add_subcommand(
      "pipeline", "simulate, train, discover and evaluate in one run");
  for (CLI::App* cmd :
       {simulate, train_cmd, discover_cmd, evaluate_cmd, pipeline_cmd}) {
    add_common_options(cmd, flags);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* cmd = app.get_subcommands().front();
  try {
    const pkinn::RunConfig config = resolve_config(cmd, flags);

    if (cmd == simulate) {
      for (const pkinn::NoiseLevel& level :
           pkinn::selected_noise_levels(config)) {
        pkinn::simulate_stage(config, level, config.out_dir);
      }
    } else if (cmd == train_cmd) {
      const pkinn::NoiseLevel level = single_level(config, "train");
      const pkinn::NoisyDataset full =
          pkinn::load_dataset(config, level, config.out_dir);
      pkinn::train_stage(config, level, full, config.out_dir);
    } else if (cmd == discover_cmd) {
      const pkinn::NoiseLevel level = single_level(config, "discover");
      const pkinn::PKINNModel model = pkinn::read_model(
          (std::filesystem::path(config.out_dir) / "train" / "checkpoint.txt")
              .string());
      const pkinn::NoisyDataset full =
          pkinn::load_dataset(config, level, config.out_dir);
      auto [train_set, test_set] =
          pkinn::split_train_test(full, config.t_split);
      pkinn::discover_stage(config, level, model, train_set.noisy.times,
                            config.out_dir);
    } else if (cmd == evaluate_cmd) {
      const pkinn::NoiseLevel level = single_level(config, "evaluate");
      const pkinn::PKINNModel model = pkinn::read_model(
          (std::filesystem::path(config.out_dir) / "train" / "checkpoint.txt")
              .string());
      const pkinn::NoisyDataset full =
          pkinn::load_dataset(config, level, config.out_dir);
      // Fold in an existing discovery report when the stage already ran.
      pkinn::DiscoverStageOutput discovery;
      const auto report_path =
          std::filesystem::path(config.out_dir) / "discover" / "discovery.txt";
      const bool have_discovery = std::filesystem::exists(report_path);
      if (have_discovery) {
        std::ifstream in(report_path);
        std::stringstream ss;
        ss << in.rdbuf();
        discovery.report_text = ss.str();
      }
      pkinn::evaluate_stage(config, model, full,
                            have_discovery ? &discovery : nullptr,
                            config.out_dir);
    } else {
      pkinn::run_pipeline(config);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pkinn::exit_code_for(e);
  }
  return 0;
}
