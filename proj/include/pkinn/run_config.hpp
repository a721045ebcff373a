#ifndef PKINN_RUN_CONFIG_HPP
#define PKINN_RUN_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "pkinn/pk_model.hpp"

namespace pkinn {

// Every knob of a reproducible run. Defaults are the reference protocol;
// the resolved echo written by the pipeline replays byte-exactly.
struct RunConfig {
  // run identity
  std::uint64_t seed = 12;
  std::string out_dir = "runs/out";
  std::string noise = "low";  // low | medium | high | all

  // data generation
  double t_start = 0.0;
  double t_end = 10.0;
  int n_points = 100;
  double t_split = 8.0;
  int substeps = 10;
  double init_x0 = 1.0, init_x1 = 0.0, init_x2 = 0.0;
  bool noise_as_variance = false;  // read N(0,s) as variance instead of sd
  PKParameters pk;

  // training
  std::string mode = "blackbox";  // blackbox | parametric
  int epochs = 1000;
  double learning_rate = 1e-2;
  double lambda_data = 1.0, lambda_ode = 2.0, lambda_ic = 1.0;
  std::vector<int> x_hidden{100, 100};
  std::vector<int> f_hidden{100, 100, 100};

  // discovery
  std::string method = "both";  // stlsq | gp | both
  int library_degree = 2;
  double stlsq_threshold = 0.1;
  int stlsq_max_iter = 20;
  // Pipeline fits carry the reference sparse-regression ridge; bare
  // stlsq() stays unregularized for exact-recovery use.
  double stlsq_ridge = 0.05;
  int gp_population = 200;
  int gp_generations = 100;
  double gp_parsimony = 1e-3;
  int gp_max_size = 25;
  double gp_crossover = 0.9;
  double gp_mutation = 0.1;
  std::string sr_target = "f";  // f | derivative

  // evaluation
  std::string deriv_source = "autodiff";  // autodiff | data
};

// Flat key=value file ('#' comments, blank lines ignored). Unknown keys
// and malformed values raise ConfigError.
RunConfig load_config_file(const std::string& path);

// Applies one key=value override (the CLI flag path). Throws ConfigError.
void set_config_value(RunConfig& config, const std::string& key,
                      const std::string& value);

// Deterministic full echo; load_config applied to it reproduces `config`.
std::string render_config(const RunConfig& config);

// Sanity checks of enumerations and ranges; ConfigError on violation.
void validate(const RunConfig& config);

struct NoiseLevel {
  std::string name;  // low / medium / high
  double sigma = 0.0;
  int index = 0;
};

// The σ behind a named level, honoring noise_as_variance.
NoiseLevel resolve_noise_level(const RunConfig& config,
                               const std::string& name);

// One level, or all three for noise=all.
std::vector<NoiseLevel> selected_noise_levels(const RunConfig& config);

// Stage seeds: submaster = seed + 1000*level, then +0 simulate, +1 train,
// +2 discover.
std::uint64_t stage_seed(const RunConfig& config, const NoiseLevel& level,
                         int stage_index);

}  // namespace pkinn

#endif  // PKINN_RUN_CONFIG_HPP
