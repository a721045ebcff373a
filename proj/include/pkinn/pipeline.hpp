#ifndef PKINN_PIPELINE_HPP
#define PKINN_PIPELINE_HPP

#include <string>
#include <vector>

#include "pkinn/discover.hpp"
#include "pkinn/evaluation.hpp"
#include "pkinn/pkinn_model.hpp"
#include "pkinn/run_config.hpp"

namespace pkinn {

// A stage failure, annotated with the stage name and the process exit
// code the CLI should return.
struct StageError : std::runtime_error {
  std::string stage;
  int exit_code;
  StageError(const std::string& stage_name, const std::string& what,
             int code)
      : std::runtime_error("stage " + stage_name + ": " + what),
        stage(stage_name),
        exit_code(code) {}
};

// Exit-code classification: 2 config, 3 data, 4 divergence, 5 I/O.
int exit_code_for(const std::exception& error);

std::string sigma_label(double sigma);  // e.g. 0.005 -> "0.005"

// simulate: writes data/clean.csv and data/noisy_<sigma>.csv.
NoisyDataset simulate_stage(const RunConfig& config, const NoiseLevel& level,
                            const std::string& run_dir);

// Reads back what simulate wrote.
NoisyDataset load_dataset(const RunConfig& config, const NoiseLevel& level,
                          const std::string& run_dir);

struct TrainStageOutput {
  PKINNModel model;
  TrainReport report;
  NoisyDataset train;
  NoisyDataset test;
};

// train: splits, trains per config, writes train/checkpoint.txt and
// train/training.csv.
TrainStageOutput train_stage(const RunConfig& config, const NoiseLevel& level,
                             const NoisyDataset& full,
                             const std::string& run_dir);

struct DiscoverStageOutput {
  std::vector<DiscoveryResult> results;  // one per method run
  std::string report_text;
};

// discover: runs stlsq/gp/both on the model over sample_grid, writes
// discover/discovery.txt and discover/discovery.csv.
DiscoverStageOutput discover_stage(const RunConfig& config,
                                   const NoiseLevel& level,
                                   const PKINNModel& model,
                                   const Eigen::VectorXd& sample_grid,
                                   const std::string& run_dir);

// evaluate: extrapolation + derivative agreement + curves into eval/.
void evaluate_stage(const RunConfig& config, const PKINNModel& model,
                    const NoisyDataset& full,
                    const DiscoverStageOutput* discovery,
                    const std::string& run_dir);

// simulate -> train -> discover -> evaluate for one noise level.
void run_single(const RunConfig& config, const NoiseLevel& level,
                const std::string& run_dir);

// Full pipeline with the config echo and a root manifest; fans out one
// sub-directory per level under noise=all.
void run_pipeline(const RunConfig& config);

}  // namespace pkinn

#endif  // PKINN_PIPELINE_HPP
