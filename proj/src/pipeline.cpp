#include "pkinn/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pkinn/errors.hpp"

namespace pkinn {

namespace fs = std::filesystem;

int exit_code_for(const std::exception& error) {
  if (const auto* stage = dynamic_cast<const StageError*>(&error)) {
    return stage->exit_code;
  }
  if (dynamic_cast<const ConfigError*>(&error)) return 2;
  if (dynamic_cast<const DivergedError*>(&error)) return 4;
  if (dynamic_cast<const IoError*>(&error)) return 5;
  if (dynamic_cast<const fs::filesystem_error*>(&error)) return 5;
  if (dynamic_cast<const ParseError*>(&error)) return 3;
  return 3;  // remaining data/precondition problems
}

std::string sigma_label(double sigma) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", sigma);
  return buf;
}

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory: " + dir.string());
}

template <typename Fn>
auto stage_guard(const std::string& stage, Fn&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what(), exit_code_for(e));
  }
}

StateVector initial_state(const RunConfig& config) {
  return StateVector(config.init_x0, config.init_x1, config.init_x2);
}

TrainConfig train_config_of(const RunConfig& config, const NoiseLevel& level) {
  TrainConfig tc;
  tc.epochs = config.epochs;
  tc.learning_rate = config.learning_rate;
  tc.seed = stage_seed(config, level, 1);
  tc.initial_condition = initial_state(config);
  tc.mode = mode_from_string(config.mode);
  return tc;
}

std::string format_mse(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6e", x);
  return buf;
}

std::string full_precision(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string support_text(const std::array<bool, 3>& support) {
  std::string out = "{";
  for (int v = 0; v < 3; ++v) {
    if (!support[v]) continue;
    if (out.size() > 1) out += ",";
    out += "X" + std::to_string(v);
  }
  return out + "}";
}

}  // namespace

NoisyDataset simulate_stage(const RunConfig& config, const NoiseLevel& level,
                            const std::string& run_dir) {
  return stage_guard("simulate", [&] {
    const Eigen::VectorXd grid =
        linspace(config.t_start, config.t_end, config.n_points);
    const Trajectory traj =
        integrate(config.pk, initial_state(config), grid, config.substeps);
    NoisyDataset ds =
        add_noise(traj, level.sigma, stage_seed(config, level, 0));
    const fs::path data_dir = fs::path(run_dir) / "data";
    ensure_dir(data_dir);
    write_trajectory_csv(ds.clean, (data_dir / "clean.csv").string());
    write_trajectory_csv(
        ds.noisy,
        (data_dir / ("noisy_" + sigma_label(level.sigma) + ".csv")).string());
    return ds;
  });
}

NoisyDataset load_dataset(const RunConfig& config, const NoiseLevel& level,
                          const std::string& run_dir) {
  return stage_guard("load-data", [&] {
    const fs::path data_dir = fs::path(run_dir) / "data";
    NoisyDataset ds;
    ds.clean = read_trajectory_csv((data_dir / "clean.csv").string());
    ds.noisy = read_trajectory_csv(
        (data_dir / ("noisy_" + sigma_label(level.sigma) + ".csv")).string());
    if (ds.clean.size() != ds.noisy.size() ||
        ds.clean.times != ds.noisy.times) {
      throw ParseError((data_dir / "clean.csv").string(), 0,
                       "clean/noisy time grids disagree");
    }
    ds.noise_sigma = level.sigma;
    ds.seed = stage_seed(config, level, 0);
    return ds;
  });
}

TrainStageOutput train_stage(const RunConfig& config, const NoiseLevel& level,
                             const NoisyDataset& full,
                             const std::string& run_dir) {
  return stage_guard("train", [&] {
    auto [train_set, test_set] = split_train_test(full, config.t_split);
    PKINNModel model =
        make_model(mode_from_string(config.mode),
                   stage_seed(config, level, 1), config.x_hidden,
                   config.f_hidden);
    model.loss_weights = {config.lambda_data, config.lambda_ode,
                          config.lambda_ic};
    auto [trained, report] =
        train(model, train_set, train_config_of(config, level));

    const fs::path train_dir = fs::path(run_dir) / "train";
    ensure_dir(train_dir);
    write_model(trained, (train_dir / "checkpoint.txt").string());
    write_train_report_csv(report, (train_dir / "training.csv").string());
    return TrainStageOutput{std::move(trained), std::move(report),
                            std::move(train_set), std::move(test_set)};
  });
}

DiscoverStageOutput discover_stage(const RunConfig& config,
                                   const NoiseLevel& level,
                                   const PKINNModel& model,
                                   const Eigen::VectorXd& sample_grid,
                                   const std::string& run_dir) {
  return stage_guard("discover", [&] {
    std::vector<SRMethod> methods;
    if (config.method == "stlsq" || config.method == "both") {
      methods.push_back(SRMethod::kStlsq);
    }
    if (config.method == "gp" || config.method == "both") {
      methods.push_back(SRMethod::kGp);
    }

    DiscoverStageOutput out;
    std::ostringstream text;
    std::ostringstream csv;
    text << "discovery report\n";
    csv << "method,component,expression,size,mse,terms\n";

    for (SRMethod method : methods) {
      DiscoverSettings settings;
      settings.method = method;
      settings.target_source = config.sr_target == "f"
                                   ? TargetSource::kFPredict
                                   : TargetSource::kStateDerivative;
      settings.library_degree = config.library_degree;
      settings.stlsq = {config.stlsq_threshold, config.stlsq_max_iter,
                        config.stlsq_ridge};
      settings.gp.population = config.gp_population;
      settings.gp.generations = config.gp_generations;
      settings.gp.parsimony = config.gp_parsimony;
      settings.gp.max_size = config.gp_max_size;
      settings.gp.crossover_rate = config.gp_crossover;
      settings.gp.mutation_rate = config.gp_mutation;
      settings.gp.seed = stage_seed(config, level, 2);

      DiscoveryResult result = discover(model, sample_grid, settings);
      const ExpressionComparison cmp =
          compare_expressions(result.expressions, config.pk);

      text << "method " << to_string(method) << "\n";
      for (int c = 0; c < 3; ++c) {
        const Expression& expr = result.expressions[c];
        text << "f" << (c + 1) << " = " << to_text(expr) << "  [size "
             << expr.size() << ", mse " << format_mse(result.in_sample_mse[c])
             << "]\n";

        csv << to_string(method) << ",f" << (c + 1) << "," << to_text(expr)
            << "," << expr.size() << ","
            << full_precision(result.in_sample_mse[c]) << ",";
        bool first = true;
        for (const auto& [mono, coeff] : expand(expr)) {
          if (!first) csv << ";";
          csv << to_string(mono) << "=" << full_precision(coeff);
          first = false;
        }
        csv << "\n";
      }
      for (int c = 0; c < 3; ++c) {
        const ComponentComparison& comp = cmp.components[c];
        text << "f" << (c + 1) << " structure: linear="
             << (comp.linear ? "yes" : "no")
             << " support=" << support_text(comp.support)
             << " reference=" << support_text(comp.true_support)
             << " match=" << (comp.support_match ? "yes" : "no") << "\n";
      }
      out.results.push_back(std::move(result));
    }
    out.report_text = text.str();

    const fs::path dir = fs::path(run_dir) / "discover";
    ensure_dir(dir);
    std::ofstream txt(dir / "discovery.txt");
    txt << out.report_text;
    std::ofstream table(dir / "discovery.csv");
    table << csv.str();
    if (!txt || !table) {
      throw IoError("write failed under " + dir.string());
    }
    return out;
  });
}

void evaluate_stage(const RunConfig& config, const PKINNModel& model,
                    const NoisyDataset& full,
                    const DiscoverStageOutput* discovery,
                    const std::string& run_dir) {
  stage_guard("evaluate", [&] {
    auto [train_set, test_set] = split_train_test(full, config.t_split);

    RunArtifacts artifacts;
    artifacts.dataset = full;
    artifacts.predictions = predict(model, full.clean.times);
    artifacts.t_split = config.t_split;
    artifacts.extrapolation = extrapolation_mse(model, test_set);

    if (config.deriv_source == "autodiff") {
      artifacts.derivatives =
          derivative_agreement(model, train_set.noisy.times);
    } else {
      // Differentiate the raw data instead of the state surrogate.
      const Eigen::VectorXd& grid = train_set.noisy.times;
      StateMatrix predicted(grid.size(), 3);
      for (Eigen::Index i = 0; i < grid.size(); ++i) {
        const StateVector x =
            forward(model.x_net, Eigen::VectorXd::Constant(1, grid[i]));
        predicted.row(i) = f_predict(model, grid[i], x).transpose();
      }
      artifacts.derivatives = make_derivative_agreement(
          grid, finite_difference_derivatives(train_set.noisy),
          std::move(predicted));
    }
    if (discovery) artifacts.discovery_text = discovery->report_text;

    export_run(artifacts, (fs::path(run_dir) / "eval").string());
    return 0;
  });
}

void run_single(const RunConfig& config, const NoiseLevel& level,
                const std::string& run_dir) {
  const NoisyDataset full = simulate_stage(config, level, run_dir);
  TrainStageOutput trained = train_stage(config, level, full, run_dir);
  DiscoverStageOutput discovery = discover_stage(
      config, level, trained.model, trained.train.noisy.times, run_dir);
  evaluate_stage(config, trained.model, full, &discovery, run_dir);
}

void run_pipeline(const RunConfig& config) {
  validate(config);
  ensure_dir(config.out_dir);

  {
    std::ofstream echo(fs::path(config.out_dir) / "config.txt");
    echo << render_config(config);
    if (!echo) throw IoError("write failed: " + config.out_dir);
  }

  for (const NoiseLevel& level : selected_noise_levels(config)) {
    const std::string dir =
        config.noise == "all"
            ? (fs::path(config.out_dir) / level.name).string()
            : config.out_dir;
    run_single(config, level, dir);
  }

  // Root manifest over every file of the run, relative sorted paths.
  std::vector<std::string> entries;
  for (const auto& item : fs::recursive_directory_iterator(config.out_dir)) {
    if (!item.is_regular_file()) continue;
    const std::string rel =
        fs::relative(item.path(), config.out_dir).generic_string();
    if (rel == "manifest.txt") continue;
    entries.push_back(rel + " " + std::to_string(fs::file_size(item.path())));
  }
  std::sort(entries.begin(), entries.end());
  std::ofstream manifest(fs::path(config.out_dir) / "manifest.txt");
  for (const std::string& line : entries) manifest << line << "\n";
  if (!manifest) throw IoError("write failed: " + config.out_dir);
}

}  // namespace pkinn
