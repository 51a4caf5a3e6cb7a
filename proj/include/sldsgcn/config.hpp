#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sldsgcn/pipeline.hpp"

namespace sldsgcn {

/// Declarative description of a whole experiment: dataset, variant, split,
/// hyperparameters, seeds. Every knob has the reference defaults baked in;
/// a config file only states deviations. Unknown keys are rejected so typos
/// fail loudly instead of silently running defaults.
struct RunConfig {
  std::string dataset;
  std::string variant = "SL-DSGCN";
  double label_rate = 0.03;
  double test_frac = 0.35;
  std::vector<uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  double eta = 0.01;
  double alpha = 1.0;
  double beta = 1.0;
  std::string step_mode = "normalized";  // or "literal"
  int d_max = 10;
  int hidden_dim = 16;
  int rank = 8;
  std::string cell = "elman";             // or "lstm"
  std::string degree_index = "neighbor";  // or "center"
  int supervised_epochs = 200;
  int pretrain_epochs = 200;
  int finetune_epochs = 200;
  int patience = 20;
  double supervised_lr = 0.01;
  double weight_decay = 5e-4;
  double teacher_prior_std = 1.0;
  int teacher_samples = 64;
  int teacher_epochs = 200;
  double teacher_lr = 0.01;
  double lp_tol = 1e-6;
  int lp_max_iter = 1000;
  std::string output_dir = "runs";
};

/// Parses a JSON object; throws ConfigError naming any unknown key or
/// out-of-range value.
RunConfig parse_run_config(const std::string& json_text);

/// Reads and parses a config file.
RunConfig load_run_config(const std::string& path);

/// Full echo of the effective configuration (defaults included), embedded
/// into every output artifact for reproducibility.
std::string run_config_to_json(const RunConfig& config);

/// Expands the config into the plan for one (variant, seed) run.
TrainingPlan make_plan(const RunConfig& config, const std::string& variant,
                       uint64_t seed);

}  // namespace sldsgcn
