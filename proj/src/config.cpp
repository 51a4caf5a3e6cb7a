#include "sldsgcn/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sldsgcn/errors.hpp"

namespace sldsgcn {
namespace {

using nlohmann::json;

template <typename T>
T get_as(const json& value, const std::string& key) {
  try {
    return value.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

void validate(const RunConfig& c) {
  variant_from_string(c.variant);  // throws on unknown names
  if (c.label_rate <= 0.0 || c.label_rate >= 1.0)
    throw ConfigError("label_rate must lie in (0, 1)");
  if (c.test_frac <= 0.0 || c.test_frac >= 1.0)
    throw ConfigError("test_frac must lie in (0, 1)");
  if (c.label_rate + c.test_frac >= 1.0)
    throw ConfigError("label_rate + test_frac must stay below 1");
  if (c.seeds.empty()) throw ConfigError("seeds must not be empty");
  if (c.eta <= 0.0) throw ConfigError("eta must be positive");
  if (c.alpha < 0.0 || c.beta < 0.0)
    throw ConfigError("alpha and beta must be non-negative");
  if (c.step_mode != "normalized" && c.step_mode != "literal")
    throw ConfigError("step_mode must be 'normalized' or 'literal'");
  if (c.d_max < 1) throw ConfigError("d_max must be >= 1");
  if (c.hidden_dim < 1 || c.rank < 1)
    throw ConfigError("hidden_dim and rank must be >= 1");
  if (c.cell != "elman" && c.cell != "lstm")
    throw ConfigError("cell must be 'elman' or 'lstm'");
  if (c.degree_index != "neighbor" && c.degree_index != "center")
    throw ConfigError("degree_index must be 'neighbor' or 'center'");
  if (c.supervised_epochs < 0 || c.pretrain_epochs < 0 ||
      c.finetune_epochs < 0 || c.teacher_epochs < 0)
    throw ConfigError("epoch counts must be non-negative");
  if (c.patience < 1) throw ConfigError("patience must be >= 1");
  if (c.supervised_lr <= 0.0 || c.teacher_lr <= 0.0)
    throw ConfigError("learning rates must be positive");
  if (c.weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  if (c.teacher_prior_std <= 0.0)
    throw ConfigError("teacher_prior_std must be positive");
  if (c.teacher_samples < 2) throw ConfigError("teacher_samples must be >= 2");
  if (c.lp_tol <= 0.0) throw ConfigError("lp_tol must be positive");
  if (c.lp_max_iter < 1) throw ConfigError("lp_max_iter must be >= 1");
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  RunConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "dataset") c.dataset = get_as<std::string>(value, key);
    else if (key == "variant") c.variant = get_as<std::string>(value, key);
    else if (key == "label_rate") c.label_rate = get_as<double>(value, key);
    else if (key == "test_frac") c.test_frac = get_as<double>(value, key);
    else if (key == "seeds") c.seeds = get_as<std::vector<uint64_t>>(value, key);
    else if (key == "eta") c.eta = get_as<double>(value, key);
    else if (key == "alpha") c.alpha = get_as<double>(value, key);
    else if (key == "beta") c.beta = get_as<double>(value, key);
    else if (key == "step_mode") c.step_mode = get_as<std::string>(value, key);
    else if (key == "d_max") c.d_max = get_as<int>(value, key);
    else if (key == "hidden_dim") c.hidden_dim = get_as<int>(value, key);
    else if (key == "rank") c.rank = get_as<int>(value, key);
    else if (key == "cell") c.cell = get_as<std::string>(value, key);
    else if (key == "degree_index")
      c.degree_index = get_as<std::string>(value, key);
    else if (key == "supervised_epochs")
      c.supervised_epochs = get_as<int>(value, key);
    else if (key == "pretrain_epochs")
      c.pretrain_epochs = get_as<int>(value, key);
    else if (key == "finetune_epochs")
      c.finetune_epochs = get_as<int>(value, key);
    else if (key == "patience") c.patience = get_as<int>(value, key);
    else if (key == "supervised_lr")
      c.supervised_lr = get_as<double>(value, key);
    else if (key == "weight_decay")
      c.weight_decay = get_as<double>(value, key);
    else if (key == "teacher_prior_std")
      c.teacher_prior_std = get_as<double>(value, key);
    else if (key == "teacher_samples")
      c.teacher_samples = get_as<int>(value, key);
    else if (key == "teacher_epochs")
      c.teacher_epochs = get_as<int>(value, key);
    else if (key == "teacher_lr") c.teacher_lr = get_as<double>(value, key);
    else if (key == "lp_tol") c.lp_tol = get_as<double>(value, key);
    else if (key == "lp_max_iter") c.lp_max_iter = get_as<int>(value, key);
    else if (key == "output_dir") c.output_dir = get_as<std::string>(value, key);
    else throw ConfigError("unknown config key: " + key);
  }
  validate(c);
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw LoadError("cannot open config: " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_run_config(buf.str());
}

std::string run_config_to_json(const RunConfig& c) {
  json j;
  j["dataset"] = c.dataset;
  j["variant"] = c.variant;
  j["label_rate"] = c.label_rate;
  j["test_frac"] = c.test_frac;
  j["seeds"] = c.seeds;
  j["eta"] = c.eta;
  j["alpha"] = c.alpha;
  j["beta"] = c.beta;
  j["step_mode"] = c.step_mode;
  j["d_max"] = c.d_max;
  j["hidden_dim"] = c.hidden_dim;
  j["rank"] = c.rank;
  j["cell"] = c.cell;
  j["degree_index"] = c.degree_index;
  j["supervised_epochs"] = c.supervised_epochs;
  j["pretrain_epochs"] = c.pretrain_epochs;
  j["finetune_epochs"] = c.finetune_epochs;
  j["patience"] = c.patience;
  j["supervised_lr"] = c.supervised_lr;
  j["weight_decay"] = c.weight_decay;
  j["teacher_prior_std"] = c.teacher_prior_std;
  j["teacher_samples"] = c.teacher_samples;
  j["teacher_epochs"] = c.teacher_epochs;
  j["teacher_lr"] = c.teacher_lr;
  j["lp_tol"] = c.lp_tol;
  j["lp_max_iter"] = c.lp_max_iter;
  j["output_dir"] = c.output_dir;
  return j.dump(2);
}

TrainingPlan make_plan(const RunConfig& c, const std::string& variant,
                       uint64_t seed) {
  TrainingPlan plan;
  plan.variant = variant_from_string(variant);
  plan.eta = c.eta;
  plan.alpha = c.alpha;
  plan.beta = c.beta;
  plan.step_mode = c.step_mode == "literal" ? StepSizeMode::literal
                                            : StepSizeMode::normalized;
  plan.d_max = c.d_max;
  plan.hidden_dim = c.hidden_dim;
  plan.rank = c.rank;
  plan.cell = c.cell == "lstm" ? CellKind::lstm : CellKind::elman;
  plan.degree_index = c.degree_index == "center" ? DegreeIndexMode::center
                                                 : DegreeIndexMode::neighbor;
  plan.supervised_epochs = c.supervised_epochs;
  plan.pretrain_epochs = c.pretrain_epochs;
  plan.finetune_epochs = c.finetune_epochs;
  plan.patience = c.patience;
  plan.supervised_lr = c.supervised_lr;
  plan.weight_decay = c.weight_decay;
  plan.lp_tol = c.lp_tol;
  plan.lp_max_iter = c.lp_max_iter;
  plan.teacher_prior_std = c.teacher_prior_std;
  plan.teacher_samples = c.teacher_samples;
  plan.teacher_epochs = c.teacher_epochs;
  plan.teacher_lr = c.teacher_lr;
  plan.seed = seed;
  return plan;
}

}  // namespace sldsgcn
