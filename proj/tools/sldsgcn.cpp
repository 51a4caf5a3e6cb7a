// Command-line front end: dataset ingestion and generation, degree-bias
// profiling, training, ablation sweeps and checkpoint evaluation.
#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "sldsgcn/analysis.hpp"
#include "sldsgcn/checkpoint.hpp"
#include "sldsgcn/config.hpp"
#include "sldsgcn/datagen.hpp"
#include "sldsgcn/errors.hpp"
#include "sldsgcn/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sldsgcn;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitTraining = 3;

void write_text_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp);
    if (!f) throw LoadError("cannot open for writing: " + tmp.string());
    f << text;
  }
  fs::rename(tmp, path);
}

json student_meta(const StudentConfig& sc) {
  return {{"in_dim", sc.in_dim},
          {"hidden_dim", sc.hidden_dim},
          {"out_dim", sc.out_dim},
          {"degree_specific", sc.degree_specific},
          {"d_max", sc.d_max},
          {"rank", sc.rank},
          {"cell", sc.cell == CellKind::lstm ? "lstm" : "elman"},
          {"degree_index",
           sc.degree_index == DegreeIndexMode::center ? "center" : "neighbor"},
          {"init_seed", sc.init_seed}};
}

StudentConfig student_from_meta(const json& j) {
  StudentConfig sc;
  sc.in_dim = j.at("in_dim").get<int>();
  sc.hidden_dim = j.at("hidden_dim").get<int>();
  sc.out_dim = j.at("out_dim").get<int>();
  sc.degree_specific = j.at("degree_specific").get<bool>();
  sc.d_max = j.at("d_max").get<int>();
  sc.rank = j.at("rank").get<int>();
  sc.cell = j.at("cell").get<std::string>() == "lstm" ? CellKind::lstm
                                                      : CellKind::elman;
  sc.degree_index = j.at("degree_index").get<std::string>() == "center"
                        ? DegreeIndexMode::center
                        : DegreeIndexMode::neighbor;
  sc.init_seed = j.at("init_seed").get<uint64_t>();
  return sc;
}

struct SeedResult {
  uint64_t seed = 0;
  RunMetrics metrics;
};

// Runs one variant over all seeds, optionally in parallel, returning results
// in seed order. Exceptions from workers rethrow on the caller thread.
std::vector<SeedResult> run_seeds(const RunConfig& config,
                                  const std::string& variant,
                                  const GraphContext& ctx, const Graph& g,
                                  int workers,
                                  const fs::path* checkpoint_dir) {
  std::vector<SeedResult> results(config.seeds.size());
  std::exception_ptr first_error;
  std::mutex mu;
  std::atomic<size_t> next{0};

  auto worker = [&] {
    for (;;) {
      const size_t idx = next.fetch_add(1);
      if (idx >= config.seeds.size()) return;
      try {
        const uint64_t seed = config.seeds[idx];
        TrainingPlan plan = make_plan(config, variant, seed);
        SplitMasks masks = split(g, config.label_rate, config.test_frac, seed);
        std::unique_ptr<StudentNetwork> trained;
        RunMetrics m = run_variant(plan, ctx, masks, &trained);
        if (checkpoint_dir != nullptr) {
          json meta;
          meta["student"] = student_meta(trained->config());
          meta["variant"] = variant;
          meta["seed"] = seed;
          meta["dataset"] = config.dataset;
          meta["label_rate"] = config.label_rate;
          meta["test_frac"] = config.test_frac;
          meta["accuracy"] = m.accuracy;
          std::vector<std::pair<std::string, Eigen::MatrixXd>> tensors;
          for (const auto& [name, t] : trained->named_parameters())
            tensors.emplace_back(name, t.value());
          save_checkpoint((*checkpoint_dir /
                           ("checkpoint_" + variant + "_" +
                            std::to_string(seed) + ".bin"))
                              .string(),
                          meta.dump(), tensors);
        }
        std::lock_guard<std::mutex> lock(mu);
        results[idx] = {seed, std::move(m)};
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first_error) first_error = std::current_exception();
        next.store(config.seeds.size());  // drain remaining work
        return;
      }
    }
  };

  const int count = std::max(1, std::min<int>(workers, static_cast<int>(
                                                           config.seeds.size())));
  if (count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(count));
    for (int t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return results;
}

json metrics_json(const RunMetrics& m) { return json::parse(metrics_to_json(m)); }

json aggregate_json(const std::vector<SeedResult>& results) {
  double mean = 0.0;
  for (const auto& r : results) mean += r.metrics.accuracy;
  mean /= static_cast<double>(results.size());
  double var = 0.0;
  for (const auto& r : results) {
    const double d = r.metrics.accuracy - mean;
    var += d * d;
  }
  var /= static_cast<double>(results.size());
  return {{"mean_accuracy", mean}, {"std_accuracy", std::sqrt(var)}};
}

int cmd_ingest(const std::string& src, const std::string& dst) {
  LoadStats stats;
  Graph g = load_graph(src, &stats);
  fs::create_directories(dst);
  save_graph(g, dst);
  std::cout << "N=" << g.num_nodes << " E=" << g.num_edges()
            << " C=" << g.num_classes << " F=" << g.num_features << "\n"
            << "self_loops_dropped=" << stats.self_loops_dropped
            << " duplicate_edges_dropped=" << stats.duplicate_edges_dropped
            << "\n";
  return 0;
}

int cmd_make_dataset(const std::string& preset, const std::string& dst,
                     uint64_t seed_override, bool has_seed) {
  SyntheticSpec spec;
  if (preset == "cora-like") {
    spec = cora_like();
  } else if (preset == "citeseer-like") {
    spec = citeseer_like();
  } else {
    throw ConfigError("unknown preset: " + preset +
                      " (expected cora-like or citeseer-like)");
  }
  if (has_seed) spec.seed = seed_override;
  Graph g = generate_citation_graph(spec);
  fs::create_directories(dst);
  save_graph(g, dst);
  std::cout << "generated N=" << g.num_nodes << " E=" << g.num_edges()
            << " C=" << g.num_classes << " F=" << g.num_features << " into "
            << dst << "\n";
  return 0;
}

int cmd_profile(const RunConfig& config) {
  Graph g = load_graph(config.dataset);
  fs::create_directories(config.output_dir);
  const fs::path out(config.output_dir);
  const uint64_t seed = config.seeds.front();
  SplitMasks masks = split(g, config.label_rate, config.test_frac, seed);

  write_degree_distribution((out / "degree_distribution.csv").string(),
                            degree_distribution(g));
  write_labeled_neighbor_ratio((out / "labeled_neighbor_ratio.csv").string(),
                               labeled_neighbor_ratio(g, masks));

  // Error-by-degree needs predictions; train the baseline variant inline.
  GraphContext ctx = GraphContext::build(g, config.d_max);
  TrainingPlan plan = make_plan(config, "GCN", seed);
  std::unique_ptr<StudentNetwork> trained;
  run_variant(plan, ctx, masks, &trained);
  Eigen::MatrixXd probs = trained->predict(ctx).predictions.value();
  std::vector<int> predicted(static_cast<size_t>(g.num_nodes));
  for (int i = 0; i < g.num_nodes; ++i) {
    int best = 0;
    for (int c = 1; c < probs.cols(); ++c)
      if (probs(i, c) > probs(i, best)) best = c;
    predicted[static_cast<size_t>(i)] = best;
  }
  write_error_by_degree(
      (out / "error_by_degree.csv").string(),
      error_by_degree(predicted, g.labels, masks.test, ctx.degree,
                      config.d_max));

  InfluenceConfig ic;
  ic.hidden_dim = config.hidden_dim;
  ic.out_dim = config.hidden_dim;
  ic.seed = seed;
  write_influence((out / "influence.csv").string(), g,
                  influence_scores(g, masks, ic));

  write_text_atomic(out / "profile_config.json", run_config_to_json(config));
  std::cout << "profile reports written to " << config.output_dir << "\n";
  return 0;
}

int cmd_train(const RunConfig& config, int workers) {
  Graph g = load_graph(config.dataset);
  GraphContext ctx = GraphContext::build(g, config.d_max);
  fs::create_directories(config.output_dir);
  const fs::path out(config.output_dir);

  std::vector<SeedResult> results =
      run_seeds(config, config.variant, ctx, g, workers, &out);

  json summary;
  summary["schema_version"] = 1;
  summary["config"] = json::parse(run_config_to_json(config));
  summary["runs"] = json::array();
  for (const auto& r : results) {
    json jm = metrics_json(r.metrics);
    write_text_atomic(out / ("metrics_" + config.variant + "_" +
                             std::to_string(r.seed) + ".json"),
                      json{{"config", json::parse(run_config_to_json(config))},
                           {"metrics", jm}}
                          .dump(2));
    summary["runs"].push_back(jm);
  }
  summary["aggregate"] = aggregate_json(results);
  const std::string summary_text = summary.dump(2);
  write_text_atomic(out / ("summary_" + config.variant + ".json"),
                    summary_text);
  std::cout << summary_text << "\n";
  return 0;
}

int cmd_ablate(const RunConfig& config, int workers) {
  Graph g = load_graph(config.dataset);
  GraphContext ctx = GraphContext::build(g, config.d_max);
  fs::create_directories(config.output_dir);
  const fs::path out(config.output_dir);

  const std::vector<std::string> variants = {
      "GCN",      "DSGCN",    "MT-GNN",     "SL-fs",
      "SL-GNN",   "SL-DSGCN", "soft-set-A", "soft-set-T"};
  std::ostringstream csv;
  csv << "variant,label_rate,mean_accuracy,std_accuracy,seeds\n";
  json all;
  all["config"] = json::parse(run_config_to_json(config));
  for (const std::string& variant : variants) {
    std::vector<SeedResult> results =
        run_seeds(config, variant, ctx, g, workers, nullptr);
    const json agg = aggregate_json(results);
    csv << variant << "," << config.label_rate << ","
        << agg["mean_accuracy"].get<double>() << ","
        << agg["std_accuracy"].get<double>() << "," << results.size() << "\n";
    json per_seed = json::array();
    for (const auto& r : results) per_seed.push_back(metrics_json(r.metrics));
    all["variants"][variant] = {{"aggregate", agg}, {"runs", per_seed}};
    std::cout << variant << ": mean=" << agg["mean_accuracy"].get<double>()
              << " std=" << agg["std_accuracy"].get<double>() << "\n";
  }
  write_text_atomic(out / "ablation.csv", csv.str());
  write_text_atomic(out / "ablation.json", all.dump(2));
  return 0;
}

int cmd_evaluate(const std::string& checkpoint_path,
                 const std::string& dataset_override) {
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  const json meta = json::parse(ckpt.meta_json);
  const std::string dataset = dataset_override.empty()
                                  ? meta.at("dataset").get<std::string>()
                                  : dataset_override;
  Graph g = load_graph(dataset);

  StudentConfig sc = student_from_meta(meta.at("student"));
  StudentNetwork student(sc);
  auto named = student.named_parameters();
  if (named.size() != ckpt.tensors.size())
    throw LoadError("checkpoint parameter count mismatch");
  for (size_t i = 0; i < named.size(); ++i) {
    if (named[i].first != ckpt.tensors[i].first)
      throw LoadError("checkpoint parameter name mismatch: expected " +
                      named[i].first + ", found " + ckpt.tensors[i].first);
    if (named[i].second.value().rows() != ckpt.tensors[i].second.rows() ||
        named[i].second.value().cols() != ckpt.tensors[i].second.cols())
      throw LoadError("checkpoint parameter shape mismatch: " +
                      named[i].first);
    named[i].second.value() = ckpt.tensors[i].second;
  }

  SplitMasks masks = split(g, meta.at("label_rate").get<double>(),
                           meta.at("test_frac").get<double>(),
                           meta.at("seed").get<uint64_t>());
  GraphContext ctx = GraphContext::build(g, sc.d_max);
  Eigen::MatrixXd probs = student.predict(ctx).predictions.value();

  int total = 0, correct = 0;
  for (int i = 0; i < g.num_nodes; ++i) {
    if (!masks.test[static_cast<size_t>(i)]) continue;
    int best = 0;
    for (int c = 1; c < probs.cols(); ++c)
      if (probs(i, c) > probs(i, best)) best = c;
    ++total;
    correct += best == g.labels[static_cast<size_t>(i)];
  }
  json result;
  result["checkpoint"] = checkpoint_path;
  result["dataset"] = dataset;
  result["test_nodes"] = total;
  result["accuracy"] = total > 0 ? static_cast<double>(correct) / total : 0.0;
  result["training_accuracy_at_save"] = meta.value("accuracy", -1.0);
  std::cout << result.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Degree-aware graph convolution training and diagnostics"};
  app.require_subcommand(1);

  std::string config_path, dataset, variant, seeds_csv, output_dir;
  double label_rate = -1.0, test_frac = -1.0;
  int workers = 1;

  auto add_config_flags = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--dataset", dataset, "dataset directory (overrides config)");
    cmd->add_option("--label-rate", label_rate, "training label rate override");
    cmd->add_option("--test-frac", test_frac, "test fraction override");
    cmd->add_option("--seeds", seeds_csv, "comma-separated seed list override");
    cmd->add_option("--output-dir", output_dir, "artifact directory override");
  };
  auto build_config = [&]() {
    RunConfig c = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (!dataset.empty()) c.dataset = dataset;
    if (!variant.empty()) c.variant = variant;
    if (label_rate >= 0.0) c.label_rate = label_rate;
    if (test_frac >= 0.0) c.test_frac = test_frac;
    if (!output_dir.empty()) c.output_dir = output_dir;
    if (!seeds_csv.empty()) {
      c.seeds.clear();
      std::stringstream ss(seeds_csv);
      std::string tok;
      while (std::getline(ss, tok, ','))
        c.seeds.push_back(std::stoull(tok));
    }
    if (c.dataset.empty())
      throw ConfigError("no dataset given (config 'dataset' key or --dataset)");
    // Re-validate after overrides.
    return parse_run_config(run_config_to_json(c));
  };

  std::string ingest_src, ingest_dst;
  CLI::App* ingest = app.add_subcommand("ingest", "validate and copy a dataset");
  ingest->add_option("src", ingest_src, "source dataset directory")->required();
  ingest->add_option("dst", ingest_dst, "destination directory")->required();

  CLI::App* profile =
      app.add_subcommand("profile", "degree-bias diagnostic reports");
  add_config_flags(profile);

  CLI::App* train = app.add_subcommand("train", "train one variant over seeds");
  add_config_flags(train);
  train->add_option("--variant", variant, "model variant override");
  train->add_option("--workers", workers, "parallel seed workers");

  CLI::App* ablate =
      app.add_subcommand("ablate", "run the full variant comparison");
  add_config_flags(ablate);
  ablate->add_option("--workers", workers, "parallel seed workers");

  std::string eval_checkpoint, eval_dataset;
  CLI::App* evaluate =
      app.add_subcommand("evaluate", "evaluate a saved checkpoint");
  evaluate->add_option("checkpoint", eval_checkpoint, "checkpoint file")
      ->required();
  evaluate->add_option("--dataset", eval_dataset,
                       "dataset directory (defaults to the one recorded)");

  std::string make_preset, make_dst;
  uint64_t make_seed = 0;
  CLI::App* make =
      app.add_subcommand("make-dataset", "generate a synthetic dataset");
  make->add_option("preset", make_preset, "cora-like or citeseer-like")
      ->required();
  make->add_option("dst", make_dst, "destination directory")->required();
  CLI::Option* seed_opt =
      make->add_option("--seed", make_seed, "generator seed override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*ingest) return cmd_ingest(ingest_src, ingest_dst);
    if (*profile) return cmd_profile(build_config());
    if (*train) return cmd_train(build_config(), workers);
    if (*ablate) return cmd_ablate(build_config(), workers);
    if (*evaluate) return cmd_evaluate(eval_checkpoint, eval_dataset);
    if (*make)
      return cmd_make_dataset(make_preset, make_dst, make_seed,
                              seed_opt->count() > 0);
    std::cerr << "no subcommand given\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const TrainingError& e) {
    std::cerr << "training error: " << e.what() << "\n";
    return kExitTraining;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
