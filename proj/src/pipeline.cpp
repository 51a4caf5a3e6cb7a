#include "sldsgcn/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "sldsgcn/errors.hpp"
#include "sldsgcn/optim.hpp"

namespace sldsgcn {
namespace {

// Argmax with ties broken toward the lowest class index.
int row_argmax(const Eigen::MatrixXd& m, int row) {
  int best = 0;
  for (int c = 1; c < m.cols(); ++c)
    if (m(row, c) > m(row, best)) best = c;
  return best;
}

int count_set(const std::vector<uint8_t>& mask) {
  int n = 0;
  for (uint8_t b : mask) n += b != 0;
  return n;
}

// Shared epoch loop: one full-batch loss per epoch, stopping after
// plan.patience epochs without improvement. The step callback applies the
// optimizer update after backward.
template <typename LossFn, typename StepFn>
PhaseTrace run_epochs(int epochs, int patience, const char* phase,
                      LossFn&& loss_fn, StepFn&& step_fn) {
  PhaseTrace trace;
  double best = std::numeric_limits<double>::infinity();
  int stale = 0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    Tape tape;
    Tensor loss = loss_fn(tape);
    const double value = loss.value()(0, 0);
    if (!std::isfinite(value))
      throw TrainingError(std::string(phase) + " loss non-finite at epoch " +
                          std::to_string(epoch));
    tape.backward(loss);
    step_fn();
    trace.losses.push_back(value);
    if (value < best - 1e-7) {
      best = value;
      stale = 0;
    } else if (++stale >= patience) {
      trace.stopped_early = true;
      break;
    }
  }
  return trace;
}

}  // namespace

Variant variant_from_string(const std::string& name) {
  if (name == "GCN") return Variant::gcn;
  if (name == "DSGCN") return Variant::dsgcn;
  if (name == "MT-GNN") return Variant::mt_gnn;
  if (name == "SL-fs") return Variant::sl_fs;
  if (name == "SL-GNN") return Variant::sl_gnn;
  if (name == "SL-DSGCN") return Variant::sl_dsgcn;
  if (name == "soft-set-A") return Variant::soft_set_a;
  if (name == "soft-set-T") return Variant::soft_set_t;
  throw ConfigError("unknown variant: " + name);
}

std::string variant_to_string(Variant v) {
  switch (v) {
    case Variant::gcn: return "GCN";
    case Variant::dsgcn: return "DSGCN";
    case Variant::mt_gnn: return "MT-GNN";
    case Variant::sl_fs: return "SL-fs";
    case Variant::sl_gnn: return "SL-GNN";
    case Variant::sl_dsgcn: return "SL-DSGCN";
    case Variant::soft_set_a: return "soft-set-A";
    case Variant::soft_set_t: return "soft-set-T";
  }
  throw ConfigError("unknown variant value");
}

int SoftLabeledSet::soft_count() const { return count_set(soft); }
int SoftLabeledSet::combined_count() const { return count_set(combined); }

SoftLabeledSet build_soft_set(const PseudoLabels& pseudo,
                              const TeacherOutput& teacher,
                              const SplitMasks& masks,
                              const std::vector<int>& true_labels,
                              SoftSetMode mode) {
  const size_t n = masks.train.size();
  if (pseudo.labels.size() != n)
    throw DimensionError("pseudo labels must cover every node");
  const bool needs_teacher = mode != SoftSetMode::none;
  if (needs_teacher &&
      (teacher.labels.size() != n || teacher.uncertainty.size() != n))
    throw DimensionError("teacher output must cover every node");

  SoftLabeledSet set;
  set.soft.assign(n, 0);
  set.combined.assign(n, 0);
  set.labels.assign(n, 0);
  set.uncertainty.assign(n, 0.0);

  for (size_t i = 0; i < n; ++i) {
    if (masks.train[i]) {
      set.combined[i] = 1;
      set.labels[i] = true_labels[i];
      if (!teacher.uncertainty.empty()) set.uncertainty[i] = teacher.uncertainty[i];
      continue;
    }
    if (!masks.unlabeled[i]) continue;  // test nodes never enter the set
    bool take = false;
    int label = 0;
    switch (mode) {
      case SoftSetMode::intersection:
        take = pseudo.labels[i] == teacher.labels[i];
        label = pseudo.labels[i];
        break;
      case SoftSetMode::annotator_all:
        take = true;
        label = pseudo.labels[i];
        break;
      case SoftSetMode::teacher_all:
        take = true;
        label = teacher.labels[i];
        break;
      case SoftSetMode::none:
        break;
    }
    if (take) {
      set.soft[i] = 1;
      set.combined[i] = 1;
      set.labels[i] = label;
      set.uncertainty[i] = teacher.uncertainty[i];
    }
  }
  return set;
}

double dynamic_step_size(double eta, double alpha, double beta, double c,
                         int degree, int d_max, StepSizeMode mode) {
  if (eta <= 0.0) throw ContractError("base step size must be positive");
  if (c < 0.0) throw ContractError("uncertainty must be non-negative");
  if (degree < 0) throw ContractError("degree must be non-negative");
  const double clamped = static_cast<double>(std::min(degree, d_max));
  const double deg_term =
      mode == StepSizeMode::normalized
          ? (d_max > 0 ? clamped / static_cast<double>(d_max) : 0.0)
          : clamped;
  return eta * std::exp(-alpha * c) * std::exp(beta * deg_term);
}

PhaseTrace train_supervised(StudentNetwork& student, const GraphContext& ctx,
                            const std::vector<int>& targets,
                            const std::vector<uint8_t>& mask,
                            const TrainingPlan& plan, int epochs) {
  if (count_set(mask) == 0)
    throw ContractError("supervised phase requires at least one labeled node");
  std::vector<Tensor> params = student.parameters();
  AdamOptimizer opt(params, plan.supervised_lr, plan.weight_decay);
  return run_epochs(
      epochs, plan.patience, "supervised",
      [&](Tape& tape) {
        auto fwd = student.forward(tape, ctx);
        return tape.masked_cross_entropy(fwd.predictions, targets, mask);
      },
      [&] { opt.step(); });
}

PhaseTrace pretrain_student(StudentNetwork& student, const GraphContext& ctx,
                            const PseudoLabels& pseudo,
                            const TrainingPlan& plan,
                            Eigen::MatrixXd* representations) {
  const size_t n = static_cast<size_t>(ctx.graph->num_nodes);
  if (pseudo.labels.size() != n)
    throw ContractError("pseudo labels must cover every node");
  const std::vector<uint8_t> all(n, 1);
  std::vector<Tensor> params = student.parameters();
  AdamOptimizer opt(params, plan.supervised_lr, plan.weight_decay);
  PhaseTrace trace = run_epochs(
      plan.pretrain_epochs, plan.patience, "pretrain",
      [&](Tape& tape) {
        auto fwd = student.forward(tape, ctx);
        return tape.masked_cross_entropy(fwd.predictions, pseudo.labels, all);
      },
      [&] { opt.step(); });
  if (representations != nullptr)
    *representations = student.predict(ctx).representations.value();
  return trace;
}

PhaseTrace finetune(StudentNetwork& student, const GraphContext& ctx,
                    const SoftLabeledSet& set, const TrainingPlan& plan) {
  if (set.combined_count() == 0)
    throw ContractError("finetune requires a non-empty node set");
  const size_t n = set.combined.size();

  // Node i's gradient contribution is scaled by its own step size: the loss
  // is the weighted mean of per-node terms (weights are eta_i relative to the
  // base step) and the descent step is the base eta, so with all weights at 1
  // the phase is plain gradient descent with step eta.
  std::vector<double> weights(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    if (!set.combined[i]) continue;
    weights[i] = dynamic_step_size(plan.eta, plan.alpha, plan.beta,
                                   set.uncertainty[i],
                                   ctx.degree[i], plan.d_max, plan.step_mode) /
                 plan.eta;
  }

  std::vector<Tensor> params = student.parameters();
  return run_epochs(
      plan.finetune_epochs, plan.patience, "finetune",
      [&](Tape& tape) {
        auto fwd = student.forward(tape, ctx);
        return tape.masked_cross_entropy(fwd.predictions, set.labels,
                                         set.combined, &weights);
      },
      [&] { gradient_descent_step(params, plan.eta); });
}

int num_degree_buckets(int d_max) { return d_max + 2; }

int degree_bucket(int degree, int d_max) {
  return degree <= d_max ? degree : d_max + 1;
}

std::string degree_bucket_name(int bucket, int d_max) {
  return bucket <= d_max ? std::to_string(bucket)
                         : ">" + std::to_string(d_max);
}

RunMetrics run_variant(const TrainingPlan& plan, const GraphContext& ctx,
                       const SplitMasks& masks,
                       std::unique_ptr<StudentNetwork>* trained) {
  if (ctx.graph == nullptr) throw ContractError("graph context not built");
  const Graph& g = *ctx.graph;
  if (masks.train.size() != static_cast<size_t>(g.num_nodes))
    throw DimensionError("masks do not match the graph");

  const bool degree_specific =
      plan.variant == Variant::dsgcn || plan.variant == Variant::sl_fs ||
      plan.variant == Variant::sl_dsgcn || plan.variant == Variant::soft_set_a ||
      plan.variant == Variant::soft_set_t;
  StudentConfig sc;
  sc.in_dim = g.num_features;
  sc.hidden_dim = plan.hidden_dim;
  sc.out_dim = g.num_classes;
  sc.degree_specific = degree_specific;
  sc.d_max = plan.d_max;
  sc.rank = plan.rank;
  sc.cell = plan.cell;
  sc.degree_index = plan.degree_index;
  sc.init_seed = plan.seed;
  auto student_ptr = std::make_unique<StudentNetwork>(sc);
  StudentNetwork& student = *student_ptr;

  RunMetrics m;
  m.variant = variant_to_string(plan.variant);
  m.seed = plan.seed;

  auto test_accuracy = [&](const std::vector<int>& predicted) {
    int total = 0, correct = 0;
    for (int i = 0; i < g.num_nodes; ++i) {
      if (!masks.test[static_cast<size_t>(i)]) continue;
      ++total;
      correct += predicted[static_cast<size_t>(i)] ==
                 g.labels[static_cast<size_t>(i)];
    }
    return total > 0 ? static_cast<double>(correct) / total : 0.0;
  };
  auto predicted_classes = [&] {
    Eigen::MatrixXd probs = student.predict(ctx).predictions.value();
    std::vector<int> out(static_cast<size_t>(g.num_nodes));
    for (int i = 0; i < g.num_nodes; ++i)
      out[static_cast<size_t>(i)] = row_argmax(probs, i);
    return out;
  };

  if (plan.variant == Variant::gcn || plan.variant == Variant::dsgcn) {
    m.supervised = train_supervised(student, ctx, g.labels, masks.train, plan,
                                    plan.supervised_epochs);
  } else {
    PseudoLabels pseudo =
        label_propagation(g, masks, plan.lp_tol, plan.lp_max_iter);
    m.pseudo_label_accuracy = test_accuracy(pseudo.labels);

    Eigen::MatrixXd reps;
    m.pretrain = pretrain_student(student, ctx, pseudo, plan, &reps);
    m.pretrain_accuracy = test_accuracy(predicted_classes());

    SoftSetMode mode;
    switch (plan.variant) {
      case Variant::mt_gnn: mode = SoftSetMode::none; break;
      case Variant::soft_set_a: mode = SoftSetMode::annotator_all; break;
      case Variant::soft_set_t: mode = SoftSetMode::teacher_all; break;
      default: mode = SoftSetMode::intersection; break;
    }

    TeacherOutput teacher_out;
    if (mode != SoftSetMode::none) {
      TeacherConfig tc;
      tc.in_dim = plan.hidden_dim;
      tc.hidden_dim = 16;
      tc.out_dim = g.num_classes;
      tc.prior_std = plan.teacher_prior_std;
      tc.sample_count = plan.teacher_samples;
      tc.epochs = plan.teacher_epochs;
      tc.lr = plan.teacher_lr;
      tc.seed = plan.seed;
      TeacherPosterior post = train_teacher(reps, masks, g.labels, tc);
      teacher_out = predict_with_uncertainty(post, reps);
    }

    SoftLabeledSet set =
        build_soft_set(pseudo, teacher_out, masks, g.labels, mode);
    m.soft_count = set.soft_count();

    // Constant-step variants drop the dynamic scaling entirely.
    TrainingPlan fp = plan;
    if (plan.variant == Variant::mt_gnn || plan.variant == Variant::sl_fs) {
      fp.alpha = 0.0;
      fp.beta = 0.0;
    }
    m.finetune_trace = finetune(student, ctx, set, fp);
  }

  std::vector<int> predicted = predicted_classes();
  m.accuracy = test_accuracy(predicted);
  const int buckets = num_degree_buckets(plan.d_max);
  m.bucket_counts.assign(static_cast<size_t>(buckets), 0);
  m.bucket_correct.assign(static_cast<size_t>(buckets), 0);
  for (int i = 0; i < g.num_nodes; ++i) {
    if (!masks.test[static_cast<size_t>(i)]) continue;
    const int b = degree_bucket(ctx.degree[static_cast<size_t>(i)], plan.d_max);
    ++m.bucket_counts[static_cast<size_t>(b)];
    m.bucket_correct[static_cast<size_t>(b)] +=
        predicted[static_cast<size_t>(i)] == g.labels[static_cast<size_t>(i)];
  }
  if (trained != nullptr) *trained = std::move(student_ptr);
  return m;
}

std::string metrics_to_json(const RunMetrics& m) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["variant"] = m.variant;
  j["seed"] = m.seed;
  j["accuracy"] = m.accuracy;
  j["soft_count"] = m.soft_count;
  j["pseudo_label_accuracy"] = m.pseudo_label_accuracy;
  j["pretrain_accuracy"] = m.pretrain_accuracy;
  j["bucket_counts"] = m.bucket_counts;
  j["bucket_correct"] = m.bucket_correct;
  j["losses"] = {{"supervised", m.supervised.losses},
                 {"pretrain", m.pretrain.losses},
                 {"finetune", m.finetune_trace.losses}};
  return j.dump(2);
}

}  // namespace sldsgcn
