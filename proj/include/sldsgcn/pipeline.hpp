#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "sldsgcn/annotator.hpp"
#include "sldsgcn/graph.hpp"
#include "sldsgcn/layers.hpp"
#include "sldsgcn/teacher.hpp"

namespace sldsgcn {

/// Model/training variants. The last two repeat the full pipeline but swap
/// in a differently-built soft-labeled set for the ablation study.
enum class Variant {
  gcn,         // degree-agnostic, supervised on the labeled set only
  dsgcn,       // degree-specific, supervised on the labeled set only
  mt_gnn,      // degree-agnostic, pretrain on pseudo-labels, finetune on
               // the labeled set with a constant step
  sl_fs,       // full pipeline, constant step size
  sl_gnn,      // full pipeline, degree-agnostic layers
  sl_dsgcn,    // full pipeline
  soft_set_a,  // full pipeline, soft set = all unlabeled w/ annotator labels
  soft_set_t,  // full pipeline, soft set = all unlabeled w/ teacher labels
};

Variant variant_from_string(const std::string& name);
std::string variant_to_string(Variant v);

enum class StepSizeMode { normalized, literal };

/// Everything one training run needs beyond the graph and masks — kept as a
/// flat value type so runs are reproducible from (plan, seed) alone.
struct TrainingPlan {
  Variant variant = Variant::sl_dsgcn;
  double eta = 0.01;   // base step size of the finetune phase
  double alpha = 1.0;  // uncertainty suppression strength
  double beta = 1.0;   // degree boost strength
  StepSizeMode step_mode = StepSizeMode::normalized;
  int d_max = 10;
  int hidden_dim = 16;
  int rank = 8;
  CellKind cell = CellKind::elman;
  DegreeIndexMode degree_index = DegreeIndexMode::neighbor;
  int supervised_epochs = 200;
  int pretrain_epochs = 200;
  int finetune_epochs = 200;
  int patience = 20;        // epochs without loss improvement before stopping
  double supervised_lr = 0.01;
  double weight_decay = 5e-4;
  double lp_tol = 1e-6;
  int lp_max_iter = 1000;
  double teacher_prior_std = 1.0;
  int teacher_samples = 64;
  int teacher_epochs = 200;
  double teacher_lr = 0.01;
  uint64_t seed = 0;
};

/// The nodes the finetune phase trains on: the agreement set of soft labels
/// plus the true-labeled nodes, each carrying a label, an uncertainty score
/// and (implicitly, via the graph) a degree.
struct SoftLabeledSet {
  std::vector<uint8_t> soft;        // agreement-set membership
  std::vector<uint8_t> combined;    // soft ∪ train
  std::vector<int> labels;          // defined where combined is set
  std::vector<double> uncertainty;  // teacher c_i, defined where combined

  int soft_count() const;
  int combined_count() const;
};

enum class SoftSetMode { intersection, annotator_all, teacher_all, none };

/// Nodes of the unlabeled set whose label the chosen sources support, merged
/// with the training set (true labels win there). Never selects test nodes.
SoftLabeledSet build_soft_set(const PseudoLabels& pseudo,
                              const TeacherOutput& teacher,
                              const SplitMasks& masks,
                              const std::vector<int>& true_labels,
                              SoftSetMode mode);

/// Per-node step size: eta * exp(-alpha * c) * exp(beta * deg_term) where
/// deg_term is min(d, d_max)/d_max in normalized mode (factor range [1, e^beta])
/// and min(d, d_max) in literal mode.
double dynamic_step_size(double eta, double alpha, double beta, double c,
                         int degree, int d_max,
                         StepSizeMode mode = StepSizeMode::normalized);

/// Loss trace of one training phase (one entry per epoch actually run).
struct PhaseTrace {
  std::vector<double> losses;
  bool stopped_early = false;
};

/// Supervised training on the masked rows: Adam on mean cross-entropy,
/// stopping after plan.patience epochs without improvement.
PhaseTrace train_supervised(StudentNetwork& student, const GraphContext& ctx,
                            const std::vector<int>& targets,
                            const std::vector<uint8_t>& mask,
                            const TrainingPlan& plan, int epochs);

/// Pretrains on pseudo-labels over every node and returns the final
/// representation matrix for the teacher.
PhaseTrace pretrain_student(StudentNetwork& student, const GraphContext& ctx,
                            const PseudoLabels& pseudo,
                            const TrainingPlan& plan,
                            Eigen::MatrixXd* representations);

/// Finetunes with per-node step sizes folded into loss weights: the loss is
/// mean_i (eta_i / eta) * ce_i over the combined set and the update is plain
/// gradient descent with step eta, so each node's contribution is scaled by
/// its own eta_i (batch-mean normalized).
PhaseTrace finetune(StudentNetwork& student, const GraphContext& ctx,
                    const SoftLabeledSet& set, const TrainingPlan& plan);

/// Result of one variant run. Buckets index degrees 0, 1..10, then ">10".
struct RunMetrics {
  std::string variant;
  uint64_t seed = 0;
  double accuracy = 0.0;
  std::vector<int> bucket_counts;
  std::vector<int> bucket_correct;
  int soft_count = 0;
  double pseudo_label_accuracy = 0.0;  // annotator accuracy on test nodes
  double pretrain_accuracy = 0.0;      // student test accuracy before finetune
  PhaseTrace supervised, pretrain, finetune_trace;
};

/// Number of degree buckets in RunMetrics (0, 1..10, >10).
int num_degree_buckets(int d_max);
int degree_bucket(int degree, int d_max);
std::string degree_bucket_name(int bucket, int d_max);

/// Executes the plan's variant end to end and evaluates on the test set.
/// When `trained` is given, the final model is handed back for saving.
RunMetrics run_variant(const TrainingPlan& plan, const GraphContext& ctx,
                       const SplitMasks& masks,
                       std::unique_ptr<StudentNetwork>* trained = nullptr);

/// Serializes metrics (losses included) to a JSON string.
std::string metrics_to_json(const RunMetrics& m);

}  // namespace sldsgcn
