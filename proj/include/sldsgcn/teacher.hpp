#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sldsgcn/graph.hpp"
#include "sldsgcn/tensor.hpp"

namespace sldsgcn {

struct TeacherConfig {
  int in_dim = 16;
  int hidden_dim = 16;
  int out_dim = 0;
  double prior_std = 1.0;
  int sample_count = 64;  // prediction samples
  int epochs = 200;
  double lr = 1e-2;
  // Sampled-weight spread at initialization. Keeping it on the order of the
  // glorot weight scale makes the per-node disagreement across samples a
  // usable confidence signal from the first epoch instead of starting the
  // posterior as a point mass.
  double init_logstd = -2.0;
  uint64_t seed = 0;
};

/// Factorized Gaussian over each weight entry of a 2-layer fully-connected
/// classifier. Sampling uses the reparameterization w = mean + exp(logstd)*eps
/// so gradients flow into both variational tensors.
struct VariationalParam {
  Tensor mean;
  Tensor logstd;
};

struct TeacherPosterior {
  TeacherConfig config;
  VariationalParam w1, b1, w2, b2;

  std::vector<Tensor> parameters() const;
};

struct TeacherOutput {
  std::vector<int> labels;          // argmax of the mean prediction
  std::vector<double> uncertainty;  // mean over classes of sample variance
  Eigen::MatrixXd mean_probs;       // N x C, rows sum to 1
};

/// Fits the posterior by stochastic gradients on the ELBO: one reparameterized
/// weight sample per epoch, mean negative log-likelihood over training nodes
/// plus KL(q || prior) / |train|. The representations are frozen inputs and
/// receive no gradient. Throws TrainingError naming the epoch if the loss
/// turns non-finite.
TeacherPosterior train_teacher(const Eigen::MatrixXd& representations,
                               const SplitMasks& masks,
                               const std::vector<int>& labels,
                               const TeacherConfig& config);

/// Draws config.sample_count weight samples, runs the classifier on every
/// node, and summarizes: label = argmax of the mean softmax (ties toward the
/// lowest class), uncertainty = population variance across samples averaged
/// over classes. Deterministic given config.seed.
TeacherOutput predict_with_uncertainty(const TeacherPosterior& posterior,
                                       const Eigen::MatrixXd& representations);

/// The summary step alone, exposed for direct verification: takes per-sample
/// probability matrices (same shape) and produces mean, labels, uncertainty.
TeacherOutput summarize_samples(const std::vector<Eigen::MatrixXd>& samples);

/// Total KL(q || N(0, prior_std^2)) of one variational tensor, recorded on
/// the tape as a 1x1 tensor. Non-negative; zero iff q equals the prior.
Tensor kl_to_prior(Tape& tape, const VariationalParam& q, double prior_std);

/// Writes "node_id,teacher_label,uncertainty" rows for auditing.
void write_teacher_output(const std::string& path, const TeacherOutput& out);

}  // namespace sldsgcn
