#include "sldsgcn/teacher.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "sldsgcn/errors.hpp"
#include "sldsgcn/layers.hpp"
#include "sldsgcn/optim.hpp"
#include "sldsgcn/rng.hpp"

namespace sldsgcn {
namespace {

void validate_config(const TeacherConfig& c) {
  if (c.in_dim <= 0 || c.hidden_dim <= 0 || c.out_dim <= 0)
    throw ConfigError("teacher dimensions must be positive");
  if (c.prior_std <= 0.0) throw ConfigError("teacher prior std must be positive");
  if (c.sample_count < 2) throw ConfigError("teacher sample count must be >= 2");
  if (c.epochs < 0) throw ConfigError("teacher epochs must be non-negative");
}

Eigen::MatrixXd normal_matrix(int rows, int cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

// One reparameterized draw recorded on the tape: mean + exp(logstd) * eps.
Tensor sample_param(Tape& tape, const VariationalParam& q,
                    const Eigen::MatrixXd& eps) {
  return tape.add(q.mean, tape.elementwise_mul(tape.exp(q.logstd),
                                               Tensor::constant(eps)));
}

// Deterministic draw of concrete weights for prediction-time sampling.
Eigen::MatrixXd sample_value(const VariationalParam& q, Rng& rng) {
  Eigen::MatrixXd eps = normal_matrix(q.mean.rows(), q.mean.cols(), rng);
  return q.mean.value() + q.logstd.value().array().exp().matrix().cwiseProduct(eps);
}

Eigen::MatrixXd stable_row_softmax(Eigen::MatrixXd logits) {
  for (int i = 0; i < logits.rows(); ++i) {
    Eigen::ArrayXd row = logits.row(i).array();
    row -= row.maxCoeff();
    row = row.exp();
    logits.row(i) = (row / row.sum()).matrix();
  }
  return logits;
}

}  // namespace

std::vector<Tensor> TeacherPosterior::parameters() const {
  return {w1.mean, w1.logstd, b1.mean, b1.logstd,
          w2.mean, w2.logstd, b2.mean, b2.logstd};
}

Tensor kl_to_prior(Tape& tape, const VariationalParam& q, double prior_std) {
  // Per entry: log(s) - logstd + (sigma^2 + mu^2) / (2 s^2) - 1/2.
  const double s2 = prior_std * prior_std;
  Tensor var = tape.exp(tape.scale(q.logstd, 2.0));
  Tensor mu2 = tape.elementwise_mul(q.mean, q.mean);
  Tensor quad = tape.scale(tape.add(var, mu2), 1.0 / (2.0 * s2));
  Tensor per_entry = tape.add(quad, tape.scale(q.logstd, -1.0));
  Tensor total = tape.sum(per_entry);
  const double count =
      static_cast<double>(q.mean.rows()) * static_cast<double>(q.mean.cols());
  Eigen::MatrixXd shift(1, 1);
  shift(0, 0) = count * (std::log(prior_std) - 0.5);
  return tape.add(total, Tensor::constant(shift));
}

TeacherPosterior train_teacher(const Eigen::MatrixXd& representations,
                               const SplitMasks& masks,
                               const std::vector<int>& labels,
                               const TeacherConfig& config) {
  validate_config(config);
  if (representations.cols() != config.in_dim)
    throw DimensionError("representation width does not match teacher input");
  if (static_cast<size_t>(representations.rows()) != masks.train.size() ||
      labels.size() != masks.train.size())
    throw DimensionError("masks and labels must cover every representation row");
  const int train_count = masks.train_count();
  if (train_count == 0)
    throw ContractError("teacher training requires at least one training node");

  Rng rng(Rng::derive(config.seed, "teacher"));
  auto variational = [&](int rows, int cols, bool glorot) {
    VariationalParam q;
    q.mean = Tensor::parameter(glorot ? glorot_uniform(rows, cols, rng)
                                      : Eigen::MatrixXd::Zero(rows, cols));
    q.logstd = Tensor::parameter(
        Eigen::MatrixXd::Constant(rows, cols, config.init_logstd));
    return q;
  };

  TeacherPosterior post;
  post.config = config;
  post.w1 = variational(config.in_dim, config.hidden_dim, true);
  post.b1 = variational(1, config.hidden_dim, false);
  post.w2 = variational(config.hidden_dim, config.out_dim, true);
  post.b2 = variational(1, config.out_dim, false);

  // Compact the frozen training rows once; the loop never touches the rest.
  Eigen::MatrixXd train_reps(train_count, config.in_dim);
  std::vector<int> targets(static_cast<size_t>(train_count));
  {
    int r = 0;
    for (int i = 0; i < representations.rows(); ++i) {
      if (!masks.train[static_cast<size_t>(i)]) continue;
      train_reps.row(r) = representations.row(i);
      targets[static_cast<size_t>(r)] = labels[static_cast<size_t>(i)];
      ++r;
    }
  }
  const Tensor reps = Tensor::constant(train_reps);
  const std::vector<uint8_t> all(static_cast<size_t>(train_count), 1);

  std::vector<Tensor> params = post.parameters();
  AdamOptimizer opt(params, config.lr, /*weight_decay=*/0.0);
  const double kl_weight = 1.0 / static_cast<double>(train_count);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Tape tape;
    Tensor w1 = sample_param(tape, post.w1,
                             normal_matrix(config.in_dim, config.hidden_dim, rng));
    Tensor b1 = sample_param(tape, post.b1,
                             normal_matrix(1, config.hidden_dim, rng));
    Tensor w2 = sample_param(
        tape, post.w2, normal_matrix(config.hidden_dim, config.out_dim, rng));
    Tensor b2 = sample_param(tape, post.b2,
                             normal_matrix(1, config.out_dim, rng));

    Tensor hidden = tape.relu(tape.add(tape.matmul(reps, w1), b1));
    Tensor probs = tape.row_softmax(tape.add(tape.matmul(hidden, w2), b2));
    Tensor nll = tape.masked_cross_entropy(probs, targets, all);

    Tensor kl = tape.add(
        tape.add(kl_to_prior(tape, post.w1, config.prior_std),
                 kl_to_prior(tape, post.b1, config.prior_std)),
        tape.add(kl_to_prior(tape, post.w2, config.prior_std),
                 kl_to_prior(tape, post.b2, config.prior_std)));
    Tensor loss = tape.add(nll, tape.scale(kl, kl_weight));

    if (!std::isfinite(loss.value()(0, 0)))
      throw TrainingError("teacher loss non-finite at epoch " +
                          std::to_string(epoch));
    tape.backward(loss);
    opt.step();
  }
  return post;
}

TeacherOutput summarize_samples(const std::vector<Eigen::MatrixXd>& samples) {
  if (samples.empty()) throw ContractError("no prediction samples");
  const Eigen::Index n = samples.front().rows();
  const Eigen::Index c = samples.front().cols();
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(n, c);
  Eigen::MatrixXd mean_sq = Eigen::MatrixXd::Zero(n, c);
  for (const Eigen::MatrixXd& s : samples) {
    if (s.rows() != n || s.cols() != c)
      throw DimensionError("prediction samples disagree on shape");
    mean += s;
    mean_sq += s.cwiseProduct(s);
  }
  const double inv = 1.0 / static_cast<double>(samples.size());
  mean *= inv;
  mean_sq *= inv;

  TeacherOutput out;
  out.mean_probs = mean;
  out.labels.resize(static_cast<size_t>(n));
  out.uncertainty.resize(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    for (int k = 1; k < c; ++k)
      if (mean(i, k) > mean(i, best)) best = k;
    out.labels[static_cast<size_t>(i)] = best;
    // Population variance per class; clamp tiny negatives from cancellation.
    double v = 0.0;
    for (int k = 0; k < c; ++k)
      v += std::max(0.0, mean_sq(i, k) - mean(i, k) * mean(i, k));
    out.uncertainty[static_cast<size_t>(i)] = v / static_cast<double>(c);
  }
  return out;
}

TeacherOutput predict_with_uncertainty(const TeacherPosterior& posterior,
                                       const Eigen::MatrixXd& representations) {
  validate_config(posterior.config);
  if (representations.cols() != posterior.config.in_dim)
    throw DimensionError("representation width does not match teacher input");

  Rng rng(Rng::derive(posterior.config.seed, "teacher-sample"));
  std::vector<Eigen::MatrixXd> samples;
  samples.reserve(static_cast<size_t>(posterior.config.sample_count));
  for (int s = 0; s < posterior.config.sample_count; ++s) {
    Eigen::MatrixXd w1 = sample_value(posterior.w1, rng);
    Eigen::MatrixXd b1 = sample_value(posterior.b1, rng);
    Eigen::MatrixXd w2 = sample_value(posterior.w2, rng);
    Eigen::MatrixXd b2 = sample_value(posterior.b2, rng);
    Eigen::MatrixXd hidden =
        ((representations * w1).rowwise() + b1.row(0)).cwiseMax(0.0);
    samples.push_back(
        stable_row_softmax((hidden * w2).rowwise() + b2.row(0)));
  }
  return summarize_samples(samples);
}

void write_teacher_output(const std::string& path, const TeacherOutput& out) {
  std::ofstream f(path);
  if (!f) throw LoadError("cannot open for writing: " + path);
  f << "node_id,teacher_label,uncertainty\n";
  for (size_t i = 0; i < out.labels.size(); ++i)
    f << i << "," << out.labels[i] << "," << out.uncertainty[i] << "\n";
}

}  // namespace sldsgcn
