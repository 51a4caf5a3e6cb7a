#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "sldsgcn/csr.hpp"

namespace sldsgcn {

/// Handle to a dense matrix value with an optional gradient slot. Copying a
/// Tensor copies the handle, not the data; tapes and callers share nodes.
class Tensor {
 public:
  Tensor() = default;

  /// A value that never receives gradients.
  static Tensor constant(Eigen::MatrixXd value);

  /// A trainable value; gradient starts at zero.
  static Tensor parameter(Eigen::MatrixXd value);

  bool defined() const { return node_ != nullptr; }
  int rows() const;
  int cols() const;
  bool requires_grad() const;

  const Eigen::MatrixXd& value() const;
  Eigen::MatrixXd& value();
  const Eigen::MatrixXd& grad() const;
  Eigen::MatrixXd& grad();
  void zero_grad();

 private:
  struct Node {
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;
    bool requires_grad = false;
  };

  std::shared_ptr<Node> node_;
  friend class Tape;
};

/// Records forward operations and replays their adjoints in reverse.
/// Operations are appended in execution order, so the reverse sweep is a
/// topological traversal visiting each recorded operation exactly once.
/// A tape is single-threaded; independent tapes may run concurrently.
class Tape {
 public:
  Tensor matmul(Tensor a, Tensor b);

  /// Sparse-dense product a * b for symmetric a (adjacency-style operands).
  Tensor sparse_dense_matmul(const CsrMatrix& a, Tensor b);

  /// General sparse-dense product; a_transposed is needed for the backward
  /// pass when b requires gradients.
  Tensor sparse_dense_matmul(const CsrMatrix& a, const CsrMatrix& a_transposed,
                             Tensor b);

  /// Elementwise sum of equal shapes, or row-vector bias broadcast when b
  /// is 1 x cols. No other broadcasting.
  Tensor add(Tensor a, Tensor b);

  Tensor scale(Tensor a, double factor);
  Tensor relu(Tensor a);
  Tensor tanh(Tensor a);
  Tensor sigmoid(Tensor a);
  Tensor exp(Tensor a);

  /// Natural log clamped below at 1e-300 so finite inputs give finite
  /// outputs; the clamp region has zero derivative.
  Tensor log(Tensor a);

  /// Numerically stable softmax over each row; rows sum to one.
  Tensor row_softmax(Tensor a);

  /// Mean negative log-likelihood over masked rows of a row-stochastic
  /// matrix: (1/n) * sum_i weight_i * -log(max(probs(i, target_i), 1e-12)).
  /// Weights default to one. Throws ContractError if the mask is empty and
  /// DimensionError on target indices outside [0, cols).
  Tensor masked_cross_entropy(Tensor probs,
                              const std::vector<int>& targets,
                              const std::vector<uint8_t>& mask,
                              const std::vector<double>* weights = nullptr);

  /// Rows of a selected by index, in order; indices may repeat.
  Tensor gather_rows(Tensor a, std::vector<int> indices);

  /// Inverse of gather for distinct indices: row r of a lands at
  /// indices[r] of a num_rows-tall zero matrix.
  Tensor scatter_rows(Tensor a, std::vector<int> indices, int num_rows);

  Tensor concat_rows(Tensor a, Tensor b);

  /// Sum of all entries as a 1x1 tensor.
  Tensor sum(Tensor a);

  Tensor elementwise_mul(Tensor a, Tensor b);

  /// Seeds d(loss)/d(loss) = 1 and accumulates adjoints into every
  /// requires_grad tensor reachable from the recorded operations.
  /// Gradients add onto whatever the grad slots already hold.
  void backward(const Tensor& loss);

  size_t num_ops() const { return ops_.size(); }

 private:
  std::vector<std::function<void()>> ops_;

  Tensor output_like(Eigen::MatrixXd value, bool requires_grad);
  void record(std::function<void()> backward_fn);
};

/// Compares the analytic gradient of a scalar program with central finite
/// differences at the given tensor. Returns the max over coordinates of
/// |analytic - central| / max(|analytic|, |central|, 1e-6); the floor keeps
/// difference round-off on near-zero gradients from dominating the ratio.
/// The program must rebuild its forward pass from current parameter values
/// on every call.
double finite_diff_check(const std::function<Tensor(Tape&)>& program,
                         Tensor at, double step);

}  // namespace sldsgcn
