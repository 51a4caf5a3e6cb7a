#pragma once

#include <vector>

#include "sldsgcn/tensor.hpp"

namespace sldsgcn {

/// Adam with decoupled-from-nothing classic L2: weight decay is added to the
/// gradient before the moment updates, matching the common GCN training
/// recipe. State is keyed by parameter order, so the parameter list must be
/// stable across steps.
class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<Tensor> params, double lr, double weight_decay,
                double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  /// Applies one update from the current grad slots, then zeroes them.
  void step();

  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }

 private:
  std::vector<Tensor> params_;
  std::vector<Eigen::MatrixXd> m_, v_;
  double lr_, weight_decay_, beta1_, beta2_, eps_;
  long t_ = 0;
};

/// Plain gradient descent: p -= lr * grad for every parameter, then zeroes
/// the grad slots. Used by the finetune phase, where per-node step sizes are
/// folded into the loss weights.
void gradient_descent_step(std::vector<Tensor>& params, double lr);

/// Zeroes every gradient slot.
void zero_all(std::vector<Tensor>& params);

}  // namespace sldsgcn
