#include "sldsgcn/optim.hpp"

#include <cmath>

#include "sldsgcn/errors.hpp"

namespace sldsgcn {

AdamOptimizer::AdamOptimizer(std::vector<Tensor> params, double lr,
                             double weight_decay, double beta1, double beta2,
                             double eps)
    : params_(std::move(params)),
      lr_(lr),
      weight_decay_(weight_decay),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps) {
  for (const Tensor& p : params_) {
    if (!p.defined() || !p.requires_grad())
      throw ContractError("optimizer parameters must be trainable tensors");
    m_.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
    v_.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
  }
}

void AdamOptimizer::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    Eigen::MatrixXd g = p.grad() + weight_decay_ * p.value();
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
    Eigen::MatrixXd m_hat = m_[i] / bc1;
    Eigen::MatrixXd v_hat = v_[i] / bc2;
    p.value() -=
        lr_ * (m_hat.array() / (v_hat.array().sqrt() + eps_)).matrix();
    p.zero_grad();
  }
}

void gradient_descent_step(std::vector<Tensor>& params, double lr) {
  for (Tensor& p : params) {
    p.value() -= lr * p.grad();
    p.zero_grad();
  }
}

void zero_all(std::vector<Tensor>& params) {
  for (Tensor& p : params) p.zero_grad();
}

}  // namespace sldsgcn
