#include "sldsgcn/tensor.hpp"

#include <cmath>

#include "sldsgcn/errors.hpp"

namespace sldsgcn {

namespace {
constexpr double kLogFloor = 1e-300;
constexpr double kCrossEntropyFloor = 1e-12;

std::string shape_of(const Tensor& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}
}  // namespace

Tensor Tensor::constant(Eigen::MatrixXd value) {
  Tensor t;
  t.node_ = std::make_shared<Node>();
  t.node_->value = std::move(value);
  t.node_->requires_grad = false;
  return t;
}

Tensor Tensor::parameter(Eigen::MatrixXd value) {
  Tensor t;
  t.node_ = std::make_shared<Node>();
  t.node_->requires_grad = true;
  t.node_->grad = Eigen::MatrixXd::Zero(value.rows(), value.cols());
  t.node_->value = std::move(value);
  return t;
}

int Tensor::rows() const { return static_cast<int>(node_->value.rows()); }
int Tensor::cols() const { return static_cast<int>(node_->value.cols()); }
bool Tensor::requires_grad() const { return node_->requires_grad; }

const Eigen::MatrixXd& Tensor::value() const { return node_->value; }
Eigen::MatrixXd& Tensor::value() { return node_->value; }
const Eigen::MatrixXd& Tensor::grad() const { return node_->grad; }
Eigen::MatrixXd& Tensor::grad() { return node_->grad; }

void Tensor::zero_grad() {
  if (node_->requires_grad) node_->grad.setZero();
}

Tensor Tape::output_like(Eigen::MatrixXd value, bool requires_grad) {
  Tensor t;
  t.node_ = std::make_shared<Tensor::Node>();
  t.node_->requires_grad = requires_grad;
  if (requires_grad) {
    t.node_->grad = Eigen::MatrixXd::Zero(value.rows(), value.cols());
  }
  t.node_->value = std::move(value);
  return t;
}

void Tape::record(std::function<void()> backward_fn) {
  ops_.push_back(std::move(backward_fn));
}

Tensor Tape::matmul(Tensor a, Tensor b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + shape_of(a) + " * " + shape_of(b));
  }
  bool rg = a.requires_grad() || b.requires_grad();
  Tensor out = output_like(a.value() * b.value(), rg);
  if (rg) {
    record([a, b, out] mutable {
      if (a.requires_grad()) {
        a.grad().noalias() += out.grad() * b.value().transpose();
      }
      if (b.requires_grad()) {
        b.grad().noalias() += a.value().transpose() * out.grad();
      }
    });
  }
  return out;
}

Tensor Tape::sparse_dense_matmul(const CsrMatrix& a, Tensor b) {
  if (a.rows != a.cols) {
    throw DimensionError(
        "sparse_dense_matmul: implicit-transpose form needs a symmetric "
        "square operand, got " +
        std::to_string(a.rows) + "x" + std::to_string(a.cols));
  }
  return sparse_dense_matmul(a, a, b);
}

Tensor Tape::sparse_dense_matmul(const CsrMatrix& a,
                                 const CsrMatrix& a_transposed,
                                 Tensor b) {
  if (a.cols != b.rows()) {
    throw DimensionError("sparse_dense_matmul: " + std::to_string(a.rows) +
                         "x" + std::to_string(a.cols) + " * " + shape_of(b));
  }
  bool rg = b.requires_grad();
  Tensor out = output_like(a.multiply(b.value()), rg);
  if (rg) {
    const CsrMatrix* at = &a_transposed;
    record([at, b, out] mutable { b.grad().noalias() += at->multiply(out.grad()); });
  }
  return out;
}

Tensor Tape::add(Tensor a, Tensor b) {
  const bool same_shape = a.rows() == b.rows() && a.cols() == b.cols();
  const bool row_broadcast =
      b.rows() == 1 && a.cols() == b.cols() && a.rows() > 1;
  if (!same_shape && !row_broadcast) {
    throw DimensionError("add: " + shape_of(a) + " + " + shape_of(b));
  }
  bool rg = a.requires_grad() || b.requires_grad();
  Eigen::MatrixXd v;
  if (same_shape) {
    v = a.value() + b.value();
  } else {
    v = a.value().rowwise() + b.value().row(0);
  }
  Tensor out = output_like(std::move(v), rg);
  if (rg) {
    record([a, b, out, same_shape] mutable {
      if (a.requires_grad()) a.grad().noalias() += out.grad();
      if (b.requires_grad()) {
        if (same_shape) {
          b.grad().noalias() += out.grad();
        } else {
          b.grad().row(0).noalias() += out.grad().colwise().sum();
        }
      }
    });
  }
  return out;
}

Tensor Tape::scale(Tensor a, double factor) {
  bool rg = a.requires_grad();
  Tensor out = output_like(a.value() * factor, rg);
  if (rg) {
    record([a, out, factor] mutable { a.grad().noalias() += factor * out.grad(); });
  }
  return out;
}

Tensor Tape::relu(Tensor a) {
  bool rg = a.requires_grad();
  Tensor out = output_like(a.value().cwiseMax(0.0), rg);
  if (rg) {
    // Subgradient 0 at exactly 0.
    record([a, out] mutable {
      a.grad().array() +=
          (a.value().array() > 0.0).cast<double>() * out.grad().array();
    });
  }
  return out;
}

Tensor Tape::tanh(Tensor a) {
  bool rg = a.requires_grad();
  Tensor out = output_like(a.value().array().tanh().matrix(), rg);
  if (rg) {
    record([a, out] mutable {
      a.grad().array() +=
          (1.0 - out.value().array().square()) * out.grad().array();
    });
  }
  return out;
}

Tensor Tape::sigmoid(Tensor a) {
  bool rg = a.requires_grad();
  Eigen::MatrixXd v =
      (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  Tensor out = output_like(std::move(v), rg);
  if (rg) {
    record([a, out] mutable {
      a.grad().array() += out.value().array() *
                          (1.0 - out.value().array()) * out.grad().array();
    });
  }
  return out;
}

Tensor Tape::exp(Tensor a) {
  bool rg = a.requires_grad();
  Tensor out = output_like(a.value().array().exp().matrix(), rg);
  if (rg) {
    record([a, out] mutable {
      a.grad().array() += out.value().array() * out.grad().array();
    });
  }
  return out;
}

Tensor Tape::log(Tensor a) {
  bool rg = a.requires_grad();
  Tensor out =
      output_like(a.value().array().max(kLogFloor).log().matrix(), rg);
  if (rg) {
    record([a, out] mutable {
      a.grad().array() += (a.value().array() > kLogFloor).cast<double>() /
                          a.value().array().max(kLogFloor) *
                          out.grad().array();
    });
  }
  return out;
}

Tensor Tape::row_softmax(Tensor a) {
  bool rg = a.requires_grad();
  Eigen::MatrixXd v(a.rows(), a.cols());
  for (int r = 0; r < a.rows(); ++r) {
    Eigen::ArrayXd row = a.value().row(r).array();
    Eigen::ArrayXd e = (row - row.maxCoeff()).exp();
    v.row(r) = (e / e.sum()).matrix();
  }
  Tensor out = output_like(std::move(v), rg);
  if (rg) {
    record([a, out] mutable {
      for (int r = 0; r < a.rows(); ++r) {
        Eigen::ArrayXd y = out.value().row(r).array();
        Eigen::ArrayXd gy = out.grad().row(r).array();
        double dot = (gy * y).sum();
        a.grad().row(r).array() += y * (gy - dot);
      }
    });
  }
  return out;
}

Tensor Tape::masked_cross_entropy(Tensor probs,
                                  const std::vector<int>& targets,
                                  const std::vector<uint8_t>& mask,
                                  const std::vector<double>* weights) {
  const int n = probs.rows();
  if (static_cast<int>(targets.size()) != n ||
      static_cast<int>(mask.size()) != n ||
      (weights && static_cast<int>(weights->size()) != n)) {
    throw DimensionError("masked_cross_entropy: targets/mask/weights must "
                         "have one entry per row");
  }
  int masked = 0;
  for (int i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    ++masked;
    if (targets[i] < 0 || targets[i] >= probs.cols()) {
      throw DimensionError("masked_cross_entropy: target " +
                           std::to_string(targets[i]) + " outside [0, " +
                           std::to_string(probs.cols()) + ") at row " +
                           std::to_string(i));
    }
  }
  if (masked == 0) {
    throw ContractError("masked_cross_entropy: empty mask");
  }

  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    double w = weights ? (*weights)[i] : 1.0;
    double p = std::max(probs.value()(i, targets[i]), kCrossEntropyFloor);
    loss -= w * std::log(p);
  }
  loss /= masked;

  bool rg = probs.requires_grad();
  Tensor out = output_like(Eigen::MatrixXd::Constant(1, 1, loss), rg);
  if (rg) {
    std::vector<double> w(n, 1.0);
    if (weights) w = *weights;
    record([probs, out, targets, mask, w, masked] mutable {
      double g = out.grad()(0, 0);
      for (int i = 0; i < probs.rows(); ++i) {
        if (!mask[i]) continue;
        double p = probs.value()(i, targets[i]);
        if (p > kCrossEntropyFloor) {
          probs.grad()(i, targets[i]) -= g * w[i] / (masked * p);
        }
      }
    });
  }
  return out;
}

Tensor Tape::gather_rows(Tensor a, std::vector<int> indices) {
  for (int idx : indices) {
    if (idx < 0 || idx >= a.rows()) {
      throw DimensionError("gather_rows: index " + std::to_string(idx) +
                           " outside [0, " + std::to_string(a.rows()) + ")");
    }
  }
  bool rg = a.requires_grad();
  Eigen::MatrixXd v(indices.size(), a.cols());
  for (size_t r = 0; r < indices.size(); ++r) {
    v.row(r) = a.value().row(indices[r]);
  }
  Tensor out = output_like(std::move(v), rg);
  if (rg) {
    record([a, out, indices = std::move(indices)] mutable {
      for (size_t r = 0; r < indices.size(); ++r) {
        a.grad().row(indices[r]) += out.grad().row(r);
      }
    });
  }
  return out;
}

Tensor Tape::scatter_rows(Tensor a, std::vector<int> indices,
                          int num_rows) {
  if (static_cast<int>(indices.size()) != a.rows()) {
    throw DimensionError("scatter_rows: need one index per input row");
  }
  std::vector<uint8_t> seen(num_rows, 0);
  for (int idx : indices) {
    if (idx < 0 || idx >= num_rows) {
      throw DimensionError("scatter_rows: index " + std::to_string(idx) +
                           " outside [0, " + std::to_string(num_rows) + ")");
    }
    if (seen[idx]) {
      throw ContractError("scatter_rows: duplicate index " +
                          std::to_string(idx));
    }
    seen[idx] = 1;
  }
  bool rg = a.requires_grad();
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(num_rows, a.cols());
  for (int r = 0; r < a.rows(); ++r) {
    v.row(indices[r]) = a.value().row(r);
  }
  Tensor out = output_like(std::move(v), rg);
  if (rg) {
    record([a, out, indices = std::move(indices)] mutable {
      for (int r = 0; r < a.rows(); ++r) {
        a.grad().row(r) += out.grad().row(indices[r]);
      }
    });
  }
  return out;
}

Tensor Tape::concat_rows(Tensor a, Tensor b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("concat_rows: " + shape_of(a) + " over " +
                         shape_of(b));
  }
  bool rg = a.requires_grad() || b.requires_grad();
  Eigen::MatrixXd v(a.rows() + b.rows(), a.cols());
  v.topRows(a.rows()) = a.value();
  v.bottomRows(b.rows()) = b.value();
  Tensor out = output_like(std::move(v), rg);
  if (rg) {
    record([a, b, out] mutable {
      if (a.requires_grad()) {
        a.grad().noalias() += out.grad().topRows(a.rows());
      }
      if (b.requires_grad()) {
        b.grad().noalias() += out.grad().bottomRows(b.rows());
      }
    });
  }
  return out;
}

Tensor Tape::sum(Tensor a) {
  bool rg = a.requires_grad();
  Tensor out = output_like(Eigen::MatrixXd::Constant(1, 1, a.value().sum()),
                           rg);
  if (rg) {
    record([a, out] mutable { a.grad().array() += out.grad()(0, 0); });
  }
  return out;
}

Tensor Tape::elementwise_mul(Tensor a, Tensor b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("elementwise_mul: " + shape_of(a) + " * " +
                         shape_of(b));
  }
  bool rg = a.requires_grad() || b.requires_grad();
  Tensor out =
      output_like((a.value().array() * b.value().array()).matrix(), rg);
  if (rg) {
    record([a, b, out] mutable {
      if (a.requires_grad()) {
        a.grad().array() += b.value().array() * out.grad().array();
      }
      if (b.requires_grad()) {
        b.grad().array() += a.value().array() * out.grad().array();
      }
    });
  }
  return out;
}

void Tape::backward(const Tensor& loss) {
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw ContractError("backward: loss must be scalar, got " +
                        shape_of(loss));
  }
  if (ops_.empty()) {
    throw ContractError("backward: empty tape");
  }
  if (!loss.requires_grad()) {
    throw ContractError("backward: loss does not depend on any parameter");
  }
  Tensor seed = loss;  // non-const handle to the shared node
  seed.grad()(0, 0) += 1.0;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
}

double finite_diff_check(const std::function<Tensor(Tape&)>& program,
                         Tensor at, double step) {
  if (step <= 0) throw ContractError("finite_diff_check: step must be > 0");

  Eigen::MatrixXd analytic = Eigen::MatrixXd::Zero(at.rows(), at.cols());
  {
    Tape tape;
    Tensor loss = program(tape);
    if (loss.rows() != 1 || loss.cols() != 1) {
      throw ContractError("finite_diff_check: program must be scalar-valued");
    }
    // A program constant in every parameter leaves the tape empty; its
    // gradient is identically zero.
    if (loss.requires_grad()) {
      at.zero_grad();
      tape.backward(loss);
      analytic = at.grad();
      at.zero_grad();
    }
  }

  auto eval = [&]() {
    Tape tape;
    return program(tape).value()(0, 0);
  };

  double max_rel = 0.0;
  for (int r = 0; r < at.rows(); ++r) {
    for (int c = 0; c < at.cols(); ++c) {
      double saved = at.value()(r, c);
      at.value()(r, c) = saved + step;
      double up = eval();
      at.value()(r, c) = saved - step;
      double down = eval();
      at.value()(r, c) = saved;
      double central = (up - down) / (2.0 * step);
      // The denominator floor absorbs central-difference round-off (about
      // 1e-11 for unit-scale losses); entries whose true gradient sits below
      // it cannot be distinguished from zero by finite differences.
      double denom =
          std::max({std::abs(analytic(r, c)), std::abs(central), 1e-6});
      max_rel = std::max(max_rel, std::abs(analytic(r, c) - central) / denom);
    }
  }
  return max_rel;
}

}  // namespace sldsgcn
