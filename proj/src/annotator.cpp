#include "sldsgcn/annotator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "sldsgcn/errors.hpp"

namespace sldsgcn {
namespace {

// Most frequent class among training nodes; ties toward the lowest index.
int majority_training_class(const Graph& g, const SplitMasks& masks) {
  std::vector<int> counts(static_cast<size_t>(g.num_classes), 0);
  for (int i = 0; i < g.num_nodes; ++i)
    if (masks.train[static_cast<size_t>(i)])
      ++counts[static_cast<size_t>(g.labels[static_cast<size_t>(i)])];
  return static_cast<int>(
      std::max_element(counts.begin(), counts.end()) - counts.begin());
}

// Argmax with ties broken toward the lowest class index.
int row_argmax(const Eigen::MatrixXd& y, int row) {
  int best = 0;
  for (int c = 1; c < y.cols(); ++c)
    if (y(row, c) > y(row, best)) best = c;
  return best;
}

}  // namespace

PseudoLabels label_propagation(const Graph& g, const SplitMasks& masks,
                               double tol, int max_iter) {
  if (masks.train_count() == 0)
    throw ContractError("label propagation requires at least one training node");
  if (tol <= 0.0) throw ContractError("label propagation tol must be positive");

  const int n = g.num_nodes;
  const int c = g.num_classes;
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, c);
  for (int i = 0; i < n; ++i)
    if (masks.train[static_cast<size_t>(i)])
      y(i, g.labels[static_cast<size_t>(i)]) = 1.0;

  PseudoLabels out;
  Eigen::MatrixXd next = Eigen::MatrixXd::Zero(n, c);
  for (int iter = 0; iter < max_iter; ++iter) {
    next.setZero();
    for (int i = 0; i < n; ++i) {
      const int deg = g.degree(i);
      if (deg == 0) continue;  // no neighbors: row keeps receiving nothing
      const double inv = 1.0 / static_cast<double>(deg);
      for (int p = g.row_ptr[static_cast<size_t>(i)];
           p < g.row_ptr[static_cast<size_t>(i) + 1]; ++p)
        next.row(i) += inv * y.row(g.col_idx[static_cast<size_t>(p)]);
    }
    for (int i = 0; i < n; ++i) {
      if (!masks.train[static_cast<size_t>(i)]) continue;
      next.row(i).setZero();
      next(i, g.labels[static_cast<size_t>(i)]) = 1.0;
    }
    const double delta = (next - y).cwiseAbs().maxCoeff();
    y.swap(next);
    out.iterations = iter + 1;
    if (delta < tol) {
      out.converged = true;
      break;
    }
  }

  const int fallback = majority_training_class(g, masks);
  out.labels.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const bool no_signal = y.row(i).sum() == 0.0;
    out.labels[static_cast<size_t>(i)] = no_signal ? fallback : row_argmax(y, i);
  }
  return out;
}

void write_pseudo_labels(const std::string& path, const PseudoLabels& pseudo) {
  std::ofstream f(path);
  if (!f) throw LoadError("cannot open for writing: " + path);
  f << "node_id,pseudo_label\n";
  for (size_t i = 0; i < pseudo.labels.size(); ++i)
    f << i << "," << pseudo.labels[i] << "\n";
}

}  // namespace sldsgcn
