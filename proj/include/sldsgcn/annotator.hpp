#pragma once

#include <string>
#include <vector>

#include "sldsgcn/graph.hpp"

namespace sldsgcn {

/// Output of the label-propagation annotator: a class index for every node,
/// with training rows clamped to their ground-truth labels.
struct PseudoLabels {
  std::vector<int> labels;
  int iterations = 0;
  bool converged = false;
};

/// Random-walk label propagation with hard clamping:
///   Y <- D^{-1} A Y, then reset training rows to their one-hot truth,
/// repeated until the largest elementwise change drops below tol or
/// max_iter sweeps have run. Each node's label is the argmax of its final
/// class mass, ties broken toward the lowest class index. Nodes that never
/// receive any mass (isolated nodes and components without a training node)
/// fall back to the most frequent training class, since propagation carries
/// no signal to them and downstream training needs a label for every node.
PseudoLabels label_propagation(const Graph& g, const SplitMasks& masks,
                               double tol = 1e-6, int max_iter = 1000);

/// Writes "node_id,pseudo_label" rows for auditing.
void write_pseudo_labels(const std::string& path, const PseudoLabels& pseudo);

}  // namespace sldsgcn
