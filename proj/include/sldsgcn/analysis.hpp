#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sldsgcn/graph.hpp"

namespace sldsgcn {

/// Count of nodes per exact degree value; counts sum to the node count.
std::map<int, int> degree_distribution(const Graph& g);

struct LabeledNeighborEntry {
  int node_count = 0;
  int with_labeled_neighbor = 0;
  double ratio = 0.0;
};

/// For each degree value, the fraction of nodes with at least one training
/// neighbor.
std::map<int, LabeledNeighborEntry> labeled_neighbor_ratio(
    const Graph& g, const SplitMasks& masks);

/// Misclassification rates over test nodes, bucketed by degree
/// (0, 1..d_max, >d_max). Buckets without test nodes report rate -1.
struct DegreeBucketStats {
  int d_max = 0;
  std::vector<int> counts;
  std::vector<int> errors;
  std::vector<double> rates;  // -1 where the bucket is empty
};

DegreeBucketStats error_by_degree(const std::vector<int>& predicted,
                                  const std::vector<int>& labels,
                                  const std::vector<uint8_t>& test_mask,
                                  const std::vector<int>& degree, int d_max);

struct InfluenceConfig {
  int hidden_dim = 16;
  int out_dim = 16;
  int repetitions = 8;  // random cotangents per (node, trial)
  int trials = 20;      // random initializations averaged into the estimate
  uint64_t seed = 0;
};

struct InfluenceReport {
  std::vector<double> scores;  // per-node S(i), non-negative
  int trials = 0;
  int repetitions = 0;
};

/// How strongly each node's final 2-layer-convolution representation reacts
/// to labeled-node features: S(i) sums, over training nodes k, the Frobenius
/// norm of d(x_i)/d(x_k), estimated per trial with freshly initialized
/// weights via reverse passes from random unit cotangents
/// (|J|_F^2 ~= out_dim * E|u^T J|^2) and averaged across trials.
InfluenceReport influence_scores(const Graph& g, const SplitMasks& masks,
                                 const InfluenceConfig& config);

/// Spearman rank correlation with average ranks for ties. Returns 0 when
/// either input is constant.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

void write_degree_distribution(const std::string& path,
                               const std::map<int, int>& hist);
void write_labeled_neighbor_ratio(
    const std::string& path,
    const std::map<int, LabeledNeighborEntry>& ratios);
void write_error_by_degree(const std::string& path,
                           const DegreeBucketStats& stats);
void write_influence(const std::string& path, const Graph& g,
                     const InfluenceReport& report);

}  // namespace sldsgcn
