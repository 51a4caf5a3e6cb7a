#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sldsgcn/csr.hpp"

namespace sldsgcn {

/// Label value for nodes without a known class.
inline constexpr int kUnknownLabel = -1;

/// Immutable undirected graph with dense node features and (partial) labels.
/// The adjacency pattern is stored symmetrically in CSR form with strictly
/// increasing column indices per row, no duplicates and no self-loops.
struct Graph {
  int num_nodes = 0;
  int num_classes = 0;
  int num_features = 0;
  std::vector<int> row_ptr;  // CSR offsets, size num_nodes + 1
  std::vector<int> col_idx;  // neighbor ids, strictly increasing per row
  Eigen::MatrixXd features;  // num_nodes x num_features
  std::vector<int> labels;   // class index or kUnknownLabel

  /// Number of undirected edges (half the stored directed entry count).
  int num_edges() const { return static_cast<int>(col_idx.size()) / 2; }

  int degree(int node) const { return row_ptr[node + 1] - row_ptr[node]; }
};

/// Per-node degree over the stored self-loop-free edge set.
std::vector<int> degrees(const Graph& g);

/// Counters reported by load_graph about repairs applied to the input.
struct LoadStats {
  int self_loops_dropped = 0;
  int duplicate_edges_dropped = 0;
};

/// Loads a dataset directory holding edges.csv, features.csv and labels.csv.
/// Edges are symmetrized and deduplicated; self-loops in the file are
/// dropped (counted in stats). Throws LoadError for missing files and
/// ValidationError for malformed contents.
Graph load_graph(const std::filesystem::path& dir, LoadStats* stats = nullptr);

/// Writes a graph back out in the same CSV triple layout.
void save_graph(const Graph& g, const std::filesystem::path& dir);

/// Disjoint train/test/unlabeled masks covering all nodes.
struct SplitMasks {
  std::vector<uint8_t> train;
  std::vector<uint8_t> test;
  std::vector<uint8_t> unlabeled;
  uint64_t seed = 0;

  int train_count() const;
  int test_count() const;
};

/// Samples round(label_rate*N) training nodes and round(test_frac*N) test
/// nodes uniformly among labeled nodes, deterministically from the seed.
/// Reseeds up to 50 times (seed, seed+1, ...) until every class appears in
/// the training set; throws ContractError if that never happens.
SplitMasks split(const Graph& g, double label_rate, double test_frac,
                 uint64_t seed);

/// Symmetrically normalized adjacency. With add_self_loops (the default)
/// returns D~^{-1/2} (A + I) D~^{-1/2}; without, D^{-1/2} A D^{-1/2} where
/// isolated nodes get an all-zero row.
CsrMatrix normalized_adjacency(const Graph& g, bool add_self_loops = true);

/// Subgraph induced by the given node ids (deduplicated, ascending order).
/// Keeps only edges with both endpoints selected; features, labels and the
/// class/feature counts carry over. Throws ValidationError on ids outside
/// [0, num_nodes) and ContractError on an empty selection.
Graph induced_subgraph(const Graph& g, std::vector<int> nodes);

}  // namespace sldsgcn
