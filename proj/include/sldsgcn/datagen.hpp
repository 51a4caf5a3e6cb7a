#pragma once

#include <cstdint>
#include <string>

#include "sldsgcn/graph.hpp"

namespace sldsgcn {

/// Parameters of the synthetic citation-graph generator. Presets mimic the
/// shape of the common citation benchmarks: power-law degrees, strong class
/// homophily, sparse bag-of-words features with per-class core vocabulary,
/// rows normalized to sum to one.
///
/// Construction has two stages. A same-class preferential-attachment backbone
/// first links every node into its class subgraph (so no node is isolated and
/// label information can reach the periphery), then the remaining edge budget
/// is filled by degree-weighted pairing whose same-class rate is adjusted so
/// the overall homophily matches the requested value.
struct SyntheticSpec {
  int num_nodes = 0;
  int num_classes = 0;
  int num_features = 0;
  int target_edges = 0;
  double power_law_gamma = 2.3;  // degree weights ~ d^(-gamma)
  int max_degree_weight = 60;    // clip for sampled degree weights
  double homophily = 0.81;       // overall fraction of same-class edges
  double bridge_fraction = 0.15;  // share of nodes eligible for cross-class
                                  // edges; keeps most neighbourhoods pure
  int core_words_per_class = 60;
  double core_overlap = 0.0;  // fraction of the core window shared with the
                              // neighbouring class (0 = disjoint vocabularies)
  int words_min = 10;  // document length for degree-1 nodes
  int words_max = 40;  // document length at/above degree_token_cap
  int degree_token_cap = 12;  // degree at which documents stop growing
  double core_prob = 0.7;   // chance a token comes from a core block
  double core_noise = 0.1;  // chance that block belongs to a random class
  uint64_t seed = 42;
};

/// Preset calibrated against the 2708-node citation benchmark's headline
/// numbers (7 classes, 1433 features, ~5429 edges).
SyntheticSpec cora_like();

/// Preset for the sparser 3327-node benchmark (6 classes, 3703 features,
/// ~4732 edges, lower homophily).
SyntheticSpec citeseer_like();

/// Deterministic generation from the spec's seed.
Graph generate_citation_graph(const SyntheticSpec& spec);

}  // namespace sldsgcn
