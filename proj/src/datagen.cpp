#include "sldsgcn/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>
#include <vector>

#include "sldsgcn/errors.hpp"
#include "sldsgcn/rng.hpp"

namespace sldsgcn {
namespace {

// Weighted sampler over a fixed weight vector via its cumulative sums.
class CumulativeSampler {
 public:
  explicit CumulativeSampler(const std::vector<double>& weights) {
    cum_.reserve(weights.size());
    double total = 0.0;
    for (double w : weights) {
      total += w;
      cum_.push_back(total);
    }
  }

  bool empty() const { return cum_.empty() || cum_.back() <= 0.0; }

  int draw(Rng& rng) const {
    const double r = rng.uniform(0.0, cum_.back());
    return static_cast<int>(std::upper_bound(cum_.begin(), cum_.end(), r) -
                            cum_.begin());
  }

 private:
  std::vector<double> cum_;
};

// Incremental weighted sampler used while a set is still growing: draws are
// restricted to the prefix inserted so far.
class GrowingSampler {
 public:
  void push(double w) { cum_.push_back((cum_.empty() ? 0.0 : cum_.back()) + w); }

  int draw_prefix(Rng& rng, size_t count) const {
    const double top = cum_[count - 1];
    const double r = rng.uniform(0.0, top);
    return static_cast<int>(
        std::upper_bound(cum_.begin(), cum_.begin() + count, r) - cum_.begin());
  }

 private:
  std::vector<double> cum_;
};

}  // namespace

SyntheticSpec cora_like() {
  SyntheticSpec s;
  s.num_nodes = 2708;
  s.num_classes = 7;
  s.num_features = 1433;
  s.target_edges = 5429;
  s.power_law_gamma = 2.3;
  s.max_degree_weight = 26;
  s.homophily = 0.81;
  s.core_words_per_class = 60;
  s.core_overlap = 0.6;
  s.words_min = 4;
  s.words_max = 26;
  s.degree_token_cap = 12;
  s.core_prob = 0.30;
  s.core_noise = 0.30;
  s.seed = 42;
  return s;
}

SyntheticSpec citeseer_like() {
  SyntheticSpec s;
  s.num_nodes = 3327;
  s.num_classes = 6;
  s.num_features = 3703;
  s.target_edges = 4732;
  s.power_law_gamma = 2.5;
  s.max_degree_weight = 20;
  s.homophily = 0.74;
  s.core_words_per_class = 80;
  s.core_overlap = 0.65;
  s.words_min = 3;
  s.words_max = 24;
  s.degree_token_cap = 10;
  s.core_prob = 0.29;
  s.core_noise = 0.33;
  s.seed = 43;
  return s;
}

Graph generate_citation_graph(const SyntheticSpec& spec) {
  if (spec.num_nodes < 2 || spec.num_classes < 2 || spec.num_features < 1)
    throw ConfigError("synthetic spec dimensions too small");
  if (spec.core_overlap < 0.0 || spec.core_overlap >= 1.0)
    throw ConfigError("core_overlap must lie in [0, 1)");
  const int window_step = std::max(
      1, static_cast<int>(std::lround(spec.core_words_per_class *
                                      (1.0 - spec.core_overlap))));
  const int core_span =
      window_step * (spec.num_classes - 1) + spec.core_words_per_class;
  if (core_span > spec.num_features)
    throw ConfigError("core vocabulary exceeds the feature count");
  if (spec.words_min < 1 || spec.words_max < spec.words_min)
    throw ConfigError("invalid words_min/words_max");
  if (spec.degree_token_cap < 1)
    throw ConfigError("degree_token_cap must be positive");
  if (spec.homophily <= 0.0 || spec.homophily > 1.0)
    throw ConfigError("homophily must lie in (0, 1]");
  if (spec.bridge_fraction <= 0.0 || spec.bridge_fraction > 1.0)
    throw ConfigError("bridge_fraction must lie in (0, 1]");

  Rng rng(Rng::derive(spec.seed, "datagen"));
  const int n = spec.num_nodes;
  const int c = spec.num_classes;

  // Class assignment and power-law degree weights (shifted-zeta inverse CDF).
  std::vector<int> cls(static_cast<size_t>(n));
  for (auto& v : cls) v = rng.uniform_int(0, c - 1);

  std::vector<double> pl_cdf(static_cast<size_t>(spec.max_degree_weight));
  {
    double total = 0.0;
    for (int d = 1; d <= spec.max_degree_weight; ++d) {
      total += std::pow(static_cast<double>(d), -spec.power_law_gamma);
      pl_cdf[static_cast<size_t>(d - 1)] = total;
    }
    for (double& v : pl_cdf) v /= total;
  }
  std::vector<double> weight(static_cast<size_t>(n));
  for (auto& w : weight) {
    const double r = rng.uniform();
    w = static_cast<double>(
        std::upper_bound(pl_cdf.begin(), pl_cdf.end(), r) - pl_cdf.begin() + 1);
  }

  std::vector<std::vector<int>> class_members(static_cast<size_t>(c));
  for (int i = 0; i < n; ++i)
    class_members[static_cast<size_t>(cls[static_cast<size_t>(i)])].push_back(i);

  // Stage 1: same-class random-attachment backbone. Visiting each class's
  // members in random order and attaching every node to a uniformly random
  // earlier member yields one connected subgraph per class with no isolated
  // nodes. Attachment is deliberately not degree-biased: hubs emerge from the
  // weighted stage below, so a sparsely cited paper usually hangs off another
  // minor paper rather than sitting one hop from a hub.
  std::set<std::pair<int, int>> edges;
  for (int k = 0; k < c; ++k) {
    auto order = class_members[static_cast<size_t>(k)];
    rng.shuffle(order);
    GrowingSampler attach;
    for (size_t idx = 0; idx < order.size(); ++idx) {
      const int node = order[idx];
      if (idx > 0) {
        const int pick = attach.draw_prefix(rng, idx);
        const int other = order[static_cast<size_t>(pick)];
        edges.insert({std::min(node, other), std::max(node, other)});
      }
      attach.push(1.0);
    }
  }
  const int backbone = static_cast<int>(edges.size());
  if (backbone >= spec.target_edges)
    throw ConfigError("target_edges too small for the connectivity backbone");

  // Stage 2: fill the remaining budget with degree-weighted pairing. All
  // backbone edges are same-class, so the same-class rate of the remainder is
  // reduced until the overall ratio matches the requested homophily.
  const int rest = spec.target_edges - backbone;
  const double same_needed = spec.homophily * spec.target_edges - backbone;
  const double h_rest = std::clamp(same_needed / rest, 0.0, 1.0);

  CumulativeSampler global(weight);
  std::vector<CumulativeSampler> per_class;
  per_class.reserve(static_cast<size_t>(c));
  for (int k = 0; k < c; ++k) {
    std::vector<double> w;
    w.reserve(class_members[static_cast<size_t>(k)].size());
    for (int i : class_members[static_cast<size_t>(k)])
      w.push_back(weight[static_cast<size_t>(i)]);
    per_class.emplace_back(w);
  }

  // Cross-class edges are confined to a weight-biased "bridge" subset, the
  // way interdisciplinary citations concentrate on a few boundary papers.
  // Everyone else keeps a fully same-class neighbourhood, which matters for
  // walk-level homophily far more than the raw edge ratio does.
  std::vector<int> bridge_nodes;
  {
    const int want =
        std::max(2, static_cast<int>(std::lround(spec.bridge_fraction * n)));
    std::vector<uint8_t> used(static_cast<size_t>(n), 0);
    long guard = 0;
    while (static_cast<int>(bridge_nodes.size()) < want && guard < 100L * n) {
      ++guard;
      const int pick = rng.uniform_int(0, n - 1);
      if (used[static_cast<size_t>(pick)]) continue;
      used[static_cast<size_t>(pick)] = 1;
      bridge_nodes.push_back(pick);
    }
  }
  std::vector<double> bridge_w;
  bridge_w.reserve(bridge_nodes.size());
  for (int i : bridge_nodes) bridge_w.push_back(weight[static_cast<size_t>(i)]);
  CumulativeSampler bridge(bridge_w);

  const long max_attempts = 200L * spec.target_edges;
  long attempts = 0;
  while (static_cast<int>(edges.size()) < spec.target_edges &&
         attempts < max_attempts) {
    ++attempts;
    int i, j;
    if (rng.uniform() < h_rest) {
      i = global.draw(rng);
      const int k = cls[static_cast<size_t>(i)];
      j = class_members[static_cast<size_t>(k)]
                       [static_cast<size_t>(per_class[static_cast<size_t>(k)].draw(rng))];
    } else {
      i = bridge_nodes[static_cast<size_t>(bridge.draw(rng))];
      j = bridge_nodes[static_cast<size_t>(bridge.draw(rng))];
      if (cls[static_cast<size_t>(j)] == cls[static_cast<size_t>(i)]) continue;
    }
    if (i == j) continue;
    edges.insert({std::min(i, j), std::max(i, j)});
  }
  if (static_cast<int>(edges.size()) < spec.target_edges / 2)
    throw ContractError("edge sampling failed to reach half the target size");

  Graph g;
  g.num_nodes = n;
  g.num_classes = c;
  g.num_features = spec.num_features;
  g.labels = cls;
  g.row_ptr.assign(static_cast<size_t>(n) + 1, 0);
  {
    std::vector<std::vector<int>> adj(static_cast<size_t>(n));
    for (const auto& [a, b] : edges) {
      adj[static_cast<size_t>(a)].push_back(b);
      adj[static_cast<size_t>(b)].push_back(a);
    }
    for (int i = 0; i < n; ++i) {
      auto& row = adj[static_cast<size_t>(i)];
      std::sort(row.begin(), row.end());
      g.col_idx.insert(g.col_idx.end(), row.begin(), row.end());
      g.row_ptr[static_cast<size_t>(i) + 1] = static_cast<int>(g.col_idx.size());
    }
  }

  // Sparse bag-of-words. Document length grows with the node's final degree
  // (well-cited papers carry richer text), so sparsely connected nodes are
  // also the feature-poor ones. Tokens come from the writer's class window
  // with probability core_prob (occasionally a random class's window, per
  // core_noise), otherwise from the shared background vocabulary. Adjacent
  // class windows overlap by core_overlap. Rows normalize to 1.
  g.features = Eigen::MatrixXd::Zero(n, spec.num_features);
  for (int i = 0; i < n; ++i) {
    const double t =
        std::min(g.degree(i), spec.degree_token_cap) /
        static_cast<double>(spec.degree_token_cap);
    const int mean_tokens = static_cast<int>(
        std::lround(spec.words_min + t * (spec.words_max - spec.words_min)));
    const int jitter = std::max(1, mean_tokens / 4);
    const int tokens = std::max(
        1, mean_tokens + rng.uniform_int(-jitter, jitter));
    for (int tok = 0; tok < tokens; ++tok) {
      int word;
      if (rng.uniform() < spec.core_prob) {
        int k = cls[static_cast<size_t>(i)];
        if (rng.uniform() < spec.core_noise) k = rng.uniform_int(0, c - 1);
        word = k * window_step +
               rng.uniform_int(0, spec.core_words_per_class - 1);
      } else {
        word = rng.uniform_int(0, spec.num_features - 1);
      }
      g.features(i, word) = 1.0;
    }
    const double sum = g.features.row(i).sum();
    if (sum > 0.0) g.features.row(i) /= sum;
  }
  return g;
}

}  // namespace sldsgcn
