#include "sldsgcn/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "sldsgcn/errors.hpp"
#include "sldsgcn/rng.hpp"

namespace sldsgcn {

namespace {

std::ifstream open_or_throw(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw LoadError("cannot open " + p.string());
  return in;
}

// Splits a CSV line; empty trailing field is preserved.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

int parse_int(const std::string& s, const std::string& context) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ValidationError("expected integer, got '" + s + "' " + context);
  }
  return value;
}

}  // namespace

std::vector<int> degrees(const Graph& g) {
  std::vector<int> d(g.num_nodes);
  for (int i = 0; i < g.num_nodes; ++i) d[i] = g.degree(i);
  return d;
}

Graph load_graph(const std::filesystem::path& dir, LoadStats* stats) {
  const auto edges_path = dir / "edges.csv";
  const auto features_path = dir / "features.csv";
  const auto labels_path = dir / "labels.csv";
  for (const auto& p : {edges_path, features_path, labels_path}) {
    if (!std::filesystem::exists(p)) {
      throw LoadError("missing file " + p.string());
    }
  }

  Graph g;
  LoadStats local_stats;

  // Features first: the row count defines N.
  {
    auto in = open_or_throw(features_path);
    std::string line;
    std::vector<double> flat;
    int num_features = -1;
    int row = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto fields = split_csv_line(line);
      if (num_features < 0) {
        num_features = static_cast<int>(fields.size());
      } else if (static_cast<int>(fields.size()) != num_features) {
        throw ValidationError("features.csv row " + std::to_string(row) +
                              " has " + std::to_string(fields.size()) +
                              " columns, expected " +
                              std::to_string(num_features));
      }
      for (const auto& f : fields) {
        try {
          flat.push_back(std::stod(f));
        } catch (const std::exception&) {
          throw ValidationError("features.csv row " + std::to_string(row) +
                                ": bad value '" + f + "'");
        }
      }
      ++row;
    }
    g.num_nodes = row;
    g.num_features = std::max(num_features, 0);
    g.features.resize(g.num_nodes, g.num_features);
    for (int i = 0; i < g.num_nodes; ++i) {
      for (int j = 0; j < g.num_features; ++j) {
        g.features(i, j) = flat[static_cast<size_t>(i) * g.num_features + j];
      }
    }
  }

  // Labels: "node_id,class_id" with class_id possibly empty.
  {
    auto in = open_or_throw(labels_path);
    g.labels.assign(g.num_nodes, kUnknownLabel);
    std::string line;
    int line_no = 0;
    int max_class = -1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line == "\r") continue;
      auto fields = split_csv_line(line);
      if (fields.size() != 2) {
        throw ValidationError("labels.csv line " + std::to_string(line_no) +
                              ": expected 'node_id,class_id'");
      }
      int node = parse_int(fields[0], "in labels.csv line " +
                                          std::to_string(line_no));
      if (node < 0 || node >= g.num_nodes) {
        throw ValidationError("labels.csv line " + std::to_string(line_no) +
                              ": node id " + std::to_string(node) +
                              " out of range [0, " +
                              std::to_string(g.num_nodes) + ")");
      }
      if (!fields[1].empty()) {
        int cls = parse_int(fields[1], "in labels.csv line " +
                                           std::to_string(line_no));
        if (cls < 0) {
          throw ValidationError("labels.csv line " + std::to_string(line_no) +
                                ": negative class id");
        }
        g.labels[node] = cls;
        max_class = std::max(max_class, cls);
      }
    }
    g.num_classes = max_class + 1;
  }

  // Edges: symmetrize, deduplicate, drop self-loops.
  {
    auto in = open_or_throw(edges_path);
    std::set<std::pair<int, int>> edge_set;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line == "\r") continue;
      auto fields = split_csv_line(line);
      if (fields.size() != 2) {
        throw ValidationError("edges.csv line " + std::to_string(line_no) +
                              ": expected 'src,dst'");
      }
      int src = parse_int(fields[0],
                          "in edges.csv line " + std::to_string(line_no));
      int dst = parse_int(fields[1],
                          "in edges.csv line " + std::to_string(line_no));
      if (src < 0 || src >= g.num_nodes || dst < 0 || dst >= g.num_nodes) {
        throw ValidationError("edges.csv line " + std::to_string(line_no) +
                              ": node id out of range [0, " +
                              std::to_string(g.num_nodes) + ")");
      }
      if (src == dst) {
        local_stats.self_loops_dropped++;
        continue;
      }
      auto e = std::minmax(src, dst);
      if (!edge_set.insert({e.first, e.second}).second) {
        local_stats.duplicate_edges_dropped++;
      }
    }
    std::vector<std::vector<int>> adj(g.num_nodes);
    for (const auto& [u, v] : edge_set) {
      adj[u].push_back(v);
      adj[v].push_back(u);
    }
    g.row_ptr.assign(g.num_nodes + 1, 0);
    for (int i = 0; i < g.num_nodes; ++i) {
      std::sort(adj[i].begin(), adj[i].end());
      g.row_ptr[i + 1] = g.row_ptr[i] + static_cast<int>(adj[i].size());
      g.col_idx.insert(g.col_idx.end(), adj[i].begin(), adj[i].end());
    }
  }

  if (stats) *stats = local_stats;
  return g;
}

void save_graph(const Graph& g, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "edges.csv");
    for (int i = 0; i < g.num_nodes; ++i) {
      for (int p = g.row_ptr[i]; p < g.row_ptr[i + 1]; ++p) {
        int j = g.col_idx[p];
        if (i < j) out << i << "," << j << "\n";
      }
    }
  }
  {
    std::ofstream out(dir / "features.csv");
    out.precision(17);
    for (int i = 0; i < g.num_nodes; ++i) {
      for (int j = 0; j < g.num_features; ++j) {
        if (j) out << ",";
        out << g.features(i, j);
      }
      out << "\n";
    }
  }
  {
    std::ofstream out(dir / "labels.csv");
    for (int i = 0; i < g.num_nodes; ++i) {
      out << i << ",";
      if (g.labels[i] != kUnknownLabel) out << g.labels[i];
      out << "\n";
    }
  }
}

int SplitMasks::train_count() const {
  return static_cast<int>(std::count(train.begin(), train.end(), uint8_t{1}));
}

int SplitMasks::test_count() const {
  return static_cast<int>(std::count(test.begin(), test.end(), uint8_t{1}));
}

SplitMasks split(const Graph& g, double label_rate, double test_frac,
                 uint64_t seed) {
  if (label_rate < 0 || test_frac < 0 || label_rate + test_frac > 1.0) {
    throw ContractError("split: label_rate + test_frac must be in [0, 1]");
  }
  const int n = g.num_nodes;
  const int want_train = static_cast<int>(std::lround(label_rate * n));
  const int want_test = static_cast<int>(std::lround(test_frac * n));

  std::vector<int> labeled;
  for (int i = 0; i < n; ++i) {
    if (g.labels[i] != kUnknownLabel) labeled.push_back(i);
  }
  if (want_train + want_test > static_cast<int>(labeled.size())) {
    throw ContractError("split: not enough labeled nodes for the requested "
                        "train/test sizes");
  }

  constexpr int kMaxReseeds = 50;
  for (int attempt = 0; attempt < kMaxReseeds; ++attempt) {
    Rng rng(Rng::derive(seed + static_cast<uint64_t>(attempt), "split"));
    std::vector<int> pool = labeled;
    rng.shuffle(pool);

    std::vector<uint8_t> in_train(n, 0), in_test(n, 0);
    for (int i = 0; i < want_train; ++i) in_train[pool[i]] = 1;
    for (int i = want_train; i < want_train + want_test; ++i) {
      in_test[pool[i]] = 1;
    }

    std::vector<uint8_t> class_seen(std::max(g.num_classes, 1), 0);
    for (int i = 0; i < n; ++i) {
      if (in_train[i]) class_seen[g.labels[i]] = 1;
    }
    bool covered = want_train == 0 ||
                   std::all_of(class_seen.begin(), class_seen.end(),
                               [](uint8_t s) { return s != 0; });
    if (!covered) continue;

    SplitMasks m;
    m.seed = seed;
    m.train = std::move(in_train);
    m.test = std::move(in_test);
    m.unlabeled.assign(n, 0);
    for (int i = 0; i < n; ++i) {
      if (!m.train[i] && !m.test[i]) m.unlabeled[i] = 1;
    }
    return m;
  }
  throw ContractError("split: could not cover every class in the training "
                      "set after 50 reseeds");
}

CsrMatrix normalized_adjacency(const Graph& g, bool add_self_loops) {
  const int n = g.num_nodes;
  std::vector<double> deg(n, 0.0);
  for (int i = 0; i < n; ++i) {
    deg[i] = static_cast<double>(g.degree(i)) + (add_self_loops ? 1.0 : 0.0);
  }

  CsrMatrix a;
  a.rows = n;
  a.cols = n;
  a.row_ptr.assign(n + 1, 0);
  for (int i = 0; i < n; ++i) {
    int row_nnz = g.degree(i) + (add_self_loops ? 1 : 0);
    a.row_ptr[i + 1] = a.row_ptr[i] + row_nnz;
  }
  a.col_idx.resize(a.row_ptr[n]);
  a.values.resize(a.row_ptr[n]);

  for (int i = 0; i < n; ++i) {
    int pos = a.row_ptr[i];
    bool self_written = false;
    double di = deg[i];
    for (int p = g.row_ptr[i]; p < g.row_ptr[i + 1]; ++p) {
      int j = g.col_idx[p];
      if (add_self_loops && !self_written && j > i) {
        a.col_idx[pos] = i;
        a.values[pos] = 1.0 / di;
        ++pos;
        self_written = true;
      }
      a.col_idx[pos] = j;
      a.values[pos] = 1.0 / std::sqrt(di * deg[j]);
      ++pos;
    }
    if (add_self_loops && !self_written) {
      a.col_idx[pos] = i;
      a.values[pos] = 1.0 / di;
      ++pos;
    }
  }
  return a;
}

Graph induced_subgraph(const Graph& g, std::vector<int> nodes) {
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  if (nodes.empty()) throw ContractError("induced subgraph needs >= 1 node");
  std::vector<int> remap(static_cast<size_t>(g.num_nodes), -1);
  for (size_t r = 0; r < nodes.size(); ++r) {
    if (nodes[r] < 0 || nodes[r] >= g.num_nodes)
      throw ValidationError("subgraph node id out of range: " +
                            std::to_string(nodes[r]));
    remap[static_cast<size_t>(nodes[r])] = static_cast<int>(r);
  }

  Graph sub;
  sub.num_nodes = static_cast<int>(nodes.size());
  sub.num_classes = g.num_classes;
  sub.num_features = g.num_features;
  sub.features.resize(sub.num_nodes, g.num_features);
  sub.labels.resize(nodes.size());
  sub.row_ptr.assign(nodes.size() + 1, 0);
  for (size_t r = 0; r < nodes.size(); ++r) {
    const int old_id = nodes[r];
    sub.features.row(static_cast<Eigen::Index>(r)) = g.features.row(old_id);
    sub.labels[r] = g.labels[static_cast<size_t>(old_id)];
    // Source columns are ascending and the id remap is monotone, so the new
    // rows come out sorted without an extra pass.
    for (int p = g.row_ptr[static_cast<size_t>(old_id)];
         p < g.row_ptr[static_cast<size_t>(old_id) + 1]; ++p) {
      const int mapped = remap[static_cast<size_t>(g.col_idx[static_cast<size_t>(p)])];
      if (mapped >= 0) sub.col_idx.push_back(mapped);
    }
    sub.row_ptr[r + 1] = static_cast<int>(sub.col_idx.size());
  }
  return sub;
}

}  // namespace sldsgcn
