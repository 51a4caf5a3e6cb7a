// End-to-end acceptance gate. Trains the model variants on the bundled
// synthetic benchmarks with the default configuration and checks one
// criterion per line: headline accuracy of the plain baseline, margins of
// the full pipeline, ablation orderings, degree-stratified gains, the
// degree/influence diagnostics, and the property suites for every
// differentiable or iterative component. Prints exactly one
// "PASS criterion N: ..." / "FAIL criterion N: ..." line per criterion on
// stdout (progress goes to stderr) and exits non-zero if anything failed.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <initializer_list>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sldsgcn/analysis.hpp"
#include "sldsgcn/annotator.hpp"
#include "sldsgcn/config.hpp"
#include "sldsgcn/datagen.hpp"
#include "sldsgcn/errors.hpp"
#include "sldsgcn/graph.hpp"
#include "sldsgcn/layers.hpp"
#include "sldsgcn/optim.hpp"
#include "sldsgcn/pipeline.hpp"
#include "sldsgcn/rng.hpp"
#include "sldsgcn/teacher.hpp"
#include "sldsgcn/tensor.hpp"

using namespace sldsgcn;

namespace {

// ---- tolerances and targets, pinned in one place -------------------------

// Published reference accuracy of the plain two-layer convolution baseline
// at a 3% label rate, and the band a reimplementation must land in.
constexpr double kPlainTarget = 71.15;
constexpr double kPlainBand = 5.0;
constexpr double kSeedTimeLimitSec = 300.0;
// Required mean-accuracy margins of the full pipeline (points).
constexpr double kFullOverPlain = 4.0;
constexpr double kFullOverDegreeOnly = 2.0;
constexpr double kSparserFullOverPlain = 2.5;
// Adjacent entries of an ordering chain may invert by at most this much.
constexpr double kInversionTol = 0.5;
// Property-suite tolerances.
constexpr double kGradTol = 1e-4;
constexpr double kExactTol = 1e-12;
constexpr double kSpearmanMin = 0.5;
constexpr int kStarWinsMin = 18;
constexpr int kInfluenceSubsample = 500;
constexpr int kConnectedGraphsUpTo6 = 27475;  // n = 2..6: 1+4+38+728+26704

int g_failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id,
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

void progress(const std::string& msg) {
  std::fprintf(stderr, "[acceptance] %s\n", msg.c_str());
  std::fflush(stderr);
}

std::string fmt2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string fmte(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1e", v);
  return buf;
}

// ---- variant runs ---------------------------------------------------------

struct VariantStats {
  std::vector<RunMetrics> runs;
  double mean_pct = 0.0;      // mean test accuracy in points
  double slowest_sec = 0.0;   // wall time of the slowest seed
};

using StatsMap = std::map<std::string, VariantStats>;

StatsMap run_variants(const Graph& g, const GraphContext& ctx,
                      const RunConfig& config,
                      const std::vector<std::string>& variants,
                      const std::string& tag) {
  StatsMap stats;
  for (const auto& name : variants) {
    VariantStats& vs = stats[name];
    for (uint64_t seed : config.seeds) {
      SplitMasks masks = split(g, config.label_rate, config.test_frac, seed);
      TrainingPlan plan = make_plan(config, name, seed);
      const auto t0 = std::chrono::steady_clock::now();
      vs.runs.push_back(run_variant(plan, ctx, masks));
      const std::chrono::duration<double> dt =
          std::chrono::steady_clock::now() - t0;
      vs.slowest_sec = std::max(vs.slowest_sec, dt.count());
    }
    for (const auto& m : vs.runs) vs.mean_pct += m.accuracy;
    vs.mean_pct *= 100.0 / static_cast<double>(vs.runs.size());
    progress(tag + " " + name + ": mean " + fmt2(vs.mean_pct) + ", slowest seed " +
             fmt2(vs.slowest_sec) + "s");
  }
  return stats;
}

// Checks a >= b chain where each adjacent comparison tolerates an inversion
// of at most kInversionTol points; renders "a 80.1 >= b 79.2 ~>= c 79.4".
bool check_chain(const std::vector<std::pair<std::string, double>>& chain,
                 std::string* rendered) {
  bool ok = true;
  std::ostringstream out;
  for (size_t i = 0; i < chain.size(); ++i) {
    if (i) {
      const double gap = chain[i - 1].second - chain[i].second;
      if (gap >= 0.0) {
        out << " >= ";
      } else if (gap >= -kInversionTol) {
        out << " ~>= ";  // inversion inside the tolerance
      } else {
        out << " !>= ";
        ok = false;
      }
    }
    out << chain[i].first << " " << fmt2(chain[i].second);
  }
  *rendered = out.str();
  return ok;
}

// Pooled accuracy (points) over test nodes whose degree lies in `degs`,
// aggregated across every seed's run.
double pooled_group_accuracy(const VariantStats& vs,
                             std::initializer_list<int> degs, int d_max) {
  long correct = 0, count = 0;
  for (const auto& m : vs.runs) {
    for (int d : degs) {
      const int b = degree_bucket(d, d_max);
      count += m.bucket_counts[static_cast<size_t>(b)];
      correct += m.bucket_correct[static_cast<size_t>(b)];
    }
  }
  if (count == 0) return -1.0;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(count);
}

// ---- small-graph helpers for the property suites --------------------------

Eigen::MatrixXd random_matrix(int rows, int cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
  return m;
}

Eigen::MatrixXd normal_matrix(int rows, int cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

Graph graph_from_edges(int n, int num_classes, int num_features,
                       const std::vector<std::pair<int, int>>& edges,
                       Rng& rng) {
  Graph g;
  g.num_nodes = n;
  g.num_classes = num_classes;
  g.num_features = num_features;
  g.features = random_matrix(n, num_features, rng);
  g.labels.assign(static_cast<size_t>(n), kUnknownLabel);
  std::vector<std::array<double, 3>> trips;
  for (auto [a, b] : edges) {
    trips.push_back({static_cast<double>(a), static_cast<double>(b), 1.0});
    trips.push_back({static_cast<double>(b), static_cast<double>(a), 1.0});
  }
  CsrMatrix adj = CsrMatrix::from_triplets(n, n, trips);
  g.row_ptr = adj.row_ptr;
  g.col_idx = adj.col_idx;
  return g;
}

SplitMasks masks_with_train(int n, const std::vector<int>& train_ids) {
  SplitMasks m;
  m.train.assign(static_cast<size_t>(n), 0);
  m.test.assign(static_cast<size_t>(n), 0);
  m.unlabeled.assign(static_cast<size_t>(n), 1);
  for (int id : train_ids) {
    m.train[static_cast<size_t>(id)] = 1;
    m.unlabeled[static_cast<size_t>(id)] = 0;
  }
  return m;
}

// Breadth-first ball of at most `limit` nodes around `start`.
std::vector<int> bfs_ball(const Graph& g, int start, int limit) {
  std::vector<int> order;
  order.reserve(static_cast<size_t>(limit));
  std::vector<char> seen(static_cast<size_t>(g.num_nodes), 0);
  std::deque<int> queue = {start};
  seen[static_cast<size_t>(start)] = 1;
  while (!queue.empty() && static_cast<int>(order.size()) < limit) {
    const int v = queue.front();
    queue.pop_front();
    order.push_back(v);
    for (int p = g.row_ptr[static_cast<size_t>(v)];
         p < g.row_ptr[static_cast<size_t>(v) + 1]; ++p) {
      const int w = g.col_idx[static_cast<size_t>(p)];
      if (seen[static_cast<size_t>(w)]) continue;
      seen[static_cast<size_t>(w)] = 1;
      queue.push_back(w);
    }
  }
  return order;
}

// ---- criterion 8 sub-properties -------------------------------------------

// Worst finite-difference error over the plain two-layer convolution.
double grad_check_plain(Rng& rng) {
  Graph g = graph_from_edges(5, 2, 3, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}},
                             rng);
  CsrMatrix a_hat = normalized_adjacency(g);
  GcnLayer l0{Tensor::parameter(random_matrix(3, 4, rng)), Activation::relu};
  GcnLayer l1{Tensor::parameter(random_matrix(4, 2, rng)),
              Activation::identity};
  std::vector<int> targets = {0, 1, 0, 1, 1};
  std::vector<uint8_t> mask(5, 1);
  auto program = [&](Tape& tape) {
    Tensor h = gcn_forward(tape, l0, a_hat, Tensor::constant(g.features));
    Tensor probs = tape.row_softmax(gcn_forward(tape, l1, a_hat, h));
    return tape.masked_cross_entropy(probs, targets, mask);
  };
  return std::max(finite_diff_check(program, l0.weight, 1e-5),
                  finite_diff_check(program, l1.weight, 1e-5));
}

// Worst finite-difference error through the degree-specific convolution,
// covering the shared weight, the bank seed and the generator cell.
double grad_check_degree_specific(Rng& rng) {
  Graph g = graph_from_edges(5, 2, 3, {{0, 1}, {0, 2}, {0, 3}, {3, 4}}, rng);
  CsrMatrix a_hat = normalized_adjacency(g);
  std::vector<int> degree = degrees(g);
  Tensor shared = Tensor::parameter(random_matrix(3, 2, rng));
  Tensor seed = Tensor::parameter(random_matrix(3, 2, rng));
  Rng cell_rng(Rng::derive(91, "cell"));
  RecurrentCell cell = RecurrentCell::create(CellKind::elman, 3, 2, 2, cell_rng);
  std::vector<int> targets = {0, 1, 0, 1, 1};
  std::vector<uint8_t> mask(5, 1);
  auto program = [&](Tape& tape) {
    DegreeWeightBank bank = generate_weight_bank(tape, seed, cell, 3);
    Tensor z = dsgcn_forward(tape, bank, shared, a_hat,
                             Tensor::constant(g.features), degree,
                             Activation::identity, DegreeIndexMode::neighbor);
    return tape.masked_cross_entropy(tape.row_softmax(z), targets, mask);
  };
  double worst = std::max(finite_diff_check(program, shared, 1e-5),
                          finite_diff_check(program, seed, 1e-5));
  for (auto& [name, t] : cell.named_parameters("")) {
    worst = std::max(worst, finite_diff_check(program, t, 1e-5));
  }
  return worst;
}

// Worst finite-difference error through the weight-bank generator alone.
double grad_check_generator(Rng& rng) {
  Tensor seed = Tensor::parameter(random_matrix(3, 2, rng));
  Rng cell_rng(Rng::derive(92, "cell"));
  RecurrentCell cell = RecurrentCell::create(CellKind::elman, 3, 2, 2, cell_rng);
  auto program = [&](Tape& tape) {
    DegreeWeightBank bank = generate_weight_bank(tape, seed, cell, 4);
    Tensor total = tape.sum(bank.entries[0]);
    for (size_t k = 1; k < bank.entries.size(); ++k)
      total = tape.add(total, tape.sum(bank.entries[k]));
    return total;
  };
  double worst = finite_diff_check(program, seed, 1e-5);
  for (auto& [name, t] : cell.named_parameters("")) {
    worst = std::max(worst, finite_diff_check(program, t, 1e-5));
  }
  return worst;
}

// Worst finite-difference error of the teacher objective with the sampling
// noise held fixed, so the loss is a deterministic function of the
// variational parameters (common random numbers).
double grad_check_teacher_elbo(Rng& rng) {
  const int n = 6, in = 3, hid = 4, out = 2;
  Eigen::MatrixXd x = random_matrix(n, in, rng);
  std::vector<int> targets = {0, 1, 0, 1, 1, 0};
  std::vector<uint8_t> mask(static_cast<size_t>(n), 1);

  VariationalParam w1{Tensor::parameter(random_matrix(in, hid, rng)),
                      Tensor::parameter(Eigen::MatrixXd::Constant(in, hid, -2.0))};
  VariationalParam b1{Tensor::parameter(Eigen::MatrixXd::Zero(1, hid)),
                      Tensor::parameter(Eigen::MatrixXd::Constant(1, hid, -2.0))};
  VariationalParam w2{Tensor::parameter(random_matrix(hid, out, rng)),
                      Tensor::parameter(Eigen::MatrixXd::Constant(hid, out, -2.0))};
  VariationalParam b2{Tensor::parameter(Eigen::MatrixXd::Zero(1, out)),
                      Tensor::parameter(Eigen::MatrixXd::Constant(1, out, -2.0))};
  const Eigen::MatrixXd e1 = normal_matrix(in, hid, rng);
  const Eigen::MatrixXd eb1 = normal_matrix(1, hid, rng);
  const Eigen::MatrixXd e2 = normal_matrix(hid, out, rng);
  const Eigen::MatrixXd eb2 = normal_matrix(1, out, rng);

  auto program = [&](Tape& tape) {
    auto draw = [&](const VariationalParam& q, const Eigen::MatrixXd& eps) {
      return tape.add(q.mean, tape.elementwise_mul(tape.exp(q.logstd),
                                                   Tensor::constant(eps)));
    };
    Tensor xs = Tensor::constant(x);
    Tensor hidden =
        tape.relu(tape.add(tape.matmul(xs, draw(w1, e1)), draw(b1, eb1)));
    Tensor probs = tape.row_softmax(
        tape.add(tape.matmul(hidden, draw(w2, e2)), draw(b2, eb2)));
    Tensor nll = tape.masked_cross_entropy(probs, targets, mask);
    Tensor kl = tape.add(
        tape.add(kl_to_prior(tape, w1, 1.0), kl_to_prior(tape, b1, 1.0)),
        tape.add(kl_to_prior(tape, w2, 1.0), kl_to_prior(tape, b2, 1.0)));
    return tape.add(nll, tape.scale(kl, 1.0 / n));
  };

  double worst = 0.0;
  for (Tensor* t : {&w1.mean, &w1.logstd, &b1.mean, &b1.logstd, &w2.mean,
                    &w2.logstd, &b2.mean, &b2.logstd}) {
    worst = std::max(worst, finite_diff_check(program, *t, 1e-5));
  }
  return worst;
}

// Closed-form class masses of the clamped propagation fixed point:
// Y_U = (I - P_UU)^{-1} P_UL Y_L with P = D^{-1} A.
Eigen::MatrixXd dense_fixed_point(const Graph& g, const SplitMasks& masks) {
  const int n = g.num_nodes, c = g.num_classes;
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const int deg = g.degree(i);
    if (deg == 0) continue;
    for (int q = g.row_ptr[static_cast<size_t>(i)];
         q < g.row_ptr[static_cast<size_t>(i) + 1]; ++q)
      p(i, g.col_idx[static_cast<size_t>(q)]) = 1.0 / deg;
  }
  std::vector<int> labeled, unlabeled;
  for (int i = 0; i < n; ++i)
    (masks.train[static_cast<size_t>(i)] ? labeled : unlabeled).push_back(i);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, c);
  for (int i : labeled) y(i, g.labels[static_cast<size_t>(i)]) = 1.0;
  if (unlabeled.empty()) return y;
  const int u = static_cast<int>(unlabeled.size());
  Eigen::MatrixXd puu(u, u), rhs(u, c);
  for (int a = 0; a < u; ++a) {
    for (int b = 0; b < u; ++b)
      puu(a, b) = p(unlabeled[static_cast<size_t>(a)],
                    unlabeled[static_cast<size_t>(b)]);
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(c);
    for (int l : labeled)
      acc += p(unlabeled[static_cast<size_t>(a)], l) * y.row(l);
    rhs.row(a) = acc;
  }
  Eigen::MatrixXd yu =
      (Eigen::MatrixXd::Identity(u, u) - puu).fullPivLu().solve(rhs);
  for (int a = 0; a < u; ++a)
    y.row(unlabeled[static_cast<size_t>(a)]) = yu.row(a);
  return y;
}

bool is_connected(int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::vector<int>> adj(static_cast<size_t>(n));
  for (auto [a, b] : edges) {
    adj[static_cast<size_t>(a)].push_back(b);
    adj[static_cast<size_t>(b)].push_back(a);
  }
  std::vector<char> seen(static_cast<size_t>(n), 0);
  std::vector<int> stack = {0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int w : adj[static_cast<size_t>(v)]) {
      if (seen[static_cast<size_t>(w)]) continue;
      seen[static_cast<size_t>(w)] = 1;
      ++count;
      stack.push_back(w);
    }
  }
  return count == n;
}

int argmax_row(const Eigen::MatrixXd& y, int row) {
  int best = 0;
  for (int k = 1; k < y.cols(); ++k)
    if (y(row, k) > y(row, best)) best = k;
  return best;
}

// Compares iterative propagation labels against the dense oracle on every
// connected 2-class graph with 2..6 nodes. Returns {graphs checked,
// mismatching rows}; rows whose oracle margin is below 1e-9 are ties and
// skipped.
std::pair<int, int> propagation_enumeration() {
  int graphs_checked = 0, mismatches = 0;
  Rng feat_rng(1);
  for (int n = 2; n <= 6; ++n) {
    std::vector<std::pair<int, int>> slots;
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) slots.emplace_back(a, b);
    const uint32_t limit = 1u << slots.size();
    for (uint32_t mask = 0; mask < limit; ++mask) {
      std::vector<std::pair<int, int>> edges;
      for (size_t s = 0; s < slots.size(); ++s)
        if (mask & (1u << s)) edges.push_back(slots[s]);
      if (!is_connected(n, edges)) continue;

      Graph g = graph_from_edges(n, 2, 1, edges, feat_rng);
      g.labels.assign(static_cast<size_t>(n), kUnknownLabel);
      g.labels[0] = 0;
      g.labels[static_cast<size_t>(n - 1)] = 1;
      SplitMasks m = masks_with_train(n, {0, n - 1});
      PseudoLabels got = label_propagation(g, m, 1e-12, 100000);
      Eigen::MatrixXd want = dense_fixed_point(g, m);
      ++graphs_checked;
      for (int i = 0; i < n; ++i) {
        const double margin =
            std::abs(want(i, 0) - want(i, 1));
        if (margin < 1e-9) continue;
        if (got.labels[static_cast<size_t>(i)] != argmax_row(want, i))
          ++mismatches;
      }
    }
  }
  return {graphs_checked, mismatches};
}

// Max |difference| between the degree-specific convolution with an all-zero
// bank and the plain convolution with the same shared weight.
double reduction_to_plain(Rng& rng) {
  Graph g = graph_from_edges(6, 2, 3,
                             {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 3}},
                             rng);
  CsrMatrix a_hat = normalized_adjacency(g);
  std::vector<int> degree = degrees(g);
  Tensor shared = Tensor::constant(random_matrix(3, 4, rng));

  DegreeWeightBank bank;
  bank.d_max = 4;
  bank.seed = Tensor::constant(Eigen::MatrixXd::Zero(3, 4));
  for (int k = 0; k <= bank.d_max; ++k)
    bank.entries.push_back(Tensor::constant(Eigen::MatrixXd::Zero(3, 4)));

  Tape tape;
  Tensor specific = dsgcn_forward(tape, bank, shared, a_hat,
                                  Tensor::constant(g.features), degree,
                                  Activation::relu, DegreeIndexMode::neighbor);
  GcnLayer plain{shared, Activation::relu};
  Tensor reference =
      gcn_forward(tape, plain, a_hat, Tensor::constant(g.features));
  return (specific.value() - reference.value()).cwiseAbs().maxCoeff();
}

// Max |difference| between the grouped evaluation and an explicit per-node
// loop, over both degree-index modes on a star (which exercises the
// above-d_max clamp).
double grouped_vs_per_node(Rng& rng) {
  Graph g = graph_from_edges(5, 2, 3, {{0, 1}, {0, 2}, {0, 3}, {0, 4}}, rng);
  CsrMatrix a_hat = normalized_adjacency(g);
  std::vector<int> degree = degrees(g);
  const int d_max = 2;

  Tape tape;
  Tensor shared = Tensor::constant(random_matrix(3, 3, rng));
  DegreeWeightBank bank;
  bank.d_max = d_max;
  bank.seed = Tensor::constant(random_matrix(3, 3, rng));
  for (int k = 0; k <= d_max; ++k)
    bank.entries.push_back(Tensor::constant(random_matrix(3, 3, rng)));

  const Eigen::MatrixXd dense_a = a_hat.to_dense();
  double worst = 0.0;
  for (DegreeIndexMode mode :
       {DegreeIndexMode::neighbor, DegreeIndexMode::center}) {
    Tensor got = dsgcn_forward(tape, bank, shared, a_hat,
                               Tensor::constant(g.features), degree,
                               Activation::identity, mode);
    Eigen::MatrixXd want(5, 3);
    if (mode == DegreeIndexMode::neighbor) {
      Eigen::MatrixXd transformed(5, 3);
      for (int j = 0; j < 5; ++j) {
        const Eigen::MatrixXd w =
            shared.value() +
            bank.weight_at(bank.index_for_degree(degree[j])).value();
        transformed.row(j) = g.features.row(j) * w;
      }
      want = dense_a * transformed;
    } else {
      const Eigen::MatrixXd aggregated = dense_a * g.features;
      for (int i = 0; i < 5; ++i) {
        const Eigen::MatrixXd w =
            shared.value() +
            bank.weight_at(bank.index_for_degree(degree[i])).value();
        want.row(i) = aggregated.row(i) * w;
      }
    }
    worst = std::max(worst, (got.value() - want).cwiseAbs().maxCoeff());
  }
  return worst;
}

// With alpha = beta = 0 the per-node step sizes all equal eta, so the
// finetune phase must reproduce plain constant-step gradient descent
// parameter-for-parameter.
double step_reduction_to_descent(Rng& rng) {
  for (double c : {0.0, 0.3, 2.0})
    for (int d : {0, 1, 7, 40})
      if (dynamic_step_size(0.05, 0.0, 0.0, c, d, 10) != 0.05)
        return 1.0;  // the closed form itself must be exact

  Graph g = graph_from_edges(
      8, 2, 3, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 7}, {0, 7}},
      rng);
  for (int i = 0; i < 8; ++i) g.labels[static_cast<size_t>(i)] = i % 2;
  GraphContext ctx = GraphContext::build(g, 4);

  StudentConfig sc;
  sc.in_dim = 3;
  sc.hidden_dim = 4;
  sc.out_dim = 2;
  sc.d_max = 4;
  sc.degree_specific = false;
  sc.init_seed = 29;
  StudentNetwork subject(sc);
  StudentNetwork mirror(sc);

  SoftLabeledSet set;
  set.soft.assign(8, 0);
  set.combined.assign(8, 0);
  set.labels.assign(8, 0);
  set.uncertainty.assign(8, 0.0);
  for (int id : {0, 2, 5, 7}) {
    set.combined[static_cast<size_t>(id)] = 1;
    set.labels[static_cast<size_t>(id)] = g.labels[static_cast<size_t>(id)];
  }

  TrainingPlan plan;
  plan.alpha = 0.0;
  plan.beta = 0.0;
  plan.eta = 0.05;
  plan.finetune_epochs = 4;
  plan.patience = 100;
  finetune(subject, ctx, set, plan);

  std::vector<Tensor> params = mirror.parameters();
  for (int epoch = 0; epoch < 4; ++epoch) {
    Tape tape;
    auto fwd = mirror.forward(tape, ctx);
    Tensor loss =
        tape.masked_cross_entropy(fwd.predictions, set.labels, set.combined);
    tape.backward(loss);
    gradient_descent_step(params, plan.eta);
  }

  double worst = 0.0;
  auto a = subject.named_parameters();
  auto b = mirror.named_parameters();
  for (size_t i = 0; i < a.size(); ++i)
    worst = std::max(
        worst, (a[i].second.value() - b[i].second.value()).cwiseAbs().maxCoeff());
  return worst;
}

// Mean teacher uncertainty over the true-labeled nodes vs the unlabeled
// rest, through the real pipeline slice (propagation, pretraining, teacher).
std::pair<double, double> teacher_uncertainty_split(const Graph& g,
                                                    const GraphContext& ctx,
                                                    const RunConfig& config) {
  const uint64_t seed = config.seeds.front();
  SplitMasks masks = split(g, config.label_rate, config.test_frac, seed);
  TrainingPlan plan = make_plan(config, "SL-DSGCN", seed);

  PseudoLabels pseudo =
      label_propagation(g, masks, plan.lp_tol, plan.lp_max_iter);
  StudentConfig sc;
  sc.in_dim = g.num_features;
  sc.hidden_dim = plan.hidden_dim;
  sc.out_dim = g.num_classes;
  sc.degree_specific = true;
  sc.d_max = plan.d_max;
  sc.rank = plan.rank;
  sc.cell = plan.cell;
  sc.degree_index = plan.degree_index;
  sc.init_seed = plan.seed;
  StudentNetwork student(sc);
  Eigen::MatrixXd reps;
  pretrain_student(student, ctx, pseudo, plan, &reps);

  TeacherConfig tc;
  tc.in_dim = plan.hidden_dim;
  tc.hidden_dim = 16;
  tc.out_dim = g.num_classes;
  tc.prior_std = plan.teacher_prior_std;
  tc.sample_count = plan.teacher_samples;
  tc.epochs = plan.teacher_epochs;
  tc.lr = plan.teacher_lr;
  tc.seed = plan.seed;
  TeacherPosterior post = train_teacher(reps, masks, g.labels, tc);
  TeacherOutput out = predict_with_uncertainty(post, reps);

  double sum_l = 0.0, sum_u = 0.0;
  int n_l = 0, n_u = 0;
  for (int i = 0; i < g.num_nodes; ++i) {
    if (masks.train[static_cast<size_t>(i)]) {
      sum_l += out.uncertainty[static_cast<size_t>(i)];
      ++n_l;
    } else {
      sum_u += out.uncertainty[static_cast<size_t>(i)];
      ++n_u;
    }
  }
  return {sum_l / std::max(1, n_l), sum_u / std::max(1, n_u)};
}

}  // namespace

int main() {
  // ------- shared runs on the cora-like benchmark (criteria 1,2,4,5,6) -----
  StatsMap cora_stats;
  RunConfig cora_config;  // defaults: 3% labels, 35% test, seeds 1..10
  Graph cora;
  bool cora_ok = false;
  std::string cora_error;
  try {
    progress("generating cora-like benchmark");
    cora = generate_citation_graph(cora_like());
    GraphContext ctx = GraphContext::build(cora, cora_config.d_max);
    cora_stats = run_variants(
        cora, ctx, cora_config,
        {"GCN", "DSGCN", "MT-GNN", "SL-fs", "SL-DSGCN", "soft-set-A",
         "soft-set-T"},
        "cora-like");
    cora_ok = true;
  } catch (const std::exception& e) {
    cora_error = std::string("benchmark runs failed: ") + e.what();
  }

  // Criterion 1: baseline lands in the published band, fast enough per seed.
  if (cora_ok) {
    const VariantStats& gcn = cora_stats["GCN"];
    const bool in_band = std::abs(gcn.mean_pct - kPlainTarget) <= kPlainBand;
    const bool fast = gcn.slowest_sec < kSeedTimeLimitSec;
    report(1, in_band && fast,
           "plain baseline mean " + fmt2(gcn.mean_pct) + " vs target " +
               fmt2(kPlainTarget) + " +/- " + fmt2(kPlainBand) +
               "; slowest seed " + fmt2(gcn.slowest_sec) + "s (limit " +
               fmt2(kSeedTimeLimitSec) + "s)");
  } else {
    report(1, false, cora_error);
  }

  // Criterion 2: full pipeline beats both supervised-only variants.
  if (cora_ok) {
    const double full = cora_stats["SL-DSGCN"].mean_pct;
    const double plain = cora_stats["GCN"].mean_pct;
    const double degree_only = cora_stats["DSGCN"].mean_pct;
    const bool ok = full >= plain + kFullOverPlain &&
                    full >= degree_only + kFullOverDegreeOnly;
    report(2, ok,
           "SL-DSGCN " + fmt2(full) + " vs GCN " + fmt2(plain) + " (+" +
               fmt2(full - plain) + ", need " + fmt2(kFullOverPlain) +
               ") and DSGCN " + fmt2(degree_only) + " (+" +
               fmt2(full - degree_only) + ", need " +
               fmt2(kFullOverDegreeOnly) + ")");
  } else {
    report(2, false, cora_error);
  }

  // Criterion 3: margin holds on the sparser benchmark at a 4% label rate.
  try {
    progress("generating citeseer-like benchmark");
    Graph citeseer = generate_citation_graph(citeseer_like());
    RunConfig config;
    config.label_rate = 0.04;
    GraphContext ctx = GraphContext::build(citeseer, config.d_max);
    StatsMap stats =
        run_variants(citeseer, ctx, config, {"GCN", "SL-DSGCN"}, "citeseer-like");
    const double full = stats["SL-DSGCN"].mean_pct;
    const double plain = stats["GCN"].mean_pct;
    report(3, full >= plain + kSparserFullOverPlain,
           "SL-DSGCN " + fmt2(full) + " vs GCN " + fmt2(plain) + " (+" +
               fmt2(full - plain) + ", need " + fmt2(kSparserFullOverPlain) +
               ")");
  } catch (const std::exception& e) {
    report(3, false, std::string("sparser benchmark runs failed: ") + e.what());
  }

  // Criterion 4: ablation ordering of the pipeline pieces.
  if (cora_ok) {
    std::string rendered;
    const bool ok = check_chain({{"SL-DSGCN", cora_stats["SL-DSGCN"].mean_pct},
                                 {"SL-fs", cora_stats["SL-fs"].mean_pct},
                                 {"MT-GNN", cora_stats["MT-GNN"].mean_pct},
                                 {"DSGCN", cora_stats["DSGCN"].mean_pct}},
                                &rendered);
    report(4, ok, rendered + " (inversion tolerance " + fmt2(kInversionTol) + ")");
  } else {
    report(4, false, cora_error);
  }

  // Criterion 5: soft-set construction ordering.
  if (cora_ok) {
    std::string rendered;
    const bool ok =
        check_chain({{"intersection", cora_stats["SL-DSGCN"].mean_pct},
                     {"teacher-all", cora_stats["soft-set-T"].mean_pct},
                     {"annotator-all", cora_stats["soft-set-A"].mean_pct},
                     {"no-soft-labels", cora_stats["DSGCN"].mean_pct}},
                    &rendered);
    report(5, ok, rendered + " (inversion tolerance " + fmt2(kInversionTol) + ")");
  } else {
    report(5, false, cora_error);
  }

  // Criterion 6: the gain concentrates on low-degree test nodes.
  if (cora_ok) {
    const double low_sl =
        pooled_group_accuracy(cora_stats["SL-DSGCN"], {1, 2, 3}, 10);
    const double low_gcn = pooled_group_accuracy(cora_stats["GCN"], {1, 2, 3}, 10);
    const double high_sl =
        pooled_group_accuracy(cora_stats["SL-DSGCN"], {8, 9, 10}, 10);
    const double high_gcn =
        pooled_group_accuracy(cora_stats["GCN"], {8, 9, 10}, 10);
    const bool have = low_sl >= 0 && low_gcn >= 0 && high_sl >= 0 && high_gcn >= 0;
    const double low_gain = low_sl - low_gcn;
    const double high_gain = high_sl - high_gcn;
    report(6, have && low_gain > high_gain,
           "gain on degree 1-3 test nodes " + fmt2(low_gain) +
               " vs degree 8-10 " + fmt2(high_gain));
  } else {
    report(6, false, cora_error);
  }

  // Criterion 7: influence scores grow with degree.
  try {
    if (!cora_ok) throw ContractError(cora_error);
    progress("influence diagnostics");
    std::vector<int> deg_all = degrees(cora);
    int hub = 0;
    for (int i = 1; i < cora.num_nodes; ++i)
      if (deg_all[static_cast<size_t>(i)] > deg_all[static_cast<size_t>(hub)])
        hub = i;
    Graph sub = induced_subgraph(cora, bfs_ball(cora, hub, kInfluenceSubsample));
    std::vector<int> all(static_cast<size_t>(sub.num_nodes));
    for (int i = 0; i < sub.num_nodes; ++i) all[static_cast<size_t>(i)] = i;
    InfluenceConfig ic;
    ic.hidden_dim = 16;
    ic.out_dim = 16;
    ic.repetitions = 8;
    ic.trials = 20;
    ic.seed = 7;
    InfluenceReport rep =
        influence_scores(sub, masks_with_train(sub.num_nodes, all), ic);
    std::vector<double> deg_d;
    for (int d : degrees(sub)) deg_d.push_back(static_cast<double>(d));
    const double rho = spearman(deg_d, rep.scores);

    // Star probe: the center must dominate the leaf average in almost every
    // freshly initialized trial.
    Rng star_rng(77);
    std::vector<std::pair<int, int>> star_edges;
    for (int leaf = 1; leaf <= 8; ++leaf) star_edges.emplace_back(0, leaf);
    Graph star = graph_from_edges(9, 2, 3, star_edges, star_rng);
    std::vector<int> leaves;
    for (int leaf = 1; leaf <= 8; ++leaf) leaves.push_back(leaf);
    SplitMasks star_masks = masks_with_train(9, leaves);
    InfluenceConfig star_cfg;
    star_cfg.hidden_dim = 8;
    star_cfg.out_dim = 8;
    star_cfg.repetitions = 6;
    star_cfg.trials = 1;  // one fresh initialization per trial
    int wins = 0;
    for (uint64_t s = 0; s < 20; ++s) {
      star_cfg.seed = s;
      InfluenceReport r = influence_scores(star, star_masks, star_cfg);
      double leaf_mean = 0.0;
      for (int leaf = 1; leaf <= 8; ++leaf)
        leaf_mean += r.scores[static_cast<size_t>(leaf)];
      leaf_mean /= 8.0;
      wins += r.scores[0] > leaf_mean;
    }
    report(7, rho > kSpearmanMin && wins >= kStarWinsMin,
           "degree/influence Spearman " + fmt2(rho) + " (need > " +
               fmt2(kSpearmanMin) + ") on a " +
               std::to_string(sub.num_nodes) + "-node subsample; star center wins " +
               std::to_string(wins) + "/20 (need >= " +
               std::to_string(kStarWinsMin) + ")");
  } catch (const std::exception& e) {
    report(7, false, std::string("influence diagnostics failed: ") + e.what());
  }

  // Criterion 8: property suites.
  try {
    progress("property suites");
    Rng rng(90);
    const double worst_grad =
        std::max({grad_check_plain(rng), grad_check_degree_specific(rng),
                  grad_check_generator(rng), grad_check_teacher_elbo(rng)});
    const auto [graphs, mismatches] = propagation_enumeration();
    const double reduce = reduction_to_plain(rng);
    const double grouped = grouped_vs_per_node(rng);
    const double step_gap = step_reduction_to_descent(rng);
    std::pair<double, double> c_split = {1.0, 0.0};
    if (cora_ok) {
      GraphContext ctx = GraphContext::build(cora, cora_config.d_max);
      c_split = teacher_uncertainty_split(cora, ctx, cora_config);
    }

    const bool ok = worst_grad < kGradTol && graphs == kConnectedGraphsUpTo6 &&
                    mismatches == 0 && reduce <= kExactTol &&
                    grouped <= kExactTol && step_gap <= kExactTol &&
                    c_split.first < c_split.second;
    report(8, ok,
           "grad checks worst " + fmte(worst_grad) + " (< " + fmte(kGradTol) +
               "); propagation matches oracle on " + std::to_string(graphs) +
               "/" + std::to_string(kConnectedGraphsUpTo6) + " graphs with " +
               std::to_string(mismatches) + " mismatches; bank-off reduction " +
               fmte(reduce) + "; grouped-vs-per-node " + fmte(grouped) +
               "; uniform-step finetune vs descent " + fmte(step_gap) +
               " (<= " + fmte(kExactTol) + "); teacher uncertainty labeled " +
               fmte(c_split.first) + " < unlabeled " + fmte(c_split.second));
  } catch (const std::exception& e) {
    report(8, false, std::string("property suites failed: ") + e.what());
  }

  if (g_failures) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
