#include "sldsgcn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "sldsgcn/csr.hpp"
#include "sldsgcn/errors.hpp"
#include "sldsgcn/layers.hpp"
#include "sldsgcn/rng.hpp"

namespace sldsgcn {
namespace {

int bucket_of(int degree, int d_max) {
  return degree <= d_max ? degree : d_max + 1;
}

}  // namespace

std::map<int, int> degree_distribution(const Graph& g) {
  std::map<int, int> hist;
  for (int i = 0; i < g.num_nodes; ++i) ++hist[g.degree(i)];
  return hist;
}

std::map<int, LabeledNeighborEntry> labeled_neighbor_ratio(
    const Graph& g, const SplitMasks& masks) {
  std::map<int, LabeledNeighborEntry> out;
  for (int i = 0; i < g.num_nodes; ++i) {
    LabeledNeighborEntry& e = out[g.degree(i)];
    ++e.node_count;
    for (int p = g.row_ptr[static_cast<size_t>(i)];
         p < g.row_ptr[static_cast<size_t>(i) + 1]; ++p) {
      if (masks.train[static_cast<size_t>(g.col_idx[static_cast<size_t>(p)])]) {
        ++e.with_labeled_neighbor;
        break;
      }
    }
  }
  for (auto& [deg, e] : out)
    e.ratio = static_cast<double>(e.with_labeled_neighbor) / e.node_count;
  return out;
}

DegreeBucketStats error_by_degree(const std::vector<int>& predicted,
                                  const std::vector<int>& labels,
                                  const std::vector<uint8_t>& test_mask,
                                  const std::vector<int>& degree, int d_max) {
  if (predicted.size() != labels.size() || labels.size() != test_mask.size() ||
      test_mask.size() != degree.size())
    throw DimensionError("error_by_degree inputs must align");
  DegreeBucketStats stats;
  stats.d_max = d_max;
  const size_t buckets = static_cast<size_t>(d_max) + 2;
  stats.counts.assign(buckets, 0);
  stats.errors.assign(buckets, 0);
  stats.rates.assign(buckets, -1.0);
  for (size_t i = 0; i < predicted.size(); ++i) {
    if (!test_mask[i]) continue;
    const size_t b = static_cast<size_t>(bucket_of(degree[i], d_max));
    ++stats.counts[b];
    stats.errors[b] += predicted[i] != labels[i];
  }
  for (size_t b = 0; b < buckets; ++b)
    if (stats.counts[b] > 0)
      stats.rates[b] = static_cast<double>(stats.errors[b]) / stats.counts[b];
  return stats;
}

InfluenceReport influence_scores(const Graph& g, const SplitMasks& masks,
                                 const InfluenceConfig& config) {
  if (config.trials < 1) throw ContractError("influence trials must be >= 1");
  if (config.repetitions < 1)
    throw ContractError("influence repetitions must be >= 1");
  const int n = g.num_nodes;
  const int hidden = config.hidden_dim;

  const CsrMatrix a_hat = normalized_adjacency(g, /*add_self_loops=*/true);
  const CsrMatrix x = CsrMatrix::from_dense(g.features);

  Rng rng(Rng::derive(config.seed, "influence"));
  InfluenceReport report;
  report.trials = config.trials;
  report.repetitions = config.repetitions;
  report.scores.assign(static_cast<size_t>(n), 0.0);

  // Per-(node, rep) accumulators, reset via touched lists to stay O(work).
  Eigen::MatrixXd s_acc = Eigen::MatrixXd::Zero(hidden, n);
  std::vector<char> s_touched(static_cast<size_t>(n), 0);
  std::vector<int> s_list;
  std::vector<double> sumsq(static_cast<size_t>(n), 0.0);
  std::vector<char> k_touched(static_cast<size_t>(n), 0);
  std::vector<int> k_list;

  for (int trial = 0; trial < config.trials; ++trial) {
    Eigen::MatrixXd w0 = glorot_uniform(g.num_features, hidden, rng);
    Eigen::MatrixXd w1 = glorot_uniform(hidden, config.out_dim, rng);
    // Pre-activation of the first convolution fixes the relu masks reached
    // by every backward pass of this trial.
    Eigen::MatrixXd z = a_hat.multiply(x.multiply(w0));
    Eigen::MatrixXd mask =
        (z.array() > 0.0).cast<double>().matrix();  // n x hidden
    Eigen::MatrixXd g0 = w0.transpose() * w0;       // Gram of the input layer

    // One set of unit cotangents per trial, shared across nodes; each
    // estimate stays unbiased and the draws stay deterministic.
    std::vector<Eigen::VectorXd> v(static_cast<size_t>(config.repetitions));
    for (auto& vr : v) {
      Eigen::VectorXd u(config.out_dim);
      for (int t = 0; t < config.out_dim; ++t) u(t) = rng.normal();
      const double norm = u.norm();
      u = norm > 0.0 ? Eigen::VectorXd(u / norm) : u;
      vr = w1 * u;  // adjoint entering the hidden layer
    }

    for (int i = 0; i < n; ++i) {
      k_list.clear();
      for (int rep = 0; rep < config.repetitions; ++rep) {
        s_list.clear();
        // Adjoint of node i's output w.r.t. hidden rows j, masked by relu,
        // then pushed one more hop to feature rows k. Only training rows k
        // contribute to the score, so others are skipped outright.
        for (int pj = a_hat.row_ptr[static_cast<size_t>(i)];
             pj < a_hat.row_ptr[static_cast<size_t>(i) + 1]; ++pj) {
          const int j = a_hat.col_idx[static_cast<size_t>(pj)];
          const double aij = a_hat.values[static_cast<size_t>(pj)];
          Eigen::VectorXd cj =
              aij * v[static_cast<size_t>(rep)].cwiseProduct(
                        mask.row(j).transpose());
          for (int pk = a_hat.row_ptr[static_cast<size_t>(j)];
               pk < a_hat.row_ptr[static_cast<size_t>(j) + 1]; ++pk) {
            const int k = a_hat.col_idx[static_cast<size_t>(pk)];
            if (!masks.train[static_cast<size_t>(k)]) continue;
            if (!s_touched[static_cast<size_t>(k)]) {
              s_touched[static_cast<size_t>(k)] = 1;
              s_list.push_back(k);
              s_acc.col(k).setZero();
            }
            s_acc.col(k) += a_hat.values[static_cast<size_t>(pk)] * cj;
          }
        }
        for (int k : s_list) {
          // |u^T J_ik|^2 through the Gram matrix of W0: the feature-space
          // row never materializes.
          const double q = s_acc.col(k).dot(g0 * s_acc.col(k));
          if (!k_touched[static_cast<size_t>(k)]) {
            k_touched[static_cast<size_t>(k)] = 1;
            k_list.push_back(k);
            sumsq[static_cast<size_t>(k)] = 0.0;
          }
          sumsq[static_cast<size_t>(k)] += q;
          s_touched[static_cast<size_t>(k)] = 0;
        }
      }
      double s_i = 0.0;
      for (int k : k_list) {
        const double mean_sq =
            sumsq[static_cast<size_t>(k)] / config.repetitions;
        s_i += std::sqrt(static_cast<double>(config.out_dim) * mean_sq);
        k_touched[static_cast<size_t>(k)] = 0;
      }
      report.scores[static_cast<size_t>(i)] +=
          s_i / static_cast<double>(config.trials);
    }
  }
  return report;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DimensionError("spearman inputs must align");
  const size_t n = x.size();
  if (n < 2) return 0.0;

  auto ranks = [n](const std::vector<double>& v) {
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    size_t i = 0;
    while (i < n) {
      size_t j = i;
      while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
      for (size_t t = i; t <= j; ++t) r[order[t]] = avg;
      i = j + 1;
    }
    return r;
  };

  const std::vector<double> rx = ranks(x), ry = ranks(y);
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double cov = 0.0, vx = 0.0, vy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    cov += (rx[i] - mx) * (ry[i] - my);
    vx += (rx[i] - mx) * (rx[i] - mx);
    vy += (ry[i] - my) * (ry[i] - my);
  }
  if (vx == 0.0 || vy == 0.0) return 0.0;
  return cov / std::sqrt(vx * vy);
}

void write_degree_distribution(const std::string& path,
                               const std::map<int, int>& hist) {
  std::ofstream f(path);
  if (!f) throw LoadError("cannot open for writing: " + path);
  f << "degree,count\n";
  for (const auto& [deg, count] : hist) f << deg << "," << count << "\n";
}

void write_labeled_neighbor_ratio(
    const std::string& path,
    const std::map<int, LabeledNeighborEntry>& ratios) {
  std::ofstream f(path);
  if (!f) throw LoadError("cannot open for writing: " + path);
  f << "degree,node_count,with_labeled_neighbor,ratio\n";
  for (const auto& [deg, e] : ratios)
    f << deg << "," << e.node_count << "," << e.with_labeled_neighbor << ","
      << e.ratio << "\n";
}

void write_error_by_degree(const std::string& path,
                           const DegreeBucketStats& stats) {
  std::ofstream f(path);
  if (!f) throw LoadError("cannot open for writing: " + path);
  f << "bucket,count,errors,error_rate\n";
  for (size_t b = 0; b < stats.counts.size(); ++b) {
    const std::string name = b <= static_cast<size_t>(stats.d_max)
                                 ? std::to_string(b)
                                 : ">" + std::to_string(stats.d_max);
    f << name << "," << stats.counts[b] << "," << stats.errors[b] << ",";
    if (stats.counts[b] > 0) f << stats.rates[b];
    f << "\n";
  }
}

void write_influence(const std::string& path, const Graph& g,
                     const InfluenceReport& report) {
  std::ofstream f(path);
  if (!f) throw LoadError("cannot open for writing: " + path);
  f << "node_id,degree,score\n";
  for (size_t i = 0; i < report.scores.size(); ++i)
    f << i << "," << g.degree(static_cast<int>(i)) << "," << report.scores[i]
      << "\n";
}

}  // namespace sldsgcn
