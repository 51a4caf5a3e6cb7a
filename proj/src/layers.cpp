#include "sldsgcn/layers.hpp"

#include <algorithm>
#include <cmath>

#include "sldsgcn/errors.hpp"

namespace sldsgcn {
namespace {

Tensor apply_activation(Tape& tape, const Tensor& z, Activation act) {
  switch (act) {
    case Activation::relu:
      return tape.relu(z);
    case Activation::identity:
      return z;
  }
  throw ConfigError("unknown activation");
}

int degree_bank_index(int degree, int d_max) {
  if (degree < 0) throw ContractError("negative degree");
  if (degree == 0) return 0;
  return std::min(degree, d_max + 1);
}

// Low-rank affine map P * (Qt * H) + B used by every cell gate.
Tensor low_rank_affine(Tape& tape, const Tensor& p, const Tensor& qt,
                       const Tensor& bias, const Tensor& h) {
  return tape.add(tape.matmul(p, tape.matmul(qt, h)), bias);
}

}  // namespace

Eigen::MatrixXd glorot_uniform(int rows, int cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-limit, limit);
  return m;
}

Tensor gcn_forward(Tape& tape, const GcnLayer& layer, const CsrMatrix& a_hat,
                   const Tensor& h) {
  Tensor z = tape.matmul(h, layer.weight);
  Tensor agg = tape.sparse_dense_matmul(a_hat, z);
  return apply_activation(tape, agg, layer.activation);
}

RecurrentCell RecurrentCell::create(CellKind kind, int state_rows,
                                    int state_cols, int rank, Rng& rng) {
  if (state_rows <= 0 || state_cols <= 0 || rank <= 0)
    throw ConfigError("recurrent cell dimensions must be positive");
  RecurrentCell cell;
  cell.kind = kind;
  cell.state_rows = state_rows;
  cell.state_cols = state_cols;
  cell.rank = std::min(rank, state_rows);

  // Small projections keep the first unrolled states close to the seed so
  // early training behaves like a shared-weight network.
  const double scale = 0.05;
  auto proj = [&](int r, int c) {
    Eigen::MatrixXd m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = rng.uniform(-scale, scale);
    return m;
  };
  auto make_gate = [&](double bias_value) {
    Gate g;
    g.p = Tensor::parameter(proj(state_rows, cell.rank));
    g.qt = Tensor::parameter(proj(cell.rank, state_rows));
    g.bias = Tensor::parameter(
        Eigen::MatrixXd::Constant(state_rows, state_cols, bias_value));
    return g;
  };

  if (kind == CellKind::elman) {
    Gate g = make_gate(0.0);
    cell.p = g.p;
    cell.qt = g.qt;
    cell.bias = g.bias;
  } else {
    cell.input_gate = make_gate(0.0);
    // Positive forget bias keeps early memory instead of flushing it.
    cell.forget_gate = make_gate(1.0);
    cell.output_gate = make_gate(0.0);
    cell.candidate = make_gate(0.0);
  }
  return cell;
}

Tensor RecurrentCell::step(Tape& tape, const Tensor& h,
                           Tensor* cell_state) const {
  if (h.value().rows() != state_rows || h.value().cols() != state_cols)
    throw DimensionError("cell state shape mismatch");
  if (kind == CellKind::elman) {
    return tape.tanh(tape.add(h, low_rank_affine(tape, p, qt, bias, h)));
  }
  if (cell_state == nullptr)
    throw ContractError("lstm cell requires a threaded memory state");
  Tensor i = tape.sigmoid(low_rank_affine(tape, input_gate.p, input_gate.qt,
                                          input_gate.bias, h));
  Tensor f = tape.sigmoid(low_rank_affine(tape, forget_gate.p, forget_gate.qt,
                                          forget_gate.bias, h));
  Tensor o = tape.sigmoid(low_rank_affine(tape, output_gate.p, output_gate.qt,
                                          output_gate.bias, h));
  Tensor g = tape.tanh(
      low_rank_affine(tape, candidate.p, candidate.qt, candidate.bias, h));
  Tensor c = tape.add(tape.elementwise_mul(f, *cell_state),
                      tape.elementwise_mul(i, g));
  *cell_state = c;
  return tape.elementwise_mul(o, tape.tanh(c));
}

std::vector<std::pair<std::string, Tensor>> RecurrentCell::named_parameters(
    const std::string& prefix) const {
  std::vector<std::pair<std::string, Tensor>> out;
  auto push_gate = [&](const std::string& name, const Tensor& gp,
                       const Tensor& gqt, const Tensor& gb) {
    out.emplace_back(prefix + name + ".p", gp);
    out.emplace_back(prefix + name + ".qt", gqt);
    out.emplace_back(prefix + name + ".bias", gb);
  };
  if (kind == CellKind::elman) {
    push_gate("cell", p, qt, bias);
  } else {
    push_gate("cell.input", input_gate.p, input_gate.qt, input_gate.bias);
    push_gate("cell.forget", forget_gate.p, forget_gate.qt, forget_gate.bias);
    push_gate("cell.output", output_gate.p, output_gate.qt, output_gate.bias);
    push_gate("cell.candidate", candidate.p, candidate.qt, candidate.bias);
  }
  return out;
}

int DegreeWeightBank::index_for_degree(int degree) const {
  return degree_bank_index(degree, d_max);
}

const Tensor& DegreeWeightBank::weight_at(int index) const {
  if (index == 0) return seed;
  if (index < 1 || index > static_cast<int>(entries.size()))
    throw ContractError("weight bank index out of range");
  return entries[static_cast<size_t>(index - 1)];
}

DegreeWeightBank generate_weight_bank(Tape& tape, const Tensor& seed,
                                      const RecurrentCell& cell, int d_max) {
  if (d_max < 0) throw ConfigError("d_max must be non-negative");
  DegreeWeightBank bank;
  bank.d_max = d_max;
  bank.seed = seed;
  bank.entries.reserve(static_cast<size_t>(d_max) + 1);
  Tensor state = seed;
  Tensor memory = Tensor::constant(
      Eigen::MatrixXd::Zero(seed.value().rows(), seed.value().cols()));
  for (int k = 0; k <= d_max; ++k) {
    state = cell.step(tape, state, &memory);
    bank.entries.push_back(state);
  }
  return bank;
}

Tensor dsgcn_forward(Tape& tape, const DegreeWeightBank& bank,
                     const Tensor& shared_weight, const CsrMatrix& a_hat,
                     const Tensor& h, const std::vector<int>& degree,
                     Activation activation, DegreeIndexMode mode) {
  const int n = static_cast<int>(h.value().rows());
  if (static_cast<int>(degree.size()) != n)
    throw DimensionError("degree vector length does not match row count");
  if (a_hat.rows != n)
    throw DimensionError("adjacency size does not match row count");

  // Group rows by bank index so each group shares one combined weight.
  std::vector<std::vector<int>> groups(static_cast<size_t>(bank.d_max) + 2);
  for (int i = 0; i < n; ++i)
    groups[static_cast<size_t>(bank.index_for_degree(degree[i]))].push_back(i);

  // neighbor mode transforms rows first (each by its own degree weight) and
  // aggregates after; center mode aggregates first and transforms each
  // output row by the receiving node's degree weight.
  Tensor base =
      mode == DegreeIndexMode::neighbor ? h : tape.sparse_dense_matmul(a_hat, h);

  Tensor combined;
  bool have = false;
  for (size_t k = 0; k < groups.size(); ++k) {
    if (groups[k].empty()) continue;
    Tensor weight = tape.add(shared_weight, bank.weight_at(static_cast<int>(k)));
    Tensor rows = tape.gather_rows(base, groups[k]);
    Tensor transformed = tape.matmul(rows, weight);
    Tensor placed = tape.scatter_rows(transformed, groups[k], n);
    combined = have ? tape.add(combined, placed) : placed;
    have = true;
  }
  if (!have) throw ContractError("dsgcn_forward on empty input");

  Tensor out = mode == DegreeIndexMode::neighbor
                   ? tape.sparse_dense_matmul(a_hat, combined)
                   : combined;
  return apply_activation(tape, out, activation);
}

GraphContext GraphContext::build(const Graph& g, int d_max,
                                 bool add_self_loops) {
  if (d_max < 0) throw ConfigError("d_max must be non-negative");
  GraphContext ctx;
  ctx.graph = &g;
  ctx.a_hat = normalized_adjacency(g, add_self_loops);
  ctx.degree = degrees(g);
  ctx.features = Tensor::constant(g.features);
  ctx.x = CsrMatrix::from_dense(g.features);
  ctx.xt = ctx.x.transposed();
  ctx.d_max = d_max;

  ctx.buckets.assign(static_cast<size_t>(d_max) + 2, {});
  for (int i = 0; i < g.num_nodes; ++i)
    ctx.buckets[static_cast<size_t>(degree_bank_index(ctx.degree[i], d_max))]
        .push_back(i);

  // Per-bucket feature views: same shape as X with rows outside the bucket
  // emptied. Splitting the sparse rows this way keeps the degree-specific
  // first layer at the cost of one sparse feature product overall.
  ctx.x_bucket.resize(ctx.buckets.size());
  ctx.x_bucket_t.resize(ctx.buckets.size());
  for (size_t k = 0; k < ctx.buckets.size(); ++k) {
    CsrMatrix m;
    m.rows = ctx.x.rows;
    m.cols = ctx.x.cols;
    m.row_ptr.assign(static_cast<size_t>(m.rows) + 1, 0);
    if (!ctx.buckets[k].empty()) {
      std::vector<char> in_bucket(static_cast<size_t>(m.rows), 0);
      for (int i : ctx.buckets[k]) in_bucket[static_cast<size_t>(i)] = 1;
      for (int i = 0; i < m.rows; ++i) {
        if (in_bucket[static_cast<size_t>(i)]) {
          for (int p = ctx.x.row_ptr[static_cast<size_t>(i)];
               p < ctx.x.row_ptr[static_cast<size_t>(i) + 1]; ++p) {
            m.col_idx.push_back(ctx.x.col_idx[static_cast<size_t>(p)]);
            m.values.push_back(ctx.x.values[static_cast<size_t>(p)]);
          }
        }
        m.row_ptr[static_cast<size_t>(i) + 1] =
            static_cast<int>(m.col_idx.size());
      }
    }
    ctx.x_bucket_t[k] = m.transposed();
    ctx.x_bucket[k] = std::move(m);
  }
  return ctx;
}

StudentNetwork::StudentNetwork(const StudentConfig& config) : config_(config) {
  if (config.in_dim <= 0 || config.hidden_dim <= 0 || config.out_dim <= 0)
    throw ConfigError("student dimensions must be positive");
  Rng rng(Rng::derive(config.init_seed, "init"));

  auto make_layer = [&](int in_dim, int out_dim) {
    LayerParams layer;
    layer.shared = Tensor::parameter(glorot_uniform(in_dim, out_dim, rng));
    if (config.degree_specific) {
      // The seed starts an order of magnitude below the shared weight, so the
      // degree-specific network begins as a plain convolution and learns only
      // the per-degree corrections the labels actually support.
      layer.seed =
          Tensor::parameter(0.1 * glorot_uniform(in_dim, out_dim, rng));
      layer.cell =
          RecurrentCell::create(config.cell, in_dim, out_dim, config.rank, rng);
    }
    return layer;
  };
  layer1_ = make_layer(config.in_dim, config.hidden_dim);
  layer2_ = make_layer(config.hidden_dim, config.out_dim);
}

Tensor StudentNetwork::layer_forward(Tape& tape, const GraphContext& ctx,
                                     const LayerParams& params, const Tensor& h,
                                     bool sparse_input, Activation act) const {
  if (!config_.degree_specific) {
    Tensor z = sparse_input ? tape.sparse_dense_matmul(ctx.x, ctx.xt, params.shared)
                            : tape.matmul(h, params.shared);
    return apply_activation(tape, tape.sparse_dense_matmul(ctx.a_hat, z), act);
  }

  DegreeWeightBank bank =
      generate_weight_bank(tape, params.seed, params.cell, config_.d_max);

  if (config_.degree_index == DegreeIndexMode::center || !sparse_input) {
    // center mode reorders transform and aggregation, so the sparse
    // row-bucket shortcut below does not apply; fall back to the grouped
    // dense evaluation.
    const Tensor& input = sparse_input ? ctx.features : h;
    return dsgcn_forward(tape, bank, params.shared, ctx.a_hat, input,
                         ctx.degree, act, config_.degree_index);
  }

  // Sparse fast path: X split by degree bucket, each slice hitting its own
  // combined weight. Equivalent to dsgcn_forward on dense features.
  Tensor combined;
  bool have = false;
  for (size_t k = 0; k < ctx.buckets.size(); ++k) {
    if (ctx.buckets[k].empty()) continue;
    Tensor weight =
        tape.add(params.shared, bank.weight_at(static_cast<int>(k)));
    Tensor placed =
        tape.sparse_dense_matmul(ctx.x_bucket[k], ctx.x_bucket_t[k], weight);
    combined = have ? tape.add(combined, placed) : placed;
    have = true;
  }
  if (!have) throw ContractError("student forward on empty graph");
  return apply_activation(tape, tape.sparse_dense_matmul(ctx.a_hat, combined),
                          act);
}

StudentNetwork::Forward StudentNetwork::forward(Tape& tape,
                                                const GraphContext& ctx) const {
  if (ctx.graph == nullptr) throw ContractError("graph context not built");
  if (ctx.graph->num_features != config_.in_dim ||
      ctx.graph->num_classes != config_.out_dim)
    throw DimensionError("graph does not match student dimensions");
  if (config_.degree_specific && ctx.d_max != config_.d_max)
    throw ContractError("graph context built with a different d_max");

  Forward out;
  out.representations = layer_forward(tape, ctx, layer1_, ctx.features,
                                      /*sparse_input=*/true, Activation::relu);
  Tensor logits =
      layer_forward(tape, ctx, layer2_, out.representations,
                    /*sparse_input=*/false, Activation::identity);
  out.predictions = tape.row_softmax(logits);
  return out;
}

StudentNetwork::Forward StudentNetwork::predict(const GraphContext& ctx) const {
  Tape tape;
  return forward(tape, ctx);
}

std::vector<Tensor> StudentNetwork::parameters() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

std::vector<std::pair<std::string, Tensor>> StudentNetwork::named_parameters()
    const {
  std::vector<std::pair<std::string, Tensor>> out;
  auto push_layer = [&](const std::string& prefix, const LayerParams& layer) {
    out.emplace_back(prefix + "shared", layer.shared);
    if (config_.degree_specific) {
      out.emplace_back(prefix + "seed", layer.seed);
      for (auto& named : layer.cell.named_parameters(prefix))
        out.push_back(named);
    }
  };
  push_layer("layer1.", layer1_);
  push_layer("layer2.", layer2_);
  return out;
}

}  // namespace sldsgcn
