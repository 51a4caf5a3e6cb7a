#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sldsgcn/graph.hpp"
#include "sldsgcn/rng.hpp"
#include "sldsgcn/tensor.hpp"

namespace sldsgcn {

enum class Activation { relu, identity };

/// Glorot-style uniform init over +-sqrt(6 / (rows + cols)).
Eigen::MatrixXd glorot_uniform(int rows, int cols, Rng& rng);

/// Plain graph convolution: activation(A_hat * H * W).
struct GcnLayer {
  Tensor weight;  // in_dim x out_dim
  Activation activation = Activation::relu;
};

Tensor gcn_forward(Tape& tape, const GcnLayer& layer, const CsrMatrix& a_hat,
                   const Tensor& h);

enum class CellKind { elman, lstm };

/// Recurrence over a weight-matrix state, iterated once per degree value.
/// The state update mixes rows through a rank-limited map so the trainable
/// parameter count stays far below a dense recurrence over the flattened
/// weight:
///   elman: H' = tanh(H + P * (Qt * H) + B)
///   lstm:  gate(H) = P_g * (Qt_g * H) + B_g for each of i, f, o, g;
///          C' = sigm(f) .* C + sigm(i) .* tanh(g); H' = sigm(o) .* tanh(C')
struct RecurrentCell {
  CellKind kind = CellKind::elman;
  int state_rows = 0;
  int state_cols = 0;
  int rank = 8;

  Tensor p, qt, bias;  // elman
  struct Gate {
    Tensor p, qt, bias;
  };
  Gate input_gate, forget_gate, output_gate, candidate;  // lstm

  static RecurrentCell create(CellKind kind, int state_rows, int state_cols,
                              int rank, Rng& rng);

  /// One state update on the tape. For the lstm kind, cell_state threads
  /// the memory between steps (pass zeros initially).
  Tensor step(Tape& tape, const Tensor& h, Tensor* cell_state) const;

  std::vector<std::pair<std::string, Tensor>> named_parameters(
      const std::string& prefix) const;
};

/// The per-degree weight matrices of one layer. The seed W_0 serves
/// degree-0 nodes; generated entries W_1 .. W_{d_max+1} serve degrees
/// 1 .. d_max, with everything above d_max clamped to the final entry.
struct DegreeWeightBank {
  int d_max = 0;
  Tensor seed;                   // W_0
  std::vector<Tensor> entries;   // W_1 .. W_{d_max+1}

  /// Bank index for a raw degree: 0 for degree 0, min(d, d_max+1) otherwise.
  int index_for_degree(int degree) const;

  /// Weight at a bank index (0 = seed).
  const Tensor& weight_at(int index) const;
};

/// Unrolls the cell d_max+1 times from the seed, recording every step on
/// the tape so gradients reach both the seed and the cell parameters.
/// Regeneration with identical parameters is bit-identical.
DegreeWeightBank generate_weight_bank(Tape& tape, const Tensor& seed,
                                      const RecurrentCell& cell, int d_max);

/// Which node's degree selects the degree-specific weight for an edge
/// contribution: the source neighbor j (default) or the receiving node i.
enum class DegreeIndexMode { neighbor, center };

/// Degree-specific convolution:
///   x_i' = act( sum_{j in N(i) u {i}} a_ij (W + W_{d(j)}) x_j )
/// evaluated in grouped form: rows of H are transformed by their own
/// degree's weight, then aggregated through a_hat.
Tensor dsgcn_forward(Tape& tape, const DegreeWeightBank& bank,
                     const Tensor& shared_weight, const CsrMatrix& a_hat,
                     const Tensor& h, const std::vector<int>& degree,
                     Activation activation,
                     DegreeIndexMode mode = DegreeIndexMode::neighbor);

/// Everything derived from one graph that model code reuses across epochs:
/// normalized adjacency, degrees, sparse feature views and the per-degree
/// row buckets. Immutable after build; shared freely between runs.
struct GraphContext {
  const Graph* graph = nullptr;
  CsrMatrix a_hat;
  std::vector<int> degree;
  Tensor features;  // dense constant
  CsrMatrix x, xt;  // sparse feature views
  int d_max = 0;
  std::vector<std::vector<int>> buckets;  // node ids per bank index
  std::vector<CsrMatrix> x_bucket, x_bucket_t;

  static GraphContext build(const Graph& g, int d_max,
                            bool add_self_loops = true);
};

struct StudentConfig {
  int in_dim = 0;
  int hidden_dim = 16;
  int out_dim = 0;
  bool degree_specific = true;
  int d_max = 10;
  int rank = 8;
  CellKind cell = CellKind::elman;
  DegreeIndexMode degree_index = DegreeIndexMode::neighbor;
  uint64_t init_seed = 0;
};

/// Two-layer student: a representation learner (one degree-specific layer,
/// relu) followed by a classifier head (one degree-specific layer plus row
/// softmax). With degree_specific off both layers reduce to plain GCN
/// layers sharing the same shapes.
class StudentNetwork {
 public:
  explicit StudentNetwork(const StudentConfig& config);

  struct Forward {
    Tensor representations;  // N x hidden_dim
    Tensor predictions;      // N x out_dim, rows sum to 1
  };

  /// Full forward pass on the tape. Weight banks are rematerialized on
  /// every call so gradients reach the cell parameters.
  Forward forward(Tape& tape, const GraphContext& ctx) const;

  /// Forward pass without keeping a caller-visible tape.
  Forward predict(const GraphContext& ctx) const;

  std::vector<Tensor> parameters() const;
  std::vector<std::pair<std::string, Tensor>> named_parameters() const;
  const StudentConfig& config() const { return config_; }

 private:
  struct LayerParams {
    Tensor shared;
    Tensor seed;          // degree-specific only
    RecurrentCell cell;   // degree-specific only
  };

  Tensor layer_forward(Tape& tape, const GraphContext& ctx,
                       const LayerParams& params, const Tensor& h,
                       bool sparse_input, Activation act) const;

  StudentConfig config_;
  LayerParams layer1_, layer2_;
};

}  // namespace sldsgcn
