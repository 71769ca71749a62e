#pragma once

#include "matn/interactions.hpp"
#include "matn/numerics.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace matn {

enum class Activation : std::uint32_t { kRelu = 0 };

// Hyperparameters plus ablation switches. Defaults: d=16, 2 heads, 8 memories,
// depth 3, Adam at 1e-3 with a 0.96 per-epoch decay, batches of 32.
struct TrainConfig {
  std::size_t dim = 16;
  std::size_t heads = 2;
  std::size_t memories = 8;
  std::size_t depth = 3;
  std::size_t samples = 1;  // positives (= negatives) per user per step
  double learning_rate = 1e-3;
  double lr_decay = 0.96;
  double reg = 0.01;
  std::size_t batch_size = 32;
  std::size_t epochs = 20;
  Activation activation = Activation::kRelu;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  NegativeRule train_negatives = NegativeRule::kTargetOnly;

  bool disable_transformer = false;  // MATN-T
  bool disable_memory = false;       // MATN-M
  bool mean_pool_gate = false;       // MATN-G
  bool raw_attention_weights = false;
  bool mean_project = false;

  // Throws Error describing the first violated constraint.
  void validate() const;

  bool operator==(const TrainConfig&) const = default;
};

struct ModelShape {
  std::size_t dim = 0;
  std::size_t heads = 0;
  std::size_t memories = 0;
  std::size_t depth = 0;
  std::size_t behaviors = 0;
  std::size_t items = 0;

  std::size_t head_dim() const { return dim / heads; }
  bool operator==(const ModelShape&) const = default;
};

struct AttentionHead {
  DenseMatrix query;  // (d/H) x d
  DenseMatrix key;
  DenseMatrix value;
};

struct FeedForwardLayer {
  DenseMatrix weight;  // d x d
  Vector bias;         // d
};

// Every learnable array. Item embeddings live in two tables: `projection`
// (d x J, column j is item j's input embedding) and `item_table` (J x d, row j
// is item j's scoring embedding).
struct ModelParams {
  ModelShape shape;
  DenseMatrix projection;
  std::vector<AttentionHead> heads;
  std::vector<DenseMatrix> memories;  // M matrices, d x d
  DenseMatrix memory_key;             // M x d
  Vector memory_bias;                 // M
  Vector gate;                        // L (one logit per behavior)
  std::vector<FeedForwardLayer> feed_forward;
  DenseMatrix item_table;

  // Glorot-uniform matrices, zero biases and gate logits.
  static ModelParams init(const ModelShape& shape, Rng& rng);
  // All zeros. Without tables, projection/item_table are 0 x 0.
  static ModelParams zeros(const ModelShape& shape, bool with_tables = true);

  std::vector<TensorView> tensors();
  std::vector<ConstTensorView> tensors() const;

  bool operator==(const ModelParams& other) const;
};

ModelShape make_shape(const TrainConfig& config, std::size_t behaviors,
                      std::size_t items);

// Per-user activations kept for backpropagation and weight export.
struct ForwardTrace {
  Index user = 0;
  std::vector<std::vector<Index>> behavior_items;  // [l], copied from tensor
  std::vector<double> projection_scale;            // [l], 1 unless mean_project

  std::vector<Vector> x_tilde;  // [l]
  // Per head: L x (d/H) query/key/value rows and the L x L weights used in
  // the value mix (row-softmaxed unless raw_attention_weights).
  std::vector<DenseMatrix> queries, keys, values;
  std::vector<DenseMatrix> attn_weights;
  std::vector<Vector> y;        // [l]
  std::vector<Vector> y_tilde;  // [l]
  DenseMatrix mem_pre;          // M x L, before ReLU
  DenseMatrix mem_weights;      // M x L, after ReLU
  std::vector<Vector> z;        // [l]
  Vector gate_weights;          // L
  Vector psi;
  std::vector<Vector> ff_pre;     // [n], n = 1..N
  std::vector<Vector> ff_hidden;  // [n], n = 0..N (h_0 = psi)
  Vector gamma;
};

// Sum of V's columns over the user's items for each behavior (optionally
// divided by the item count).
std::vector<Vector> project_user(const InteractionTensor& tensor, Index user,
                                 const ModelParams& params,
                                 bool mean_project = false);

struct AttentionOutput {
  std::vector<Vector> y;
  std::vector<DenseMatrix> weights;  // [h] L x L
  std::vector<DenseMatrix> queries, keys, values;
};
AttentionOutput behavior_attention(const std::vector<Vector>& x_tilde,
                                   const ModelParams& params,
                                   bool raw_weights = false);

std::vector<Vector> residual_combine(const std::vector<Vector>& x_tilde,
                                     const std::vector<Vector>& y);

struct MemoryOutput {
  std::vector<Vector> z;
  DenseMatrix pre;      // M x L
  DenseMatrix weights;  // M x L
};
MemoryOutput memory_recalibrate(const std::vector<Vector>& y_tilde,
                                const ModelParams& params);

struct GateOutput {
  Vector psi;
  Vector weights;
};
GateOutput aggregate_gate(const std::vector<Vector>& z,
                          const ModelParams& params, const TrainConfig& config);

struct FeatureOutput {
  Vector gamma;
  std::vector<Vector> pre;
  std::vector<Vector> hidden;
};
FeatureOutput extract_features(const Vector& psi, const ModelParams& params,
                               const TrainConfig& config);

double score(const Vector& gamma, Index item, const ModelParams& params);

ForwardTrace forward(const InteractionTensor& tensor, Index user,
                     const ModelParams& params, const TrainConfig& config);

// d(loss)/d(gamma) and d(loss)/d(P_j) for each scored item.
struct Upstream {
  Vector gamma;
  std::vector<std::pair<Index, Vector>> item_rows;
};

// Gradient of one user's computation. Dense parts share ModelParams layout
// with empty tables; the two item tables are kept sparse.
struct UserGradient {
  ModelParams core;
  std::vector<std::pair<Index, Vector>> projection_columns;
  std::vector<std::pair<Index, Vector>> item_rows;

  // Adds this gradient into a full-shape accumulator.
  void add_to(ModelParams& accumulator) const;
};

UserGradient backward(const ForwardTrace& trace, const Upstream& upstream,
                      const ModelParams& params, const TrainConfig& config);

}  // namespace matn
