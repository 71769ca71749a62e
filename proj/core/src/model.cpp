#include "matn/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace matn {

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(std::string("invalid config: ") + what);
  };
  require(dim >= 1 && heads >= 1 && memories >= 1 && depth >= 1 &&
              samples >= 1 && batch_size >= 1 && workers >= 1,
          "all counts must be >= 1");
  require(dim % heads == 0, "dim must be divisible by heads");
  require(learning_rate > 0.0, "learning rate must be > 0");
  require(lr_decay > 0.0 && lr_decay <= 1.0, "lr decay must be in (0, 1]");
  require(reg >= 0.0, "regularization weight must be >= 0");
}

ModelShape make_shape(const TrainConfig& config, std::size_t behaviors,
                      std::size_t items) {
  return {config.dim,   config.heads, config.memories,
          config.depth, behaviors,    items};
}

// ---------------------------------------------------------------------------
// ModelParams

ModelParams ModelParams::init(const ModelShape& shape, Rng& rng) {
  ModelParams p;
  p.shape = shape;
  const auto d = shape.dim;
  p.projection = glorot_init(d, shape.items, rng);
  for (std::size_t h = 0; h < shape.heads; ++h) {
    AttentionHead head;
    head.query = glorot_init(shape.head_dim(), d, rng);
    head.key = glorot_init(shape.head_dim(), d, rng);
    head.value = glorot_init(shape.head_dim(), d, rng);
    p.heads.push_back(std::move(head));
  }
  for (std::size_t m = 0; m < shape.memories; ++m) {
    p.memories.push_back(glorot_init(d, d, rng));
  }
  p.memory_key = glorot_init(shape.memories, d, rng);
  p.memory_bias = Vector::Zero(shape.memories);
  p.gate = Vector::Zero(shape.behaviors);
  for (std::size_t n = 0; n < shape.depth; ++n) {
    p.feed_forward.push_back({glorot_init(d, d, rng), Vector::Zero(d)});
  }
  p.item_table = glorot_init(shape.items, d, rng);
  return p;
}

ModelParams ModelParams::zeros(const ModelShape& shape, bool with_tables) {
  ModelParams p;
  p.shape = shape;
  const auto d = shape.dim;
  const auto hd = shape.head_dim();
  if (with_tables) {
    p.projection = DenseMatrix::Zero(d, shape.items);
    p.item_table = DenseMatrix::Zero(shape.items, d);
  }
  for (std::size_t h = 0; h < shape.heads; ++h) {
    p.heads.push_back({DenseMatrix::Zero(hd, d), DenseMatrix::Zero(hd, d),
                       DenseMatrix::Zero(hd, d)});
  }
  p.memories.assign(shape.memories, DenseMatrix::Zero(d, d));
  p.memory_key = DenseMatrix::Zero(shape.memories, d);
  p.memory_bias = Vector::Zero(shape.memories);
  p.gate = Vector::Zero(shape.behaviors);
  p.feed_forward.assign(shape.depth, {DenseMatrix::Zero(d, d), Vector::Zero(d)});
  return p;
}

namespace {

template <class T, class Matrix>
BasicTensorView<T> view(std::string name, Matrix& m,
                        SparseAxis axis = SparseAxis::kNone) {
  return {std::move(name),
          {static_cast<std::uint64_t>(m.rows()),
           static_cast<std::uint64_t>(m.cols())},
          std::span<T>(m.data(), static_cast<std::size_t>(m.size())),
          axis};
}

template <class T, class Vec>
BasicTensorView<T> vec_view(std::string name, Vec& v) {
  return {std::move(name),
          {static_cast<std::uint64_t>(v.size())},
          std::span<T>(v.data(), static_cast<std::size_t>(v.size())),
          SparseAxis::kNone};
}

template <class T, class Params>
std::vector<BasicTensorView<T>> collect(Params& p) {
  std::vector<BasicTensorView<T>> out;
  out.push_back(view<T>("projection", p.projection, SparseAxis::kColumns));
  for (std::size_t h = 0; h < p.heads.size(); ++h) {
    const auto prefix = "head" + std::to_string(h);
    out.push_back(view<T>(prefix + ".query", p.heads[h].query));
    out.push_back(view<T>(prefix + ".key", p.heads[h].key));
    out.push_back(view<T>(prefix + ".value", p.heads[h].value));
  }
  for (std::size_t m = 0; m < p.memories.size(); ++m) {
    out.push_back(view<T>("memory" + std::to_string(m), p.memories[m]));
  }
  out.push_back(view<T>("memory_key", p.memory_key));
  out.push_back(vec_view<T>("memory_bias", p.memory_bias));
  out.push_back(vec_view<T>("gate", p.gate));
  for (std::size_t n = 0; n < p.feed_forward.size(); ++n) {
    const auto prefix = "ff" + std::to_string(n);
    out.push_back(view<T>(prefix + ".weight", p.feed_forward[n].weight));
    out.push_back(vec_view<T>(prefix + ".bias", p.feed_forward[n].bias));
  }
  out.push_back(view<T>("item_table", p.item_table, SparseAxis::kRows));
  return out;
}

}  // namespace

std::vector<TensorView> ModelParams::tensors() { return collect<double>(*this); }

std::vector<ConstTensorView> ModelParams::tensors() const {
  return collect<const double>(*this);
}

bool ModelParams::operator==(const ModelParams& other) const {
  if (!(shape == other.shape)) return false;
  const auto a = tensors();
  const auto b = other.tensors();
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].dims != b[k].dims) return false;
    if (!std::equal(a[k].data.begin(), a[k].data.end(), b[k].data.begin())) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Forward stages

std::vector<Vector> project_user(const InteractionTensor& tensor, Index user,
                                 const ModelParams& params, bool mean_project) {
  const auto L = tensor.num_behaviors();
  std::vector<Vector> x(L, Vector::Zero(params.shape.dim));
  for (std::size_t l = 0; l < L; ++l) {
    const auto& items = tensor.items_of(user, l);
    for (Index j : items) x[l] += params.projection.col(j);
    if (mean_project && !items.empty()) {
      x[l] /= static_cast<double>(items.size());
    }
  }
  return x;
}

AttentionOutput behavior_attention(const std::vector<Vector>& x_tilde,
                                   const ModelParams& params,
                                   bool raw_weights) {
  const auto L = static_cast<Eigen::Index>(x_tilde.size());
  const auto H = params.heads.size();
  const auto hd = static_cast<Eigen::Index>(params.shape.head_dim());
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

  AttentionOutput out;
  out.y.assign(L, Vector::Zero(params.shape.dim));
  for (std::size_t h = 0; h < H; ++h) {
    const auto& head = params.heads[h];
    DenseMatrix q(L, hd), k(L, hd), v(L, hd);
    for (Eigen::Index l = 0; l < L; ++l) {
      q.row(l) = (head.query * x_tilde[l]).transpose();
      k.row(l) = (head.key * x_tilde[l]).transpose();
      v.row(l) = (head.value * x_tilde[l]).transpose();
    }
    DenseMatrix logits = q * k.transpose() * scale;
    DenseMatrix weights(L, L);
    for (Eigen::Index l = 0; l < L; ++l) {
      weights.row(l) = raw_weights ? Vector(logits.row(l).transpose())
                                   : softmax(logits.row(l).transpose());
    }
    const DenseMatrix mixed = weights * v;  // L x hd
    for (Eigen::Index l = 0; l < L; ++l) {
      out.y[l].segment(static_cast<Eigen::Index>(h) * hd, hd) =
          mixed.row(l).transpose();
    }
    out.queries.push_back(std::move(q));
    out.keys.push_back(std::move(k));
    out.values.push_back(std::move(v));
    out.weights.push_back(std::move(weights));
  }
  return out;
}

std::vector<Vector> residual_combine(const std::vector<Vector>& x_tilde,
                                     const std::vector<Vector>& y) {
  if (x_tilde.size() != y.size()) {
    throw DimensionError("residual_combine: behavior count mismatch");
  }
  std::vector<Vector> out(x_tilde.size());
  for (std::size_t l = 0; l < x_tilde.size(); ++l) {
    if (x_tilde[l].size() != y[l].size()) {
      throw DimensionError("residual_combine: width mismatch");
    }
    out[l] = x_tilde[l] + y[l];
  }
  return out;
}

MemoryOutput memory_recalibrate(const std::vector<Vector>& y_tilde,
                                const ModelParams& params) {
  const auto L = static_cast<Eigen::Index>(y_tilde.size());
  const auto M = static_cast<Eigen::Index>(params.memories.size());
  MemoryOutput out;
  out.pre.resize(M, L);
  out.weights.resize(M, L);
  out.z.assign(L, Vector::Zero(params.shape.dim));
  for (Eigen::Index l = 0; l < L; ++l) {
    const Vector pre = params.memory_key * y_tilde[l] + params.memory_bias;
    out.pre.col(l) = pre;
    out.weights.col(l) = relu(pre);
    for (Eigen::Index m = 0; m < M; ++m) {
      const double w = out.weights(m, l);
      if (w != 0.0) out.z[l] += w * (params.memories[m] * y_tilde[l]);
    }
  }
  return out;
}

GateOutput aggregate_gate(const std::vector<Vector>& z,
                          const ModelParams& params,
                          const TrainConfig& config) {
  const auto L = static_cast<Eigen::Index>(z.size());
  GateOutput out;
  out.weights = config.mean_pool_gate
                    ? Vector::Constant(L, 1.0 / static_cast<double>(L))
                    : softmax(params.gate);
  if (out.weights.size() != L) {
    throw DimensionError("aggregate_gate: gate has " +
                         std::to_string(out.weights.size()) +
                         " logits for " + std::to_string(L) + " behaviors");
  }
  out.psi = Vector::Zero(params.shape.dim);
  for (Eigen::Index l = 0; l < L; ++l) out.psi += out.weights(l) * z[l];
  return out;
}

FeatureOutput extract_features(const Vector& psi, const ModelParams& params,
                               const TrainConfig& /*config*/) {
  FeatureOutput out;
  out.hidden.push_back(psi);
  for (const auto& layer : params.feed_forward) {
    const Vector& prev = out.hidden.back();
    Vector pre = layer.weight * prev + layer.bias;
    Vector next = relu(pre) + prev;
    out.pre.push_back(std::move(pre));
    out.hidden.push_back(std::move(next));
  }
  out.gamma = out.hidden.back();
  return out;
}

double score(const Vector& gamma, Index item, const ModelParams& params) {
  if (item >= params.item_table.rows()) {
    throw DimensionError("score: item " + std::to_string(item) +
                         " out of range (" +
                         std::to_string(params.item_table.rows()) + " items)");
  }
  return params.item_table.row(item).dot(gamma);
}

ForwardTrace forward(const InteractionTensor& tensor, Index user,
                     const ModelParams& params, const TrainConfig& config) {
  if (user >= tensor.num_users()) {
    throw DimensionError("forward: user index out of range");
  }
  if (tensor.num_items() != params.shape.items ||
      tensor.num_behaviors() != params.shape.behaviors) {
    throw DimensionError("forward: tensor and model shapes disagree");
  }
  const auto L = tensor.num_behaviors();
  ForwardTrace t;
  t.user = user;
  t.behavior_items.resize(L);
  t.projection_scale.assign(L, 1.0);
  for (std::size_t l = 0; l < L; ++l) {
    t.behavior_items[l] = tensor.items_of(user, l);
    if (config.mean_project && !t.behavior_items[l].empty()) {
      t.projection_scale[l] = 1.0 / static_cast<double>(t.behavior_items[l].size());
    }
  }
  t.x_tilde = project_user(tensor, user, params, config.mean_project);

  if (config.disable_transformer) {
    t.y.assign(L, Vector::Zero(params.shape.dim));
    t.y_tilde = t.x_tilde;
  } else {
    auto attn = behavior_attention(t.x_tilde, params,
                                   config.raw_attention_weights);
    t.y = std::move(attn.y);
    t.attn_weights = std::move(attn.weights);
    t.queries = std::move(attn.queries);
    t.keys = std::move(attn.keys);
    t.values = std::move(attn.values);
    t.y_tilde = residual_combine(t.x_tilde, t.y);
  }

  if (config.disable_memory) {
    t.z = t.y_tilde;
  } else {
    auto mem = memory_recalibrate(t.y_tilde, params);
    t.z = std::move(mem.z);
    t.mem_pre = std::move(mem.pre);
    t.mem_weights = std::move(mem.weights);
  }

  auto gate = aggregate_gate(t.z, params, config);
  t.psi = std::move(gate.psi);
  t.gate_weights = std::move(gate.weights);

  auto features = extract_features(t.psi, params, config);
  t.ff_pre = std::move(features.pre);
  t.ff_hidden = std::move(features.hidden);
  t.gamma = std::move(features.gamma);
  return t;
}

// ---------------------------------------------------------------------------
// Backward

void UserGradient::add_to(ModelParams& accumulator) const {
  auto dst = accumulator.tensors();
  const auto src = core.tensors();
  if (dst.size() != src.size()) {
    throw DimensionError("gradient layout does not match parameters");
  }
  // First and last tensors are the item tables, accumulated sparsely below.
  for (std::size_t k = 1; k + 1 < dst.size(); ++k) {
    if (dst[k].data.size() != src[k].data.size()) {
      throw DimensionError("gradient shape mismatch in " + dst[k].name);
    }
    for (std::size_t i = 0; i < src[k].data.size(); ++i) {
      dst[k].data[i] += src[k].data[i];
    }
  }
  for (const auto& [j, g] : projection_columns) accumulator.projection.col(j) += g;
  for (const auto& [j, g] : item_rows) {
    accumulator.item_table.row(j) += g.transpose();
  }
}

UserGradient backward(const ForwardTrace& trace, const Upstream& upstream,
                      const ModelParams& params, const TrainConfig& config) {
  const auto& shape = params.shape;
  const auto d = static_cast<Eigen::Index>(shape.dim);
  const auto L = static_cast<Eigen::Index>(trace.x_tilde.size());
  if (upstream.gamma.size() != d) {
    throw DimensionError("backward: upstream gamma gradient has wrong width");
  }
  UserGradient grad;
  grad.core = ModelParams::zeros(shape, /*with_tables=*/false);
  auto& g = grad.core;

  for (const auto& [j, row] : upstream.item_rows) {
    if (row.size() != d || j >= shape.items) {
      throw DimensionError("backward: bad item-row upstream gradient");
    }
    grad.item_rows.emplace_back(j, row);
  }

  // Feature extraction: h_n = relu(W_n h_{n-1} + b_n) + h_{n-1}.
  Vector dh = upstream.gamma;
  for (std::size_t n = params.feed_forward.size(); n-- > 0;) {
    const Vector dpre =
        (trace.ff_pre[n].array() > 0.0).select(dh, Vector::Zero(d));
    g.feed_forward[n].weight += dpre * trace.ff_hidden[n].transpose();
    g.feed_forward[n].bias += dpre;
    dh += params.feed_forward[n].weight.transpose() * dpre;
  }
  const Vector& dpsi = dh;

  // Gate: psi = sum_l g_l z_l with g = softmax(w).
  std::vector<Vector> dz(L);
  Vector dgate(L);
  for (Eigen::Index l = 0; l < L; ++l) {
    dz[l] = trace.gate_weights(l) * dpsi;
    dgate(l) = dpsi.dot(trace.z[l]);
  }
  if (!config.mean_pool_gate) {
    const double mean = trace.gate_weights.dot(dgate);
    g.gate = trace.gate_weights.cwiseProduct(
        (dgate.array() - mean).matrix());
  }

  // Memory: z_l = sum_m relu(K y~_l + b)_m U_m y~_l.
  std::vector<Vector> dy_tilde(L);
  if (config.disable_memory) {
    dy_tilde = dz;
  } else {
    const auto M = static_cast<Eigen::Index>(params.memories.size());
    for (Eigen::Index l = 0; l < L; ++l) {
      const Vector& yt = trace.y_tilde[l];
      Vector dyt = Vector::Zero(d);
      Vector dpre = Vector::Zero(M);
      for (Eigen::Index m = 0; m < M; ++m) {
        const auto& U = params.memories[m];
        const double w = trace.mem_weights(m, l);
        if (trace.mem_pre(m, l) > 0.0) dpre(m) = dz[l].dot(U * yt);
        if (w != 0.0) {
          g.memories[m] += w * dz[l] * yt.transpose();
          dyt += w * (U.transpose() * dz[l]);
        }
      }
      g.memory_key += dpre * yt.transpose();
      g.memory_bias += dpre;
      dyt += params.memory_key.transpose() * dpre;
      dy_tilde[l] = std::move(dyt);
    }
  }

  // Attention with residual: y~_l = x~_l + concat_h sum_l' A_ll' V^h x~_l'.
  std::vector<Vector> dx = dy_tilde;
  if (!config.disable_transformer) {
    const auto hd = static_cast<Eigen::Index>(shape.head_dim());
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
    for (std::size_t h = 0; h < params.heads.size(); ++h) {
      const auto& head = params.heads[h];
      const auto& A = trace.attn_weights[h];
      const auto& q = trace.queries[h];
      const auto& k = trace.keys[h];
      const auto& v = trace.values[h];
      DenseMatrix dy_head(L, hd);
      for (Eigen::Index l = 0; l < L; ++l) {
        dy_head.row(l) =
            dy_tilde[l].segment(static_cast<Eigen::Index>(h) * hd, hd)
                .transpose();
      }
      const DenseMatrix dA = dy_head * v.transpose();  // L x L
      const DenseMatrix dv = A.transpose() * dy_head;  // L x hd
      DenseMatrix dlogits(L, L);
      if (config.raw_attention_weights) {
        dlogits = dA;
      } else {
        for (Eigen::Index l = 0; l < L; ++l) {
          const double inner = A.row(l).dot(dA.row(l));
          dlogits.row(l) =
              A.row(l).cwiseProduct((dA.row(l).array() - inner).matrix());
        }
      }
      const DenseMatrix dq = dlogits * k * scale;              // L x hd
      const DenseMatrix dk = dlogits.transpose() * q * scale;  // L x hd
      for (Eigen::Index l = 0; l < L; ++l) {
        const Vector& x = trace.x_tilde[l];
        g.heads[h].query += dq.row(l).transpose() * x.transpose();
        g.heads[h].key += dk.row(l).transpose() * x.transpose();
        g.heads[h].value += dv.row(l).transpose() * x.transpose();
        dx[l] += head.query.transpose() * dq.row(l).transpose() +
                 head.key.transpose() * dk.row(l).transpose() +
                 head.value.transpose() * dv.row(l).transpose();
      }
    }
  }

  // Projection: x~_l = scale_l * sum_{j in items_l} V[:, j].
  std::vector<std::pair<Index, Vector>> columns;
  for (Eigen::Index l = 0; l < L; ++l) {
    for (Index j : trace.behavior_items[l]) {
      columns.emplace_back(j, trace.projection_scale[l] * dx[l]);
    }
  }
  // Merge repeated items (same item under several behaviors) in item order.
  std::stable_sort(columns.begin(), columns.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [j, col] : columns) {
    if (!grad.projection_columns.empty() &&
        grad.projection_columns.back().first == j) {
      grad.projection_columns.back().second += col;
    } else {
      grad.projection_columns.emplace_back(j, std::move(col));
    }
  }
  return grad;
}

}  // namespace matn
