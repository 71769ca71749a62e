#include "matn/biasmf.hpp"

#include <algorithm>
#include <chrono>

namespace matn {

BiasMFParams BiasMFParams::init(std::size_t users, std::size_t items,
                                std::size_t dim, Rng& rng) {
  BiasMFParams p = zeros(users, items, dim);
  p.user_factors = glorot_init(users, dim, rng);
  p.item_factors = glorot_init(items, dim, rng);
  return p;
}

BiasMFParams BiasMFParams::zeros(std::size_t users, std::size_t items,
                                 std::size_t dim) {
  BiasMFParams p;
  p.global_mean = Vector::Zero(1);
  p.user_bias = Vector::Zero(users);
  p.item_bias = Vector::Zero(items);
  p.user_factors = DenseMatrix::Zero(users, dim);
  p.item_factors = DenseMatrix::Zero(items, dim);
  return p;
}

namespace {

template <class T, class Params>
std::vector<BasicTensorView<T>> collect(Params& p) {
  auto vec = [](std::string name, auto& v, SparseAxis axis) {
    return BasicTensorView<T>{
        std::move(name),
        {static_cast<std::uint64_t>(v.size())},
        std::span<T>(v.data(), static_cast<std::size_t>(v.size())),
        axis};
  };
  auto mat = [](std::string name, auto& m) {
    return BasicTensorView<T>{
        std::move(name),
        {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())},
        std::span<T>(m.data(), static_cast<std::size_t>(m.size())),
        SparseAxis::kRows};
  };
  return {vec("global_mean", p.global_mean, SparseAxis::kNone),
          vec("user_bias", p.user_bias, SparseAxis::kNone),
          vec("item_bias", p.item_bias, SparseAxis::kNone),
          mat("user_factors", p.user_factors),
          mat("item_factors", p.item_factors)};
}

}  // namespace

std::vector<TensorView> BiasMFParams::tensors() { return collect<double>(*this); }
std::vector<ConstTensorView> BiasMFParams::tensors() const {
  return collect<const double>(*this);
}

bool BiasMFParams::operator==(const BiasMFParams& other) const {
  const auto a = tensors();
  const auto b = other.tensors();
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].dims != b[k].dims ||
        !std::equal(a[k].data.begin(), a[k].data.end(), b[k].data.begin())) {
      return false;
    }
  }
  return true;
}

double biasmf_score(const BiasMFParams& params, Index user, Index item) {
  if (user >= params.num_users() || item >= params.num_items()) {
    throw DimensionError("biasmf_score: index out of range");
  }
  return params.global_mean(0) + params.user_bias(user) +
         params.item_bias(item) +
         params.user_factors.row(user).dot(params.item_factors.row(item));
}

BiasMFLoss biasmf_batch_loss(std::span<const SampledPairs> pairs,
                             const BiasMFParams& params, double reg) {
  BiasMFLoss out;
  out.gradient = BiasMFParams::zeros(params.num_users(), params.num_items(),
                                     params.dim());
  auto& g = out.gradient;
  for (const auto& sp : pairs) {
    const Index u = sp.user;
    for (std::size_t k = 0; k < sp.positives.size(); ++k) {
      const Index p = sp.positives[k];
      const Index n = sp.negatives[k];
      const double loss = hinge_pair_loss(biasmf_score(params, u, p),
                                          biasmf_score(params, u, n));
      out.pair_loss += loss;
      ++out.pairs;
      if (loss <= 0.0) continue;
      // d/ds_pos = -1, d/ds_neg = +1; mu and b_u cancel.
      g.item_bias(p) -= 1.0;
      g.item_bias(n) += 1.0;
      g.user_factors.row(u) +=
          params.item_factors.row(n) - params.item_factors.row(p);
      g.item_factors.row(p) -= params.user_factors.row(u);
      g.item_factors.row(n) += params.user_factors.row(u);
    }
  }
  if (reg > 0.0) {
    out.reg_term = reg * squared_norm(params);
    auto grads = g.tensors();
    const auto values = params.tensors();
    for (std::size_t k = 0; k < grads.size(); ++k) {
      for (std::size_t i = 0; i < grads[k].data.size(); ++i) {
        grads[k].data[i] += 2.0 * reg * values[k].data[i];
      }
    }
  }
  out.loss = out.pair_loss + out.reg_term;
  return out;
}

BiasMFTrainResult biasmf_train(const InteractionTensor& tensor,
                               const TrainConfig& config,
                               const EpochCallback& on_epoch) {
  config.validate();
  const auto target_only =
      behavior_subset(tensor, {tensor.schema().target_index()});
  auto users = trainable_users(target_only);
  if (users.empty()) {
    throw Error("biasmf_train: no user has a target-behavior interaction");
  }
  Rng init_rng(config.seed);
  BiasMFTrainResult result{
      BiasMFParams::init(target_only.num_users(), target_only.num_items(),
                         config.dim, init_rng),
      {}};
  auto& params = result.params;
  auto adam = AdamState::for_params(params);
  Rng rng = init_rng.split(1);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    const double lr = epoch_learning_rate(config, epoch);
    std::shuffle(users.begin(), users.end(), rng.engine());
    double pair_loss = 0.0;
    std::size_t pairs = 0;
    for (std::size_t begin = 0, batch = 0; begin < users.size();
         begin += config.batch_size, ++batch) {
      const auto end = std::min(users.size(), begin + config.batch_size);
      std::vector<SampledPairs> sampled;
      for (std::size_t i = begin; i < end; ++i) {
        if (auto sp = sample_pairs(target_only, users[i], config.samples, rng,
                                   config.train_negatives)) {
          sampled.push_back(std::move(*sp));
        }
      }
      auto loss = biasmf_batch_loss(sampled, params, config.reg);
      if (!std::isfinite(loss.loss)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batch));
      }
      pair_loss += loss.pair_loss;
      pairs += loss.pairs;
      adam_step(adam, params, loss.gradient, lr);
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.mean_pair_loss = pairs ? pair_loss / static_cast<double>(pairs) : 0.0;
    entry.reg_term = config.reg * squared_norm(params);
    entry.lr = lr;
    entry.seconds = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - started)
                        .count();
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  return result;
}

RankingMetrics biasmf_evaluate(const BiasMFParams& params,
                               const EvalSplit& split,
                               std::span<const std::size_t> cutoffs,
                               std::size_t workers) {
  const auto scorer = [&](Index user, std::span<const Index> items) {
    std::vector<double> scores;
    scores.reserve(items.size());
    for (Index j : items) scores.push_back(biasmf_score(params, user, j));
    return scores;
  };
  return evaluate_with(params.num_users(), split, scorer, cutoffs, workers);
}

void save_biasmf_checkpoint(const BiasMFParams& params,
                            std::size_t target_index,
                            const std::filesystem::path& path) {
  CheckpointData data;
  data.header.dim = static_cast<std::uint32_t>(params.dim());
  data.header.behaviors = 1;
  data.header.users = static_cast<std::uint32_t>(params.num_users());
  data.header.items = static_cast<std::uint32_t>(params.num_items());
  data.header.target_index = static_cast<std::uint32_t>(target_index);
  data.header.model = ModelCode::kBiasMF;
  for (const auto& t : params.tensors()) {
    data.tensors.push_back(
        {t.name, t.dims, std::vector<double>(t.data.begin(), t.data.end())});
  }
  write_checkpoint_file(path, data);
}

BiasMFParams load_biasmf_checkpoint(const std::filesystem::path& path) {
  const auto data = read_checkpoint_file(path);
  const auto& h = data.header;
  if (h.model != ModelCode::kBiasMF) {
    throw FormatError("checkpoint " + path.string() +
                      " does not hold a BiasMF model");
  }
  auto params = BiasMFParams::zeros(h.users, h.items, h.dim);
  auto views = params.tensors();
  if (data.tensors.size() != views.size()) {
    throw CorruptionError("BiasMF checkpoint has wrong tensor count");
  }
  for (std::size_t k = 0; k < views.size(); ++k) {
    const auto& t = data.tensors[k];
    if (t.name != views[k].name || t.dims != views[k].dims) {
      throw CorruptionError("unexpected tensor '" + t.name + "' in checkpoint");
    }
    std::copy(t.values.begin(), t.values.end(), views[k].data.begin());
  }
  return params;
}

}  // namespace matn
