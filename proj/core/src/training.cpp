#include "matn/training.hpp"

#include "matn/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>

namespace matn {

std::optional<SampledPairs> sample_pairs(const InteractionTensor& tensor,
                                         Index user, std::size_t s, Rng& rng,
                                         NegativeRule rule) {
  const auto& targets = tensor.target_items(user);
  if (targets.empty() || s == 0) return std::nullopt;
  const auto excluded = excluded_items(tensor, user, rule);
  const auto J = static_cast<Index>(tensor.num_items());
  if (excluded.size() >= J) return std::nullopt;

  SampledPairs out;
  out.user = user;
  if (targets.size() < s) {
    for (std::size_t k = 0; k < s; ++k) {
      out.positives.push_back(targets[rng.index(static_cast<Index>(targets.size()))]);
    }
  } else {
    std::vector<Index> pool = targets;
    for (std::size_t k = 0; k < s; ++k) {
      const auto pick = k + rng.index(static_cast<Index>(pool.size() - k));
      std::swap(pool[k], pool[pick]);
      out.positives.push_back(pool[k]);
    }
  }
  const std::size_t available = J - excluded.size();
  if (available * 4 >= J) {
    while (out.negatives.size() < s) {
      const Index j = rng.index(J);
      if (!std::binary_search(excluded.begin(), excluded.end(), j)) {
        out.negatives.push_back(j);
      }
    }
  } else {
    std::vector<Index> allowed;
    allowed.reserve(available);
    for (Index j = 0; j < J; ++j) {
      if (!std::binary_search(excluded.begin(), excluded.end(), j)) {
        allowed.push_back(j);
      }
    }
    for (std::size_t k = 0; k < s; ++k) {
      out.negatives.push_back(allowed[rng.index(static_cast<Index>(allowed.size()))]);
    }
  }
  return out;
}

namespace {

struct UserContribution {
  double pair_loss = 0.0;
  std::size_t pairs = 0;
  UserGradient gradient;
};

UserContribution user_contribution(const InteractionTensor& tensor,
                                   const SampledPairs& pairs,
                                   const ModelParams& params,
                                   const TrainConfig& config) {
  if (pairs.positives.size() != pairs.negatives.size()) {
    throw DimensionError("sampled pairs: positive/negative count mismatch");
  }
  const auto trace = forward(tensor, pairs.user, params, config);
  const auto d = static_cast<Eigen::Index>(params.shape.dim);
  UserContribution out;
  Upstream up;
  up.gamma = Vector::Zero(d);
  for (std::size_t k = 0; k < pairs.positives.size(); ++k) {
    const Index p = pairs.positives[k];
    const Index n = pairs.negatives[k];
    const double loss =
        hinge_pair_loss(score(trace.gamma, p, params), score(trace.gamma, n, params));
    out.pair_loss += loss;
    ++out.pairs;
    if (loss > 0.0) {
      up.gamma += params.item_table.row(n).transpose() -
                  params.item_table.row(p).transpose();
      up.item_rows.emplace_back(p, -trace.gamma);
      up.item_rows.emplace_back(n, trace.gamma);
    }
  }
  out.gradient = backward(trace, up, params, config);
  return out;
}

}  // namespace

BatchLoss batch_loss(const InteractionTensor& tensor,
                     std::span<const SampledPairs> pairs,
                     const ModelParams& params, const TrainConfig& config) {
  std::vector<UserContribution> parts(pairs.size());
  parallel_for(pairs.size(), config.workers, [&](std::size_t i) {
    parts[i] = user_contribution(tensor, pairs[i], params, config);
  });

  BatchLoss out;
  out.gradient = ModelParams::zeros(params.shape);
  for (const auto& part : parts) {
    out.pair_loss += part.pair_loss;
    out.pairs += part.pairs;
    part.gradient.add_to(out.gradient);
  }
  if (config.reg > 0.0) {
    out.reg_term = config.reg * squared_norm(params);
    auto grads = out.gradient.tensors();
    const auto values = params.tensors();
    for (std::size_t k = 0; k < grads.size(); ++k) {
      for (std::size_t i = 0; i < grads[k].data.size(); ++i) {
        grads[k].data[i] += 2.0 * config.reg * values[k].data[i];
      }
    }
  }
  out.loss = out.pair_loss + out.reg_term;
  return out;
}

BatchLoss batch_loss(const InteractionTensor& tensor,
                     std::span<const Index> users, const ModelParams& params,
                     const TrainConfig& config, Rng& rng) {
  if (users.empty()) throw Error("batch_loss: empty batch");
  std::vector<SampledPairs> pairs;
  pairs.reserve(users.size());
  for (Index u : users) {
    if (auto p = sample_pairs(tensor, u, config.samples, rng,
                              config.train_negatives)) {
      pairs.push_back(std::move(*p));
    }
  }
  return batch_loss(tensor, pairs, params, config);
}

double epoch_learning_rate(const TrainConfig& config, std::size_t epoch) {
  return config.learning_rate *
         std::pow(config.lr_decay, static_cast<double>(epoch));
}

std::vector<Index> trainable_users(const InteractionTensor& tensor) {
  std::vector<Index> users;
  for (Index u = 0; u < tensor.num_users(); ++u) {
    if (!tensor.target_items(u).empty()) users.push_back(u);
  }
  return users;
}

TrainResult train(const InteractionTensor& tensor, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  auto users = trainable_users(tensor);
  if (users.empty()) {
    throw Error("train: no user has a target-behavior interaction");
  }
  Rng init_rng(config.seed);
  TrainResult result{
      ModelParams::init(
          make_shape(config, tensor.num_behaviors(), tensor.num_items()),
          init_rng),
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
      const std::span<const Index> members(users.data() + begin, end - begin);
      auto loss = batch_loss(tensor, members, params, config, rng);
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

void write_loss_log(const std::string& path, const std::vector<EpochLog>& log) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << "epoch,mean_pair_loss,reg_term,lr\n";
  out << std::setprecision(17);
  for (const auto& e : log) {
    out << e.epoch << ',' << e.mean_pair_loss << ',' << e.reg_term << ','
        << e.lr << '\n';
  }
}

}  // namespace matn
