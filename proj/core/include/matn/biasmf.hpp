#pragma once

#include "matn/checkpoint.hpp"
#include "matn/evaluation.hpp"
#include "matn/interactions.hpp"
#include "matn/model.hpp"
#include "matn/training.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace matn {

// Biased matrix factorization: mu + b_u + b_i + p_u . q_i.
struct BiasMFParams {
  Vector global_mean;  // length 1, kept as an array for the shared plumbing
  Vector user_bias;
  Vector item_bias;
  DenseMatrix user_factors;  // I x d
  DenseMatrix item_factors;  // J x d

  static BiasMFParams init(std::size_t users, std::size_t items,
                           std::size_t dim, Rng& rng);
  static BiasMFParams zeros(std::size_t users, std::size_t items,
                            std::size_t dim);

  std::size_t num_users() const { return static_cast<std::size_t>(user_bias.size()); }
  std::size_t num_items() const { return static_cast<std::size_t>(item_bias.size()); }
  std::size_t dim() const { return static_cast<std::size_t>(user_factors.cols()); }

  std::vector<TensorView> tensors();
  std::vector<ConstTensorView> tensors() const;

  bool operator==(const BiasMFParams& other) const;
};

double biasmf_score(const BiasMFParams& params, Index user, Index item);

struct BiasMFLoss {
  double loss = 0.0;
  double pair_loss = 0.0;
  double reg_term = 0.0;
  std::size_t pairs = 0;
  BiasMFParams gradient;
};

// Hinge + L2 objective over fixed pairs.
BiasMFLoss biasmf_batch_loss(std::span<const SampledPairs> pairs,
                             const BiasMFParams& params, double reg);

struct BiasMFTrainResult {
  BiasMFParams params;
  std::vector<EpochLog> log;
};

// Trains on the target behavior only (source behaviors are dropped first), with
// the same sampling, batching, Adam and decay schedule as the MATN trainer.
BiasMFTrainResult biasmf_train(const InteractionTensor& tensor,
                               const TrainConfig& config,
                               const EpochCallback& on_epoch = {});

RankingMetrics biasmf_evaluate(const BiasMFParams& params,
                               const EvalSplit& split,
                               std::span<const std::size_t> cutoffs,
                               std::size_t workers = 1);

void save_biasmf_checkpoint(const BiasMFParams& params,
                            std::size_t target_index,
                            const std::filesystem::path& path);
BiasMFParams load_biasmf_checkpoint(const std::filesystem::path& path);

}  // namespace matn
