#pragma once

#include "matn/interactions.hpp"
#include "matn/model.hpp"

#include <functional>
#include <ostream>
#include <span>
#include <vector>

namespace matn {

inline const std::vector<std::size_t> kDefaultCutoffs = {1, 3, 5, 7, 9, 10};

struct RankingMetrics {
  std::vector<std::size_t> cutoffs;
  std::vector<double> hr;
  std::vector<double> ndcg;
  std::size_t users_evaluated = 0;

  double hr_at(std::size_t k) const;
  double ndcg_at(std::size_t k) const;

  bool operator==(const RankingMetrics&) const = default;
};

// 1 + number of other candidates scoring >= the positive (ties count against
// the positive). Throws NumericError on non-finite scores.
std::size_t rank_position(std::span<const double> scores,
                          std::size_t positive_index);

struct CutoffMetrics {
  double hr = 0.0;
  double ndcg = 0.0;
};
std::vector<CutoffMetrics> user_metrics(std::size_t rank,
                                        std::span<const std::size_t> cutoffs);

// Scores `items` for `user`; must be safe to call concurrently.
using UserScorer =
    std::function<std::vector<double>(Index user, std::span<const Index> items)>;

// Ranks each evaluable user's held-out item against its 99 negatives and
// averages per-user metrics in user order.
RankingMetrics evaluate_with(std::size_t num_users, const EvalSplit& split,
                             const UserScorer& scorer,
                             std::span<const std::size_t> cutoffs,
                             std::size_t workers = 1);

RankingMetrics evaluate(const InteractionTensor& train, const EvalSplit& split,
                        const ModelParams& params, const TrainConfig& config,
                        std::span<const std::size_t> cutoffs = kDefaultCutoffs);

// CSV `k,hr,ndcg`; `prefix` (e.g. "full,") is prepended to each data row.
void write_metrics_csv(std::ostream& out, const RankingMetrics& metrics,
                       bool header = true, const std::string& prefix = "");

}  // namespace matn
