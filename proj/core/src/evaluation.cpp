#include "matn/evaluation.hpp"

#include "matn/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

namespace matn {

double RankingMetrics::hr_at(std::size_t k) const {
  const auto it = std::find(cutoffs.begin(), cutoffs.end(), k);
  if (it == cutoffs.end()) throw Error("cutoff " + std::to_string(k) + " not evaluated");
  return hr[static_cast<std::size_t>(it - cutoffs.begin())];
}

double RankingMetrics::ndcg_at(std::size_t k) const {
  const auto it = std::find(cutoffs.begin(), cutoffs.end(), k);
  if (it == cutoffs.end()) throw Error("cutoff " + std::to_string(k) + " not evaluated");
  return ndcg[static_cast<std::size_t>(it - cutoffs.begin())];
}

std::size_t rank_position(std::span<const double> scores,
                          std::size_t positive_index) {
  if (positive_index >= scores.size()) {
    throw DimensionError("rank_position: positive index out of range");
  }
  check_finite(scores, "candidate scores");
  const double target = scores[positive_index];
  std::size_t rank = 1;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (k != positive_index && scores[k] >= target) ++rank;
  }
  return rank;
}

std::vector<CutoffMetrics> user_metrics(std::size_t rank,
                                        std::span<const std::size_t> cutoffs) {
  std::vector<CutoffMetrics> out(cutoffs.size());
  const double gain = 1.0 / std::log2(static_cast<double>(rank) + 1.0);
  for (std::size_t c = 0; c < cutoffs.size(); ++c) {
    if (rank <= cutoffs[c]) out[c] = {1.0, gain};
  }
  return out;
}

RankingMetrics evaluate_with(std::size_t num_users, const EvalSplit& split,
                             const UserScorer& scorer,
                             std::span<const std::size_t> cutoffs,
                             std::size_t workers) {
  if (split.held_out.size() != num_users ||
      split.eval_negatives.size() != num_users) {
    throw ConsistencyError("evaluation split covers " +
                           std::to_string(split.held_out.size()) +
                           " users but the tensor has " +
                           std::to_string(num_users));
  }
  std::vector<Index> users;
  for (Index u = 0; u < num_users; ++u) {
    if (split.evaluable(u)) users.push_back(u);
  }
  std::vector<std::size_t> ranks(users.size());
  parallel_for(users.size(), workers, [&](std::size_t i) {
    const Index u = users[i];
    std::vector<Index> candidates;
    candidates.reserve(1 + split.eval_negatives[u].size());
    candidates.push_back(*split.held_out[u]);
    candidates.insert(candidates.end(), split.eval_negatives[u].begin(),
                      split.eval_negatives[u].end());
    const auto scores = scorer(u, candidates);
    ranks[i] = rank_position(scores, 0);
  });

  RankingMetrics metrics;
  metrics.cutoffs.assign(cutoffs.begin(), cutoffs.end());
  metrics.hr.assign(cutoffs.size(), 0.0);
  metrics.ndcg.assign(cutoffs.size(), 0.0);
  metrics.users_evaluated = users.size();
  for (std::size_t rank : ranks) {
    const auto per_user = user_metrics(rank, cutoffs);
    for (std::size_t c = 0; c < cutoffs.size(); ++c) {
      metrics.hr[c] += per_user[c].hr;
      metrics.ndcg[c] += per_user[c].ndcg;
    }
  }
  if (!users.empty()) {
    for (std::size_t c = 0; c < cutoffs.size(); ++c) {
      metrics.hr[c] /= static_cast<double>(users.size());
      metrics.ndcg[c] /= static_cast<double>(users.size());
    }
  }
  return metrics;
}

RankingMetrics evaluate(const InteractionTensor& train, const EvalSplit& split,
                        const ModelParams& params, const TrainConfig& config,
                        std::span<const std::size_t> cutoffs) {
  const auto scorer = [&](Index user, std::span<const Index> items) {
    const auto trace = forward(train, user, params, config);
    std::vector<double> scores;
    scores.reserve(items.size());
    for (Index j : items) scores.push_back(score(trace.gamma, j, params));
    return scores;
  };
  return evaluate_with(train.num_users(), split, scorer, cutoffs,
                       config.workers);
}

void write_metrics_csv(std::ostream& out, const RankingMetrics& metrics,
                       bool header, const std::string& prefix) {
  if (header) out << "k,hr,ndcg\n";
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::fixed << std::setprecision(6);
  for (std::size_t c = 0; c < metrics.cutoffs.size(); ++c) {
    out << prefix << metrics.cutoffs[c] << ',' << metrics.hr[c] << ','
        << metrics.ndcg[c] << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

}  // namespace matn
