#pragma once

#include "matn/interactions.hpp"
#include "matn/model.hpp"
#include "matn/numerics.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace matn {

struct SampledPairs {
  Index user = 0;
  std::vector<Index> positives;
  std::vector<Index> negatives;
};

// Draws s target-behavior positives (with replacement only when the user has
// fewer than s) and s negatives uniformly from items outside the user's
// excluded set under `rule`. Returns nullopt when the user has no target item
// or no admissible negative.
std::optional<SampledPairs> sample_pairs(const InteractionTensor& tensor,
                                         Index user, std::size_t s, Rng& rng,
                                         NegativeRule rule);

inline double hinge_pair_loss(double pos_score, double neg_score) {
  return std::max(0.0, 1.0 - pos_score + neg_score);
}

struct BatchLoss {
  double loss = 0.0;       // pair_loss + reg_term
  double pair_loss = 0.0;  // sum of hinge terms
  double reg_term = 0.0;   // lambda * ||theta||^2
  std::size_t pairs = 0;
  ModelParams gradient;    // full shape, includes 2 * lambda * theta
};

// Objective over fixed pairs: deterministic in its inputs.
BatchLoss batch_loss(const InteractionTensor& tensor,
                     std::span<const SampledPairs> pairs,
                     const ModelParams& params, const TrainConfig& config);

// Samples pairs for each user in `users` (skipping users without positives)
// and evaluates the objective.
BatchLoss batch_loss(const InteractionTensor& tensor,
                     std::span<const Index> users, const ModelParams& params,
                     const TrainConfig& config, Rng& rng);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  template <ParameterSet P>
  static AdamState for_params(const P& params) {
    AdamState s;
    for (const auto& t : params.tensors()) {
      s.m.emplace_back(t.data.size(), 0.0);
      s.v.emplace_back(t.data.size(), 0.0);
    }
    return s;
  }
};

namespace detail {

// Bias-corrected Adam update over a strided slice of one tensor.
inline void adam_update(AdamState& state, std::size_t tensor, double lr,
                        double c1, double c2, std::span<double> param,
                        std::span<const double> grad, std::size_t start,
                        std::size_t count, std::size_t stride) {
  auto& m = state.m[tensor];
  auto& v = state.v[tensor];
  for (std::size_t k = 0, i = start; k < count; ++k, i += stride) {
    const double g = grad[i];
    m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
    v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
    const double mhat = m[i] / c1;
    const double vhat = v[i] / c2;
    param[i] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
  }
}

}  // namespace detail

// One Adam step. Embedding tables (SparseAxis rows/columns) are updated
// lazily: a row or column whose gradient is entirely zero is left untouched,
// moments included. Throws NumericError naming the first non-finite gradient.
template <ParameterSet P>
void adam_step(AdamState& state, P& params, const P& gradient, double lr) {
  auto views = params.tensors();
  const auto grads = gradient.tensors();
  if (views.size() != grads.size() || state.m.size() != views.size()) {
    throw DimensionError("adam_step: parameter/gradient/state layout mismatch");
  }
  for (std::size_t k = 0; k < views.size(); ++k) {
    if (views[k].data.size() != grads[k].data.size() ||
        state.m[k].size() != views[k].data.size()) {
      throw DimensionError("adam_step: shape mismatch in " + views[k].name);
    }
    check_finite(grads[k].data, "gradient of " + views[k].name);
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

  for (std::size_t k = 0; k < views.size(); ++k) {
    auto param = views[k].data;
    const auto grad = grads[k].data;
    const auto axis = views[k].sparse_axis;
    if (axis == SparseAxis::kNone || views[k].dims.size() != 2) {
      detail::adam_update(state, k, lr, c1, c2, param, grad, 0, param.size(), 1);
      continue;
    }
    const auto rows = static_cast<std::size_t>(views[k].dims[0]);
    const auto cols = static_cast<std::size_t>(views[k].dims[1]);
    const bool by_rows = axis == SparseAxis::kRows;
    const std::size_t units = by_rows ? rows : cols;
    const std::size_t len = by_rows ? cols : rows;
    const std::size_t stride = by_rows ? 1 : cols;
    for (std::size_t u = 0; u < units; ++u) {
      const std::size_t start = by_rows ? u * cols : u;
      bool any = false;
      for (std::size_t e = 0, i = start; e < len; ++e, i += stride) {
        if (grad[i] != 0.0) {
          any = true;
          break;
        }
      }
      if (any) detail::adam_update(state, k, lr, c1, c2, param, grad, start, len, stride);
    }
  }
}

struct EpochLog {
  std::size_t epoch = 0;
  double mean_pair_loss = 0.0;
  double reg_term = 0.0;
  double lr = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochLog> log;
};

// Learning rate used during epoch e (0-based).
double epoch_learning_rate(const TrainConfig& config, std::size_t epoch);

using EpochCallback = std::function<void(const EpochLog&)>;

// Seeded mini-batch training with Adam and per-epoch learning-rate decay.
TrainResult train(const InteractionTensor& tensor, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// Users with at least one target-behavior item, in index order.
std::vector<Index> trainable_users(const InteractionTensor& tensor);

// CSV `epoch,mean_pair_loss,reg_term,lr`.
void write_loss_log(const std::string& path, const std::vector<EpochLog>& log);

}  // namespace matn
