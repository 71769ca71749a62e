#pragma once

#include "matn/interactions.hpp"
#include "matn/model.hpp"
#include "matn/synthetic.hpp"
#include "matn/training.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace matn::testing {

// 10 users x 20 items, dense funnel: every user has several target items.
SynthSpec planted_spec();
InteractionTensor planted_dataset();
// lambda = 0, 500 epochs, lr 1e-3 held constant.
TrainConfig overfit_config();

// 500 x 300 funnel data used by the ranking comparisons, and the frozen
// training config for it.
SynthSpec ranking_spec(std::uint64_t seed);
TrainConfig ranking_config(std::uint64_t seed);

// (uA,i1,view) (uA,i2,buy) (uB,i1,buy) under schema [view, buy].
InteractionTensor three_event_tensor();

// 6 users, 10 items, 3 behaviors; d=4, H=2, M=3, N=2, s=2, lambda=0.01.
struct ToyInstance {
  InteractionTensor tensor;
  TrainConfig config;
  ModelParams params;
  std::vector<SampledPairs> pairs;
};
ToyInstance toy_instance(bool raw_attention = false);

// Smallest distance of any ReLU pre-activation or hinge margin to its kink.
double kink_distance(const ToyInstance& toy);

struct GradientReport {
  double worst_error = 0.0;
  std::string worst_tensor;
  std::size_t coordinates = 0;
};
// Analytic batch_loss gradient against central differences.
GradientReport check_gradients(ToyInstance& toy, double eps = 1e-5);

// Rank by full sort: descending score, the positive placed after every
// candidate that ties it.
std::size_t sort_rank(std::span<const double> scores, std::size_t positive);

// Scores of every item for `user`, computed without going through
// evaluate().
std::vector<double> all_scores(const InteractionTensor& tensor, Index user,
                               const ModelParams& params,
                               const TrainConfig& config);

// The same data and model with item indices permuted: item j of the input
// becomes perm[j], with V's columns and P's rows moved along.
struct Relabeled {
  InteractionTensor tensor;
  ModelParams params;
  std::vector<Index> perm;
};
Relabeled relabel_items(const InteractionTensor& tensor, const ModelParams& params,
                        Rng& rng);

// Worst-case deviations of the forward-trace invariants over every user.
struct TraceSweep {
  double attention_row_error = 0.0;  // max |sum_l' a[l][l'] - 1|
  double attention_min = 0.0;
  double memory_min = 0.0;
  double gate_sum_error = 0.0;
  double gate_min = 0.0;
  std::size_t users = 0;
};
TraceSweep sweep_trace_invariants(const InteractionTensor& tensor,
                                  const ModelParams& params,
                                  const TrainConfig& config);

std::filesystem::path scratch_dir(const std::string& name);
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace matn::testing
