#pragma once

#include "matn/interactions.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace matn {

// Funnel-structured multi-behavior data: behavior n+1 can only occur where
// behavior n occurred, with probability funnel_probs[n]. The last behavior is
// the target.
struct SynthSpec {
  std::size_t num_users = 500;
  std::size_t num_items = 300;
  std::vector<std::string> behaviors = {"view", "fav", "cart", "buy"};
  std::size_t latent_dim = 8;
  std::vector<double> funnel_probs = {0.5, 0.5, 0.5};  // size L-1
  double base_rate = 0.0667;  // fraction of (user, item) pairs viewed
  double noise_std = 0.5;     // affinity noise, relative to unit signal
  std::uint64_t seed = 0;

  void validate() const;
  BehaviorSchema schema() const;
  // base_rate * J * prod(funnel_probs)
  double expected_target_events() const;
};

// Warnings about degenerate specs (expected target events per user < 1).
std::vector<std::string> synth_warnings(const SynthSpec& spec);

// Deterministic in `spec`. User and item ids are "u<i>" and "i<j>"; each
// user's events are emitted in a seeded random item order, funnel stages of
// one item in funnel order.
InteractionTensor generate(const SynthSpec& spec);

}  // namespace matn
