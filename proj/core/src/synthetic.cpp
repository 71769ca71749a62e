#include "matn/synthetic.hpp"

#include "matn/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace matn {

void SynthSpec::validate() const {
  if (num_users < 1 || num_items < 1 || latent_dim < 1 || behaviors.empty()) {
    throw Error("synthetic spec: counts must be >= 1");
  }
  if (funnel_probs.size() + 1 != behaviors.size()) {
    throw Error("synthetic spec: need " + std::to_string(behaviors.size() - 1) +
                " funnel probabilities for " + std::to_string(behaviors.size()) +
                " behaviors");
  }
  for (double p : funnel_probs) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error("synthetic spec: funnel probabilities must lie in [0, 1]");
    }
  }
  if (!(base_rate >= 0.0 && base_rate <= 1.0)) {
    throw Error("synthetic spec: base rate must lie in [0, 1]");
  }
  if (!(noise_std >= 0.0)) throw Error("synthetic spec: noise must be >= 0");
}

BehaviorSchema SynthSpec::schema() const {
  return BehaviorSchema(behaviors, behaviors.size() - 1);
}

double SynthSpec::expected_target_events() const {
  double e = base_rate * static_cast<double>(num_items);
  for (double p : funnel_probs) e *= p;
  return e;
}

std::vector<std::string> synth_warnings(const SynthSpec& spec) {
  std::vector<std::string> out;
  if (spec.expected_target_events() < 1.0) {
    out.push_back("expected target events per user is " +
                  std::to_string(spec.expected_target_events()) +
                  " (< 1); many users will have no target interactions");
  }
  return out;
}

InteractionTensor generate(const SynthSpec& spec) {
  spec.validate();
  const auto I = spec.num_users;
  const auto J = spec.num_items;
  const auto K = static_cast<Eigen::Index>(spec.latent_dim);
  Rng rng(spec.seed);

  DenseMatrix users(I, K), items(J, K);
  for (Eigen::Index k = 0; k < users.size(); ++k) users.data()[k] = rng.normal();
  for (Eigen::Index k = 0; k < items.size(); ++k) items.data()[k] = rng.normal();

  // Unit-variance signal plus noise; views are the top base_rate fraction.
  DenseMatrix affinity = users * items.transpose() / std::sqrt(static_cast<double>(K));
  for (Eigen::Index k = 0; k < affinity.size(); ++k) {
    affinity.data()[k] += spec.noise_std * rng.normal();
  }
  const auto total = static_cast<std::size_t>(affinity.size());
  const auto views = static_cast<std::size_t>(
      std::llround(spec.base_rate * static_cast<double>(total)));
  double threshold = std::numeric_limits<double>::infinity();
  if (views > 0) {
    std::vector<double> sorted(affinity.data(), affinity.data() + total);
    std::nth_element(sorted.begin(), sorted.begin() + (total - views),
                     sorted.end());
    threshold = sorted[total - views];
  }

  InteractionTensor::Builder builder(spec.schema());
  for (std::size_t i = 0; i < I; ++i) builder.add_user("u" + std::to_string(i));
  for (std::size_t j = 0; j < J; ++j) builder.add_item("i" + std::to_string(j));

  std::vector<Index> order(J);
  for (std::size_t i = 0; i < I; ++i) {
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (Index j : order) {
      if (affinity(static_cast<Eigen::Index>(i), j) < threshold) continue;
      builder.add(static_cast<Index>(i), j, 0);
      for (std::size_t stage = 1; stage < spec.behaviors.size(); ++stage) {
        if (!rng.bernoulli(spec.funnel_probs[stage - 1])) break;
        builder.add(static_cast<Index>(i), j, stage);
      }
    }
  }
  return std::move(builder).build();
}

}  // namespace matn
