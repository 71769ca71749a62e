#include "fixtures.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>
#include <sstream>

namespace matn::testing {

SynthSpec planted_spec() {
  SynthSpec spec;
  spec.num_users = 10;
  spec.num_items = 20;
  spec.base_rate = 0.5;
  spec.funnel_probs = {0.7, 0.7, 0.7};
  spec.seed = 3;
  return spec;
}

InteractionTensor planted_dataset() { return generate(planted_spec()); }

TrainConfig overfit_config() {
  TrainConfig c;
  c.reg = 0.0;
  c.epochs = 500;
  c.lr_decay = 1.0;
  c.seed = 1;
  return c;
}

SynthSpec ranking_spec(std::uint64_t seed) {
  SynthSpec spec;
  spec.seed = seed;
  return spec;
}

TrainConfig ranking_config(std::uint64_t seed) {
  TrainConfig c;
  c.epochs = 300;
  c.reg = 0.2;
  c.lr_decay = 1.0;
  c.train_negatives = NegativeRule::kAnyBehavior;
  c.seed = seed;
  return c;
}

InteractionTensor three_event_tensor() {
  InteractionTensor::Builder b(BehaviorSchema({"view", "buy"}, "buy"));
  b.add("uA", "i1", 0);
  b.add("uA", "i2", 1);
  b.add("uB", "i1", 1);
  return std::move(b).build();
}

ToyInstance toy_instance(bool raw_attention) {
  SynthSpec spec;
  spec.num_users = 6;
  spec.num_items = 10;
  spec.behaviors = {"a", "b", "c"};
  spec.funnel_probs = {0.8, 0.8};
  spec.base_rate = 0.5;
  spec.seed = 1;

  ToyInstance toy{generate(spec), {}, {}, {}};
  auto& c = toy.config;
  c.dim = 4;
  c.heads = 2;
  c.memories = 3;
  c.depth = 2;
  c.samples = 2;
  c.reg = 0.01;
  c.seed = 5;
  c.raw_attention_weights = raw_attention;

  Rng rng(5);
  toy.params = ModelParams::init(make_shape(c, 3, 10), rng);
  // nonzero biases and gate logits so their gradients are exercised
  toy.params.memory_bias.setConstant(0.1);
  for (auto& layer : toy.params.feed_forward) layer.bias.setConstant(0.05);
  toy.params.gate << 0.3, -0.2, 0.1;
  for (Index u = 0; u < toy.tensor.num_users(); ++u) {
    if (auto p = sample_pairs(toy.tensor, u, c.samples, rng,
                              NegativeRule::kTargetOnly)) {
      toy.pairs.push_back(*p);
    }
  }
  return toy;
}

double kink_distance(const ToyInstance& toy) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& pairs : toy.pairs) {
    const auto trace = forward(toy.tensor, pairs.user, toy.params, toy.config);
    for (double v : trace.mem_pre.reshaped()) best = std::min(best, std::abs(v));
    for (const auto& pre : trace.ff_pre) {
      for (double v : pre) best = std::min(best, std::abs(v));
    }
    for (std::size_t k = 0; k < pairs.positives.size(); ++k) {
      const double margin = 1.0 - score(trace.gamma, pairs.positives[k], toy.params) +
                            score(trace.gamma, pairs.negatives[k], toy.params);
      best = std::min(best, std::abs(margin));
    }
  }
  return best;
}

GradientReport check_gradients(ToyInstance& toy, double eps) {
  const auto analytic = batch_loss(toy.tensor, toy.pairs, toy.params, toy.config);
  const std::function<double(const ModelParams&)> loss =
      [&](const ModelParams& p) {
        return batch_loss(toy.tensor, toy.pairs, p, toy.config).loss;
      };
  const auto numeric = finite_diff_grad(loss, toy.params, eps);
  const auto views = analytic.gradient.tensors();
  GradientReport report;
  for (std::size_t k = 0; k < views.size(); ++k) {
    for (std::size_t i = 0; i < views[k].data.size(); ++i) {
      const double err = relative_error(views[k].data[i], numeric[k][i]);
      ++report.coordinates;
      if (err > report.worst_error) {
        report.worst_error = err;
        report.worst_tensor = views[k].name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return report;
}

std::size_t sort_rank(std::span<const double> scores, std::size_t positive) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    // among equal scores the positive goes last
    if ((a == positive) != (b == positive)) return b == positive;
    return a < b;
  });
  return static_cast<std::size_t>(
             std::find(order.begin(), order.end(), positive) - order.begin()) +
         1;
}

std::vector<double> all_scores(const InteractionTensor& tensor, Index user,
                               const ModelParams& params,
                               const TrainConfig& config) {
  const auto trace = forward(tensor, user, params, config);
  std::vector<double> out(tensor.num_items());
  for (std::size_t j = 0; j < out.size(); ++j) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < trace.gamma.size(); ++k) {
      s += params.item_table(static_cast<Eigen::Index>(j), k) * trace.gamma(k);
    }
    out[j] = s;
  }
  return out;
}

Relabeled relabel_items(const InteractionTensor& tensor, const ModelParams& params,
                        Rng& rng) {
  std::vector<Index> perm(tensor.num_items());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng.engine());
  std::vector<Index> inverse(perm.size());
  for (Index j = 0; j < perm.size(); ++j) inverse[perm[j]] = j;

  InteractionTensor::Builder b(tensor.schema());
  for (Index u = 0; u < tensor.num_users(); ++u) b.add_user(tensor.users().external(u));
  for (Index k = 0; k < perm.size(); ++k) b.add_item(tensor.items().external(inverse[k]));
  for (Index u = 0; u < tensor.num_users(); ++u) {
    for (const auto& e : tensor.history(u)) b.add(u, perm[e.item], e.behavior);
  }
  Relabeled out{std::move(b).build(), params, perm};
  for (Index j = 0; j < perm.size(); ++j) {
    out.params.projection.col(perm[j]) = params.projection.col(j);
    out.params.item_table.row(perm[j]) = params.item_table.row(j);
  }
  return out;
}

TraceSweep sweep_trace_invariants(const InteractionTensor& tensor,
                                  const ModelParams& params,
                                  const TrainConfig& config) {
  TraceSweep s;
  s.attention_min = s.memory_min = s.gate_min = std::numeric_limits<double>::infinity();
  for (Index u = 0; u < tensor.num_users(); ++u) {
    const auto tr = forward(tensor, u, params, config);
    for (const auto& w : tr.attn_weights) {
      s.attention_min = std::min(s.attention_min, w.minCoeff());
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        s.attention_row_error = std::max(s.attention_row_error, std::abs(w.row(r).sum() - 1.0));
      }
    }
    s.memory_min = std::min(s.memory_min, tr.mem_weights.minCoeff());
    s.gate_sum_error = std::max(s.gate_sum_error, std::abs(tr.gate_weights.sum() - 1.0));
    s.gate_min = std::min(s.gate_min, tr.gate_weights.minCoeff());
    ++s.users;
  }
  return s;
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("matn_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace matn::testing
