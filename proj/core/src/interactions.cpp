#include "matn/interactions.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <tuple>
#include <unordered_set>

namespace matn {

namespace {

std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_view(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

bool sorted_contains(const std::vector<Index>& v, Index x) {
  return std::binary_search(v.begin(), v.end(), x);
}

}  // namespace

// ---------------------------------------------------------------------------
// BehaviorSchema

BehaviorSchema::BehaviorSchema(std::vector<std::string> names,
                               std::size_t target_index)
    : names_(std::move(names)), target_(target_index) {
  if (names_.empty()) throw SchemaError("behavior schema is empty", 0);
  std::unordered_set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw SchemaError("empty behavior label", 0);
    if (!seen.insert(n).second) {
      throw SchemaError("duplicate behavior label '" + n + "'", 0);
    }
  }
  if (target_ >= names_.size()) {
    throw SchemaError("target index " + std::to_string(target_) +
                          " out of range for " + std::to_string(names_.size()) +
                          " behaviors",
                      0);
  }
}

BehaviorSchema::BehaviorSchema(std::vector<std::string> names,
                               std::string_view target)
    : BehaviorSchema(names, [&] {
        const auto it = std::find(names.begin(), names.end(), target);
        if (it == names.end()) {
          throw SchemaError(
              "target behavior '" + std::string(target) + "' not in schema", 0);
        }
        return static_cast<std::size_t>(it - names.begin());
      }()) {}

std::optional<std::size_t> BehaviorSchema::find(std::string_view label) const {
  const auto it = std::find(names_.begin(), names_.end(), label);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

// ---------------------------------------------------------------------------
// IdMap

Index IdMap::intern(const std::string& id) {
  const auto [it, inserted] =
      index_.try_emplace(id, static_cast<Index>(ids_.size()));
  if (inserted) ids_.push_back(id);
  return it->second;
}

std::optional<Index> IdMap::find(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// InteractionTensor

bool InteractionTensor::has(Index user, Index item,
                            std::size_t behavior) const {
  return sorted_contains(events_[user][behavior], item);
}

bool InteractionTensor::has_any(Index user, Index item) const {
  for (std::size_t l = 0; l < num_behaviors(); ++l) {
    if (has(user, item, l)) return true;
  }
  return false;
}

std::size_t InteractionTensor::num_events(Index user) const {
  return history_[user].size();
}

std::size_t InteractionTensor::num_events() const {
  std::size_t n = 0;
  for (const auto& h : history_) n += h.size();
  return n;
}

bool InteractionTensor::equivalent(const InteractionTensor& other) const {
  if (!(schema_ == other.schema_)) return false;
  using Triple = std::tuple<std::string, std::string, std::uint32_t>;
  auto triples = [](const InteractionTensor& t) {
    std::vector<Triple> out;
    for (Index u = 0; u < t.num_users(); ++u) {
      for (const auto& e : t.history(u)) {
        out.emplace_back(t.users().external(u), t.items().external(e.item),
                         e.behavior);
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  return triples(*this) == triples(other);
}

void InteractionTensor::save_tsv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  for (Index u = 0; u < num_users(); ++u) {
    for (const auto& e : history_[u]) {
      out << users_.external(u) << '\t' << items_.external(e.item) << '\t'
          << schema_.name(e.behavior) << '\n';
    }
  }
  if (!out) throw Error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Builder

InteractionTensor::Builder::Builder(BehaviorSchema schema)
    : schema_(std::move(schema)) {}

Index InteractionTensor::Builder::grow_user(Index u) {
  if (u >= history_.size()) history_.resize(u + 1);
  return u;
}

void InteractionTensor::Builder::add(const std::string& user,
                                     const std::string& item,
                                     std::size_t behavior) {
  add(add_user(user), add_item(item), behavior);
}

void InteractionTensor::Builder::add(Index user, Index item,
                                     std::size_t behavior) {
  if (user >= users_.size() || item >= items_.size()) {
    throw DimensionError("builder: unregistered user or item index");
  }
  if (behavior >= schema_.size()) {
    throw DimensionError("builder: behavior index out of range");
  }
  grow_user(user);
  history_[user].push_back({item, static_cast<std::uint32_t>(behavior)});
}

InteractionTensor InteractionTensor::Builder::build() && {
  InteractionTensor t;
  t.schema_ = std::move(schema_);
  t.users_ = std::move(users_);
  t.items_ = std::move(items_);
  history_.resize(t.users_.size());
  const std::size_t L = t.schema_.size();
  t.events_.assign(t.users_.size(), std::vector<std::vector<Index>>(L));

  for (std::size_t u = 0; u < history_.size(); ++u) {
    auto& h = history_[u];
    // Keep only the last occurrence of each (item, behavior).
    std::vector<Event> dedup;
    dedup.reserve(h.size());
    std::unordered_set<std::uint64_t> seen;
    for (auto it = h.rbegin(); it != h.rend(); ++it) {
      const std::uint64_t key =
          (static_cast<std::uint64_t>(it->item) << 8) | it->behavior;
      if (seen.insert(key).second) dedup.push_back(*it);
    }
    std::reverse(dedup.begin(), dedup.end());
    for (const auto& e : dedup) t.events_[u][e.behavior].push_back(e.item);
    for (auto& list : t.events_[u]) std::sort(list.begin(), list.end());
    t.history_.push_back(std::move(dedup));
  }
  return t;
}

// ---------------------------------------------------------------------------
// Loading

InteractionTensor parse_interactions(std::string_view text,
                                     const BehaviorSchema& schema) {
  InteractionTensor::Builder builder(schema);
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = trim_cr(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;

    const auto fields = split_view(line, '\t');
    if (fields.size() != 3) {
      throw ParseError("expected 3 tab-separated fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    }
    if (fields[0].empty() || fields[1].empty()) {
      throw ParseError("empty user or item id", line_no);
    }
    const auto behavior = schema.find(fields[2]);
    if (!behavior) {
      throw SchemaError(
          "unknown behavior label '" + std::string(fields[2]) + "'", line_no);
    }
    builder.add(std::string(fields[0]), std::string(fields[1]), *behavior);
  }
  return std::move(builder).build();
}

InteractionTensor load_interactions(const std::filesystem::path& path,
                                    const BehaviorSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_interactions(buffer.str(), schema);
}

// ---------------------------------------------------------------------------
// Negative rules

NegativeRule parse_negative_rule(std::string_view text) {
  if (text == "target" || text == "target-only") return NegativeRule::kTargetOnly;
  if (text == "any" || text == "any-behavior") return NegativeRule::kAnyBehavior;
  throw Error("unknown negative rule '" + std::string(text) +
              "' (expected target|any)");
}

std::string_view to_string(NegativeRule rule) {
  return rule == NegativeRule::kTargetOnly ? "target" : "any";
}

std::vector<Index> excluded_items(const InteractionTensor& tensor, Index user,
                                  NegativeRule rule) {
  if (rule == NegativeRule::kTargetOnly) return tensor.target_items(user);
  std::vector<Index> all;
  for (std::size_t l = 0; l < tensor.num_behaviors(); ++l) {
    const auto& items = tensor.items_of(user, l);
    all.insert(all.end(), items.begin(), items.end());
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

// ---------------------------------------------------------------------------
// Leave-one-out split

std::size_t EvalSplit::num_evaluable() const {
  return static_cast<std::size_t>(
      std::count_if(held_out.begin(), held_out.end(),
                    [](const auto& h) { return h.has_value(); }));
}

namespace {

// Draws `count` distinct items from [0, J) \ excluded.
std::vector<Index> draw_distinct(std::size_t num_items,
                                 const std::vector<Index>& excluded,
                                 std::size_t count, Rng& rng) {
  const std::size_t available = num_items - excluded.size();
  std::vector<Index> out;
  out.reserve(count);
  if (available >= 4 * count) {
    // Sparse exclusion: rejection sampling.
    std::unordered_set<Index> taken;
    while (out.size() < count) {
      const Index j = rng.index(static_cast<Index>(num_items));
      if (sorted_contains(excluded, j) || !taken.insert(j).second) continue;
      out.push_back(j);
    }
    return out;
  }
  std::vector<Index> pool;
  pool.reserve(available);
  for (Index j = 0; j < num_items; ++j) {
    if (!sorted_contains(excluded, j)) pool.push_back(j);
  }
  for (std::size_t k = 0; k < count; ++k) {
    const auto pick = k + rng.index(static_cast<Index>(pool.size() - k));
    std::swap(pool[k], pool[pick]);
    out.push_back(pool[k]);
  }
  return out;
}

}  // namespace

SplitResult leave_one_out_split(const InteractionTensor& tensor,
                                std::uint64_t seed, NegativeRule rule) {
  if (tensor.num_users() == 0 || tensor.num_events() == 0) {
    throw Error("leave_one_out_split: empty tensor");
  }
  const auto& schema = tensor.schema();
  const auto target = static_cast<std::uint32_t>(schema.target_index());
  const std::size_t I = tensor.num_users();
  const std::size_t J = tensor.num_items();

  EvalSplit split;
  split.rng_seed = seed;
  split.held_out.assign(I, std::nullopt);
  split.eval_negatives.assign(I, {});
  Rng rng(seed);

  InteractionTensor::Builder builder(schema);
  for (Index u = 0; u < I; ++u) builder.add_user(tensor.users().external(u));
  for (Index j = 0; j < J; ++j) builder.add_item(tensor.items().external(j));

  for (Index u = 0; u < I; ++u) {
    const auto& history = tensor.history(u);
    std::optional<Index> held;
    if (tensor.target_items(u).size() >= 2) {
      const auto excluded = excluded_items(tensor, u, rule);
      if (J - excluded.size() < kEvalNegatives) {
        split.warnings.push_back(
            "user '" + tensor.users().external(u) +
            "' excluded from evaluation: fewer than 99 non-interacted items");
      } else {
        for (auto it = history.rbegin(); it != history.rend(); ++it) {
          if (it->behavior == target) {
            held = it->item;
            break;
          }
        }
        split.held_out[u] = held;
        split.eval_negatives[u] =
            draw_distinct(J, excluded, kEvalNegatives, rng);
      }
    }
    // every behavior on the held-out pair leaves training, not just the target
    for (const auto& e : history) {
      if (held && e.item == *held) continue;
      builder.add(u, e.item, e.behavior);
    }
  }
  return {std::move(builder).build(), std::move(split)};
}

// ---------------------------------------------------------------------------
// Behavior subsets

InteractionTensor behavior_subset(const InteractionTensor& tensor,
                                  const std::set<std::size_t>& keep) {
  const auto& schema = tensor.schema();
  if (!keep.contains(schema.target_index())) {
    throw InvalidAblationError("behavior subset must keep the target behavior '" +
                               schema.name(schema.target_index()) + "'");
  }
  std::vector<std::string> names;
  std::vector<std::int64_t> remap(schema.size(), -1);
  std::size_t new_target = 0;
  for (std::size_t l : keep) {
    if (l >= schema.size()) {
      throw InvalidAblationError("behavior index " + std::to_string(l) +
                                 " out of range");
    }
    if (l == schema.target_index()) new_target = names.size();
    remap[l] = static_cast<std::int64_t>(names.size());
    names.push_back(schema.name(l));
  }
  InteractionTensor::Builder builder(BehaviorSchema(names, new_target));
  for (Index u = 0; u < tensor.num_users(); ++u) {
    builder.add_user(tensor.users().external(u));
  }
  for (Index j = 0; j < tensor.num_items(); ++j) {
    builder.add_item(tensor.items().external(j));
  }
  for (Index u = 0; u < tensor.num_users(); ++u) {
    for (const auto& e : tensor.history(u)) {
      if (remap[e.behavior] >= 0) {
        builder.add(u, e.item, static_cast<std::size_t>(remap[e.behavior]));
      }
    }
  }
  return std::move(builder).build();
}

std::set<std::size_t> parse_behavior_set(const BehaviorSchema& schema,
                                         std::string_view labels) {
  std::set<std::size_t> out;
  for (auto label : split_view(labels, ',')) {
    if (label.empty()) continue;
    const auto l = schema.find(label);
    if (!l) {
      throw InvalidAblationError("unknown behavior '" + std::string(label) +
                                 "' in behavior subset");
    }
    out.insert(*l);
  }
  return out;
}

}  // namespace matn
