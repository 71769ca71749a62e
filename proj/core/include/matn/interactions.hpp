#pragma once

#include "matn/numerics.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace matn {

using Index = std::uint32_t;

// Ordered behavior labels plus the index of the behavior being predicted.
class BehaviorSchema {
 public:
  BehaviorSchema() = default;
  // Throws SchemaError (line 0) on empty/duplicate labels or a bad target.
  BehaviorSchema(std::vector<std::string> names, std::size_t target_index);
  // Convenience: the target is given by label.
  BehaviorSchema(std::vector<std::string> names, std::string_view target);

  std::size_t size() const { return names_.size(); }
  std::size_t target_index() const { return target_; }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(std::size_t l) const { return names_.at(l); }
  std::optional<std::size_t> find(std::string_view label) const;

  bool operator==(const BehaviorSchema&) const = default;

 private:
  std::vector<std::string> names_;
  std::size_t target_ = 0;
};

// Bidirectional external-ID <-> dense-index map.
class IdMap {
 public:
  Index intern(const std::string& id);
  std::optional<Index> find(const std::string& id) const;
  const std::string& external(Index i) const { return ids_.at(i); }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }

  bool operator==(const IdMap& other) const { return ids_ == other.ids_; }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, Index> index_;
};

struct Event {
  Index item;
  std::uint32_t behavior;
  bool operator==(const Event&) const = default;
};

// Sparse binary I x J x L tensor of implicit feedback. Immutable once built
// (all mutation goes through InteractionTensor::Builder).
class InteractionTensor {
 public:
  class Builder;

  std::size_t num_users() const { return users_.size(); }
  std::size_t num_items() const { return items_.size(); }
  std::size_t num_behaviors() const { return schema_.size(); }
  const BehaviorSchema& schema() const { return schema_; }
  const IdMap& users() const { return users_; }
  const IdMap& items() const { return items_; }

  // Sorted, duplicate-free item indices of `user` under `behavior`.
  const std::vector<Index>& items_of(Index user, std::size_t behavior) const {
    return events_[user][behavior];
  }
  const std::vector<Index>& target_items(Index user) const {
    return items_of(user, schema_.target_index());
  }
  bool has(Index user, Index item, std::size_t behavior) const;
  bool has_any(Index user, Index item) const;

  // The user's events ordered by their last appearance in the source, i.e.
  // oldest first when the source is sorted by time.
  const std::vector<Event>& history(Index user) const { return history_[user]; }

  std::size_t num_events() const;
  std::size_t num_events(Index user) const;

  // Same (user, item, behavior) triples by external id and same schema.
  bool equivalent(const InteractionTensor& other) const;

  // Writes the tab-separated format, one event per line, in history order.
  void save_tsv(const std::filesystem::path& path) const;

 private:
  friend class Builder;

  BehaviorSchema schema_;
  IdMap users_;
  IdMap items_;
  std::vector<std::vector<std::vector<Index>>> events_;  // [user][behavior]
  std::vector<std::vector<Event>> history_;              // [user]
};

class InteractionTensor::Builder {
 public:
  explicit Builder(BehaviorSchema schema);

  // Registers the id without adding events (keeps index spaces aligned).
  Index add_user(const std::string& id) { return grow_user(users_.intern(id)); }
  Index add_item(const std::string& id) { return items_.intern(id); }

  // Duplicate triples collapse; the repeated record becomes the latest one.
  void add(const std::string& user, const std::string& item,
           std::size_t behavior);
  void add(Index user, Index item, std::size_t behavior);

  InteractionTensor build() &&;

 private:
  Index grow_user(Index u);

  BehaviorSchema schema_;
  IdMap users_;
  IdMap items_;
  std::vector<std::vector<Event>> history_;
};

// Reads `<user>\t<item>\t<behavior>` lines. ParseError on malformed lines and
// SchemaError on unknown behavior labels, both carrying the 1-based line.
InteractionTensor load_interactions(const std::filesystem::path& path,
                                    const BehaviorSchema& schema);
InteractionTensor parse_interactions(std::string_view text,
                                     const BehaviorSchema& schema);

// Which items count as "interacted" when drawing negatives.
enum class NegativeRule { kTargetOnly, kAnyBehavior };

NegativeRule parse_negative_rule(std::string_view text);
std::string_view to_string(NegativeRule rule);

// Sorted union of the item lists a negative must avoid under `rule`.
std::vector<Index> excluded_items(const InteractionTensor& tensor, Index user,
                                  NegativeRule rule);

inline constexpr std::size_t kEvalNegatives = 99;

struct EvalSplit {
  std::vector<std::optional<Index>> held_out;      // [user]
  std::vector<std::vector<Index>> eval_negatives;  // [user]; empty if none
  std::uint64_t rng_seed = 0;
  std::vector<std::string> warnings;

  bool evaluable(Index user) const { return held_out[user].has_value(); }
  std::size_t num_evaluable() const;

  bool operator==(const EvalSplit&) const = default;
};

struct SplitResult {
  InteractionTensor train;
  EvalSplit split;
};

// Holds out each user's most recent target event (last in source order) when
// the user has at least two, and draws 99 negatives from items the user never
// touched under `rule`. All events on the held-out pair are removed from
// training. Users without enough candidates are excluded and
// reported in EvalSplit::warnings.
SplitResult leave_one_out_split(const InteractionTensor& tensor,
                                std::uint64_t seed,
                                NegativeRule rule = NegativeRule::kAnyBehavior);

// Keeps only the listed behavior indices (in ascending order). Throws
// InvalidAblationError unless the target is kept.
InteractionTensor behavior_subset(const InteractionTensor& tensor,
                                  const std::set<std::size_t>& keep);

// Parses comma-separated labels ("view,buy") against `schema`.
std::set<std::size_t> parse_behavior_set(const BehaviorSchema& schema,
                                         std::string_view labels);

}  // namespace matn
