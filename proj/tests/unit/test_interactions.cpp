#include "fixtures.hpp"
#include "matn/errors.hpp"
#include "matn/interactions.hpp"
#include "matn/synthetic.hpp"

#include <gtest/gtest.h>

#include <algorithm>

namespace matn {
namespace {

const BehaviorSchema kViewBuy({"view", "buy"}, "buy");

TEST(Schema, Validates) {
  EXPECT_THROW(BehaviorSchema({}, std::size_t{0}), SchemaError);
  EXPECT_THROW(BehaviorSchema({"a", "a"}, std::size_t{0}), SchemaError);
  EXPECT_THROW(BehaviorSchema({"a", ""}, std::size_t{0}), SchemaError);
  EXPECT_THROW(BehaviorSchema({"a", "b"}, std::size_t{2}), SchemaError);
  EXPECT_THROW(BehaviorSchema({"a", "b"}, "c"), SchemaError);
  const BehaviorSchema s({"a", "b", "c"}, "b");
  EXPECT_EQ(s.target_index(), 1u);
  EXPECT_EQ(s.find("c"), 2u);
  EXPECT_FALSE(s.find("z"));
}

TEST(Load, CountsThreeEvents) {
  const auto t = parse_interactions("uA\ti1\tview\nuA\ti2\tbuy\nuB\ti1\tbuy\n", kViewBuy);
  EXPECT_EQ(t.num_users(), 2u);
  EXPECT_EQ(t.num_items(), 2u);
  EXPECT_EQ(t.num_behaviors(), 2u);
  EXPECT_EQ(t.num_events(), 3u);
  EXPECT_TRUE(t.has(0, 0, 0));
  EXPECT_TRUE(t.has(0, 1, 1));
  EXPECT_TRUE(t.has(1, 0, 1));
  EXPECT_FALSE(t.has(1, 1, 1));
}

TEST(Load, DuplicatesCollapse) {
  const auto once = parse_interactions("uA\ti1\tview\nuA\ti2\tbuy\nuB\ti1\tbuy\n", kViewBuy);
  const auto twice = parse_interactions(
      "uA\ti1\tview\nuA\ti2\tbuy\nuB\ti1\tbuy\nuA\ti1\tview\n", kViewBuy);
  EXPECT_EQ(twice.num_events(), 3u);
  EXPECT_TRUE(once.equivalent(twice));
}

TEST(Load, UnknownLabelIsSchemaErrorWithLine) {
  try {
    parse_interactions("uA\ti2\tbuy\nuA\ti1\tgrok\n", kViewBuy);
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("grok"), std::string::npos);
  }
}

TEST(Load, MalformedLineIsParseErrorWithLine) {
  try {
    parse_interactions("uA\ti2\tbuy\n\nuA i1 view\n", kViewBuy);
    FAIL() << "expected ParseError";
  } catch (const SchemaError&) {
    FAIL() << "wrong error type";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(parse_interactions("\ti1\tview\n", kViewBuy), ParseError);
  EXPECT_THROW(parse_interactions("uA\ti1\tview\textra\n", kViewBuy), ParseError);
}

TEST(Load, ToleratesCrlfAndMissingFinalNewline) {
  const auto t = parse_interactions("uA\ti1\tview\r\nuB\ti1\tbuy", kViewBuy);
  EXPECT_EQ(t.num_events(), 2u);
}

TEST(Load, MissingFileThrows) {
  EXPECT_THROW(load_interactions("/nonexistent/path.tsv", kViewBuy), Error);
}

TEST(Tensor, TsvRoundTrip) {
  const auto t = testing::planted_dataset();
  const auto dir = testing::scratch_dir("tsv_roundtrip");
  t.save_tsv(dir / "d.tsv");
  const auto back = load_interactions(dir / "d.tsv", t.schema());
  EXPECT_TRUE(t.equivalent(back));
  EXPECT_EQ(back.num_events(), t.num_events());
}

TEST(Tensor, EquivalentIgnoresRecordOrder) {
  const auto a = parse_interactions("uA\ti1\tview\nuB\ti2\tbuy\n", kViewBuy);
  const auto b = parse_interactions("uB\ti2\tbuy\nuA\ti1\tview\n", kViewBuy);
  EXPECT_TRUE(a.equivalent(b));
  const auto c = parse_interactions("uB\ti2\tbuy\nuA\ti1\tbuy\n", kViewBuy);
  EXPECT_FALSE(a.equivalent(c));
}

TEST(Split, SingleTargetUserExcluded) {
  // uA buys once, so nothing is held out and no event leaves training
  InteractionTensor::Builder b(kViewBuy);
  for (int j = 0; j < 120; ++j) b.add_item("i" + std::to_string(j));
  b.add("uA", "i0", 0);
  b.add("uA", "i1", 1);
  const auto t = std::move(b).build();
  const auto r = leave_one_out_split(t, 1);
  EXPECT_FALSE(r.split.evaluable(0));
  EXPECT_EQ(r.train.num_events(), 2u);
}

TEST(Split, HoldsOutLastTargetInFileOrder) {
  InteractionTensor::Builder b(kViewBuy);
  for (int j = 0; j < 120; ++j) b.add_item("i" + std::to_string(j));
  b.add("uA", "i5", 1);
  b.add("uA", "i9", 1);
  b.add("uA", "i2", 1);
  b.add("uA", "i7", 0);
  const auto t = std::move(b).build();
  const auto r = leave_one_out_split(t, 1);
  ASSERT_TRUE(r.split.evaluable(0));
  EXPECT_EQ(t.items().external(*r.split.held_out[0]), "i2");
  EXPECT_EQ(r.train.target_items(0).size(), 2u);
  EXPECT_EQ(r.split.eval_negatives[0].size(), kEvalNegatives);
}

TEST(Split, HeldOutPairLeavesTrainingUnderEveryBehavior) {
  InteractionTensor::Builder b(kViewBuy);
  for (int j = 0; j < 120; ++j) b.add_item("i" + std::to_string(j));
  b.add("uA", "i3", 0);
  b.add("uA", "i3", 1);
  b.add("uA", "i4", 0);
  b.add("uA", "i4", 1);
  const auto t = std::move(b).build();
  const auto r = leave_one_out_split(t, 1);
  const Index held = *r.split.held_out[0];
  EXPECT_FALSE(r.train.has_any(0, held));
  EXPECT_EQ(r.train.num_events() + 2, t.num_events());
}

TEST(Split, TooFewCandidatesWarns) {
  const auto t = testing::planted_dataset();  // only 20 items
  const auto r = leave_one_out_split(t, 3);
  EXPECT_EQ(r.split.num_evaluable(), 0u);
  EXPECT_FALSE(r.split.warnings.empty());
  EXPECT_TRUE(r.train.equivalent(t));
}

TEST(Split, SeedDeterminism) {
  const auto t = generate(testing::ranking_spec(0));
  const auto a = leave_one_out_split(t, 7);
  const auto b = leave_one_out_split(t, 7);
  EXPECT_EQ(a.split, b.split);
  EXPECT_TRUE(a.train.equivalent(b.train));
  const auto c = leave_one_out_split(t, 8);
  EXPECT_EQ(a.split.held_out, c.split.held_out);
  EXPECT_NE(a.split.eval_negatives, c.split.eval_negatives);
}

TEST(Split, ConservationAndNegativePurity) {
  const auto t = generate(testing::ranking_spec(1));
  const auto r = leave_one_out_split(t, 1);
  std::size_t removed_total = 0;
  for (Index u = 0; u < t.num_users(); ++u) {
    std::size_t removed = 0;
    if (r.split.evaluable(u)) {
      const Index held = *r.split.held_out[u];
      EXPECT_TRUE(t.has(u, held, t.schema().target_index()));
      EXPECT_FALSE(r.train.has_any(u, held));
      for (std::size_t l = 0; l < t.num_behaviors(); ++l) removed += t.has(u, held, l);
      const auto& negs = r.split.eval_negatives[u];
      EXPECT_EQ(negs.size(), kEvalNegatives);
      auto sorted = negs;
      std::sort(sorted.begin(), sorted.end());
      EXPECT_EQ(std::adjacent_find(sorted.begin(), sorted.end()), sorted.end());
      for (Index j : negs) {
        EXPECT_FALSE(t.has_any(u, j)) << "negative touched by user " << u;
        EXPECT_NE(j, held);
      }
    } else {
      EXPECT_LT(t.target_items(u).size(), 2u);
      EXPECT_TRUE(r.split.eval_negatives[u].empty());
    }
    EXPECT_EQ(r.train.num_events(u) + removed, t.num_events(u));
    removed_total += removed;
  }
  EXPECT_EQ(r.train.num_events() + removed_total, t.num_events());
  EXPECT_GT(r.split.num_evaluable(), 100u);
}

TEST(Split, TargetOnlyRuleAllowsViewedNegatives) {
  const auto t = generate(testing::ranking_spec(2));
  const auto r = leave_one_out_split(t, 2, NegativeRule::kTargetOnly);
  for (Index u = 0; u < t.num_users(); ++u) {
    for (Index j : r.split.eval_negatives[u]) {
      EXPECT_FALSE(t.has(u, j, t.schema().target_index()));
    }
  }
}

TEST(Subset, KeepAllIsIdentity) {
  const auto t = testing::three_event_tensor();
  const auto s = behavior_subset(t, {0, 1});
  EXPECT_TRUE(s.equivalent(t));
  EXPECT_EQ(s.schema(), t.schema());
}

TEST(Subset, TargetOnly) {
  const auto t = testing::three_event_tensor();
  const auto s = behavior_subset(t, {1});
  EXPECT_EQ(s.num_events(), 2u);
  EXPECT_EQ(s.num_behaviors(), 1u);
  EXPECT_EQ(s.schema().target_index(), 0u);
  EXPECT_EQ(s.num_users(), t.num_users());
  EXPECT_EQ(s.num_items(), t.num_items());
}

TEST(Subset, DroppingTargetThrows) {
  const auto t = testing::three_event_tensor();
  EXPECT_THROW(behavior_subset(t, {0}), InvalidAblationError);
}

TEST(Subset, ParseBehaviorSet) {
  const BehaviorSchema s({"view", "fav", "cart", "buy"}, "buy");
  EXPECT_EQ(parse_behavior_set(s, "cart,buy"), (std::set<std::size_t>{2, 3}));
  EXPECT_THROW(parse_behavior_set(s, "cart,nope"), InvalidAblationError);
}

TEST(NegativeRuleText, RoundTrip) {
  EXPECT_EQ(parse_negative_rule("target"), NegativeRule::kTargetOnly);
  EXPECT_EQ(parse_negative_rule("any"), NegativeRule::kAnyBehavior);
  EXPECT_EQ(to_string(NegativeRule::kAnyBehavior), "any");
  EXPECT_THROW(parse_negative_rule("some"), Error);
}

TEST(History, OrderedByLastAppearance) {
  const auto t = parse_interactions(
      "uA\ti1\tbuy\nuA\ti2\tbuy\nuA\ti1\tbuy\n", kViewBuy);
  const auto& h = t.history(0);
  ASSERT_EQ(h.size(), 2u);
  EXPECT_EQ(t.items().external(h.back().item), "i1");
}

}  // namespace
}  // namespace matn
