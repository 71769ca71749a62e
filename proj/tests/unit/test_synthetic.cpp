#include "fixtures.hpp"
#include "matn/errors.hpp"
#include "matn/synthetic.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

namespace matn {
namespace {

SynthSpec mid_spec(std::uint64_t seed) {
  SynthSpec s;
  s.num_users = 200;
  s.num_items = 100;
  s.base_rate = 0.2;
  s.seed = seed;
  return s;
}

TEST(Synth, SaturatedFunnelCopiesLayers) {
  auto s = mid_spec(1);
  s.funnel_probs = {1.0, 1.0, 1.0};
  const auto t = generate(s);
  for (Index u = 0; u < t.num_users(); ++u) {
    for (std::size_t l = 1; l < 4; ++l) EXPECT_EQ(t.items_of(u, l), t.items_of(u, 0));
  }
}

TEST(Synth, ClosedFunnelOnlyViews) {
  auto s = mid_spec(2);
  s.funnel_probs = {0.0, 0.0, 0.0};
  const auto t = generate(s);
  std::size_t views = 0;
  for (Index u = 0; u < t.num_users(); ++u) {
    views += t.items_of(u, 0).size();
    for (std::size_t l = 1; l < 4; ++l) EXPECT_TRUE(t.items_of(u, l).empty());
  }
  EXPECT_EQ(views, t.num_events());
  EXPECT_GT(views, 0u);
}

TEST(Synth, ConditionalRateWithinBinomialBound) {
  auto s = mid_spec(3);
  s.num_users = 1000;
  s.funnel_probs = {0.6, 0.5, 0.3};
  const auto t = generate(s);
  std::size_t carts = 0, buys = 0;
  for (Index u = 0; u < t.num_users(); ++u) {
    carts += t.items_of(u, 2).size();
    buys += t.items_of(u, 3).size();
  }
  ASSERT_GT(carts, 1000u);
  const double n = static_cast<double>(carts);
  const double sigma = std::sqrt(0.3 * 0.7 / n);
  EXPECT_LT(std::abs(static_cast<double>(buys) / n - 0.3), 3.0 * sigma);
}

TEST(Synth, Containment) {
  const auto t = generate(mid_spec(4));
  for (Index u = 0; u < t.num_users(); ++u) {
    for (std::size_t l = 1; l < 4; ++l) {
      const auto& inner = t.items_of(u, l);
      const auto& outer = t.items_of(u, l - 1);
      EXPECT_TRUE(std::includes(outer.begin(), outer.end(), inner.begin(), inner.end()));
    }
  }
}

TEST(Synth, SeedDeterminismToTheByte) {
  const auto dir = testing::scratch_dir("synth_det");
  generate(mid_spec(5)).save_tsv(dir / "a.tsv");
  generate(mid_spec(5)).save_tsv(dir / "b.tsv");
  generate(mid_spec(6)).save_tsv(dir / "c.tsv");
  EXPECT_EQ(testing::read_bytes(dir / "a.tsv"), testing::read_bytes(dir / "b.tsv"));
  EXPECT_NE(testing::read_bytes(dir / "a.tsv"), testing::read_bytes(dir / "c.tsv"));
}

TEST(Synth, DefaultSpecHasAboutTwentyViewsPerUser) {
  const auto t = generate(testing::ranking_spec(0));
  std::vector<std::size_t> views;
  for (Index u = 0; u < t.num_users(); ++u) views.push_back(t.items_of(u, 0).size());
  std::nth_element(views.begin(), views.begin() + 250, views.end());
  EXPECT_GE(views[250], 15u);
  EXPECT_LE(views[250], 25u);
  EXPECT_EQ(t.num_users(), 500u);
  EXPECT_EQ(t.num_items(), 300u);
}

TEST(Synth, ViewRateMatchesBaseRate) {
  const auto s = mid_spec(7);
  const auto t = generate(s);
  std::size_t views = 0;
  for (Index u = 0; u < t.num_users(); ++u) views += t.items_of(u, 0).size();
  const double pairs = static_cast<double>(s.num_users * s.num_items);
  EXPECT_NEAR(static_cast<double>(views) / pairs, s.base_rate, 0.01);
}

TEST(Synth, TargetIsLastBehavior) {
  const auto s = mid_spec(8);
  EXPECT_EQ(s.schema().target_index(), 3u);
  EXPECT_EQ(s.schema().name(3), "buy");
}

TEST(Synth, ValidateRejectsBadSpecs) {
  auto s = mid_spec(9);
  s.funnel_probs = {0.5, 0.5};
  EXPECT_THROW(s.validate(), Error);
  s = mid_spec(9);
  s.funnel_probs = {0.5, 1.5, 0.5};
  EXPECT_THROW(s.validate(), Error);
  s = mid_spec(9);
  s.num_users = 0;
  EXPECT_THROW(s.validate(), Error);
  s = mid_spec(9);
  s.base_rate = 1.5;
  EXPECT_THROW(s.validate(), Error);
}

TEST(Synth, DegenerateSpecWarns) {
  auto s = mid_spec(10);
  s.funnel_probs = {0.1, 0.1, 0.1};
  EXPECT_LT(s.expected_target_events(), 1.0);
  EXPECT_FALSE(synth_warnings(s).empty());
  EXPECT_NO_THROW(generate(s));
  EXPECT_TRUE(synth_warnings(mid_spec(10)).empty());
}

TEST(Synth, ExternalIds) {
  const auto t = generate(mid_spec(11));
  EXPECT_EQ(t.users().external(0).front(), 'u');
  EXPECT_EQ(t.items().external(0).front(), 'i');
}

}  // namespace
}  // namespace matn
