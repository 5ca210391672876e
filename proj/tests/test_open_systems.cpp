#include <gtest/gtest.h>

#include <cmath>

#include "odx/catalogue.hpp"
#include "odx/open_system.hpp"

using namespace odx;

TEST(Hitting, DoublingSevenEighths) {
  auto m = make_doubling();
  auto h = hitting_time(*m, {0, 0.25L}, 7.0L / 8, 50);
  ASSERT_FALSE(h.censored());
  EXPECT_EQ(*h.time, 3u);
  EXPECT_EQ(h.entered_at, 0);
}

TEST(Hitting, DoublingThirdCensored) {
  auto m = make_doubling();
  for (std::size_t horizon : {1u, 10u, 60u}) EXPECT_TRUE(hitting_time(*m, {0, 0.25L}, 1.0L / 3, horizon).censored());
}

TEST(Hitting, StartInsideHole) {
  auto m = make_doubling();
  auto h = hitting_time(*m, {0, 0.25L}, 0.1L, 10);
  EXPECT_EQ(*h.time, 1u);
  EXPECT_EQ(*escape_time(*m, {0, 0.25L}, 0.1L, 10).time, 0u);
  EXPECT_EQ(*escape_time(*m, {0, 0.25L}, 7.0L / 8, 10).time, 3u);
}

TEST(Hitting, RelationWithEscape) {
  // {tau = t} = f^{-1}{e = t-1}, and e = tau off U.
  auto m = make_lsv(0.5);
  const Interval u{0.6L, 0.65L};
  Rng rng(3, 3);
  for (int i = 0; i < 10000; ++i) {
    coord x = rng.uniform_ld();
    auto tau = hitting_time(*m, u, x, 400);
    auto e = escape_time(*m, u, evaluate(*m, x).y, 400);
    if (tau.censored()) {
      EXPECT_TRUE(e.censored() || *e.time == 400);
      continue;
    }
    ASSERT_FALSE(e.censored());
    EXPECT_EQ(*tau.time, *e.time + 1);
    if (!u.contains(x)) {
      EXPECT_EQ(*escape_time(*m, u, x, 400).time, *tau.time);
    }
  }
}

TEST(Preimage, DoublingOneStep) {
  const coord r = 0.1L;
  auto s = preimage_set(*make_doubling(), IntervalSet::single({0, r}), 1);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_NEAR(static_cast<double>(s.parts()[0].hi), 0.05, 1e-14);
  EXPECT_NEAR(static_cast<double>(s.parts()[1].lo), 0.5, 1e-14);
  EXPECT_NEAR(static_cast<double>(s.parts()[1].hi), 0.55, 1e-14);
}

TEST(Preimage, DoublingTwoSteps) {
  auto s = preimage_set(*make_doubling(), IntervalSet::single({0, 0.25L}), 2);
  EXPECT_EQ(s.size(), 4u);
  EXPECT_NEAR(static_cast<double>(s.measure()), 0.25, 1e-14);
}

TEST(Preimage, GaussClosedForm) {
  auto m = make_gauss(500);
  auto s = preimage_set(*m, IntervalSet::single({0.6L, 0.7L}), 1);
  ASSERT_EQ(s.size(), 500u);
  for (std::size_t j = 1; j <= 500; j += 37) {
    const Interval& p = s.parts()[500 - j];
    EXPECT_NEAR(static_cast<double>(p.lo), static_cast<double>(1 / (j + 0.7L)), 1e-15);
    EXPECT_NEAR(static_cast<double>(p.hi), static_cast<double>(1 / (j + 0.6L)), 1e-15);
  }
}

TEST(Preimage, MeasurePreservation) {
  // Doubling and the geometric Farey map carry Lebesgue as invariant measure.
  for (auto m : {make_doubling(), make_farey(TailSpec::exponential(0.5))}) {
    IntervalSet s({{0.1L, 0.13L}, {0.4L, 0.71L}});
    auto pre = preimage_set(*m, s, 1);
    EXPECT_NEAR(static_cast<double>(pre.measure()), static_cast<double>(s.measure()), 1e-12) << m->name;
  }
  // Stretched Farey preserves its own density instead.
  auto m = make_farey(TailSpec::stretched(1, 0.5));
  IntervalSet s({{0.2L, 0.35L}, {0.6L, 0.9L}});
  auto cdf = m->density->cdf;
  EXPECT_NEAR(static_cast<double>(preimage_set(*m, s, 1).measure(cdf)), static_cast<double>(s.measure(cdf)), 1e-10);
}

TEST(Preimage, Errors) {
  EXPECT_THROW(preimage_set(*make_lsv(0.5), IntervalSet::single({0.1L, 0.2L}), 1), Error);
  PreimageOptions tight;
  tight.budget = 10;
  try {
    preimage_set(*make_doubling(), IntervalSet::single({0, 0.1L}), 8, tight);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BudgetExceeded);
  }
}

TEST(UnionMeasure, DoublingFixedPoint) {
  auto m = make_doubling();
  const coord r = 1e-5L;
  auto k1 = union_measure_periodic(*m, Potential::geometric(), {0, r}, 0, 1, 1);
  EXPECT_NEAR(static_cast<double>(k1.exact / r), 1.5, 1e-9);
  EXPECT_NEAR(static_cast<double>(k1.prediction / r), 1.5, 1e-12);
  auto k9 = union_measure_periodic(*m, Potential::geometric(), {0, r}, 0, 1, 9);
  EXPECT_NEAR(static_cast<double>(k9.exact / r), 5.5, 1e-9);
  EXPECT_NEAR(static_cast<double>(k9.prediction / r), 5.5, 1e-12);
}

TEST(UnionMeasure, DoublingPeriodTwo) {
  auto m = make_doubling();
  for (coord r : {1e-3L, 1e-5L}) {
    auto u = union_measure_periodic(*m, Potential::geometric(), {1.0L / 3 - r, 1.0L / 3 + r}, 1.0L / 3, 2, 1);
    EXPECT_NEAR(static_cast<double>(u.exact / r), 3.5, 1e-8);
  }
}

TEST(UnionMeasure, NestingFailure) {
  // Around a non-fixed point the intersections are not nested for p = 1.
  auto m = make_doubling();
  try {
    union_measure_periodic(*m, Potential::geometric(), {0.2L, 0.45L}, 0.3L, 1, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::HypothesisFailed);
  }
}

TEST(ReturnRatio, NonPeriodicIsZero) {
  auto m = make_doubling();
  const coord z = std::sqrt(2.0L) - 1, r = 1e-4L;
  for (std::size_t k = 0; k <= 5; ++k) EXPECT_EQ(return_ratio_q(*m, {z - r, z + r}, k).q, 0) << k;
}

TEST(ReturnRatio, PeriodTwo) {
  auto m = make_doubling();
  const coord z = 1.0L / 3, r = 1e-6L;
  EXPECT_NEAR(return_ratio_q(*m, {z - r, z + r}, 1).q, 0.25, 1e-9);
  EXPECT_EQ(return_ratio_q(*m, {z - r, z + r}, 0).q, 0);
  auto mc = return_ratio_q(*make_doubling(), {z - 1e-3L, z + 1e-3L}, 1, false, 200000, 5);
  EXPECT_LT(mc.lo, 0.25);
  EXPECT_GT(mc.hi, 0.25);
}

TEST(HoleFamily, Validation) {
  auto h = HoleFamily::symmetric(0.5L, {0.1L, 0.01L});
  EXPECT_NEAR(static_cast<double>(h.at(0.1L).length()), 0.2, 1e-15);
  EXPECT_EQ(HoleFamily::one_sided(0.95L, {0.1L}).at(0.1L).hi, 1);
  EXPECT_THROW(HoleFamily::symmetric(0.5L, {0.01L, 0.1L}), Error);
}
