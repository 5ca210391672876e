#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "odx/catalogue.hpp"
#include "odx/diagnostics.hpp"

using namespace odx;

namespace {
const coord kGolden = (std::sqrt(5.0L) - 1) / 2;
}

TEST(Evaluate, DoublingPoint) {
  auto m = make_doubling();
  auto e = evaluate(*m, 0.3L);
  EXPECT_NEAR(static_cast<double>(e.y), 0.6, 1e-15);
  EXPECT_EQ(e.branch, 0u);
}

TEST(Evaluate, GaussPoint) {
  auto m = make_gauss();
  auto e = evaluate(*m, 0.4L);
  EXPECT_NEAR(static_cast<double>(e.y), 0.5, 1e-15);
  EXPECT_EQ(m->branch(e.branch).label, 2);
}

TEST(Evaluate, LsvLeftBranch) {
  auto m = make_lsv(0.5);
  auto e = evaluate(*m, 0.25L);
  EXPECT_NEAR(static_cast<double>(e.y), 0.25 + std::sqrt(2.0) * std::pow(0.25, 1.5), 1e-15);
  EXPECT_NEAR(static_cast<double>(e.y), 0.4267767, 1e-7);
  EXPECT_EQ(e.branch, 0u);
}

TEST(Evaluate, Errors) {
  auto g = make_gauss();
  try {
    evaluate(*g, 0.5L);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::BoundaryPoint);
  }
  try {
    evaluate(*make_doubling(), 1.5L);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::OutOfDomain);
  }
  EXPECT_THROW(evaluate(*make_lsv(0.3), 0.5L), Error);
}

TEST(Birkhoff, DoublingGeometric) {
  auto m = make_doubling();
  for (coord x : {0.1L, 0.37L, 0.91L})
    EXPECT_NEAR(static_cast<double>(birkhoff_sum(*m, Potential::geometric(), x, 3)), -3 * std::log(2.0), 1e-14);
}

TEST(Birkhoff, GaussGoldenMean) {
  auto m = make_gauss();
  const double expected = 2 * std::log(static_cast<double>(kGolden));
  EXPECT_NEAR(static_cast<double>(birkhoff_sum(*m, Potential::geometric(), kGolden, 1)), expected, 1e-12);
  EXPECT_NEAR(expected, -0.96242, 1e-5);
}

TEST(Birkhoff, EmptySum) {
  EXPECT_EQ(birkhoff_sum(*make_lsv(0.5), Potential::geometric(), 0.2L, 0), 0);
}

TEST(Birkhoff, ReportsIterateIndex) {
  auto m = make_gauss();
  // 1/2.5 -> 0.5 -> boundary on the second iterate.
  try {
    birkhoff_sum(*m, Potential::geometric(), 0.4L, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BoundaryPoint);
    ASSERT_TRUE(e.index().has_value());
    EXPECT_EQ(*e.index(), 1);
  }
}

TEST(Birkhoff, Additivity) {
  Rng rng(7, 1);
  for (auto m : {make_lsv(0.4), make_gauss(), make_ly_tent(1.7)}) {
    for (int k = 0; k < 200; ++k) {
      coord x = rng.uniform_ld();
      std::size_t a = 1 + rng() % 6, b = 1 + rng() % 6;
      try {
        coord lhs = birkhoff_sum(*m, Potential::geometric(), x, a + b);
        coord fx = orbit(*m, x, a).back();
        coord rhs = birkhoff_sum(*m, Potential::geometric(), x, a) + birkhoff_sum(*m, Potential::geometric(), fx, b);
        EXPECT_NEAR(static_cast<double>(lhs), static_cast<double>(rhs), 1e-10);
      } catch (const Error&) {
      }
    }
  }
}

TEST(Period, DoublingThird) {
  auto p = detect_period(*make_doubling(), 1.0L / 3, 32);
  ASSERT_TRUE(p);
  EXPECT_EQ(*p, 2u);
}

TEST(Period, DoublingIrrational) {
  const coord z = std::sqrt(2.0L) - 1;
  // Oracle: independent 80-bit orbit enumeration.
  coord x = z;
  bool any = false;
  for (int k = 1; k <= 32; ++k) {
    x = std::fmod(2 * x, 1.0L);
    any |= std::fabs(x - z) < 1e-9L;
  }
  EXPECT_FALSE(any);
  EXPECT_FALSE(detect_period(*make_doubling(), z, 32).has_value());
}

TEST(Period, GaussGolden) {
  auto p = detect_period(*make_gauss(), kGolden, 16);
  ASSERT_TRUE(p);
  EXPECT_EQ(*p, 1u);
}

TEST(Period, Ambiguous) {
  // 3/7 -> 6/7 -> 5/7 -> 3/7: with tol 0.3 both k=2 and k=3 pass.
  try {
    detect_period(*make_doubling(), 3.0L / 7, 8, 0.3L);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ToleranceAmbiguous);
  }
}

TEST(Branches, InverseConjugation) {
  for (auto m : {make_doubling(), make_ly_tent(1.5), make_gauss(2000), make_lsv(0.5), make_farey(TailSpec::stretched(1, 0.5))}) {
    auto rep = check_branches(*m, 1000);
    EXPECT_LT(static_cast<double>(rep.max_inverse_error), 1e-12) << m->name;
    EXPECT_NEAR(static_cast<double>(rep.covered_length + m->truncation_mass), 1.0, 1e-12) << m->name;
  }
}

TEST(Branches, LsvBisectionInverse) {
  auto m = make_lsv(0.5);
  Branch b = m->branch(0);
  for (coord y : {0.01L, 0.3L, 0.77L}) EXPECT_NEAR(static_cast<double>(b.forward(b.invert(y))), static_cast<double>(y), 1e-15);
}

TEST(Branches, NonMonotoneDetected) {
  auto base = make_doubling();
  auto m = std::make_shared<IntervalMap>(*base);
  m->branch = [base](std::size_t i) {
    Branch b = base->branch(i);
    if (i == 1) b.forward = [](coord x) { return std::sin(20 * x); };
    return b;
  };
  try {
    check_branches(*m, 1000);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonMonotoneBranch);
  }
}

TEST(Farey, BranchStructure) {
  TailSpec s = TailSpec::exponential(0.5);
  auto m = make_farey(s);
  // A_1 = (1/2, 1] onto [0,1); A_2 = (1/4,1/2] onto A_1.
  EXPECT_NEAR(static_cast<double>(evaluate(*m, 0.75L).y), 0.5, 1e-15);
  EXPECT_NEAR(static_cast<double>(evaluate(*m, 0.375L).y), 0.75, 1e-15);
  for (std::size_t n = 2; n < 20; ++n) {
    Interval img = m->branch(n - 1).image();
    EXPECT_NEAR(static_cast<double>(img.lo), static_cast<double>(s.t(n)), 1e-15);
    EXPECT_NEAR(static_cast<double>(img.hi), static_cast<double>(s.t(n - 1)), 1e-15);
  }
}

TEST(Farey, InvariantDensity) {
  // Transfer of the density: sum over preimages of rho / |Df| reproduces rho.
  for (TailSpec s : {TailSpec::polynomial(2.5), TailSpec::stretched(1, 0.5), TailSpec::exponential(0.6)}) {
    auto m = make_farey(s);
    const auto& rho = m->density->pdf;
    for (coord y : {0.05L, 0.3L, 0.9L}) {
      coord sum = 0;
      for (std::size_t i = 0; i < std::min<std::size_t>(m->truncation_depth, 5000); ++i) {
        Branch b = m->branch(i);
        Interval img = b.image();
        if (y >= img.lo && y < img.hi) {
          coord x = b.inverse(y);
          sum += rho(x) / b.derivative(x);
        }
      }
      EXPECT_NEAR(static_cast<double>(sum / rho(y)), 1.0, 1e-12) << m->name;
    }
    EXPECT_NEAR(static_cast<double>(m->density->cdf(1 - 1e-18L)), 1.0, 1e-9);
    // cdf agrees with the pdf integrated over A_1.
    EXPECT_NEAR(static_cast<double>(1 - m->density->cdf(s.t(2))), static_cast<double>(rho(0.999L) * s.a(1)), 1e-12);
  }
  EXPECT_TRUE(make_farey(TailSpec::exponential(0.5))->lebesgue_invariant);
  EXPECT_FALSE(make_farey(TailSpec::stretched(1, 0.5))->lebesgue_invariant);
}

TEST(Farey, NonMonotoneLengthsRejected) {
  TailSpec s;
  s.cls = TailSpec::Class::Custom;
  // t = 1, 0.9, 0.5, 0.45, ... : a_2 = 0.4 > a_1 = 0.1.
  s.custom_log_t = [](std::size_t n) -> coord {
    static const coord t[] = {1, 0.9L, 0.5L, 0.45L};
    return n <= 4 ? std::log(t[n - 1]) : std::log(0.45L) - static_cast<coord>(n - 4);
  };
  s.depth = 20;
  try {
    make_farey(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonMonotoneLengths);
    EXPECT_EQ(*e.index(), 2);
  }
}

TEST(Gauss, RangePreimageMatchesDirectSum) {
  auto m = make_gauss();
  for (auto [c, d] : {std::pair<coord, coord>{0.1L, 0.35L}, {0.6L, 0.6000001L}, {0, 1}}) {
    coord direct = 0;
    for (std::size_t j = 5; j <= 400; ++j) direct += 1 / (j + c) - 1 / (j + d);
    coord viaψ = m->range_preimage(4, 399, c, d);
    EXPECT_NEAR(static_cast<double>(viaψ / direct), 1.0, 1e-12);
  }
  // Whole tail from j: 1/j - 0 on [0,1).
  EXPECT_NEAR(static_cast<double>(m->range_preimage(9, std::nullopt, 0, 1)), 0.1, 1e-15);
}

TEST(Assumptions, Doubling) {
  auto rep = assumptions_report(*make_doubling(), Potential::geometric(), 8, 500);
  EXPECT_EQ(rep.c_d, 0);
  ASSERT_TRUE(rep.n1);
  EXPECT_EQ(*rep.n1, 2u);
  EXPECT_NEAR(rep.sup_table[1], 0.25, 1e-15);
}

TEST(Assumptions, GaussN0) {
  auto rep = assumptions_report(*make_gauss(2000), Potential::geometric(), 6, 2000);
  ASSERT_TRUE(rep.n0);
  EXPECT_EQ(*rep.n0, 2u);
  EXPECT_TRUE(rep.f3);
  EXPECT_TRUE(rep.truncated);
  EXPECT_FALSE(rep.warnings.empty());
  EXPECT_TRUE(rep.f2);
}

TEST(Assumptions, TentN1) {
  // sup |Df|^-1 = 0.9.
  auto rep = assumptions_report(*make_ly_tent(1 / 0.9), Potential::geometric(), 12, 500);
  EXPECT_EQ(rep.c_d, 0);
  ASSERT_TRUE(rep.n1);
  EXPECT_EQ(*rep.n1, 7u);
  EXPECT_LT((2 + 2 * rep.c_d) * rep.sup_table[6], 1);
  EXPECT_GE((2 + 2 * rep.c_d) * rep.sup_table[5], 1);
}

TEST(Assumptions, GaussHolderDistortionBounded) {
  auto rep = assumptions_report(*make_gauss(2000), Potential::geometric(), 12, 3000);
  const double early = *std::max_element(rep.cd_holder.begin(), rep.cd_holder.begin() + 3);
  for (double v : rep.cd_holder) EXPECT_LT(v, 10 * early + 1);
}
