#include <gtest/gtest.h>

#include <cmath>

#include "odx/catalogue.hpp"
#include "odx/induced.hpp"

using namespace odx;

namespace {

std::function<coord(coord)> lsv_cdf(const IntervalMap& m) {
  auto part = Partition::graded(1024, {0.0L}, 0.9L, 1e-12L);
  auto op = build_ulam(m, part);
  return density_cdf(part, invariant_density(op));
}

// sup_theta theta x - log E e^{theta R}, R geometric(1/2) on {1, 2, ...}
double geometric_cramer(double x) {
  auto g = [x](double th) { return th * x - (th - std::log(2 - std::exp(th))); };
  double lo = -30, hi = std::log(2.0) - 1e-12;
  for (int it = 0; it < 300; ++it) {
    double a = lo + (hi - lo) / 3, b = hi - (hi - lo) / 3;
    (g(a) < g(b) ? lo : hi) = g(a) < g(b) ? a : b;
  }
  return g((lo + hi) / 2);
}

}  // namespace

TEST(FirstReturn, DoublingDyadicCylinders) {
  auto ind = first_return_map(make_doubling(), {0.5L, 1}, 50);
  ASSERT_EQ(ind.branches.size(), 50u);
  for (const auto& b : ind.branches) {
    // R = k on [1/2 + 2^{-k-1}, 1/2 + 2^{-k})
    const coord lo = 0.5L + std::ldexp(1.0L, -static_cast<int>(b.R) - 1), hi = 0.5L + std::ldexp(1.0L, -static_cast<int>(b.R));
    EXPECT_NEAR(static_cast<double>(b.domain.lo), static_cast<double>(lo), 1e-18);
    EXPECT_NEAR(static_cast<double>(b.domain.hi), static_cast<double>(hi), 1e-18);
    EXPECT_NEAR(static_cast<double>(b.mass), std::ldexp(1.0, -static_cast<int>(b.R)), 1e-18);
  }
  EXPECT_NEAR(static_cast<double>(ind.unresolved), std::ldexp(1.0, -50), 1e-20);
  EXPECT_NEAR(static_cast<double>(ind.resolved + ind.unresolved), 1.0, 1e-15);
  EXPECT_NEAR(static_cast<double>(ind.mean_return()), 2.0, 1e-12);
  EXPECT_NEAR(static_cast<double>(ind.kac_mean()), 2.0, 1e-15);
}

TEST(FirstReturn, UnresolvedMassBudget) {
  EXPECT_THROW(
      {
        try {
          first_return_map(make_doubling(), {0.5L, 1}, 10);
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), ErrorCode::UnresolvedMassExceeds);
          throw;
        }
      },
      Error);
}

TEST(FirstReturn, LsvRightBranchPreimages) {
  auto m = make_lsv(0.5);
  FirstReturnOptions o;
  o.cdf = lsv_cdf(*m);
  o.tolerance = 1e-3L;
  auto ind = first_return_map(m, {0.5L, 1}, 200, o);
  // a_k = f_L^{-k}(1/2) by plain bisection on the left branch
  auto fl = [](long double x) { return x + std::sqrt(2.0L) * std::pow(x, 1.5L); };
  std::vector<long double> a{0.5L};
  for (int k = 1; k <= 10; ++k) {
    long double lo = 0, hi = 0.5L;
    for (int it = 0; it < 200; ++it) {
      long double mid = (lo + hi) / 2;
      (fl(mid) < a.back() ? lo : hi) = mid;
    }
    a.push_back((lo + hi) / 2);
  }
  for (std::size_t k = 1; k <= 10; ++k) {
    // R = k+1 on f_R^{-1}[a_k, a_{k-1})
    const ReturnBranch* b = ind.branch_at((a[k] + a[k - 1]) / 4 + 0.5L);
    ASSERT_NE(b, nullptr);
    EXPECT_EQ(b->R, k + 1);
    EXPECT_NEAR(static_cast<double>(b->domain.lo), static_cast<double>((a[k] + 1) / 2), 1e-15);
    EXPECT_NEAR(static_cast<double>(b->domain.hi), static_cast<double>((a[k - 1] + 1) / 2), 1e-15);
  }
  EXPECT_EQ(ind.branch_at(0.9L)->R, 1u);
  // Kac: the branches past depth 200 carry about 1/200 of E[R]
  EXPECT_LT(ind.mean_return(), ind.kac_mean());
  EXPECT_NEAR(static_cast<double>(ind.mean_return() / ind.kac_mean()), 1.0, 1e-2);
  for (std::size_t u = 1; u + 1 < ind.tail.size(); ++u) EXPECT_GE(ind.tail[u], ind.tail[u + 1]);
}

TEST(FirstReturn, FareyAnalyticTail) {
  for (TailSpec spec : {TailSpec::exponential(0.5), TailSpec::stretched(1, 0.5), TailSpec::polynomial(2.5)}) {
    auto ind = farey_first_return(spec);
    for (std::size_t u = 1; u < std::min<std::size_t>(ind.tail.size(), 400); ++u) {
      // mu_Y(R >= u) = sum_{n >= u} a_n
      long double direct = 0;
      for (std::size_t n = u; n <= ind.depth_max; ++n) direct += spec.a(n);
      direct += spec.t(ind.depth_max + 1);
      EXPECT_NEAR(static_cast<double>(ind.tail_at(u)), static_cast<double>(direct), 1e-10) << spec.class_name() << " u=" << u;
    }
    // sum_{n <= D} n a_n = sum_{n <= D} t_n - D t_{D+1}
    long double trunc = 0;
    for (std::size_t n = 1; n <= ind.depth_max; ++n) trunc += spec.t(n);
    trunc -= static_cast<long double>(ind.depth_max) * spec.t(ind.depth_max + 1);
    EXPECT_NEAR(static_cast<double>(ind.mean_return() / trunc), 1.0, 1e-12) << spec.class_name();
    EXPECT_NEAR(static_cast<double>(ind.mean_return() * ind.mu_Y), 1.0, 1e-5) << spec.class_name();
  }
}

TEST(FirstReturn, FareyAnalyticMatchesRefinement) {
  const TailSpec spec = TailSpec::exponential(0.5);
  auto exact = farey_first_return(spec);
  auto m = make_farey(spec);
  FirstReturnOptions o;
  o.tolerance = 1e-6L;
  auto num = first_return_map(m, {spec.t(2), 1}, 30, o);
  for (std::size_t n = 1; n <= 25; ++n) {
    coord mass = 0;
    for (const auto& b : num.branches)
      if (b.R == n) mass += b.mass;
    EXPECT_NEAR(static_cast<double>(mass), static_cast<double>(spec.a(n)), 1e-14) << n;
  }
  // closed-form F against iterating the base map
  Rng rng(3, 0);
  for (int i = 0; i < 1000; ++i) {
    const coord y = spec.t(2) + (1 - spec.t(2)) * (0.001L + 0.998L * rng.uniform_ld());
    auto r = exact.apply(y);
    ASSERT_TRUE(r);
    coord x = y;
    for (std::size_t k = 0; k < r->second; ++k) x = m->apply(x)->y;
    EXPECT_NEAR(static_cast<double>(x), static_cast<double>(r->first), 1e-12);
  }
}

TEST(InducedHitting, FareyDecomposition) {
  const TailSpec spec = TailSpec::stretched(1, 0.5);
  auto ind = farey_first_return(spec);
  auto m = ind.base;
  const coord t2 = spec.t(2), a1 = spec.a(1);
  const Interval hole{t2 + 0.2L * a1, t2 + 0.7L * a1};
  Rng rng(11, 0);
  std::size_t compared = 0;
  for (int i = 0; i < 10000; ++i) {
    const coord y = t2 + a1 * (1 - rng.uniform_ld());
    auto h = induced_hitting(ind, hole, y, 10);
    if (!h.tau_Y) continue;
    auto f = hitting_time(*m, hole, y, h.base_time + 1000);
    ASSERT_TRUE(f.time);
    EXPECT_EQ(*f.time, h.base_time) << "y=" << static_cast<double>(y);
    ++compared;
  }
  EXPECT_GT(compared, 9900u);
}

TEST(InducedHitting, DoublingDeterministicOrbit) {
  auto ind = first_return_map(make_doubling(), {0.5L, 1}, 50);
  auto r = ind.apply(0.75L);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->first, 0.5L);
  EXPECT_EQ(r->second, 1u);
  // 0.5 -> 0, a fixed point outside Y
  EXPECT_THROW(
      {
        try {
          induced_hitting(ind, {0.7L, 0.8L}, 0.75L, 10);
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), ErrorCode::UnresolvedBranchHit);
          throw;
        }
      },
      Error);
  // start inside the hole: tau_Y still counts from 1
  auto h = induced_hitting(ind, {0.7L, 0.8L}, 0.71L, 10);
  ASSERT_TRUE(h.tau_Y);
  EXPECT_GE(*h.tau_Y, 1u);
}

TEST(Tower, DoublingLevels) {
  auto ind = first_return_map(make_doubling(), {0.5L, 1}, 50);
  auto tw = tower_profile(ind);
  coord sum = 0;
  for (std::size_t l = 0; l < tw.levels.size(); ++l) {
    EXPECT_NEAR(static_cast<double>(tw.levels[l]), std::ldexp(1.0, -static_cast<int>(l) - 1), 1e-18);
    sum += tw.levels[l];
  }
  EXPECT_NEAR(static_cast<double>(sum + tw.truncation), 1.0, 1e-18);
  EXPECT_LT(static_cast<double>(tw.truncation), 1e-14);
}

TEST(Tower, FareyLevelsAreNormalisedTail) {
  auto ind = farey_first_return(TailSpec::exponential(0.5));
  auto tw = tower_profile(ind);
  for (std::size_t l = 0; l < 30; ++l) EXPECT_NEAR(static_cast<double>(tw.levels[l]), static_cast<double>(ind.mu_Y * ind.tail[l + 1]), 0);
  // t_n = 2^{-(n-1)}, Z = 2: level l = 2^{-l}/2
  for (std::size_t l = 0; l < 30; ++l) EXPECT_NEAR(static_cast<double>(tw.levels[l]), std::ldexp(1.0, -static_cast<int>(l) - 1), 1e-15);
  EXPECT_LT(static_cast<double>(std::fabs(tw.truncation)), 1e-9);
}

TEST(Deviation, TrivialLimits) {
  auto ind = first_return_map(make_doubling(), {0.5L, 1}, 50);
  DeviationOptions o;
  o.samples = 2000;
  EXPECT_EQ(deviation_measure(ind, 5, 1e6, o).count, 0u);
  EXPECT_GT(deviation_measure(ind, 1, 1e-9, o).mu_A_lo, 0.995);
}

TEST(Deviation, DoublingCramerRate) {
  auto ind = first_return_map(make_doubling(), {0.5L, 1}, 60);
  std::vector<std::size_t> us;
  for (std::size_t u = 4; u <= 64; u += 4) us.push_back(u);
  DeviationOptions o;
  o.samples = 50000;
  auto tab = deviation_table(ind, us, 0.5, o);
  EXPECT_LT(tab.kac_gap, 1e-12);
  std::vector<double> x, y;
  for (std::size_t i = 0; i < tab.rows.size(); ++i) {
    const auto& r = tab.rows[i];
    if (i) {
      EXPECT_LE(r.mu_A_lo, tab.rows[i - 1].mu_A_lo);
    }
    EXPECT_LE(r.half_horizon, r.mu_A_lo);
    ASSERT_GT(r.count, 0u);
    x.push_back(static_cast<double>(r.u));
    // local-limit prefactor u^{-1/2} removed before fitting the exponential rate
    y.push_back(std::log(r.mu_A_lo) + 0.5 * std::log(static_cast<double>(r.u)));
  }
  const double rate = -linear_fit(x, y).slope;
  const double cramer = std::min(geometric_cramer(2.5), geometric_cramer(1.5));
  EXPECT_NEAR(cramer, 2.5 * std::log(2.0) + 1.5 * std::log(1.5) - 2.5 * std::log(2.5), 1e-9);
  EXPECT_NEAR(rate / cramer, 1.0, 0.15);
}

TEST(Deviation, MonotoneInEpsilon) {
  auto ind = farey_first_return(TailSpec::stretched(1, 0.5));
  DeviationOptions o;
  o.samples = 4000;
  double prev = 1.1;
  for (double f : {0.05, 0.1, 0.2}) {
    auto r = deviation_measure(ind, 20, f / static_cast<double>(ind.mu_Y), o);
    EXPECT_LE(r.mu_A_lo, prev);
    prev = r.mu_A_lo;
  }
}

TEST(Obstruction, LsvContainmentAndTail) {
  auto m = make_lsv(0.5);
  auto ind = induced_base(m, {0.5L, 1}, lsv_cdf(*m));
  ObstructionOptions o;
  o.samples = 20000;
  std::vector<double> ratios;
  for (double r : {1e-2, 3e-3, 1e-3}) {
    auto rep = polynomial_obstruction_probe(ind, {0.8L - r, 0.8L + r}, 0.2, 1.0, o);
    EXPECT_FALSE(rep.containment_applies);  // u < 2 at these scan times
    ratios.push_back(rep.ratio);
  }
  {
    auto rep = polynomial_obstruction_probe(ind, {0.79L, 0.81L}, 1.0, 1.0, o);
    ASSERT_TRUE(rep.containment_applies);
    EXPECT_GT(rep.tail.p, 0);
    EXPECT_EQ(rep.violations, 0u);
    EXPECT_GE(rep.joint.p, rep.tail.p);
  }
  EXPECT_GT(ratios[1], ratios[0]);
  EXPECT_GT(ratios[2], ratios[1]);

  std::vector<std::size_t> ts{8, 16, 32, 64, 128, 256};
  auto tail = return_tail_mc(ind, ts, 400000);
  std::vector<double> x, y;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    ASSERT_GT(tail[i].p, 0);
    x.push_back(std::log(static_cast<double>(ts[i])));
    y.push_back(std::log(tail[i].p));
  }
  EXPECT_NEAR(linear_fit(x, y).slope, -2.0, 0.3);
}
