#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>

#include "odx/catalogue.hpp"
#include "odx/lscan.hpp"
#include "odx/survival.hpp"

using namespace odx;

namespace {

std::vector<std::size_t> range_t(std::size_t a, std::size_t b) {
  std::vector<std::size_t> t;
  for (std::size_t k = a; k <= b; ++k) t.push_back(k);
  return t;
}

McOptions mc(std::size_t n, std::uint64_t seed = 7) {
  McOptions o;
  o.samples = n;
  o.sampler.seed = seed;
  return o;
}

SurvivalEngine doubling_operator(std::size_t cells) {
  auto m = make_doubling();
  auto op = std::make_shared<const UlamOperator>(build_ulam(*m, Partition::uniform(cells)));
  return {"operator", [op](Interval u, const std::vector<std::size_t>& ts) {
            auto p = puncture(op, u);
            return survival_curve_operator(p, cell_masses(op->partition, [](coord x) { return x; }), ts);
          }};
}

}  // namespace

TEST(Sampling, DoublingUniformKs) {
  auto m = make_doubling();
  const std::size_t n = 20000;
  for (auto src : {SamplerConfig::Source::ExactDensity, SamplerConfig::Source::UlamDensity, SamplerConfig::Source::LongOrbit}) {
    SamplerConfig cfg;
    cfg.source = src;
    cfg.ulam_cells = 1024;
    auto xs = stationary_sample(*m, cfg, n);
    EXPECT_LT(ks_distance(xs, [](double x) { return x; }), 1.63 / std::sqrt(double(n)));
  }
}

TEST(Sampling, GaussUlamMean) {
  auto m = make_gauss();
  SamplerConfig cfg;
  cfg.source = SamplerConfig::Source::UlamDensity;
  cfg.ulam_cells = 4096;
  auto xs = stationary_sample(*m, cfg, 200000);
  double mean = 0;
  for (double x : xs) mean += x;
  mean /= double(xs.size());
  // quadrature of x / (ln2 (1+x)) on [0,1]
  double q = 0;
  const int k = 200000;
  for (int i = 0; i < k; ++i) {
    double x = (i + 0.5) / k;
    q += x / (std::log(2.0) * (1 + x)) / k;
  }
  EXPECT_NEAR(mean, q, 3e-3);
  EXPECT_NEAR(q, 1 / std::log(2.0) - 1, 1e-9);
}

TEST(Sampling, Deterministic) {
  auto m = make_gauss();
  SamplerConfig cfg;
  cfg.seed = 99;
  auto a = stationary_sample(*m, cfg, 1000);
  auto b = stationary_sample(*m, cfg, 1000);
  EXPECT_EQ(0, std::memcmp(a.data(), b.data(), a.size() * sizeof(double)));
}

TEST(Sampling, ConfigValidation) {
  SamplerConfig cfg;
  cfg.thinning = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg.thinning = 1;
  cfg.source = SamplerConfig::Source::LongOrbit;
  cfg.burn_in = 10;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(SurvivalMc, HalfHoleBinaryDigits) {
  auto m = make_doubling();
  auto ts = range_t(0, 15);
  auto c = survival_curve_mc(*m, {0, 0.5L}, ts, mc(1'000'000));
  EXPECT_EQ(c.p_hat[0], 1.0);
  // survivors of [0,1/2) for t steps: points whose binary digits 2..t+1 are all 1
  // 15 correlated points: 99.9% Wilson intervals
  for (std::size_t i = 1; i < ts.size(); ++i) {
    const double p = std::ldexp(1.0, -int(ts[i]));
    auto ci = wilson(c.survivors[i], c.samples, 3.2905);
    EXPECT_GE(p, ci.lo) << ts[i];
    EXPECT_LE(p, ci.hi) << ts[i];
  }
}

TEST(SurvivalMc, FibonacciRate) {
  auto m = make_doubling();
  auto c = survival_curve_mc(*m, {0, 0.25L}, {20, 40}, mc(1'000'000));
  const double slope = (std::log(c.p_hat[1]) - std::log(c.p_hat[0])) / 20;
  EXPECT_NEAR(slope, std::log((1 + std::sqrt(5.0)) / 4), 0.01);
}

TEST(SurvivalMc, Monotone) {
  auto m = make_gauss();
  auto ts = range_t(0, 40);
  auto c = survival_curve_mc(*m, {0.3L, 0.35L}, ts, mc(50000));
  for (std::size_t i = 1; i < ts.size(); ++i) EXPECT_LE(c.p_hat[i], c.p_hat[i - 1]);
  // shrinking the hole with the same random numbers can only raise survival
  auto d = survival_curve_mc(*m, {0.31L, 0.34L}, ts, mc(50000));
  for (std::size_t i = 0; i < ts.size(); ++i) EXPECT_GE(d.p_hat[i], c.p_hat[i]);
}

TEST(SurvivalMc, ExcessCensoring) {
  auto m = make_doubling();
  McOptions o = mc(10000);
  o.horizon = 5;
  EXPECT_THROW(survival_curve_mc(*m, {0, 0.01L}, {3, 50}, o), Error);
}

TEST(SurvivalOperator, TwoCellExact) {
  auto m = make_doubling();
  auto op = std::make_shared<const UlamOperator>(build_ulam(*m, Partition::uniform(2)));
  auto p = puncture(op, Interval{0, 0.5L});
  auto c = survival_curve_operator(p, {0.5L, 0.5L}, {0, 1, 5, 30, 1000});
  for (std::size_t i = 0; i < c.t.size(); ++i)
    EXPECT_NEAR(double(c.log_p[i]), -double(c.t[i]) * std::log(2.0), 1e-12 * (1 + double(c.t[i])));
}

TEST(SurvivalOperator, EmptyHole) {
  auto m = make_gauss();
  auto op = std::make_shared<const UlamOperator>(build_ulam(*m, Partition::uniform(256)));
  auto g = invariant_density(*op);
  std::vector<real> mass(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) mass[i] = g[i] * op->partition.width(i);
  auto c = survival_curve_operator(puncture(op, IntervalSet{}), mass, {0, 10, 100});
  for (auto lp : c.log_p) EXPECT_NEAR(double(lp), 0, 1e-10);
}

TEST(SurvivalOperator, PartitionMismatch) {
  auto m = make_doubling();
  auto op = std::make_shared<const UlamOperator>(build_ulam(*m, Partition::uniform(4)));
  EXPECT_THROW(survival_curve_operator(puncture(op, Interval{0, 0.25L}), {1, 0, 0}, {1}), Error);
}

TEST(SurvivalOperator, AgreesWithMc) {
  auto m = make_doubling();
  auto ts = range_t(0, 30);
  auto a = survival_curve_mc(*m, {0, 0.25L}, ts, mc(200000));
  auto b = doubling_operator(1024).run({0, 0.25L}, ts);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double p = double(std::exp(b.log_p[i]));
    const double slack = 1e-3 * p;
    EXPECT_GE(p + slack, a.ci_lo[i]) << ts[i];
    EXPECT_LE(p - slack, a.ci_hi[i]) << ts[i];
  }
}

TEST(SurvivalOperator, SlopeMatchesEigenvalue) {
  auto m = make_gauss();
  auto op = std::make_shared<const UlamOperator>(build_ulam(*m, Partition::uniform(1024)));
  auto p = puncture(op, Interval{0.4L, 0.45L});
  auto g = invariant_density(*op);
  std::vector<real> mass(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) mass[i] = g[i] * op->partition.width(i);
  auto c = survival_curve_operator(p, mass, {50, 200});
  const double slope = double(c.log_p[1] - c.log_p[0]) / 150;
  const double ll = std::log(double(power_leading(p).lambda));
  EXPECT_NEAR(slope, ll, 0.01 * std::fabs(ll));
}

TEST(LScan, GenericDiagonal) {
  auto m = make_doubling();
  auto holes = HoleFamily::symmetric(std::numbers::sqrt2_v<long double> - 1, {1e-2L, 3e-3L, 1e-3L});
  ScanOptions o;
  o.alphas = {1};
  o.mc_samples = 200000;
  o.mc = SurvivalEngine{"mc", [&](Interval u, const std::vector<std::size_t>& ts) { return survival_curve_mc(*m, u, ts, mc(200000)); }};
  auto res = l_alpha_scan(holes, MuSource::from_cdf([](coord x) { return x; }, "analytic"), o);
  ASSERT_EQ(res.rows.size(), 3u);
  for (auto& r : res.rows) EXPECT_EQ(r.t, scan_time(r.alpha, r.s, r.mu_U));
  ASSERT_EQ(res.summaries.size(), 1u);
  EXPECT_NEAR(res.summaries[0].L_extrapolated, 1.0, 0.08);
}

TEST(LScan, PeriodicOperatorRouting) {
  auto m = make_doubling();
  auto holes = HoleFamily::symmetric(0, {1.0L / 64, 1.0L / 128, 1.0L / 256});
  ScanOptions o;
  o.alphas = {2};
  o.mc = SurvivalEngine{"mc", [&](Interval u, const std::vector<std::size_t>& ts) { return survival_curve_mc(*m, u, ts, mc(1000)); }};
  o.op = doubling_operator(4096);
  o.mc_samples = 1000;
  auto res = l_alpha_scan(holes, MuSource::from_cdf([](coord x) { return x; }, "analytic"), o);
  for (auto& r : res.rows) EXPECT_EQ(r.method, "operator");
  EXPECT_NEAR(res.summaries[0].L_extrapolated, 0.5, 0.02);
}

TEST(LScan, Budget) {
  auto holes = HoleFamily::symmetric(0.3L, {1e-2L, 1e-3L});
  ScanOptions o;
  o.alphas = {1, 3};
  o.max_t = 999'999;
  o.op = doubling_operator(256);
  try {
    l_alpha_scan(holes, MuSource::from_cdf([](coord x) { return x; }, "analytic"), o);
    FAIL();
  } catch (const ScanBudgetExceeded& e) {
    EXPECT_EQ(e.code(), ErrorCode::BudgetExceeded);
    EXPECT_EQ(e.partial().rows.size(), 3u);
  }
}

TEST(LScan, AlphaDetectors) {
  std::vector<AlphaSummary> s;
  for (double a : {0.5, 1.0, 1.5, 2.0, 2.5, 3.0}) {
    AlphaSummary x;
    x.alpha = a;
    x.L_extrapolated = a < 2 ? 0.9 : 0.01;
    x.kappa = std::max(0.0, a / 2 - 1);
    x.kappa_valid = true;
    s.push_back(x);
  }
  EXPECT_EQ(alpha0_threshold(s).value(), 2.0);
  EXPECT_NEAR(alpha0_scaling(s).value(), 2.0, 1e-12);
}

TEST(AlphaZero, Generic) {
  auto m = make_doubling();
  auto holes = HoleFamily::symmetric(std::numbers::sqrt2_v<long double> - 1, {1e-4L, 5e-5L, 2e-5L});
  auto r = alpha_zero_limit(*m, Potential::geometric(), holes, 9);
  EXPECT_NEAR(r.target, 10, 1e-12);
  EXPECT_NEAR(r.extrapolated, 10, 0.5);
}

TEST(AlphaZero, FixedPoint) {
  auto m = make_doubling();
  auto holes = HoleFamily::symmetric(0, {1e-4L, 5e-5L, 2e-5L}, 1);
  auto r = alpha_zero_limit(*m, Potential::geometric(), holes, 9);
  EXPECT_NEAR(r.target, 5.5, 1e-12);
  EXPECT_NEAR(r.extrapolated, 5.5, 0.275);
}

TEST(AlphaZero, PeriodTwo) {
  auto m = make_doubling();
  auto holes = HoleFamily::symmetric(1.0L / 3, {1e-4L, 5e-5L, 2e-5L}, 2);
  auto r = alpha_zero_limit(*m, Potential::geometric(), holes, 9);
  EXPECT_NEAR(r.target, 8, 1e-12);
  EXPECT_NEAR(r.extrapolated, 8, 0.4);
}

TEST(AlphaZero, Disjointness) {
  auto m = make_doubling();
  auto holes = HoleFamily::symmetric(0.3L, {0.2L});
  EXPECT_THROW(alpha_zero_limit(*m, Potential::geometric(), holes, 9), Error);
}

TEST(RemarkBound, NonFinite) {
  ScanResult s;
  ScanRow r;
  r.alpha = 0.5;
  r.s = 1;
  r.mu_U = 1e-3;
  r.log_p = -std::numeric_limits<long double>::infinity();
  r.L_hat = std::numeric_limits<double>::infinity();
  s.rows.push_back(r);
  auto c = remark_bound_check(s);
  ASSERT_EQ(c.violations.size(), 1u);
  EXPECT_EQ(c.violations[0].reason, "NonFinite");
}

TEST(RemarkBound, DoublingHalfAlpha) {
  auto m = make_doubling();
  // L_hat - 1 ~ s mu^{1-alpha} / 2 at finite r, so the holes are kept small
  auto holes = HoleFamily::symmetric(0.3L, {1e-4L, 3e-5L});
  ScanOptions o;
  o.alphas = {0.5};
  o.s_values = {0.5, 1, 2};
  o.mc = SurvivalEngine{"mc", [&](Interval u, const std::vector<std::size_t>& ts) { return survival_curve_mc(*m, u, ts, mc(400000)); }};
  auto res = l_alpha_scan(holes, MuSource::from_cdf([](coord x) { return x; }, "analytic"), o);
  auto c = remark_bound_check(res);
  EXPECT_TRUE(c.violations.empty());
  for (std::size_t k = 0; k < c.checked.size(); ++k) {
    const auto& r = res.rows[c.checked[k]];
    EXPECT_NEAR(c.companion[k], r.L_hat, 2 * (r.ci_hi - r.ci_lo) + 1e-9);
  }
}
