// Acceptance run: one line per criterion, nonzero exit if any fails.
// Usage: odx_acceptance [criterion numbers...]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "odx/harness.hpp"
#include "odx/odx.hpp"

using namespace odx;
using json = nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Scan rows gathered for the bound check.
std::vector<std::pair<std::string, ScanResult>> g_scans;

McOptions mc_opts(std::size_t n, std::uint64_t seed) {
  McOptions o;
  o.samples = n;
  o.sampler.seed = seed;
  return o;
}

SurvivalEngine mc_engine(MapPtr m, std::size_t n, std::uint64_t seed) {
  auto o = mc_opts(n, seed);
  return {"mc", [m, o](Interval u, const std::vector<std::size_t>& ts) { return survival_curve_mc(*m, u, ts, o); }};
}

SurvivalEngine ulam_engine(MapPtr m, const Partition& part) {
  auto op = std::make_shared<const UlamOperator>(build_ulam(*m, part));
  auto g0 = cell_masses(part, m->density->cdf);
  return {"operator", [op, g0](Interval u, const std::vector<std::size_t>& ts) { return survival_curve_operator(puncture(op, u), g0, ts); }};
}

std::size_t pow2_at_least(double x, std::size_t cap) {
  std::size_t n = 1;
  while (static_cast<double>(n) < x && n < cap) n *= 2;
  return n;
}

const AlphaSummary* summary(const ScanResult& res, double alpha) {
  for (auto& a : res.summaries)
    if (std::fabs(a.alpha - alpha) < 1e-12) return &a;
  return nullptr;
}

json farey_config() {
  return {{"kind", "alpha-phase"},
          {"map", {{"name", "farey"}, {"tail", {{"class", "stretched"}, {"params", {{"c", 1}, {"gamma", 0.5}}}}}}},
          {"hole", {{"centre", 0.618}, {"frame", "base"}, {"mu", {0.04, 0.02, 0.01}}}}};
}

// -- criteria ----------------------------------------------------------------

Outcome c1() {
  std::vector<coord> radii;
  for (int m = 6; m <= 12; ++m) radii.push_back(std::ldexp(1.0L, -m));
  auto holes = HoleFamily::one_sided(0, radii, 1);
  auto scan = escape_derivative_scan(*make_doubling(), holes, [](coord r, Interval) {
    return Partition::uniform(static_cast<std::size_t>(std::lround(8 / static_cast<double>(r))));
  });
  return {scan.limit >= 0.49 && scan.limit <= 0.51, fmt("limit %.5f, smallest-hole ratio %.5f", scan.limit, scan.rows.back().ratio)};
}

Outcome c2() {
  const coord z = std::sqrt(2.0L) - 1;
  auto holes = HoleFamily::symmetric(z, {4e-3L, 2e-3L, 1e-3L, 5e-4L});
  std::size_t n_max = 0;
  auto scan = escape_derivative_scan(*make_doubling(), holes, [&](coord r, Interval u) {
    const std::size_t n = pow2_at_least(8 / static_cast<double>(r), 1u << 14);
    n_max = std::max(n_max, n);
    return Partition::uniform(n).with_breakpoints({u.lo, u.hi});
  });
  return {scan.limit >= 0.95 && scan.limit <= 1.05, fmt("limit %.5f, N up to %zu", scan.limit, n_max)};
}

Outcome c3() {
  const coord g = (std::sqrt(5.0L) - 1) / 2;
  const double target = 1 - static_cast<double>(g * g);
  auto holes = HoleFamily::symmetric(g, {4e-3L, 2e-3L, 1e-3L, 5e-4L}, 1);
  auto scan = escape_derivative_scan(*make_gauss(), holes, [g](coord, Interval u) {
    return Partition::graded(2048, {g}, 0.9L, 1e-7L).with_breakpoints({u.lo, u.hi});
  });
  const double rel = std::fabs(scan.limit / target - 1);
  return {rel <= 0.05, fmt("limit %.5f vs %.6f (%.2f%%)", scan.limit, target, 100 * rel)};
}

Outcome c4() {
  auto m = make_doubling();
  auto holes = HoleFamily::symmetric(std::sqrt(2.0L) - 1, {1e-3L});
  ScanOptions o;
  o.alphas = {1};
  o.s_values = {0.5, 1, 2};
  o.mc = mc_engine(m, 1'000'000, 4);
  auto res = l_alpha_scan(holes, MuSource::from_cdf(m->density->cdf, "analytic"), o);
  g_scans.emplace_back("4", res);
  // same hole through the operator, to separate sampling error from finite-hole bias
  const Interval u = holes.at(holes.radii[0]);
  std::vector<std::size_t> ts;
  for (auto& r : res.rows) ts.push_back(r.t);
  auto op = ulam_engine(m, Partition::uniform(1u << 14).with_breakpoints({u.lo, u.hi})).run(u, ts);
  bool ok = true;
  std::string d;
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    const auto& r = res.rows[i];
    const double denom = r.s * std::pow(r.mu_U, 1 - r.alpha);
    const double p = std::exp(static_cast<double>(r.log_p));
    const double half = (std::exp(-r.ci_lo * denom) - std::exp(-r.ci_hi * denom)) / 2;
    const double dev = std::fabs(p - std::exp(-r.s));
    ok = ok && dev <= 3 * half;
    d += fmt("s=%g p=%.5f e^-s=%.5f |d|/ci=%.2f op=%.5f; ", r.s, p, std::exp(-r.s), dev / half, op.p_hat[i]);
  }
  return {ok, d};
}

Outcome c5() {
  auto m = make_doubling();
  const coord z = 1.0L / 3;
  auto holes = HoleFamily::symmetric(z, {2e-3L, 1e-3L, 5e-4L}, 2);
  ScanOptions o;
  o.alphas = {0.5, 1, 2, 4};
  o.mc = mc_engine(m, 1'000'000, 5);
  const std::size_t n = pow2_at_least(8 / static_cast<double>(holes.radii.back()), 1u << 14);
  std::vector<coord> bp;
  for (coord r : holes.radii) {
    bp.push_back(holes.at(r).lo);
    bp.push_back(holes.at(r).hi);
  }
  o.op = ulam_engine(m, Partition::uniform(n).with_breakpoints(bp));
  o.max_t = static_cast<std::size_t>(1e15);
  auto res = l_alpha_scan(holes, MuSource::from_cdf(m->density->cdf, "analytic"), o);
  g_scans.emplace_back("5", res);
  bool ok = true;
  std::string d;
  for (auto& a : res.summaries) {
    const double rel = std::fabs(a.L_extrapolated / 0.75 - 1);
    ok = ok && rel <= 0.07;
    d += fmt("a=%g L=%.4f; ", a.alpha, a.L_extrapolated);
  }
  std::set<std::string> methods;
  for (auto& r : res.rows)
    if (r.alpha >= 2) methods.insert(r.method);
  ok = ok && methods == std::set<std::string>{"operator"};
  return {ok, d + fmt("N=%zu", n)};
}

Outcome c6() {
  auto m = make_doubling();
  auto generic = alpha_zero_limit(*m, Potential::geometric(), HoleFamily::symmetric(std::sqrt(2.0L) - 1, {1e-4L, 5e-5L, 2e-5L}), 9);
  auto fixed = alpha_zero_limit(*m, Potential::geometric(), HoleFamily::one_sided(0, {1e-4L, 5e-5L, 2e-5L}, 1), 9);
  const double e1 = std::fabs(generic.extrapolated / 10 - 1), e2 = std::fabs(fixed.extrapolated / 5.5 - 1);
  return {e1 <= 0.05 && e2 <= 0.05 && fixed.target == 5.5 && generic.target == 10,
          fmt("generic %.4f (target %.1f), z=0 %.4f (target %.2f)", generic.extrapolated, generic.target, fixed.extrapolated, fixed.target)};
}

Outcome c7() {
  json cfg = harness::validate_config(farey_config());
  auto s = harness::detail::make_setup(cfg);
  auto holes = harness::detail::make_holes(cfg, s);
  json budgets = json::object();
  ScanOptions o;
  o.alphas = {1, 1.5, 2, 2.5, 3};
  o.op = harness::detail::operator_engine(budgets, s, holes);
  auto mu = MuSource::from_cdf(s.cdf, s.mu_tag);
  auto res = l_alpha_scan(holes, mu, o);
  // Sub-critical rows: holes small enough that the finite-size excess s mu^{1-alpha}/2
  // sits below the sampling error.
  json small = farey_config();
  small["hole"]["mu"] = {1e-4, 5e-5, 2.5e-5};
  small = harness::validate_config(small);
  auto sub_holes = harness::detail::make_holes(small, s);
  ScanOptions so;
  so.alphas = {0.5};
  so.mc = harness::detail::mc_engine(s, 1'000'000, 7);
  so.op = harness::detail::operator_engine(budgets, s, sub_holes);
  auto sub = l_alpha_scan(sub_holes, mu, so);
  g_scans.emplace_back("7", sub);
  const auto* a15 = summary(res, 1.5);
  const auto* a3 = summary(res, 3);
  const double l15 = a15 ? a15->L_extrapolated : NAN, l3 = a3 ? a3->L_extrapolated : NAN;
  const double a0 = res.alpha0.value_or(NAN);
  const bool ok = l15 >= 0.7 && l3 <= 0.1 && a0 >= 1.6 && a0 <= 2.4;
  return {ok, fmt("L(1.5)=%.4f L(3)=%.4f (raw %.4f) alpha0=%.3f, L(0.5)=%.4f", l15, l3, a3 ? a3->L_raw.back() : NAN, a0,
                  sub.summaries.empty() ? NAN : sub.summaries[0].L_extrapolated)};
}

Outcome c8() {
  json cfg = farey_config();
  cfg["hole"]["mu"] = {0.04};
  cfg = harness::validate_config(cfg);
  auto s = harness::detail::make_setup(cfg);
  auto holes = harness::detail::make_holes(cfg, s);
  const std::vector<std::size_t> ts{1000, 100000};
  auto c = FareyRenewalOperator(*s.tail, holes.at(holes.radii[0]), ts.back()).survival(ts);
  const double k3 = static_cast<double>(-c.log_p[0]) / 1e3, k5 = static_cast<double>(-c.log_p[1]) / 1e5;
  return {k5 <= 0.25 * k3, fmt("slope(1e3)=%.4e slope(1e5)=%.4e ratio %.3f", k3, k5, k5 / k3)};
}

Outcome c9() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unif(0, 1);
  std::vector<std::function<MapPtr()>> maps{[] { return make_doubling(); }, [] { return make_ly_tent(1.8); },
                                            [] { return make_gauss(); }, [] { return make_lsv(0.5); }};
  std::vector<MapPtr> built;
  for (auto& f : maps) built.push_back(f());
  std::size_t violations = 0;
  double worst = -1;
  for (int k = 0; k < 100; ++k) {
    const MapPtr& m = built[rng() % built.size()];
    const std::size_t n = 64 + rng() % 1985;
    const double r = std::exp(std::log(1e-3) + unif(rng) * (std::log(5e-2) - std::log(1e-3)));
    const double z = 0.05 + 0.9 * unif(rng);
    const Interval u{std::max(0.0, z - r), std::min(1.0, z + r)};
    Partition part = Partition::uniform(n);
    auto op = std::make_shared<const UlamOperator>(build_ulam(*m, part));
    const real d = operator_l1_distance(*op, puncture(op, u));
    coord width = 0;
    for (std::size_t j = 0; j < part.size(); ++j) width = std::max(width, part.width(j));
    const double bound = static_cast<double>(u.length() + width);
    worst = std::max(worst, static_cast<double>(d) / bound);
    violations += d > bound;
  }
  return {violations == 0, fmt("100 triples, %zu violations, max d/bound %.4f", violations, worst)};
}

Outcome c10() {
  auto op = std::make_shared<const UlamOperator>(build_ulam(*make_doubling(), Partition::uniform(4096)));
  auto pr = ly_probe(puncture(op, Interval{0, 0.25L}), 8, 100);
  return {pr.sigma_hat <= 0.55, fmt("sigma_hat %.4f, C %.3f", pr.sigma_hat, pr.c)};
}

Outcome c11() {
  auto m = make_doubling();
  double worst = 0;
  std::size_t cases = 0, outside = 0;
  bool ok = true;
  struct Case {
    coord z;
    std::size_t p;
    bool one_sided;
  };
  for (const Case& c : {Case{0, 1, true}, Case{1.0L / 3, 2, false}})
    for (std::size_t k = 1; k <= 9; ++k) {
      std::size_t here = 0;
      for (coord r : {1e-3L, 1e-4L, 1e-5L, 1e-6L, 1e-7L}) {
        const Interval u = c.one_sided ? Interval{c.z, c.z + r} : Interval{c.z - r, c.z + r};
        UnionMeasure um;
        try {
          um = union_measure_periodic(*m, Potential::geometric(), u, c.z, c.p, k);
        } catch (const Error& e) {
          // other preimages of z enter U once 2^{-kp} < r
          if (e.code() != ErrorCode::HypothesisFailed) throw;
          ++outside;
          continue;
        }
        const double err = static_cast<double>(std::fabs(um.exact - um.prediction));
        // doubling has no distortion, so the bound reduces to the slack
        ok = ok && err <= 1e-12;
        worst = std::max(worst, err);
        ++cases;
        ++here;
      }
      ok = ok && here > 0;
    }
  return {ok, fmt("%zu cases, max |exact - prediction| %.3e, %zu (z, k, r) outside the nesting hypothesis", cases, worst, outside)};
}

Outcome c12() {
  auto m = make_doubling();
  const coord z = 1.0L / 3;
  std::string d;
  double q1 = NAN;
  for (coord r : {1e-3L, 1e-4L, 1e-5L}) {
    q1 = return_ratio_q(*m, {z - r, z + r}, 1).q;
    d += fmt("q1(r=%.0e)=%.5f ", static_cast<double>(r), q1);
  }
  bool zeros = true;
  for (std::size_t k : {0, 2, 3}) {
    const double q = return_ratio_q(*m, {z - 1e-5L, z + 1e-5L}, k).q;
    zeros = zeros && q == 0;
    d += fmt("q%zu=%g ", k, q);
  }
  return {std::fabs(q1 - 0.25) <= 0.02 && zeros, d};
}

Outcome c13() {
  std::size_t checked = 0, bad = 0;
  double worst = -INFINITY;
  for (auto& [name, res] : g_scans) {
    auto rc = remark_bound_check(res);
    checked += rc.checked.size();
    bad += rc.violations.size();
    for (std::size_t i : rc.checked) worst = std::max(worst, res.rows[i].L_hat);
  }
  return {checked > 0 && bad == 0, fmt("%zu rows with alpha < 1, %zu violations, max L_hat %.4f", checked, bad, worst)};
}

Outcome c14() {
  json cfg = {{"kind", "alpha-phase"},
              {"map", {{"name", "lsv"}, {"params", {{"gamma", 0.5}}}}},
              {"hole", {{"centre", 0.618}, {"frame", "base"}, {"mu", {0.01, 0.005, 0.0025}}}}};
  cfg = harness::validate_config(cfg);
  auto s = harness::detail::make_setup(cfg);
  auto holes = harness::detail::make_holes(cfg, s);
  json budgets = json::object();
  ScanOptions o;
  o.alphas = {2};
  o.op = harness::detail::operator_engine(budgets, s, holes);
  auto res = l_alpha_scan(holes, MuSource::from_cdf(s.cdf, s.mu_tag), o);
  const double l2 = res.summaries.at(0).L_extrapolated, l2_raw = res.summaries.at(0).L_raw.back();

  auto ind = induced_base(s.map, s.base, s.cdf);
  json big = cfg;
  big["hole"]["mu"] = {0.04};
  auto bh = harness::detail::make_holes(big, s);
  ObstructionOptions oo;
  oo.samples = 100'000;
  auto rep = polynomial_obstruction_probe(ind, bh.at(bh.radii[0]), 2, 1, oo);

  const std::vector<std::size_t> ts{8, 16, 32, 64, 128, 256};
  auto tail = return_tail_mc(ind, ts, 400'000);
  std::vector<double> x, y;
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (tail[i].p > 0) {
      x.push_back(std::log(static_cast<double>(ts[i])));
      y.push_back(std::log(tail[i].p));
    }
  const double slope = x.size() >= 2 ? linear_fit(x, y).slope : NAN;
  const bool ok = l2 <= 0.1 && rep.containment_applies && rep.violations == 0 && std::fabs(slope + 2) <= 0.3;
  return {ok, fmt("L(2)=%.4f (raw %.4f), containment u=%.0f violations %zu of %zu, tail slope %.3f", l2, l2_raw, rep.u, rep.violations,
                  rep.samples, slope)};
}

Outcome c15() {
  auto ind = first_return_map(make_doubling(), {0.5L, 1}, 60);
  std::vector<std::size_t> ns;
  for (std::size_t n = 10; n <= 120; n += 10) ns.push_back(n);
  LdOptions o;
  o.samples = 1'000'000;
  auto c = ld_curve(induced_return_system(ind), 0.5, ns, o);
  const double cramer = 2.5 * std::log(2.0) + 1.5 * std::log(1.5) - 2.5 * std::log(2.5);
  const double slope = rate_slope(c, 30, 120).slope;
  auto p = pressure_series_probe(ind, 0.0, 50);
  const double ts = p.t_star.value_or(NAN);
  const bool ok = std::fabs(slope / cramer - 1) <= 0.15 && std::fabs(ts - std::log(2.0)) <= 0.01;
  return {ok, fmt("rate slope %.5f vs %.5f (%.1f%%), t* %.5f", slope, cramer, 100 * (slope / cramer - 1), ts)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::function<Outcome()>> all{{1, c1},  {2, c2},  {3, c3},   {4, c4},   {5, c5},   {6, c6},   {7, c7},  {8, c8},
                                                   {9, c9},  {10, c10}, {11, c11}, {12, c12}, {13, c13}, {14, c14}, {15, c15}};
  std::set<int> pick;
  for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));
  if (pick.empty())
    for (auto& [k, f] : all) pick.insert(k);
  if (pick.count(13)) pick.insert({4, 5, 7});
  int failed = 0;
  for (int k : pick) {
    auto it = all.find(k);
    if (it == all.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = it->second();
    } catch (const std::exception& e) {
      out = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d: %s  %s [%.1f s]\n", k, out.pass ? "PASS" : "FAIL", out.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !out.pass;
  }
  return failed ? 1 : 0;
}
