#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "odx/open_system.hpp"
#include "odx/stats.hpp"
#include "odx/survival.hpp"

namespace odx {

/// A way of computing mu(tau > t) over a t grid for one hole.
struct SurvivalEngine {
  std::string method;
  std::function<SurvivalCurve(Interval, const std::vector<std::size_t>&)> run;
};

/// Invariant measure of holes, tagged with where it comes from (analytic | ulam).
struct MuSource {
  std::string tag;
  std::function<double(Interval)> mu;

  static MuSource from_cdf(std::function<coord(coord)> cdf, std::string tag) {
    return {std::move(tag), [cdf](Interval u) { return static_cast<double>(cdf(u.hi) - cdf(u.lo)); }};
  }
};

struct ScanRow {
  double alpha = 0, s = 0, r = 0, mu_U = 0;
  std::size_t t = 0;
  long double log_p = 0;
  double L_hat = 0, ci_lo = 0, ci_hi = 0;
  std::string mu_source, method;
  std::size_t survivors = 0;  // mc rows
};

struct AlphaSummary {
  double alpha = 0, s = 0;
  double L_extrapolated = 0;  // intercept of L_hat against mu(U)
  double kappa = 0;           // slope of log L_hat against log mu(U)
  bool kappa_valid = false;
  std::vector<double> L_raw;
};

struct ScanResult {
  std::vector<ScanRow> rows;
  std::vector<AlphaSummary> summaries;
  std::optional<double> alpha0;            // scaling-exponent estimate
  std::optional<double> alpha0_threshold;  // first alpha with L < 0.1 median(L, alpha <= 1)
};

struct ScanOptions {
  std::vector<double> alphas;
  std::vector<double> s_values{1.0};
  std::optional<SurvivalEngine> mc;
  std::optional<SurvivalEngine> op;
  std::size_t mc_samples = 1'000'000;
  std::size_t min_survivors = 100;
  double deep_tail = 1e-8;
  std::size_t mc_max_t = 200'000;   // longer horizons go to the operator
  std::size_t max_t = 1'000'000'000;  // budget
};

class ScanBudgetExceeded : public Error {
 public:
  ScanBudgetExceeded(std::string msg, ScanResult partial)
      : Error(ErrorCode::BudgetExceeded, std::move(msg)), partial_(std::make_shared<ScanResult>(std::move(partial))) {}
  const ScanResult& partial() const { return *partial_; }

 private:
  std::shared_ptr<ScanResult> partial_;
};

/// t = floor(s mu^{-alpha}).
inline std::size_t scan_time(double alpha, double s, double mu) {
  return static_cast<std::size_t>(std::floor(s * std::pow(mu, -alpha)));
}

/// Per-(alpha, s) extrapolation and scaling exponent from the rows.
inline void summarise_scan(ScanResult& res) {
  std::map<std::pair<double, double>, std::vector<const ScanRow*>> groups;
  for (const auto& r : res.rows) groups[{r.alpha, r.s}].push_back(&r);
  res.summaries.clear();
  for (auto& [key, rows] : groups) {
    AlphaSummary a;
    a.alpha = key.first;
    a.s = key.second;
    std::vector<double> mu, L, lmu, lL;
    for (auto* r : rows) {
      if (!std::isfinite(r->L_hat)) continue;
      mu.push_back(r->mu_U);
      L.push_back(r->L_hat);
      a.L_raw.push_back(r->L_hat);
      if (r->L_hat > 0) {
        lmu.push_back(std::log(r->mu_U));
        lL.push_back(std::log(r->L_hat));
      }
    }
    if (mu.size() >= 2)
      a.L_extrapolated = linear_fit(mu, L).intercept;
    else if (!L.empty())
      a.L_extrapolated = L.front();
    if (lmu.size() >= 2) {
      a.kappa = linear_fit(lmu, lL).slope;
      a.kappa_valid = true;
    }
    res.summaries.push_back(a);
  }
}

/// Threshold rule: smallest alpha whose extrapolated L drops below 0.1 times the
/// median over alpha <= 1.
inline std::optional<double> alpha0_threshold(const std::vector<AlphaSummary>& sums) {
  std::vector<double> base;
  for (auto& a : sums)
    if (a.alpha <= 1) base.push_back(a.L_extrapolated);
  if (base.empty()) return std::nullopt;
  std::sort(base.begin(), base.end());
  const double med = base[base.size() / 2];
  std::vector<AlphaSummary> sorted = sums;
  std::sort(sorted.begin(), sorted.end(), [](auto& x, auto& y) { return x.alpha < y.alpha; });
  for (auto& a : sorted)
    if (a.L_extrapolated < 0.1 * med) return a.alpha;
  return std::nullopt;
}

/// Scaling rule: kappa(alpha) = d log L / d log mu is ~0 below the transition and
/// grows linearly above it; the zero of a line through the kappa > 0.1 points.
inline std::optional<double> alpha0_scaling(const std::vector<AlphaSummary>& sums, double kappa_min = 0.1) {
  std::vector<double> x, y;
  for (auto& a : sums)
    if (a.kappa_valid && a.kappa > kappa_min) {
      x.push_back(a.alpha);
      y.push_back(a.kappa);
    }
  if (x.size() < 2) return std::nullopt;
  auto f = linear_fit(x, y);
  if (!(f.slope > 0)) return std::nullopt;
  return -f.intercept / f.slope;
}

/// L_hat = -log mu(tau > t) / (s mu^{1-alpha}) over the (alpha, s, r) grid.
inline ScanResult l_alpha_scan(const HoleFamily& holes, const MuSource& mu_src, const ScanOptions& opt) {
  if (!opt.mc && !opt.op) throw Error(ErrorCode::ConfigInvalid, "scan needs at least one survival engine");
  ScanResult res;
  for (double alpha : opt.alphas) {
    for (coord r : holes.radii) {
      const Interval u = holes.at(r);
      const double mu = mu_src.mu(u);
      std::vector<std::size_t> ts;
      for (double s : opt.s_values) ts.push_back(scan_time(alpha, s, mu));
      const std::size_t t_max = *std::max_element(ts.begin(), ts.end());
      if (t_max > opt.max_t) throw ScanBudgetExceeded("scan time exceeds the budget", res);
      // L <= 1 in the limit, hence p >= exp(-s mu^{1-alpha}); rows whose floor is
      // too small for Monte Carlo go to the operator.
      double p_floor = 1;
      for (double s : opt.s_values) p_floor = std::min(p_floor, std::exp(-s * std::pow(mu, 1 - alpha)));
      bool use_mc = opt.mc && t_max <= opt.mc_max_t && p_floor >= opt.deep_tail &&
                    p_floor * static_cast<double>(opt.mc_samples) >= static_cast<double>(opt.min_survivors);
      if (!opt.op) use_mc = true;
      SurvivalCurve c = use_mc ? opt.mc->run(u, ts) : opt.op->run(u, ts);
      if (use_mc && opt.op) {
        const std::size_t least = *std::min_element(c.survivors.begin(), c.survivors.end());
        if (least < opt.min_survivors) c = opt.op->run(u, ts);
      }
      for (std::size_t i = 0; i < opt.s_values.size(); ++i) {
        ScanRow row;
        row.alpha = alpha;
        row.s = opt.s_values[i];
        row.r = static_cast<double>(r);
        row.mu_U = mu;
        row.t = ts[i];
        row.log_p = c.log_p[i];
        const double denom = row.s * std::pow(mu, 1 - alpha);
        row.L_hat = static_cast<double>(-c.log_p[i] / denom);
        row.ci_lo = -std::log(c.ci_hi[i]) / denom;
        row.ci_hi = -std::log(c.ci_lo[i]) / denom;
        if (c.method == "operator") row.ci_lo = row.ci_hi = row.L_hat;
        row.mu_source = mu_src.tag;
        row.method = c.method;
        row.survivors = c.survivors.empty() ? 0 : c.survivors[i];
        res.rows.push_back(row);
      }
    }
  }
  summarise_scan(res);
  res.alpha0 = alpha0_scaling(res.summaries);
  res.alpha0_threshold = alpha0_threshold(res.summaries);
  return res;
}

struct AlphaZeroRow {
  double r = 0, mu_U = 0, value = 0;  // value = -log mu(e_r > t) / mu(U)
};

struct AlphaZeroResult {
  std::vector<AlphaZeroRow> rows;
  double extrapolated = 0;
  double target = 0;
};

/// alpha = 0 endpoint: mu(x, f x, ..., f^t x all outside U) computed exactly through
/// preimage sets. The t+1 sets f^{-j}U, j = 0..t, must be disjoint away from
/// multiples of the period.
inline AlphaZeroResult alpha_zero_limit(const IntervalMap& map, const Potential& pot, const HoleFamily& holes, std::size_t t,
                                        std::function<coord(coord)> cdf = {}) {
  if (!cdf) cdf = measure_cdf(map);
  AlphaZeroResult out;
  const std::size_t p = holes.period.value_or(0);
  for (coord r : holes.radii) {
    const Interval u = holes.at(r);
    std::vector<IntervalSet> pre{IntervalSet::single(u, "U")};
    for (std::size_t j = 1; j <= t; ++j) pre.push_back(preimage_set(map, pre.back(), 1));
    for (std::size_t i = 0; i <= t; ++i)
      for (std::size_t j = i + 1; j <= t; ++j) {
        if (p && (j - i) % p == 0) continue;
        if (pre[i].intersect(pre[j]).measure() > 0)
          throw Error(ErrorCode::DisjointnessFailed, "preimages of the hole overlap; shrink r", static_cast<std::int64_t>(j));
      }
    IntervalSet uni = pre[0];
    for (std::size_t j = 1; j <= t; ++j) uni = uni.unite(pre[j]);
    const coord mu_u = u.length() > 0 ? cdf(u.hi) - cdf(u.lo) : 0;
    const coord gone = uni.measure(cdf);
    out.rows.push_back({static_cast<double>(r), static_cast<double>(mu_u), static_cast<double>(-std::log1p(-gone) / mu_u)});
  }
  std::vector<double> x, y;
  for (auto& row : out.rows) {
    x.push_back(row.mu_U);
    y.push_back(row.value);
  }
  out.extrapolated = x.size() >= 2 ? linear_fit(x, y).intercept : (y.empty() ? 0 : y[0]);
  if (!p) {
    out.target = static_cast<double>(t + 1);
  } else {
    // t = (k+1)p - 1; target pk + p - pk e^{S_p phi(z)}.
    const double k = static_cast<double>((t + 1) / p) - 1;
    const double e = static_cast<double>(std::exp(birkhoff_sum(map, pot, holes.z, p)));
    const double pp = static_cast<double>(p);
    out.target = pp * k + pp - pp * k * e;
  }
  return out;
}

struct RemarkViolation {
  std::size_t row = 0;
  std::string reason;  // "exceeds" | "NonFinite"
};

struct RemarkCheck {
  std::vector<RemarkViolation> violations;
  std::vector<double> companion;  // mu(tau <= t) / (s mu^{1-alpha}) per checked row
  std::vector<std::size_t> checked;
};

/// Rows with alpha < 1 must satisfy L_hat <= 1 + 3 CI half-widths.
inline RemarkCheck remark_bound_check(const ScanResult& scan) {
  RemarkCheck out;
  for (std::size_t i = 0; i < scan.rows.size(); ++i) {
    const ScanRow& r = scan.rows[i];
    if (!(r.alpha < 1)) continue;
    out.checked.push_back(i);
    const double denom = r.s * std::pow(r.mu_U, 1 - r.alpha);
    out.companion.push_back(static_cast<double>(-std::expm1(r.log_p)) / denom);
    if (!std::isfinite(static_cast<double>(r.log_p)) || !std::isfinite(r.L_hat)) {
      out.violations.push_back({i, "NonFinite"});
      continue;
    }
    const double half = std::isfinite(r.ci_hi - r.ci_lo) ? (r.ci_hi - r.ci_lo) / 2 : 0;
    if (r.L_hat > 1 + 3 * half) out.violations.push_back({i, "exceeds"});
  }
  return out;
}

}  // namespace odx
