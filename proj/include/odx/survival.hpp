#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "odx/sampling.hpp"
#include "odx/spectral.hpp"
#include "odx/stats.hpp"

namespace odx {

struct SurvivalCurve {
  std::vector<std::size_t> t;
  std::vector<double> p_hat;
  std::vector<long double> log_p;  // kept separately: operator curves go far below double range
  std::vector<double> ci_lo, ci_hi;
  double censored = 0;  // fraction of samples still alive at the horizon
  std::size_t samples = 0;
  std::size_t resampled = 0;
  std::string method;
  std::vector<std::size_t> survivors;  // mc only
};

struct McOptions {
  std::size_t samples = 1'000'000;
  std::size_t horizon = 0;  // 0: max of the t grid
  SamplerConfig sampler;
  unsigned workers = thread_count();
};

namespace detail {

// tau for one sample, capped at horizon + 1 (= censored). Orbits meeting D are redrawn.
inline std::size_t mc_hitting(const IntervalMap& map, const DensitySampler& s, double lo, double hi, std::size_t horizon, Rng& rng,
                              std::size_t& redo) {
  for (;;) {
    double x = s.draw(rng);
    std::size_t n = 1;
    for (; n <= horizon; ++n) {
      x = mc_step(map, x, rng);
      if (!std::isfinite(x)) break;
      if (x >= lo && x < hi) return n;
    }
    if (n > horizon) return horizon + 1;
    ++redo;
  }
}

}  // namespace detail

/// Monte Carlo mu(tau > t) with Wilson intervals.
inline SurvivalCurve survival_curve_mc(const IntervalMap& map, Interval hole, const std::vector<std::size_t>& t_grid, McOptions opt = {}) {
  opt.sampler.validate();
  const std::size_t t_max = t_grid.empty() ? 0 : *std::max_element(t_grid.begin(), t_grid.end());
  const std::size_t horizon = opt.horizon ? opt.horizon : t_max;
  DensitySampler sampler = make_sampler(map, opt.sampler);
  const double lo = static_cast<double>(hole.lo), hi = static_cast<double>(hole.hi);
  const unsigned workers = std::max(1u, opt.workers);
  std::vector<std::vector<std::size_t>> hist(workers, std::vector<std::size_t>(horizon + 2, 0));
  std::vector<std::size_t> redo(workers, 0);
  parallel_chunks(opt.samples, workers, [&](unsigned w, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      Rng rng(opt.sampler.seed, i);
      ++hist[w][detail::mc_hitting(map, sampler, lo, hi, horizon, rng, redo[w])];
    }
  });
  std::vector<std::size_t> h(horizon + 2, 0);
  std::size_t redo_total = 0;
  for (unsigned w = 0; w < workers; ++w) {
    for (std::size_t k = 0; k < h.size(); ++k) h[k] += hist[w][k];
    redo_total += redo[w];
  }
  // alive[t] = #{tau > t}
  std::vector<std::size_t> alive(horizon + 2, 0);
  alive[horizon + 1] = 0;
  std::size_t acc = h[horizon + 1];
  for (std::size_t t = horizon + 1; t-- > 0;) {
    alive[t] = acc;
    acc += h[t];
  }
  SurvivalCurve c;
  c.method = "mc";
  c.samples = opt.samples;
  c.resampled = redo_total;
  c.censored = static_cast<double>(h[horizon + 1]) / static_cast<double>(opt.samples);
  for (std::size_t t : t_grid) {
    if (t > horizon) {
      const double p_max = static_cast<double>(alive[horizon]) / static_cast<double>(opt.samples);
      if (c.censored > 1e-3 * p_max)
        throw Error(ErrorCode::ExcessCensoring, "t grid extends past the horizon with too much censored mass", static_cast<std::int64_t>(t));
    }
    const std::size_t k = t == 0 ? opt.samples : alive[std::min(t, horizon)];
    auto ci = wilson(k, opt.samples);
    c.t.push_back(t);
    c.survivors.push_back(k);
    c.p_hat.push_back(ci.p);
    c.log_p.push_back(std::log(static_cast<long double>(ci.p)));
    c.ci_lo.push_back(ci.lo);
    c.ci_hi.push_back(ci.hi);
  }
  return c;
}

/// Operator survival: log of the mass of L_U^t g0, renormalised every step. Once the
/// normalised iterate has converged, the remaining steps advance by log(lambda).
inline SurvivalCurve survival_curve_operator(const PuncturedOperator& p, const std::vector<real>& g0_mass,
                                             const std::vector<std::size_t>& t_grid, double converge_tol = 1e-15) {
  if (g0_mass.size() != p.size()) throw Error(ErrorCode::PartitionMismatch, "initial vector does not match the partition");
  std::vector<std::size_t> order(t_grid.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return t_grid[a] < t_grid[b]; });

  std::vector<real> v = g0_mass, y;
  real mass0 = detail::l1(v);
  for (auto& x : v) x /= mass0;
  long double acc = std::log(mass0);
  std::size_t t = 0;
  bool converged = false;
  long double log_lambda = 0;
  std::vector<long double> out(t_grid.size());
  for (std::size_t oi : order) {
    const std::size_t target = t_grid[oi];
    while (t < target) {
      if (converged) {
        acc += static_cast<long double>(target - t) * log_lambda;
        t = target;
        break;
      }
      p.apply(v, y);
      const real m = detail::l1(y);
      if (!(m > 0)) {
        acc = -std::numeric_limits<long double>::infinity();
        t = target;
        converged = true;
        log_lambda = acc;
        break;
      }
      real diff = 0;
      for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] /= m;
        diff += std::fabs(y[i] - v[i]);
      }
      v.swap(y);
      acc += std::log(m);
      ++t;
      if (diff < converge_tol) {
        converged = true;
        log_lambda = std::log(m);
      }
    }
    out[oi] = acc;
  }
  SurvivalCurve c;
  c.method = "operator";
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    c.t.push_back(t_grid[i]);
    c.log_p.push_back(out[i]);
    const double pv = static_cast<double>(std::exp(out[i]));
    c.p_hat.push_back(pv);
    c.ci_lo.push_back(pv);
    c.ci_hi.push_back(pv);
  }
  return c;
}

}  // namespace odx
