#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "odx/induced.hpp"
#include "odx/sampling.hpp"
#include "odx/stats.hpp"

namespace odx {

/// Orbit source for Birkhoff sums: `advance` returns psi at the current state and
/// moves the state on; nullopt when the orbit is lost (D, unresolved return).
struct OrbitSystem {
  std::string tag;
  std::function<coord(Rng&)> draw;
  std::function<std::optional<double>(coord&, Rng&)> advance;
  std::optional<double> known_mean;  // exact psi bar when available
};

/// Induced map with psi = R_Y; the mean is 1/mu(Y) by Kac.
inline OrbitSystem induced_return_system(const InducedMap& ind) {
  auto stepper = std::make_shared<InducedStepper>(ind);
  OrbitSystem s;
  s.tag = "R_Y";
  s.draw = [stepper](Rng& rng) { return stepper->draw(rng); };
  s.advance = [stepper](coord& y, Rng& rng) -> std::optional<double> {
    const std::size_t R = stepper->advance(y, rng);
    if (!R) return std::nullopt;
    return static_cast<double>(R);
  };
  s.known_mean = static_cast<double>(1 / ind.mu_Y);
  return s;
}

/// Base map with a pointwise observable, started from the invariant measure.
inline OrbitSystem map_system(MapPtr map, std::function<double(double)> psi, std::string tag, SamplerConfig cfg = {}) {
  auto sampler = std::make_shared<DensitySampler>(make_sampler(*map, cfg));
  OrbitSystem s;
  s.tag = std::move(tag);
  s.draw = [sampler](Rng& rng) { return static_cast<coord>(sampler->draw(rng)); };
  s.advance = [map, psi](coord& x, Rng& rng) -> std::optional<double> {
    const double v = psi(static_cast<double>(x));
    const double y = mc_step(*map, static_cast<double>(x), rng);
    if (!std::isfinite(y)) return std::nullopt;
    x = y;
    return v;
  };
  return s;
}

struct RateCurve {
  std::string tag;
  double eps = 0;
  double psi_bar = 0, psi_bar_halfwidth = 0;  // eps is effectively eps +- halfwidth
  std::vector<std::size_t> n;
  std::vector<double> ell_hat, ci_lo, ci_hi;  // ell = -log P(S_n/n > psi_bar + eps)
  std::vector<std::size_t> count;
  std::vector<bool> zero_count;  // no exceedance: ell_hat is NaN, ci_lo a lower bound
  std::size_t samples = 0, redrawn = 0;
};

struct LdOptions {
  std::size_t samples = 1'000'000;
  std::uint64_t seed = 1;
  std::optional<double> psi_bar;
  std::size_t mean_samples = 10'000'000;
  unsigned workers = thread_count();
};

/// Sample mean of psi under the starting measure, with a 95% half-width.
inline std::pair<double, double> estimate_mean(const OrbitSystem& sys, std::size_t samples, std::uint64_t seed, unsigned workers = thread_count()) {
  workers = std::max(1u, workers);
  std::vector<long double> s1(workers, 0), s2(workers, 0);
  std::vector<std::size_t> used(workers, 0);
  parallel_chunks(samples, workers, [&](unsigned w, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      Rng rng(seed ^ 0x6d65616eULL, i);
      coord x = sys.draw(rng);
      auto v = sys.advance(x, rng);
      if (!v) continue;
      s1[w] += *v;
      s2[w] += static_cast<long double>(*v) * *v;
      ++used[w];
    }
  });
  long double a = 0, b = 0;
  std::size_t n = 0;
  for (unsigned w = 0; w < workers; ++w) {
    a += s1[w];
    b += s2[w];
    n += used[w];
  }
  if (n < 2) throw Error(ErrorCode::Degenerate, "no usable samples for the mean");
  const long double m = a / n, var = std::max<long double>(0, b / n - m * m);
  return {static_cast<double>(m), static_cast<double>(1.96L * std::sqrt(var / n))};
}

/// ell_hat(n) = -log mu(S_n psi / n > psi_bar + eps) over an n grid, from shared orbits.
inline RateCurve ld_curve(const OrbitSystem& sys, double eps, std::vector<std::size_t> n_grid, LdOptions opt = {}) {
  std::sort(n_grid.begin(), n_grid.end());
  n_grid.erase(std::unique(n_grid.begin(), n_grid.end()), n_grid.end());
  if (n_grid.empty() || n_grid.front() == 0) throw Error(ErrorCode::ConfigInvalid, "n grid must be nonempty and positive");
  RateCurve c;
  c.tag = sys.tag;
  c.eps = eps;
  c.samples = opt.samples;
  if (opt.psi_bar) {
    c.psi_bar = *opt.psi_bar;
  } else if (sys.known_mean) {
    c.psi_bar = *sys.known_mean;
  } else {
    auto [m, h] = estimate_mean(sys, opt.mean_samples, opt.seed, opt.workers);
    c.psi_bar = m;
    c.psi_bar_halfwidth = h;
  }
  const std::size_t N = n_grid.back();
  const long double level = static_cast<long double>(c.psi_bar) + eps;
  const unsigned workers = std::max(1u, opt.workers);
  std::vector<std::vector<std::size_t>> hits(workers, std::vector<std::size_t>(n_grid.size(), 0));
  std::vector<std::size_t> redo(workers, 0);
  parallel_chunks(opt.samples, workers, [&](unsigned w, std::size_t b, std::size_t e) {
    std::vector<char> over(n_grid.size());
    for (std::size_t i = b; i < e; ++i) {
      Rng rng(opt.seed, i);
      for (;;) {
        coord x = sys.draw(rng);
        long double S = 0;
        std::size_t g = 0;
        bool ok = true;
        for (std::size_t n = 1; n <= N; ++n) {
          auto v = sys.advance(x, rng);
          if (!v) {
            ok = false;
            break;
          }
          S += *v;
          if (n == n_grid[g]) {
            over[g] = S > level * static_cast<long double>(n);
            ++g;
          }
        }
        if (!ok) {
          ++redo[w];
          continue;
        }
        for (std::size_t k = 0; k < n_grid.size(); ++k) hits[w][k] += over[k];
        break;
      }
    }
  });
  for (unsigned w = 0; w < workers; ++w) c.redrawn += redo[w];
  for (std::size_t k = 0; k < n_grid.size(); ++k) {
    std::size_t cnt = 0;
    for (unsigned w = 0; w < workers; ++w) cnt += hits[w][k];
    const auto ci = wilson(cnt, opt.samples);
    c.n.push_back(n_grid[k]);
    c.count.push_back(cnt);
    c.zero_count.push_back(cnt == 0);
    c.ell_hat.push_back(cnt ? -std::log(ci.p) : std::numeric_limits<double>::quiet_NaN());
    c.ci_lo.push_back(-std::log(ci.hi));
    c.ci_hi.push_back(cnt ? -std::log(ci.lo) : std::numeric_limits<double>::infinity());
  }
  return c;
}

/// Slope of ell_hat(n) - prefactor log n over n in [n_lo, n_hi]; prefactor 1/2 removes
/// the local-limit correction P ~ e^{-nI}/sqrt(n).
inline LinearFit rate_slope(const RateCurve& c, std::size_t n_lo, std::size_t n_hi, double prefactor = 0.5) {
  std::vector<double> x, y;
  for (std::size_t k = 0; k < c.n.size(); ++k)
    if (c.n[k] >= n_lo && c.n[k] <= n_hi && !c.zero_count[k]) {
      x.push_back(static_cast<double>(c.n[k]));
      y.push_back(c.ell_hat[k] - prefactor * std::log(static_cast<double>(c.n[k])));
    }
  return linear_fit(x, y);
}

struct TailCandidate {
  std::string cls;  // exponential | stretched | polynomial
  double rate = 0;  // exponential: v ~ e^{-rate u}
  double gamma = 0, c = 0;  // stretched: v ~ e^{-c u^gamma}
  double beta = 0;  // polynomial: v ~ u^{-beta}
  double r2 = 0;
};

struct TailFit {
  std::vector<TailCandidate> candidates;  // best of each class
  std::vector<std::pair<double, double>> stretched_grid;  // (gamma, r2)
  TailCandidate selected;
};

/// Regressions of log v on u, u^gamma (gamma in [0.2, 0.9] by 0.02) and log u; the
/// class with the largest R^2 wins.
inline TailFit tail_fit(const std::vector<double>& u, const std::vector<double>& v) {
  if (u.size() != v.size()) throw Error(ErrorCode::ConfigInvalid, "tail table columns differ in length");
  bool all_zero = true, all_equal = true;
  for (std::size_t i = 0; i < v.size(); ++i) {
    all_zero = all_zero && v[i] == 0;
    all_equal = all_equal && v[i] == v[0];
  }
  if (v.empty() || all_zero || all_equal) throw Error(ErrorCode::Degenerate, "tail values are all equal or zero");
  std::vector<double> x, lv, lx;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (v[i] > 0 && u[i] > 0) {
      x.push_back(u[i]);
      lv.push_back(std::log(v[i]));
      lx.push_back(std::log(u[i]));
    }
  if (x.size() < 8) throw Error(ErrorCode::ConfigInvalid, "tail fit needs at least 8 positive points");
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  if (*mx < 10 * *mn) throw Error(ErrorCode::ConfigInvalid, "tail fit needs the u grid to span a decade");

  TailFit out;
  {
    auto f = linear_fit(x, lv);
    TailCandidate c;
    c.cls = "exponential";
    c.rate = -f.slope;
    c.r2 = f.r2;
    out.candidates.push_back(c);
  }
  {
    TailCandidate best;
    best.cls = "stretched";
    best.r2 = -1;
    for (int k = 0; k <= 35; ++k) {
      const double g = 0.2 + 0.02 * k;
      std::vector<double> xg(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) xg[i] = std::pow(x[i], g);
      auto f = linear_fit(xg, lv);
      out.stretched_grid.emplace_back(g, f.r2);
      if (f.r2 > best.r2) {
        best.r2 = f.r2;
        best.gamma = g;
        best.c = -f.slope;
      }
    }
    out.candidates.push_back(best);
  }
  {
    auto f = linear_fit(lx, lv);
    TailCandidate c;
    c.cls = "polynomial";
    c.beta = -f.slope;
    c.r2 = f.r2;
    out.candidates.push_back(c);
  }
  out.selected = *std::max_element(out.candidates.begin(), out.candidates.end(), [](auto& a, auto& b) { return a.r2 < b.r2; });
  return out;
}

struct PressureProbe {
  double t = 0;
  std::size_t j_max = 0;
  std::vector<long double> partial_sums;
  std::vector<double> log_weight;  // phi(x_j) = -log |DF(x_j)|
  std::vector<std::size_t> R;      // psi(x_j)
  double ratio = 0;                // geometric-mean term ratio over the second half
  double margin = 0;               // |ratio - 1|
  std::string verdict;             // converges | diverges
  bool stable = false;             // margin > 10%
  std::optional<double> t_star;    // t where the ratio crosses 1
};

/// Truncated fixed-point series sum_j e^{(phi + t psi)(x_j)} over the return branches,
/// ordered by return time.
inline PressureProbe pressure_series_probe(const InducedMap& ind, double t, std::size_t j_max) {
  if (ind.branches.empty()) throw Error(ErrorCode::NonFullBranched, "pressure probe needs a return-branch table");
  std::vector<const ReturnBranch*> order;
  for (const auto& b : ind.branches) {
    if (b.image.length() < (1 - 1e-9L) * ind.Y.length())
      throw Error(ErrorCode::NonFullBranched, "return branch does not cover Y", static_cast<std::int64_t>(b.R));
    order.push_back(&b);
  }
  std::stable_sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->R < b->R; });
  if (order.size() > j_max) order.resize(j_max);
  if (order.size() < 4) throw Error(ErrorCode::ConfigInvalid, "pressure probe needs at least 4 branches");

  PressureProbe p;
  p.t = t;
  p.j_max = order.size();
  for (const ReturnBranch* b : order) {
    coord lw;
    if (ind.farey) {
      lw = std::log(b->mass);  // linear branch: |DF| = 1/a_n
    } else {
      // fixed point of F on the branch; F(x) - x changes sign across the domain
      auto F = [&](coord x) {
        coord y = x;
        coord ld = 0;
        for (std::size_t k = 0; k < b->R; ++k) {
          ld += std::log(ind.base->abs_derivative(y));
          y = ind.base->apply(y)->y;
        }
        return std::make_pair(y, ld);
      };
      coord lo = b->domain.lo, hi = b->domain.hi;
      const coord eps = (hi - lo) * 1e-12L;
      coord glo = F(lo + eps).first - (lo + eps);
      for (int it = 0; it < 100 && hi - lo > 0; ++it) {
        const coord mid = lo + (hi - lo) / 2;
        const coord g = F(mid).first - mid;
        if ((g < 0) == (glo < 0)) {
          lo = mid;
          glo = g;
        } else {
          hi = mid;
        }
      }
      lw = -F(lo + (hi - lo) / 2).second;
    }
    p.log_weight.push_back(static_cast<double>(lw));
    p.R.push_back(b->R);
  }
  long double s = 0;
  for (std::size_t j = 0; j < p.R.size(); ++j) {
    s += std::exp(static_cast<long double>(p.log_weight[j]) + static_cast<long double>(t) * p.R[j]);
    p.partial_sums.push_back(s);
  }
  // log ratio is affine in t: mean dlogw + t mean dR
  const std::size_t half = p.R.size() / 2;
  double dw = 0, dR = 0;
  std::size_t m = 0;
  for (std::size_t j = half; j + 1 < p.R.size(); ++j, ++m) {
    dw += p.log_weight[j + 1] - p.log_weight[j];
    dR += static_cast<double>(p.R[j + 1]) - static_cast<double>(p.R[j]);
  }
  dw /= static_cast<double>(m);
  dR /= static_cast<double>(m);
  p.ratio = std::exp(dw + t * dR);
  p.margin = std::fabs(p.ratio - 1);
  p.verdict = p.ratio < 1 ? "converges" : "diverges";
  p.stable = p.margin > 0.1;
  if (dR > 0) p.t_star = -dw / dR;
  return p;
}

}  // namespace odx
