#pragma once

#include <cmath>
#include <vector>

#include "odx/random.hpp"
#include "odx/stats.hpp"
#include "odx/ulam.hpp"

namespace odx {

struct LyProbe {
  double sigma_hat = 0;
  double c = 0;
  std::vector<double> max_ratio;  // max over rough trials of Var(L^n psi) / Var(psi), n = 1..n_max
  std::size_t trials = 0;
  bool contraction = false;  // sigma_hat < 1
};

inline real variation(const std::vector<real>& g) {
  real v = 0;
  for (std::size_t i = 1; i < g.size(); ++i) v += std::fabs(g[i] - g[i - 1]);
  return v;
}

/// Empirical Lasota-Yorke constants: Var(L^n psi) <= C sigma^n Var(psi) + C |psi|_1.
/// sigma comes from a log-linear fit of the worst variation ratio over rough step
/// functions; C is the least constant that covers every trial (rough, monotone,
/// constant and indicator functions).
inline LyProbe ly_probe(const PuncturedOperator& p, std::size_t n_max = 8, std::size_t trials = 60, std::uint64_t seed = 11) {
  const Partition& part = p.base->partition;
  const std::size_t n = part.size();
  Rng rng(seed, 0x1a5);
  std::vector<std::vector<real>> rough, smooth;
  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<real> g(n);
    if (t % 2 == 0) {
      real cur = rng.uniform_ld() * 2 - 1;
      for (std::size_t i = 0; i < n; ++i) {
        if (rng.uniform() < 0.5) cur = rng.uniform_ld() * 2 - 1;
        g[i] = cur;
      }
    } else {
      const std::size_t block = 1 + rng() % 4;
      for (std::size_t i = 0; i < n; ++i) g[i] = ((i / block) % 2 == 0) ? 1 : -1;
    }
    rough.push_back(std::move(g));
  }
  for (std::size_t t = 0; t < std::max<std::size_t>(trials / 4, 2); ++t) {
    std::vector<real> g(n);
    for (auto& x : g) x = rng.uniform_ld();
    std::sort(g.begin(), g.end());
    smooth.push_back(std::move(g));
  }
  smooth.push_back(std::vector<real>(n, 1));
  {
    std::vector<real> ind(n, 0);
    for (std::size_t i = 0; i < n; ++i) ind[i] = part.cell(i).centre() < 0.5L ? 1 : 0;
    smooth.push_back(ind);
  }

  auto l1 = [&](const std::vector<real>& g) {
    real s = 0;
    for (std::size_t i = 0; i < n; ++i) s += std::fabs(g[i]) * part.width(i);
    return s;
  };
  // Records (n, Var(L^n psi), Var psi, |psi|_1) for each trial.
  struct Obs {
    std::size_t k;
    real var_out, var_in, norm;
  };
  std::vector<Obs> obs;
  LyProbe out;
  out.max_ratio.assign(n_max, 0);
  auto run = [&](const std::vector<real>& g0, bool is_rough) {
    std::vector<real> mass(n), next;
    for (std::size_t i = 0; i < n; ++i) mass[i] = g0[i] * part.width(i);
    const real v0 = variation(g0), a0 = l1(g0);
    std::vector<real> g(n);
    for (std::size_t k = 1; k <= n_max; ++k) {
      p.apply(mass, next);
      mass.swap(next);
      for (std::size_t i = 0; i < n; ++i) g[i] = mass[i] / part.width(i);
      const real vk = variation(g);
      obs.push_back({k, vk, v0, a0});
      if (is_rough && v0 > 0) out.max_ratio[k - 1] = std::max(out.max_ratio[k - 1], static_cast<double>(vk / v0));
    }
  };
  for (auto& g : rough) run(g, true);
  for (auto& g : smooth) run(g, false);
  out.trials = rough.size() + smooth.size();

  std::vector<double> xs, ys;
  for (std::size_t k = 1; k <= n_max; ++k)
    if (out.max_ratio[k - 1] > 0) {
      xs.push_back(static_cast<double>(k));
      ys.push_back(std::log(out.max_ratio[k - 1]));
    }
  out.sigma_hat = xs.size() >= 2 ? std::exp(linear_fit(xs, ys).slope) : (out.max_ratio[0] > 0 ? out.max_ratio[0] : 0);
  for (const Obs& o : obs) {
    const real denom = std::pow(static_cast<real>(out.sigma_hat), static_cast<real>(o.k)) * o.var_in + o.norm;
    if (denom > 0) out.c = std::max(out.c, static_cast<double>(o.var_out / denom));
  }
  out.contraction = out.sigma_hat < 1;
  return out;
}

}  // namespace odx
