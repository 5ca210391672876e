#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "odx/interval_map.hpp"
#include "odx/random.hpp"

namespace odx {

struct AssumptionsReport {
  std::string map_name;
  std::string potential;
  std::vector<double> sup_table;     // sup_table[n-1] = sampled sup of e^{S_n phi}
  std::vector<double> cd_lipschitz;  // per n, max |e^{S_n phi(x)-S_n phi(y)}-1| / |f^n x - f^n y|
  std::vector<double> cd_holder;     // same with |f^n x - f^n y|^{1/2}
  double c_d = 0;                    // max of cd_lipschitz
  double c_d_holder = 0;
  std::vector<double> f2_partial;  // partial sums of sup_Z e^phi over branches
  std::optional<std::size_t> n0;   // first n with sup e^{S_n phi} < 1
  std::optional<std::size_t> n1;   // first n with (2+2 C_d) sup e^{S_n phi} < 1
  bool f1_lipschitz = false;
  bool f1_holder = false;
  bool f2 = false;
  bool f3 = false;
  bool truncated = false;
  std::vector<std::string> warnings;
};

namespace detail {

// S_n phi at x with the branch itinerary; false if the orbit meets D.
inline bool sum_with_itinerary(const IntervalMap& m, const Potential& pot, coord x, std::size_t n, coord& s, coord& fx,
                               std::vector<std::size_t>& itin) {
  s = 0;
  itin.clear();
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x >= 0 && x <= 1)) return false;
    auto r = m.apply(x);
    if (!r) return false;
    s += pot.value(m, r->branch, x);
    itin.push_back(r->branch);
    x = r->y;
  }
  fx = x;
  return std::isfinite(static_cast<double>(s));
}

}  // namespace detail

/// Sampled checks of distortion, summability and eventual contraction.
inline AssumptionsReport assumptions_report(const IntervalMap& map, const Potential& pot, std::size_t n_max = 12,
                                            std::size_t grid = 2000, std::uint64_t seed = 1) {
  AssumptionsReport rep;
  rep.map_name = map.name;
  rep.potential = pot.tag;
  rep.truncated = map.countable();
  if (rep.truncated)
    rep.warnings.push_back("TruncationWarning: branch family truncated at " + std::to_string(map.truncation_depth) +
                           " (omitted mass " + std::to_string(static_cast<double>(map.truncation_mass)) + ")");

  // Probe points: a uniform grid plus points just inside each enumerated branch endpoint.
  std::vector<coord> probes;
  for (std::size_t i = 0; i < grid; ++i) probes.push_back((static_cast<coord>(i) + 0.5L) / static_cast<coord>(grid));
  const std::size_t nb = std::min<std::size_t>(map.enumerable_branches(), 256);
  for (std::size_t b = 0; b < nb; ++b) {
    Interval d = map.branch(b).domain;
    const coord off = d.length() * 1e-9L;
    probes.push_back(d.lo + off);
    probes.push_back(d.hi - off);
  }

  std::vector<std::size_t> itin, itin2;
  rep.sup_table.assign(n_max, 0);
  for (coord x : probes) {
    coord s = 0;
    for (std::size_t n = 1; n <= n_max; ++n) {
      auto r = map.apply(x);
      if (!r) break;
      s += pot.value(map, r->branch, x);
      rep.sup_table[n - 1] = std::max(rep.sup_table[n - 1], static_cast<double>(std::exp(s)));
      x = r->y;
      if (!(x >= 0 && x <= 1)) break;
    }
  }

  // Same-cylinder pairs with separation scaled to the cylinder size.
  Rng rng(seed, 0xd15c);
  rep.cd_lipschitz.assign(n_max, 0);
  rep.cd_holder.assign(n_max, 0);
  for (std::size_t n = 1; n <= n_max; ++n) {
    for (std::size_t k = 0; k < grid; ++k) {
      coord x = rng.uniform_ld(), sx, fx;
      if (!detail::sum_with_itinerary(map, pot, x, n, sx, fx, itin)) continue;
      const coord jac = std::exp(-sx);
      coord y = x + (rng.uniform_ld() - 0.5L) * 1e-2L / std::max<coord>(jac, 1);
      coord sy, fy;
      if (!detail::sum_with_itinerary(map, pot, y, n, sy, fy, itin2) || itin != itin2) continue;
      const coord dist = std::fabs(fx - fy);
      if (!(dist > 0)) continue;
      const coord num = std::fabs(std::expm1(sx - sy));
      rep.cd_lipschitz[n - 1] = std::max(rep.cd_lipschitz[n - 1], static_cast<double>(num / dist));
      rep.cd_holder[n - 1] = std::max(rep.cd_holder[n - 1], static_cast<double>(num / std::sqrt(dist)));
    }
  }
  rep.c_d = *std::max_element(rep.cd_lipschitz.begin(), rep.cd_lipschitz.end());
  rep.c_d_holder = *std::max_element(rep.cd_holder.begin(), rep.cd_holder.end());
  // A sampled constant counts as bounded when the later half of n does not outgrow the earlier half.
  auto bounded = [n_max](const std::vector<double>& v) {
    if (n_max < 2) return true;
    const std::size_t h = n_max / 2;
    const double early = *std::max_element(v.begin(), v.begin() + static_cast<long>(h));
    const double late = *std::max_element(v.begin() + static_cast<long>(h), v.end());
    return late <= 2 * early + 1e-12;
  };
  rep.f1_lipschitz = bounded(rep.cd_lipschitz);
  rep.f1_holder = bounded(rep.cd_holder);

  // (F2): partial sums over branches of the sampled sup of e^phi.
  double acc = 0, acc_half = 0;
  const std::size_t nb_all = map.enumerable_branches();
  for (std::size_t b = 0; b < nb_all; ++b) {
    Branch br = map.branch(b);
    double sup = 0;
    for (int i = 0; i <= 16; ++i) {
      coord x = br.domain.lo + br.domain.length() * (1e-9L + (1 - 2e-9L) * static_cast<coord>(i) / 16);
      sup = std::max(sup, static_cast<double>(std::exp(pot.value(map, b, x))));
    }
    acc += sup;
    if (b + 1 == (nb_all + 1) / 2) acc_half = acc;
    if (b < 64 || (b & (b + 1)) == 0 || b + 1 == nb_all) rep.f2_partial.push_back(acc);
  }
  if (!rep.f2_partial.empty()) {
    const double total = rep.f2_partial.back();
    rep.f2 = std::isfinite(total) && (!map.countable() || total - acc_half < 0.01 * total);
  }

  constexpr double margin = 1e-6;
  for (std::size_t n = 1; n <= n_max; ++n) {
    if (!rep.n0 && rep.sup_table[n - 1] < 1 - margin) rep.n0 = n;
    if (!rep.n1 && (2 + 2 * rep.c_d) * rep.sup_table[n - 1] < 1) rep.n1 = n;
  }
  rep.f3 = rep.n0.has_value();
  return rep;
}

}  // namespace odx
