#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "odx/interval_map.hpp"
#include "odx/interval_set.hpp"
#include "odx/random.hpp"
#include "odx/stats.hpp"

namespace odx {

/// Nested holes U_r around a centre z.
struct HoleFamily {
  enum class Shape { Symmetric, OneSided };

  coord z = 0;
  Shape shape = Shape::Symmetric;
  std::vector<coord> radii;  // strictly decreasing
  std::optional<std::size_t> period;

  static HoleFamily symmetric(coord z, std::vector<coord> radii, std::optional<std::size_t> p = std::nullopt) {
    HoleFamily h{z, Shape::Symmetric, std::move(radii), p};
    h.validate();
    return h;
  }
  static HoleFamily one_sided(coord z, std::vector<coord> radii, std::optional<std::size_t> p = std::nullopt) {
    HoleFamily h{z, Shape::OneSided, std::move(radii), p};
    h.validate();
    return h;
  }

  void validate() const {
    if (!(z >= 0 && z <= 1)) throw Error(ErrorCode::ConfigInvalid, "hole centre outside [0,1]");
    for (std::size_t i = 0; i < radii.size(); ++i) {
      if (!(radii[i] > 0)) throw Error(ErrorCode::ConfigInvalid, "hole radius must be positive", static_cast<std::int64_t>(i));
      if (i > 0 && !(radii[i] < radii[i - 1]))
        throw Error(ErrorCode::ConfigInvalid, "hole radii must decrease", static_cast<std::int64_t>(i));
    }
  }

  Interval at(coord r) const {
    if (shape == Shape::OneSided) return {z, std::min<coord>(z + r, 1)};
    return {std::max<coord>(z - r, 0), std::min<coord>(z + r, 1)};
  }
  IntervalSet set(coord r) const { return IntervalSet::single(at(r), "U_r"); }
};

/// Measure against the map's invariant density when known, else Lebesgue.
inline std::function<coord(coord)> measure_cdf(const IntervalMap& map) {
  if (map.density && map.density->cdf) return map.density->cdf;
  return [](coord x) { return x; };
}

struct HittingOutcome {
  std::optional<std::size_t> time;  // empty: censored
  std::size_t horizon = 0;
  coord entered_at = 0;
  bool censored() const { return !time.has_value(); }
};

/// tau(x) = min{n >= 1 : f^n x in U}, censored past the horizon.
inline HittingOutcome hitting_time(const IntervalMap& map, Interval hole, coord x, std::size_t horizon) {
  if (!(x >= 0 && x <= 1)) throw Error(ErrorCode::OutOfDomain, "start point outside [0,1]");
  HittingOutcome out;
  out.horizon = horizon;
  for (std::size_t n = 1; n <= horizon; ++n) {
    auto r = map.apply(x);
    if (!r) throw Error(ErrorCode::BoundaryPoint, "orbit hits D", static_cast<std::int64_t>(n - 1));
    x = r->y;
    if (hole.contains(x)) {
      out.time = n;
      out.entered_at = x;
      return out;
    }
  }
  return out;
}

/// e(x) = 0 on U, tau(x) elsewhere.
inline HittingOutcome escape_time(const IntervalMap& map, Interval hole, coord x, std::size_t horizon) {
  if (hole.contains(x)) {
    HittingOutcome out;
    out.horizon = horizon;
    out.time = 0;
    out.entered_at = x;
    return out;
  }
  return hitting_time(map, hole, x, horizon);
}

struct PreimageOptions {
  std::size_t budget = 20'000'000;  // maximum number of intervals held at any stage
  bool outward_rounding = true;
};

/// f^{-n}(S) through exact inverse branches.
inline IntervalSet preimage_set(const IntervalMap& map, const IntervalSet& s, std::size_t n, PreimageOptions opt = {}) {
  const std::size_t nb = map.enumerable_branches();
  std::vector<Branch> branches;
  branches.reserve(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    branches.push_back(map.branch(b));
    if (!branches.back().has_exact_inverse())
      throw Error(ErrorCode::NoExactInverse, map.name + " branch lacks a closed-form inverse", static_cast<std::int64_t>(b));
  }
  constexpr coord inf = std::numeric_limits<coord>::infinity();
  IntervalSet cur = s;
  for (std::size_t step = 0; step < n; ++step) {
    std::vector<Interval> out;
    for (const Branch& br : branches) {
      const Interval img = br.image();
      for (const Interval& p : cur.parts()) {
        Interval q = intersect(p, img);
        if (q.empty()) continue;
        coord a = br.inverse(q.lo), b = br.inverse(q.hi);
        if (!br.increasing) std::swap(a, b);
        if (opt.outward_rounding) {
          a = std::nextafter(a, -inf);
          b = std::nextafter(b, inf);
        }
        a = std::max(a, br.domain.lo);
        b = std::min(b, br.domain.hi);
        out.push_back({a, b});
        if (out.size() > opt.budget)
          throw Error(ErrorCode::BudgetExceeded, "preimage interval budget exceeded", static_cast<std::int64_t>(step));
      }
    }
    cur = IntervalSet(std::move(out), "f^-" + std::to_string(step + 1) + "(" + s.provenance() + ")");
  }
  return cur;
}

struct UnionMeasure {
  coord exact = 0;       // measure of the union of f^{-ip}(U), i = 0..k
  coord prediction = 0;  // mu(U)(k+1 - k e^{S_p phi(z)})
  coord mu_hole = 0;
  coord multiplier = 0;  // e^{S_p phi(z)}
};

/// Measure of U together with its p-step preimages up to depth k, checked against
/// the nested-intersection hypothesis.
inline UnionMeasure union_measure_periodic(const IntervalMap& map, const Potential& pot, Interval hole, coord z, std::size_t p,
                                           std::size_t k, std::function<coord(coord)> cdf = {}, PreimageOptions opt = {}) {
  if (!cdf) cdf = measure_cdf(map);
  const IntervalSet u = IntervalSet::single(hole, "U");
  IntervalSet uni = u, pre = u, prev_cap = u;
  const coord slack = 1e-15L;
  for (std::size_t i = 1; i <= k; ++i) {
    pre = preimage_set(map, pre, p, opt);
    uni = uni.unite(pre);
    IntervalSet cap = u.intersect(pre);
    if (!cap.subset_of(prev_cap, slack))
      throw Error(ErrorCode::HypothesisFailed, "U and its p-step preimages are not nested", static_cast<std::int64_t>(i));
    prev_cap = cap;
  }
  UnionMeasure out;
  out.exact = uni.measure(cdf);
  out.mu_hole = u.measure(cdf);
  out.multiplier = std::exp(birkhoff_sum(map, pot, z, p));
  out.prediction = out.mu_hole * (static_cast<coord>(k + 1) - static_cast<coord>(k) * out.multiplier);
  return out;
}

struct ReturnRatio {
  double q = 0;
  double lo = 0;
  double hi = 0;
  std::size_t samples = 0;  // 0 in exact mode
};

/// q_k = mu(E^k) / mu(U), E^k = {x in U : f^i x notin U for 1 <= i <= k, f^{k+1} x in U}.
inline ReturnRatio return_ratio_q(const IntervalMap& map, Interval hole, std::size_t k, bool exact = true,
                                  std::size_t samples = 100000, std::uint64_t seed = 1, std::function<coord(coord)> cdf = {}) {
  if (!cdf) cdf = measure_cdf(map);
  if (exact) {
    const IntervalSet u = IntervalSet::single(hole, "U");
    IntervalSet e = u, pre = u;
    for (std::size_t i = 1; i <= k + 1; ++i) {
      pre = preimage_set(map, pre, 1);
      e = i <= k ? e.intersect(pre.complement()) : e.intersect(pre);
    }
    const double q = static_cast<double>(e.measure(cdf) / u.measure(cdf));
    return {q, q, q, 0};
  }
  // Importance-weighted sampling from mu restricted to U.
  const auto pdf = map.density ? map.density->pdf : std::function<coord(coord)>{};
  std::size_t hits = 0;
  double wsum = 0, whit = 0;
  Rng rng(seed, 0x9a11);
  for (std::size_t s = 0; s < samples; ++s) {
    const coord x0 = hole.lo + hole.length() * rng.uniform_ld();
    const double w = pdf ? static_cast<double>(pdf(x0)) : 1.0;
    wsum += w;
    coord x = x0;
    bool ok = true;
    for (std::size_t i = 1; i <= k + 1 && ok; ++i) {
      auto r = map.apply(x);
      if (!r) {
        ok = false;
        break;
      }
      x = r->y;
      const bool in = hole.contains(x);
      if (i <= k && in) ok = false;
      if (i == k + 1 && !in) ok = false;
    }
    if (ok) {
      ++hits;
      whit += w;
    }
  }
  auto ci = wilson(hits, samples);
  const double q = wsum > 0 ? whit / wsum : 0;
  const double scale = ci.p > 0 ? q / ci.p : 1;
  return {q, ci.lo * scale, ci.hi * scale, samples};
}

}  // namespace odx
