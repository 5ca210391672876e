#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "odx/error.hpp"
#include "odx/interval_set.hpp"
#include "odx/random.hpp"

namespace odx {

/// One monotone piece of a piecewise-monotone map.
struct Branch {
  Interval domain;
  bool increasing = true;
  std::function<coord(coord)> forward;
  std::function<coord(coord)> derivative;  // |Df|
  std::function<coord(coord)> inverse;     // empty when no closed form exists
  long label = 0;

  bool has_exact_inverse() const { return static_cast<bool>(inverse); }

  /// Image of the closure of a sub-interval of the domain.
  Interval image_of(Interval piece) const {
    coord a = forward(piece.lo), b = forward(piece.hi);
    return increasing ? Interval{a, b} : Interval{b, a};
  }
  Interval image() const { return image_of(domain); }

  /// Preimage of y inside the domain: closed form when available, else Newton
  /// safeguarded by a bisection bracket.
  coord invert(coord y) const {
    if (inverse) return inverse(y);
    coord lo = domain.lo, hi = domain.hi;
    // start from the chord through the endpoint images
    const coord f_lo = forward(lo), f_hi = forward(hi);
    coord w = f_hi != f_lo ? (y - f_lo) / (f_hi - f_lo) : coord{0.5};
    w = std::clamp<coord>(w, 1e-6L, 1 - 1e-6L);
    coord x = lo + (hi - lo) * w;
    for (int it = 0; it < 200 && hi > lo; ++it) {
      const coord fx = forward(x) - y;
      if (fx == 0) return x;
      if ((fx < 0) == increasing)
        lo = x;
      else
        hi = x;
      coord next = x;
      if (derivative) {
        const coord d = derivative(x);
        if (d > 0) next = x - fx / (increasing ? d : -d);
      }
      if (!(next > lo && next < hi)) next = lo + (hi - lo) / 2;
      if (next == x || next <= lo || next >= hi) break;
      if (std::fabs(next - x) <= 4 * std::numeric_limits<coord>::epsilon() * std::max<coord>(std::fabs(x), 1e-300L)) {
        x = next;
        break;
      }
      x = next;
    }
    return x;
  }
};

struct Eval {
  coord y = 0;
  std::size_t branch = 0;
};

/// Closed-form invariant density, when one is known.
struct Density {
  std::function<coord(coord)> pdf;
  std::function<coord(coord)> cdf;
  std::string note;
  std::function<coord(coord)> quantile = {};  // inverse of cdf when known in closed form
};

/// A piecewise-monotone map of [0,1]. Immutable once built; share it through
/// `MapPtr`. Countable branch families are enumerated lazily up to
/// `truncation_depth`.
struct IntervalMap {
  std::string name;
  std::map<std::string, double> params;

  std::function<Branch(std::size_t)> branch;
  std::optional<std::size_t> branch_count;  // nullopt: countably infinite
  std::size_t truncation_depth = 0;         // branches used by enumerating algorithms
  coord truncation_mass = 0;                // Lebesgue mass of omitted domains

  /// Branch containing x, nullopt when x lies in the discontinuity set D.
  std::function<std::optional<std::size_t>(coord)> locate;
  /// Extended-precision application (nullopt when x is in D).
  std::function<std::optional<Eval>(coord)> apply;
  /// Fast double step used by Monte Carlo; NaN when x is in D.
  std::function<double(double)> step;
  /// |Df(x)| off D.
  std::function<coord(coord)> abs_derivative;
  /// For countable families: index of the branch whose closure holds x.
  std::function<std::size_t(coord)> index_of;
  /// Lebesgue measure of {x in branches first..last : f(x) in [c,d)} for runs of
  /// full branches; `last` empty means the whole tail.
  std::function<coord(std::size_t, std::optional<std::size_t>, coord, coord)> range_preimage;
  /// Restores low-order bits lost by an exact floating point step (doubling-type maps).
  std::function<double(double, Rng&)> refresh;

  std::optional<Density> density;
  bool lebesgue_invariant = false;
  std::vector<coord> boundary_points;  // finite part of D (informational)
  std::string notes;

  bool countable() const { return !branch_count.has_value(); }
  std::size_t enumerable_branches() const { return branch_count ? *branch_count : truncation_depth; }

  /// Indices of branches whose domains overlap `iv`, limited to the enumerable range.
  std::vector<std::size_t> branches_overlapping(Interval iv) const {
    std::vector<std::size_t> out;
    if (!countable()) {
      for (std::size_t i = 0; i < *branch_count; ++i)
        if (overlap(branch(i).domain, iv) > 0) out.push_back(i);
      return out;
    }
    std::size_t first = index_of(iv.hi);
    std::size_t last = iv.lo <= 0 ? truncation_depth : std::min(index_of(iv.lo) + 1, truncation_depth);
    if (first > 0) --first;
    for (std::size_t i = first; i < last; ++i)
      if (overlap(branch(i).domain, iv) > 0) out.push_back(i);
    return out;
  }
};

using MapPtr = std::shared_ptr<const IntervalMap>;

/// Real-valued potential on branch interiors (natural-log scale).
struct Potential {
  std::string tag;
  std::function<coord(const IntervalMap&, std::size_t, coord)> value;

  static Potential geometric() {
    return {"geometric", [](const IntervalMap& m, std::size_t, coord x) { return -std::log(m.abs_derivative(x)); }};
  }
  static Potential constant(coord c) {
    return {"constant", [c](const IntervalMap&, std::size_t, coord) { return c; }};
  }
};

/// y = f(x) and the containing branch.
inline Eval evaluate(const IntervalMap& map, coord x) {
  if (!(x >= 0 && x <= 1)) throw Error(ErrorCode::OutOfDomain, "point outside [0,1]");
  auto r = map.apply(x);
  if (!r) throw Error(ErrorCode::BoundaryPoint, "point lies in the discontinuity set of " + map.name);
  return *r;
}

/// S_n phi(x) = sum_{i<n} phi(f^i x).
inline coord birkhoff_sum(const IntervalMap& map, const Potential& pot, coord x, std::size_t n) {
  coord s = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x >= 0 && x <= 1)) throw Error(ErrorCode::OutOfDomain, "orbit left [0,1]", static_cast<std::int64_t>(i));
    auto r = map.apply(x);
    if (!r) throw Error(ErrorCode::BoundaryPoint, "orbit hits D", static_cast<std::int64_t>(i));
    s += pot.value(map, r->branch, x);
    x = r->y;
  }
  return s;
}

/// Extended-precision orbit x, f x, ..., f^n x.
inline std::vector<coord> orbit(const IntervalMap& map, coord x, std::size_t n) {
  std::vector<coord> out{x};
  out.reserve(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = map.apply(x);
    if (!r) throw Error(ErrorCode::BoundaryPoint, "orbit hits D", static_cast<std::int64_t>(i));
    x = r->y;
    out.push_back(x);
  }
  return out;
}

/// Smallest p <= p_max with |f^p z - z| < tol. Candidates that are not
/// multiples of the smallest one make the answer ambiguous.
inline std::optional<std::size_t> detect_period(const IntervalMap& map, coord z, std::size_t p_max, coord tol = 1e-9L) {
  auto orb = orbit(map, z, p_max);
  std::optional<std::size_t> p;
  for (std::size_t k = 1; k <= p_max; ++k) {
    if (std::fabs(orb[k] - z) >= tol) continue;
    if (!p)
      p = k;
    else if (k % *p != 0)
      throw Error(ErrorCode::ToleranceAmbiguous, "periods " + std::to_string(*p) + " and " + std::to_string(k) + " both pass",
                  static_cast<std::int64_t>(k));
  }
  return p;
}

struct BranchCheck {
  std::size_t branches_checked = 0;
  coord covered_length = 0;
  coord max_inverse_error = 0;
};

/// Sampled checks of monotonicity, derivative sign, inverse accuracy and coverage.
inline BranchCheck check_branches(const IntervalMap& map, std::size_t samples = 10000) {
  BranchCheck rep;
  const std::size_t nb = map.enumerable_branches();
  for (std::size_t b = 0; b < nb; ++b) {
    Branch br = map.branch(b);
    rep.covered_length += br.domain.length();
    const std::size_t ns = nb > 64 ? std::min<std::size_t>(samples, 64) : samples;
    coord prev = 0;
    for (std::size_t i = 0; i < ns; ++i) {
      coord x = br.domain.lo + br.domain.length() * (static_cast<coord>(i) + 0.5L) / static_cast<coord>(ns);
      coord y = br.forward(x);
      if (i > 0 && ((y - prev > 0) != br.increasing || y == prev))
        throw Error(ErrorCode::NonMonotoneBranch, map.name + " branch not strictly monotone", static_cast<std::int64_t>(b));
      if (!(br.derivative(x) > 0))
        throw Error(ErrorCode::NonMonotoneBranch, map.name + " derivative not positive", static_cast<std::int64_t>(b));
      if (br.inverse) rep.max_inverse_error = std::max(rep.max_inverse_error, std::fabs(br.inverse(y) - x));
      prev = y;
    }
    ++rep.branches_checked;
  }
  return rep;
}

}  // namespace odx
