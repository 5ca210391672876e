#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace odx {

/// Extended-precision coordinate used for orbits, partitions and set arithmetic.
using coord = long double;

/// Interval [lo, hi). Membership is half-open; measures ignore endpoints.
struct Interval {
  coord lo = 0;
  coord hi = 0;

  coord length() const { return hi > lo ? hi - lo : 0; }
  bool empty() const { return !(hi > lo); }
  bool contains(coord x) const { return x >= lo && x < hi; }
  coord centre() const { return (lo + hi) / 2; }

  friend bool operator==(const Interval&, const Interval&) = default;
};

inline Interval intersect(const Interval& a, const Interval& b) {
  return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
}

inline coord overlap(const Interval& a, const Interval& b) { return intersect(a, b).length(); }

/// Finite union of pairwise disjoint intervals, kept sorted.
class IntervalSet {
 public:
  IntervalSet() = default;
  explicit IntervalSet(std::vector<Interval> parts, std::string provenance = {})
      : parts_(std::move(parts)), provenance_(std::move(provenance)) {
    normalize();
  }
  static IntervalSet single(Interval i, std::string provenance = {}) {
    return IntervalSet({i}, std::move(provenance));
  }

  const std::vector<Interval>& parts() const { return parts_; }
  std::size_t size() const { return parts_.size(); }
  bool empty() const { return parts_.empty(); }
  const std::string& provenance() const { return provenance_; }
  void set_provenance(std::string p) { provenance_ = std::move(p); }

  /// Lebesgue measure.
  coord measure() const {
    coord s = 0;
    for (const auto& p : parts_) s += p.length();
    return s;
  }

  /// Measure against a density with cumulative distribution `cdf`.
  coord measure(const std::function<coord(coord)>& cdf) const {
    if (!cdf) return measure();
    coord s = 0;
    for (const auto& p : parts_) s += cdf(p.hi) - cdf(p.lo);
    return s;
  }

  bool contains(coord x) const {
    auto it = std::upper_bound(parts_.begin(), parts_.end(), x,
                               [](coord v, const Interval& i) { return v < i.lo; });
    if (it == parts_.begin()) return false;
    return std::prev(it)->contains(x);
  }

  IntervalSet unite(const IntervalSet& other) const {
    std::vector<Interval> all = parts_;
    all.insert(all.end(), other.parts_.begin(), other.parts_.end());
    return IntervalSet(std::move(all), provenance_ + " | " + other.provenance_);
  }

  IntervalSet intersect(const IntervalSet& other) const {
    std::vector<Interval> out;
    std::size_t i = 0, j = 0;
    while (i < parts_.size() && j < other.parts_.size()) {
      Interval c = odx::intersect(parts_[i], other.parts_[j]);
      if (!c.empty()) out.push_back(c);
      if (parts_[i].hi < other.parts_[j].hi)
        ++i;
      else
        ++j;
    }
    return IntervalSet(std::move(out), "(" + provenance_ + ") & (" + other.provenance_ + ")");
  }

  /// Complement inside `within` (default [0,1]).
  IntervalSet complement(Interval within = {0, 1}) const {
    std::vector<Interval> out;
    coord cur = within.lo;
    for (const auto& p : parts_) {
      if (p.lo > cur) out.push_back({cur, std::min(p.lo, within.hi)});
      cur = std::max(cur, p.hi);
    }
    if (cur < within.hi) out.push_back({cur, within.hi});
    return IntervalSet(std::move(out), "not(" + provenance_ + ")");
  }

  /// True when every part of this set lies inside `other` up to `slack`.
  bool subset_of(const IntervalSet& other, coord slack = 0) const {
    for (const auto& p : parts_) {
      auto it = std::upper_bound(other.parts_.begin(), other.parts_.end(), p.lo + slack,
                                 [](coord v, const Interval& i) { return v < i.lo; });
      if (it == other.parts_.begin()) return false;
      const Interval& host = *std::prev(it);
      if (!(host.lo <= p.lo + slack && p.hi - slack <= host.hi)) return false;
    }
    return true;
  }

 private:
  void normalize() {
    parts_.erase(std::remove_if(parts_.begin(), parts_.end(), [](const Interval& i) { return i.empty(); }),
                 parts_.end());
    std::sort(parts_.begin(), parts_.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    std::vector<Interval> merged;
    for (const auto& p : parts_) {
      if (!merged.empty() && p.lo <= merged.back().hi)
        merged.back().hi = std::max(merged.back().hi, p.hi);
      else
        merged.push_back(p);
    }
    parts_ = std::move(merged);
  }

  std::vector<Interval> parts_;
  std::string provenance_;
};

}  // namespace odx
