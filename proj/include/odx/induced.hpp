#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "odx/catalogue.hpp"
#include "odx/lscan.hpp"
#include "odx/open_system.hpp"
#include "odx/sampling.hpp"
#include "odx/stats.hpp"
#include "odx/tail_spec.hpp"

namespace odx {

struct ReturnBranch {
  Interval domain;  // half-open piece of Y
  std::size_t R = 0;
  coord mass = 0;  // mu_Y
  Interval image;  // F(domain)
  bool increasing = true;
};

/// First return map F = f^R over an interval Y.
struct InducedMap {
  MapPtr base;
  Interval Y;
  bool left_open = false;  // Y = (lo, hi] rather than [lo, hi)
  coord mu_Y = 0;          // mu(Y) under the base invariant measure
  std::vector<ReturnBranch> branches;  // ordered by domain
  coord resolved = 0, unresolved = 0;  // mu_Y masses
  std::vector<coord> tail;             // tail[u] = mu_Y(R >= u), u = 0..depth_max+1
  std::size_t depth_max = 0;
  std::function<coord(coord)> cdf;
  std::optional<TailSpec> farey;  // analytic construction over A_1

  bool in_base(coord x) const { return left_open ? (x > Y.lo && x <= Y.hi) : Y.contains(x); }

  coord mean_return() const {
    coord s = 0;
    for (const auto& b : branches) s += static_cast<coord>(b.R) * b.mass;
    return s;
  }
  coord kac_mean() const { return 1 / mu_Y; }

  /// mu_Y(R >= u); past the table the value is an upper bound (generic) or exact (Farey).
  coord tail_at(std::size_t u) const {
    if (u < tail.size()) return tail[u];
    if (farey) return farey->t(u);
    return tail.empty() ? 0 : tail.back();
  }

  const ReturnBranch* branch_at(coord y) const {
    auto it = std::upper_bound(branches.begin(), branches.end(), y, [](coord v, const ReturnBranch& b) { return v < b.domain.lo; });
    if (it == branches.begin()) return nullptr;
    --it;
    return it->domain.contains(y) ? &*it : nullptr;
  }

  /// Exact F(y) and R(y); nullopt when the return is not resolved.
  std::optional<std::pair<coord, std::size_t>> apply(coord y) const {
    if (farey) {
      const ReturnBranch* b = branch_at(y);
      if (!b) return std::nullopt;
      return std::make_pair(Y.lo + (b->domain.hi - y) / b->mass, b->R);
    }
    coord x = y;
    for (std::size_t k = 1; k <= depth_max; ++k) {
      auto r = base->apply(x);
      if (!r) throw Error(ErrorCode::BoundaryPoint, "orbit hits D", static_cast<std::int64_t>(k - 1));
      x = r->y;
      if (in_base(x)) return std::make_pair(x, k);
    }
    return std::nullopt;
  }
};

namespace detail {

inline void fill_tail(InducedMap& ind) {
  ind.tail.assign(ind.depth_max + 2, 0);
  for (const auto& b : ind.branches) ind.tail[std::min(b.R, ind.depth_max + 1)] += b.mass;
  coord acc = ind.unresolved;
  for (std::size_t u = ind.depth_max + 1; u >= 1; --u) {
    acc += ind.tail[u];
    ind.tail[u] = acc;
  }
  ind.tail[0] = ind.tail[1];
}

}  // namespace detail

struct FirstReturnOptions {
  coord tolerance = 1e-6L;  // unresolved mu_Y mass allowed
  std::function<coord(coord)> cdf;  // base invariant cdf; defaults to the map's
  std::size_t max_pieces = 4'000'000;
};

/// Return branches found by pushing cylinders forward until their image re-enters Y.
/// Cut points are pulled back through the branch chain (Newton where no closed
/// inverse exists).
inline InducedMap first_return_map(MapPtr map, Interval Y, std::size_t depth_max, FirstReturnOptions opt = {}) {
  if (!(Y.hi > Y.lo) || Y.lo < 0 || Y.hi > 1) throw Error(ErrorCode::ConfigInvalid, "base Y must be a nondegenerate subinterval of [0,1]");
  if (depth_max < 1) throw Error(ErrorCode::ConfigInvalid, "depth_max must be >= 1");
  InducedMap ind;
  ind.base = map;
  ind.Y = Y;
  ind.depth_max = depth_max;
  ind.cdf = opt.cdf ? opt.cdf : measure_cdf(*map);
  const auto& cdf = ind.cdf;
  ind.mu_Y = cdf(Y.hi) - cdf(Y.lo);
  if (!(ind.mu_Y > 0)) throw Error(ErrorCode::HypothesisFailed, "Y has zero invariant measure");
  auto mu = [&](Interval d) { return (cdf(d.hi) - cdf(d.lo)) / ind.mu_Y; };

  std::map<std::size_t, Branch> cache;
  auto br = [&](std::size_t i) -> const Branch& {
    auto it = cache.find(i);
    if (it == cache.end()) it = cache.emplace(i, map->branch(i)).first;
    return it->second;
  };

  struct Piece {
    Interval dom, img;
    bool inc = true;
    std::vector<std::uint32_t> chain;
  };
  auto pull = [&](const Piece& p, coord c) {
    if (c == p.img.lo) return p.inc ? p.dom.lo : p.dom.hi;
    if (c == p.img.hi) return p.inc ? p.dom.hi : p.dom.lo;
    for (std::size_t k = p.chain.size(); k-- > 0;) c = br(p.chain[k]).invert(c);
    return c;
  };
  auto sub_domain = [&](const Piece& p, Interval sub) {
    const coord a = pull(p, sub.lo), b = pull(p, sub.hi);
    return Interval{std::min(a, b), std::max(a, b)};
  };

  std::vector<Piece> current;
  for (std::size_t b : map->branches_overlapping(Y)) {
    const Branch& B = br(b);
    const Interval d = intersect(Y, B.domain);
    if (!(d.length() > 0)) continue;
    current.push_back({d, B.image_of(d), B.increasing, {static_cast<std::uint32_t>(b)}});
  }
  const bool countable = map->countable();
  std::size_t pieces = current.size();
  for (std::size_t j = 1; j <= depth_max && !current.empty(); ++j) {
    std::vector<Piece> next;
    for (const Piece& p : current) {
      const Interval ret = intersect(p.img, Y);
      if (ret.length() > 0) {
        const Interval d = sub_domain(p, ret);
        ind.branches.push_back({d, j, mu(d), ret, p.inc});
      }
      std::vector<Interval> out;
      if (p.img.lo < Y.lo) out.push_back({p.img.lo, std::min(p.img.hi, Y.lo)});
      if (p.img.hi > Y.hi) out.push_back({std::max(p.img.lo, Y.hi), p.img.hi});
      for (const Interval& part : out) {
        if (!(part.length() > 0)) continue;
        const Interval dpart = sub_domain(p, part);
        if (j == depth_max) {
          ind.unresolved += mu(dpart);
          continue;
        }
        coord kept = 0;
        for (std::size_t b : map->branches_overlapping(part)) {
          const Branch& B = br(b);
          const Interval sub = intersect(part, B.domain);
          if (!(sub.length() > 0)) continue;
          Piece q;
          q.dom = sub_domain(p, sub);
          q.img = B.image_of(sub);
          q.inc = p.inc == B.increasing;
          q.chain = p.chain;
          q.chain.push_back(static_cast<std::uint32_t>(b));
          if (countable) kept += mu(q.dom);
          next.push_back(std::move(q));
        }
        // mass in branches past the truncation depth
        if (countable) ind.unresolved += std::max<coord>(0, mu(dpart) - kept);
      }
    }
    pieces += next.size();
    if (pieces > opt.max_pieces) throw Error(ErrorCode::BudgetExceeded, "return-branch refinement exceeded the piece budget", static_cast<std::int64_t>(j));
    current = std::move(next);
  }
  std::sort(ind.branches.begin(), ind.branches.end(), [](auto& a, auto& b) { return a.domain.lo < b.domain.lo; });
  for (const auto& b : ind.branches) ind.resolved += b.mass;
  detail::fill_tail(ind);
  if (ind.unresolved > opt.tolerance)
    throw Error(ErrorCode::UnresolvedMassExceeds,
                "unresolved return mass " + std::to_string(static_cast<double>(ind.unresolved)) + " exceeds tolerance; raise depth_max",
                static_cast<std::int64_t>(depth_max));
  return ind;
}

/// Inducing base without a branch table, for Monte Carlo drivers that only step F.
inline InducedMap induced_base(MapPtr map, Interval Y, std::function<coord(coord)> cdf = {}) {
  InducedMap ind;
  ind.base = map;
  ind.Y = Y;
  ind.cdf = cdf ? cdf : measure_cdf(*map);
  ind.mu_Y = ind.cdf(Y.hi) - ind.cdf(Y.lo);
  if (!(ind.mu_Y > 0)) throw Error(ErrorCode::HypothesisFailed, "Y has zero invariant measure");
  return ind;
}

/// Farey map induced on A_1 = (t_2, 1], built in closed form: C_n = [1 - a_1 t_n, 1 - a_1 t_{n+1})
/// maps through A_n back onto A_1 with R = n and mu_Y(C_n) = a_n.
inline InducedMap farey_first_return(const TailSpec& spec) {
  InducedMap ind;
  ind.base = make_farey(spec);
  const std::size_t depth = spec.depth_for();
  const coord t2 = spec.t(2), a1 = spec.a(1);
  ind.Y = {t2, 1};
  ind.left_open = true;
  ind.depth_max = depth;
  ind.cdf = ind.base->density->cdf;
  FareyTailSums sums(spec, std::min<std::size_t>(depth + 1, 200000));
  ind.mu_Y = 1 / sums.total();
  ind.farey = spec;
  ind.branches.reserve(depth);
  coord t_n = 1;
  for (std::size_t n = 1; n <= depth; ++n) {
    const coord t_next = spec.t(n + 1);
    ReturnBranch b;
    b.domain = {1 - a1 * t_n, 1 - a1 * t_next};
    b.R = n;
    b.mass = spec.a(n);
    b.image = ind.Y;
    b.increasing = false;
    ind.branches.push_back(b);
    ind.resolved += b.mass;
    t_n = t_next;
  }
  ind.branches.front().domain.lo = t2;
  ind.unresolved = spec.t(depth + 1);
  ind.tail.assign(depth + 2, 0);
  ind.tail[0] = 1;
  for (std::size_t u = 1; u <= depth + 1; ++u) ind.tail[u] = spec.t(u);
  return ind;
}

/// Monte Carlo driver for F. Generic bases step in double precision with the
/// map's refresh hook; the Farey construction runs in v = f(y) in A_n, where
/// F acts as v -> (t_n - v)/a_n, with a dither at the rounding scale so exact
/// dyadic arithmetic does not collapse orbits.
class InducedStepper {
 public:
  explicit InducedStepper(const InducedMap& ind, std::size_t max_return = 0) : ind_(&ind) {
    cap_ = max_return ? max_return : std::max<std::size_t>(ind.depth_max, 1'000'000);
    if (ind.farey) {
      const TailSpec& s = *ind.farey;
      a1_ = s.a(1);
      rows_ = std::min<std::size_t>(ind.depth_max + 2, 1 << 16);
      t_.resize(rows_ + 2);
      a_.resize(rows_ + 2);
      for (std::size_t n = 1; n <= rows_ + 1; ++n) {
        t_[n] = s.t(n);
        a_[n] = s.a(n);
      }
    } else if (!ind.base->lebesgue_invariant) {
      auto q = ind.base->density ? ind.base->density->quantile : std::function<coord(coord)>{};
      quantile_ = q;
    }
    c_lo_ = ind.cdf(ind.Y.lo);
    c_hi_ = ind.cdf(ind.Y.hi);
  }

  /// A state distributed by mu_Y.
  coord draw(Rng& rng) const {
    if (ind_->farey) return 1 - rng.uniform_ld();
    const InducedMap& I = *ind_;
    for (;;) {
      coord x;
      if (I.base->lebesgue_invariant) {
        x = I.Y.lo + rng.uniform_ld() * I.Y.length();
      } else {
        const coord u = c_lo_ + rng.uniform_ld() * (c_hi_ - c_lo_);
        if (quantile_) {
          x = quantile_(u);
        } else {
          coord lo = I.Y.lo, hi = I.Y.hi;
          for (int it = 0; it < 64; ++it) {
            const coord mid = (lo + hi) / 2;
            (I.cdf(mid) < u ? lo : hi) = mid;
          }
          x = (lo + hi) / 2;
        }
      }
      x = static_cast<coord>(static_cast<double>(x));
      if (I.in_base(x)) return x;
    }
  }

  /// Moves the state by F and returns R; 0 when the orbit meets D or does not
  /// return within the cap.
  std::size_t advance(coord& s, Rng& rng) const {
    if (ind_->farey) {
      const std::size_t n = level(s);
      if (n > ind_->depth_max) return 0;
      const coord tn = t_at(n), an = a_at(n);
      coord v = (tn - s) / an;
      v += (rng.uniform_ld() - 0.5L) * 8 * std::numeric_limits<coord>::epsilon() * (tn / an);
      if (v <= 0) v = -v;
      if (v > 1) v = 2 - v;
      if (!(v > 0)) v = std::numeric_limits<coord>::min();
      s = v;
      return n;
    }
    const IntervalMap& m = *ind_->base;
    double x = static_cast<double>(s);
    for (std::size_t k = 1; k <= cap_; ++k) {
      x = mc_step(m, x, rng);
      if (!std::isfinite(x)) return 0;
      if (ind_->in_base(x)) {
        s = x;
        return k;
      }
    }
    return 0;
  }

  /// Base-space position of a state.
  coord position(coord s) const { return ind_->farey ? 1 - a1_ * s : s; }

  /// Hole (in base coordinates) expressed in state coordinates, as a predicate.
  std::function<bool(coord)> hole_test(Interval hole) const {
    if (ind_->farey) {
      const coord lo = (1 - hole.hi) / a1_, hi = (1 - hole.lo) / a1_;
      return [lo, hi](coord v) { return v > lo && v <= hi; };
    }
    return [hole](coord x) { return hole.contains(x); };
  }

 private:
  std::size_t level(coord v) const {
    if (v > t_[rows_ + 1]) {
      std::size_t lo = 1, hi = rows_;
      while (lo < hi) {
        const std::size_t mid = (lo + hi + 1) / 2;
        if (t_[mid] >= v)
          lo = mid;
        else
          hi = mid - 1;
      }
      return lo;
    }
    return ind_->farey->level_of(v);
  }
  coord t_at(std::size_t n) const { return n <= rows_ + 1 ? t_[n] : ind_->farey->t(n); }
  coord a_at(std::size_t n) const { return n <= rows_ + 1 ? a_[n] : ind_->farey->a(n); }

  const InducedMap* ind_;
  std::size_t cap_ = 0;
  coord a1_ = 0;
  std::size_t rows_ = 0;
  std::vector<coord> t_, a_;
  std::function<coord(coord)> quantile_;
  coord c_lo_ = 0, c_hi_ = 1;
};

struct InducedHitting {
  std::optional<std::size_t> tau_Y;  // empty: censored
  std::size_t base_time = 0;         // sum of R over the first tau_Y returns
};

/// tau_Y(y) = min{u >= 1 : F^u y in U}, with the matching f-time.
inline InducedHitting induced_hitting(const InducedMap& ind, Interval hole, coord y, std::size_t horizon) {
  if (!(ind.in_base(hole.lo) || hole.lo == ind.Y.lo) || hole.hi > ind.Y.hi)
    throw Error(ErrorCode::HypothesisFailed, "hole must lie inside the inducing base");
  if (!ind.in_base(y)) throw Error(ErrorCode::OutOfDomain, "start point outside the inducing base");
  InducedHitting out;
  for (std::size_t u = 1; u <= horizon; ++u) {
    auto r = ind.apply(y);
    if (!r) throw Error(ErrorCode::UnresolvedBranchHit, "orbit entered unresolved return mass", static_cast<std::int64_t>(u));
    y = r->first;
    out.base_time += r->second;
    if (hole.contains(y)) {
      out.tau_Y = u;
      return out;
    }
  }
  return out;
}

struct TowerProfile {
  std::vector<coord> levels;  // mu_Delta(Delta_l) = mu(Y) mu_Y(R > l)
  coord c = 0;                // 1 / E[R] by Kac
  coord mean_return = 0;      // sum over resolved branches
  coord truncation = 0;       // 1 - sum of levels
};

inline TowerProfile tower_profile(const InducedMap& ind) {
  TowerProfile p;
  p.c = ind.mu_Y;
  p.mean_return = ind.mean_return();
  coord sum = 0;
  for (std::size_t l = 0; l + 1 < ind.tail.size(); ++l) {
    p.levels.push_back(ind.mu_Y * ind.tail[l + 1]);
    sum += p.levels.back();
  }
  p.truncation = 1 - sum;
  return p;
}

struct DeviationRow {
  double eps = 0;
  std::size_t u = 0, n_max = 0;
  double mu_A_lo = 0, ci_lo = 0, ci_hi = 0;  // lower bound: A_u truncated at n_max
  double half_horizon = 0;                   // same estimate truncated at n_max / 2
  std::size_t count = 0;
};

struct DeviationTable {
  double eps = 0;
  std::vector<DeviationRow> rows;
  std::size_t samples = 0, redrawn = 0;
  double kac_gap = 0;  // |E[R] mu(Y) - 1| from the branch table
};

struct DeviationOptions {
  std::size_t samples = 100'000;
  std::uint64_t seed = 1;
  std::size_t n_max = 0;  // 0: max(10 u, 1000) per u
  unsigned workers = thread_count();
};

/// Default deviation scale 0.1 / mu(Y).
inline double default_deviation_eps(const InducedMap& ind) { return static_cast<double>(0.1L / ind.mu_Y); }

/// mu_Y(exists n in [u, n_max] : |R_{Y,n} - n/mu(Y)| > n eps) for each u, from shared orbits.
inline DeviationTable deviation_table(const InducedMap& ind, const std::vector<std::size_t>& u_grid, double eps, DeviationOptions opt = {}) {
  DeviationTable tab;
  tab.eps = eps;
  tab.samples = opt.samples;
  if (!ind.branches.empty()) tab.kac_gap = static_cast<double>(std::fabs(ind.mean_return() * ind.mu_Y - 1));
  if (u_grid.empty()) return tab;
  std::vector<std::size_t> horizon(u_grid.size());
  std::size_t N = 0;
  for (std::size_t i = 0; i < u_grid.size(); ++i) {
    horizon[i] = opt.n_max ? opt.n_max : std::max<std::size_t>(10 * u_grid[i], 1000);
    N = std::max(N, horizon[i]);
  }
  const long double mean = 1 / ind.mu_Y;
  InducedStepper stepper(ind);
  const unsigned workers = std::max(1u, opt.workers);
  std::vector<std::vector<std::size_t>> hits(workers, std::vector<std::size_t>(u_grid.size(), 0)), half(hits);
  std::vector<std::size_t> redo(workers, 0);
  parallel_chunks(opt.samples, workers, [&](unsigned w, std::size_t b, std::size_t e) {
    std::vector<std::size_t> next_dev(N + 2);
    std::vector<char> dev(N + 1);
    for (std::size_t i = b; i < e; ++i) {
      Rng rng(opt.seed, i);
      for (;;) {
        coord y = stepper.draw(rng);
        long double S = 0;
        bool ok = true;
        for (std::size_t n = 1; n <= N; ++n) {
          const std::size_t R = stepper.advance(y, rng);
          if (!R) {
            ok = false;
            break;
          }
          S += static_cast<long double>(R);
          dev[n] = std::fabs(S - static_cast<long double>(n) * mean) > static_cast<long double>(n) * eps;
        }
        if (!ok) {
          ++redo[w];
          continue;
        }
        break;
      }
      next_dev[N + 1] = N + 1;
      for (std::size_t n = N; n >= 1; --n) next_dev[n] = dev[n] ? n : next_dev[n + 1];
      for (std::size_t k = 0; k < u_grid.size(); ++k) {
        const std::size_t u0 = std::max<std::size_t>(1, u_grid[k]);
        if (u0 > N) continue;
        if (next_dev[u0] <= horizon[k]) ++hits[w][k];
        if (next_dev[u0] <= horizon[k] / 2) ++half[w][k];
      }
    }
  });
  for (unsigned w = 0; w < workers; ++w) tab.redrawn += redo[w];
  for (std::size_t k = 0; k < u_grid.size(); ++k) {
    std::size_t c = 0, h = 0;
    for (unsigned w = 0; w < workers; ++w) {
      c += hits[w][k];
      h += half[w][k];
    }
    const auto ci = wilson(c, opt.samples);
    DeviationRow row;
    row.eps = eps;
    row.u = u_grid[k];
    row.n_max = horizon[k];
    row.mu_A_lo = ci.p;
    row.ci_lo = ci.lo;
    row.ci_hi = ci.hi;
    row.half_horizon = static_cast<double>(h) / static_cast<double>(opt.samples);
    row.count = c;
    tab.rows.push_back(row);
  }
  return tab;
}

inline DeviationRow deviation_measure(const InducedMap& ind, std::size_t u, double eps, DeviationOptions opt = {}) {
  return deviation_table(ind, {u}, eps, opt).rows.front();
}

/// Monte Carlo mu_Y(R > t) over a t grid.
inline std::vector<ProportionCI> return_tail_mc(const InducedMap& ind, const std::vector<std::size_t>& t_grid, std::size_t samples,
                                                std::uint64_t seed = 1, unsigned workers = thread_count()) {
  const std::size_t t_max = t_grid.empty() ? 0 : *std::max_element(t_grid.begin(), t_grid.end());
  InducedStepper stepper(ind, t_max + 1);
  workers = std::max(1u, workers);
  // first return time capped at t_max + 1
  std::vector<std::vector<std::size_t>> hist(workers, std::vector<std::size_t>(t_max + 2, 0));
  parallel_chunks(samples, workers, [&](unsigned w, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      Rng rng(seed, i);
      coord y = stepper.draw(rng);
      const std::size_t R = stepper.advance(y, rng);
      ++hist[w][R == 0 ? t_max + 1 : std::min(R, t_max + 1)];
    }
  });
  std::vector<std::size_t> h(t_max + 2, 0);
  for (auto& v : hist)
    for (std::size_t k = 0; k < h.size(); ++k) h[k] += v[k];
  std::vector<ProportionCI> out;
  for (std::size_t t : t_grid) {
    std::size_t above = 0;
    for (std::size_t k = t + 1; k < h.size(); ++k) above += h[k];
    out.push_back(wilson(above, samples));
  }
  return out;
}

struct ObstructionReport {
  double alpha = 0, s = 0, mu_U = 0, eps = 0;
  std::size_t t = 0;
  double u = 0;
  ProportionCI joint;  // mu_Y(tau_r > t and A_u)
  ProportionCI tail;   // mu_Y(R_Y > t)
  double ratio = 0;    // joint / (s mu(U)^{1-alpha})
  std::size_t violations = 0;  // samples with R_Y > t outside {tau_r > t} and A_u
  bool containment_applies = false;  // the inclusion needs u >= 2
  std::size_t samples = 0, redrawn = 0;
};

struct ObstructionOptions {
  std::size_t samples = 100'000;
  std::uint64_t seed = 1;
  double eps = 0.4;  // absolute deviation threshold, < 1/2
  std::size_t n_max = 0;  // 0: max(10 u, 1000)
  std::size_t step_cap = 100'000'000;
  unsigned workers = thread_count();
};

/// For holes inside Y: {R_Y > t} lies in {tau_r > t} and in A_u with u = mu(Y) t,
/// which keeps mu_Y(tau_r > t and A_u) at least mu_Y(R_Y > t). Checked per sample.
inline ObstructionReport polynomial_obstruction_probe(const InducedMap& ind, Interval hole, double alpha, double s, ObstructionOptions opt = {}) {
  if (!(hole.lo > ind.Y.lo && hole.hi <= ind.Y.hi)) throw Error(ErrorCode::HypothesisFailed, "hole must lie inside the inducing base");
  ObstructionReport rep;
  rep.alpha = alpha;
  rep.s = s;
  rep.eps = opt.eps;
  rep.samples = opt.samples;
  rep.mu_U = static_cast<double>(ind.cdf(hole.hi) - ind.cdf(hole.lo));
  rep.t = scan_time(alpha, s, rep.mu_U);
  rep.u = static_cast<double>(ind.mu_Y) * static_cast<double>(rep.t);
  rep.containment_applies = rep.u >= 2 && opt.eps < 0.5;
  const std::size_t u0 = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(rep.u)));
  const std::size_t N = opt.n_max ? opt.n_max : std::max<std::size_t>(static_cast<std::size_t>(std::ceil(10 * rep.u)), 1000);
  const long double mean = 1 / ind.mu_Y;
  InducedStepper stepper(ind);
  const IntervalMap& m = *ind.base;
  const double lo = static_cast<double>(hole.lo), hi = static_cast<double>(hole.hi);
  const unsigned workers = std::max(1u, opt.workers);
  std::vector<std::size_t> joint(workers, 0), tail(workers, 0), bad(workers, 0), redo(workers, 0);
  parallel_chunks(opt.samples, workers, [&](unsigned w, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      Rng rng(opt.seed, i);
      for (;;) {
        double x = static_cast<double>(stepper.draw(rng));
        std::size_t steps = 0, returns = 0, first_return = 0, last = 0;
        std::optional<std::size_t> tau;
        bool in_A = false, ok = true;
        while (returns < N) {
          x = mc_step(m, x, rng);
          ++steps;
          if (!std::isfinite(x) || steps > opt.step_cap) {
            ok = false;
            break;
          }
          if (!tau && x >= lo && x < hi) tau = steps;
          if (ind.in_base(x)) {
            ++returns;
            if (returns == 1) first_return = steps;
            last = steps;
            if (returns >= u0 && std::fabs(static_cast<long double>(last) - static_cast<long double>(returns) * mean) >
                                     static_cast<long double>(returns) * opt.eps)
              in_A = true;
          }
        }
        if (!ok) {
          ++redo[w];
          continue;
        }
        const bool survives = !tau || *tau > rep.t;
        const bool long_return = first_return > rep.t;
        if (survives && in_A) ++joint[w];
        if (long_return) ++tail[w];
        if (long_return && !(survives && in_A)) ++bad[w];
        break;
      }
    }
  });
  std::size_t J = 0, T = 0;
  for (unsigned w = 0; w < workers; ++w) {
    J += joint[w];
    T += tail[w];
    rep.violations += bad[w];
    rep.redrawn += redo[w];
  }
  rep.joint = wilson(J, opt.samples);
  rep.tail = wilson(T, opt.samples);
  rep.ratio = rep.joint.p / (s * std::pow(rep.mu_U, 1 - alpha));
  return rep;
}

}  // namespace odx
