#pragma once

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/polygamma.hpp>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>

#include "odx/interval_map.hpp"
#include "odx/tail_spec.hpp"

namespace odx {

namespace detail {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline std::string param_name(const std::string& base, double v) {
  std::ostringstream os;
  os << base << '(' << v << ')';
  return os.str();
}

// psi(x + h) - psi(x) without cancellation for small h.
inline long double digamma_step(long double x, long double h) {
  using boost::math::digamma;
  using boost::math::polygamma;
  if (h > 1e-3L * x || h > 1e-2L) return digamma(x + h) - digamma(x);
  long double term = h, sum = 0;
  for (int k = 1; k <= 5; ++k) {
    sum += term * polygamma(k, x);
    term *= h / static_cast<long double>(k + 1);
  }
  return sum;
}

}  // namespace detail

/// x -> 2x mod 1. As a circle map it has no discontinuities.
inline MapPtr make_doubling() {
  auto m = std::make_shared<IntervalMap>();
  m->name = "doubling";
  m->branch_count = 2;
  m->branch = [](std::size_t i) {
    Branch b;
    b.label = static_cast<long>(i);
    b.increasing = true;
    if (i == 0) {
      b.domain = {0, 0.5L};
      b.forward = [](coord x) { return 2 * x; };
      b.inverse = [](coord y) { return y / 2; };
    } else {
      b.domain = {0.5L, 1};
      b.forward = [](coord x) { return 2 * x - 1; };
      b.inverse = [](coord y) { return (y + 1) / 2; };
    }
    b.derivative = [](coord) { return coord{2}; };
    return b;
  };
  m->locate = [](coord x) -> std::optional<std::size_t> { return x < 0.5L ? 0u : 1u; };
  m->apply = [](coord x) -> std::optional<Eval> {
    if (x < 0.5L) return Eval{2 * x, 0};
    return Eval{2 * x - 1, 1};
  };
  m->step = [](double x) { return x < 0.5 ? 2 * x : 2 * x - 1; };
  // A 53-bit dyadic sample loses its lowest bit each step; append a fresh one.
  m->refresh = [](double y, Rng& rng) { return rng.bit() ? y + 0x1.0p-53 : y; };
  m->abs_derivative = [](coord) { return coord{2}; };
  m->density = Density{[](coord) { return coord{1}; }, [](coord x) { return x; }, "Lebesgue"};
  m->lebesgue_invariant = true;
  return m;
}

/// Tent of slope s in (1,2]: sx on [0,1/2), s(1-x) on [1/2,1].
inline MapPtr make_ly_tent(double slope) {
  if (!(slope > 1 && slope <= 2)) throw Error(ErrorCode::ConfigInvalid, "ly_tent slope must lie in (1,2]");
  auto m = std::make_shared<IntervalMap>();
  const coord s = slope;
  m->name = detail::param_name("ly_tent", slope);
  m->params["slope"] = slope;
  m->branch_count = 2;
  m->branch = [s](std::size_t i) {
    Branch b;
    b.label = static_cast<long>(i);
    b.derivative = [s](coord) { return s; };
    if (i == 0) {
      b.domain = {0, 0.5L};
      b.increasing = true;
      b.forward = [s](coord x) { return s * x; };
      b.inverse = [s](coord y) { return y / s; };
    } else {
      b.domain = {0.5L, 1};
      b.increasing = false;
      b.forward = [s](coord x) { return s * (1 - x); };
      b.inverse = [s](coord y) { return 1 - y / s; };
    }
    return b;
  };
  m->locate = [](coord x) -> std::optional<std::size_t> { return x < 0.5L ? 0u : 1u; };
  m->apply = [s](coord x) -> std::optional<Eval> {
    if (x < 0.5L) return Eval{s * x, 0};
    return Eval{s * (1 - x), 1};
  };
  const double sd = slope;
  m->step = [sd](double x) { return x < 0.5 ? sd * x : sd * (1 - x); };
  m->abs_derivative = [s](coord) { return s; };
  m->lebesgue_invariant = slope == 2;
  if (slope == 2) m->density = Density{[](coord) { return coord{1}; }, [](coord x) { return x; }, "Lebesgue"};
  return m;
}

/// Gauss map x -> 1/x mod 1. Branch index i carries label j = i+1 on (1/(j+1), 1/j).
/// Enumerating algorithms stop at j_max; operator assembly uses the exact tail.
inline MapPtr make_gauss(std::size_t j_max = 100000) {
  auto m = std::make_shared<IntervalMap>();
  m->name = "gauss";
  m->truncation_depth = j_max;
  m->truncation_mass = 1.0L / static_cast<coord>(j_max + 1);
  m->branch = [](std::size_t i) {
    const coord j = static_cast<coord>(i + 1);
    Branch b;
    b.label = static_cast<long>(i + 1);
    b.domain = {1 / (j + 1), 1 / j};
    b.increasing = false;
    b.forward = [j](coord x) { return 1 / x - j; };
    b.derivative = [](coord x) { return 1 / (x * x); };
    b.inverse = [j](coord y) { return 1 / (y + j); };
    return b;
  };
  auto classify = [](coord x) -> std::optional<std::size_t> {
    if (!(x > 0)) return std::nullopt;
    const coord inv = 1 / x;
    const coord j = std::floor(inv);
    if (j == inv) return std::nullopt;
    return static_cast<std::size_t>(j) - 1;
  };
  m->locate = classify;
  m->apply = [classify](coord x) -> std::optional<Eval> {
    auto i = classify(x);
    if (!i) return std::nullopt;
    return Eval{1 / x - static_cast<coord>(*i + 1), *i};
  };
  m->step = [](double x) {
    if (!(x > 0)) return detail::kNaN;
    const double inv = 1 / x, j = std::floor(inv);
    return j == inv ? detail::kNaN : inv - j;
  };
  m->abs_derivative = [](coord x) { return 1 / (x * x); };
  m->index_of = [](coord x) -> std::size_t {
    if (!(x > 0)) return std::numeric_limits<std::size_t>::max() / 2;
    const coord inv = std::floor(1 / x);
    if (inv > 1e18L) return std::numeric_limits<std::size_t>::max() / 2;
    return inv >= 1 ? static_cast<std::size_t>(inv) - 1 : 0;
  };
  // On branch j the preimage of [c,d) is (1/(j+d), 1/(j+c)].
  m->range_preimage = [](std::size_t first, std::optional<std::size_t> last, coord c, coord d) -> coord {
    const long double j1 = static_cast<long double>(first + 1);
    const long double h = d - c;
    if (!(h > 0)) return 0;
    long double tail = detail::digamma_step(j1 + c, h);
    if (last) {
      const long double j2 = static_cast<long double>(*last + 2);
      tail -= detail::digamma_step(j2 + c, h);
    }
    return tail;
  };
  const coord ln2 = std::numbers::ln2_v<coord>;
  m->density = Density{[ln2](coord x) { return 1 / (ln2 * (1 + x)); }, [](coord x) { return std::log2(1 + x); }, "Gauss measure",
                       [](coord u) { return std::exp2(u) - 1; }};
  m->notes = "branches enumerated up to j_max; omitted mass 1/(j_max+1)";
  return m;
}

/// Liverani-Saussol-Vaienti map with neutral fixed point at 0.
inline MapPtr make_lsv(double gamma) {
  if (!(gamma > 0 && gamma < 1)) throw Error(ErrorCode::ConfigInvalid, "lsv gamma must lie in (0,1)");
  auto m = std::make_shared<IntervalMap>();
  const coord g = gamma;
  const coord k = std::pow(coord{2}, g);
  m->name = detail::param_name("lsv", gamma);
  m->params["gamma"] = gamma;
  m->branch_count = 2;
  m->branch = [g, k](std::size_t i) {
    Branch b;
    b.label = static_cast<long>(i);
    b.increasing = true;
    if (i == 0) {
      b.domain = {0, 0.5L};
      b.forward = [g, k](coord x) { return x + k * std::pow(x, 1 + g); };
      b.derivative = [g, k](coord x) { return 1 + (1 + g) * k * std::pow(x, g); };
    } else {
      b.domain = {0.5L, 1};
      b.forward = [](coord x) { return 2 * x - 1; };
      b.derivative = [](coord) { return coord{2}; };
      b.inverse = [](coord y) { return (y + 1) / 2; };
    }
    return b;
  };
  m->locate = [](coord x) -> std::optional<std::size_t> {
    if (x == 0.5L) return std::nullopt;
    return x < 0.5L ? 0u : 1u;
  };
  m->apply = [g, k](coord x) -> std::optional<Eval> {
    if (x == 0.5L) return std::nullopt;
    if (x < 0.5L) return Eval{x + k * std::pow(x, 1 + g), 0};
    return Eval{2 * x - 1, 1};
  };
  const double gd = gamma, kd = std::pow(2.0, gamma);
  m->step = [gd, kd](double x) {
    if (x == 0.5) return detail::kNaN;
    return x < 0.5 ? x + kd * std::pow(x, 1 + gd) : 2 * x - 1;
  };
  m->abs_derivative = [g, k](coord x) { return x < 0.5L ? 1 + (1 + g) * k * std::pow(x, g) : coord{2}; };
  m->boundary_points = {0.5L};
  m->notes = "left branch inverted by bisection";
  return m;
}

/// Generalised Farey map built from a return-time tail: A_n = (t_{n+1}, t_n],
/// f(A_1) = [0,1) decreasing, f(A_n) = A_{n-1} affinely for n >= 2.
/// Tail sums T_n = sum_{k>=n} t_k, tabulated for n <= size.
class FareyTailSums {
 public:
  FareyTailSums(const TailSpec& spec, std::size_t size) : spec_(spec), table_(size + 2) {
    table_[size + 1] = spec.tail_sum_from(size + 1);
    for (std::size_t n = size; n >= 1; --n) table_[n] = table_[n + 1] + spec.t(n);
  }
  coord from(std::size_t n) const { return n < table_.size() ? table_[n] : spec_.tail_sum_from(n); }
  coord total() const { return table_[1]; }

 private:
  TailSpec spec_;
  std::vector<coord> table_;
};

inline MapPtr make_farey(const TailSpec& spec) {
  if (spec.cls == TailSpec::Class::Polynomial && !(spec.beta > 1))
    throw Error(ErrorCode::ConfigInvalid, "polynomial tail needs beta > 1 for a finite invariant measure");
  const std::size_t depth = spec.depth_for();
  spec.validate(depth + 1);
  auto m = std::make_shared<IntervalMap>();
  m->name = "farey(" + spec.class_name() + ")";
  switch (spec.cls) {
    case TailSpec::Class::Exponential: m->params["theta"] = spec.theta; break;
    case TailSpec::Class::Stretched: m->params["c"] = spec.c; m->params["gamma"] = spec.gamma; break;
    case TailSpec::Class::Polynomial: m->params["beta"] = spec.beta; break;
    case TailSpec::Class::Custom: break;
  }
  m->truncation_depth = depth;
  m->truncation_mass = spec.t(depth + 1);
  m->branch = [spec](std::size_t i) {
    const std::size_t n = i + 1;
    Branch b;
    b.label = static_cast<long>(n);
    b.domain = {spec.t(n + 1), spec.t(n)};
    const coord an = spec.a(n);
    if (n == 1) {
      b.increasing = false;
      b.forward = [an](coord x) { return (1 - x) / an; };
      b.derivative = [an](coord) { return 1 / an; };
      b.inverse = [an](coord y) { return 1 - an * y; };
    } else {
      const coord ap = spec.a(n - 1), tn = spec.t(n), tn1 = spec.t(n + 1);
      b.increasing = true;
      b.forward = [=](coord x) { return ap * (x - tn1) / an + tn; };
      b.derivative = [=](coord) { return ap / an; };
      b.inverse = [=](coord y) { return tn1 + (y - tn) * an / ap; };
    }
    return b;
  };
  auto level = [spec](coord x) { return spec.level_of(x); };
  m->locate = [level](coord x) -> std::optional<std::size_t> {
    if (!(x > 0)) return std::nullopt;
    return level(x) - 1;
  };
  m->apply = [spec, level](coord x) -> std::optional<Eval> {
    if (!(x > 0)) return std::nullopt;
    const std::size_t n = level(x);
    if (n == 1) return Eval{(1 - x) / spec.a(1), 0};
    const coord y = spec.t(n) + (x - spec.t(n + 1)) * std::exp(spec.log_a(n - 1) - spec.log_a(n));
    return Eval{y, n - 1};
  };
  // Double-precision step from a table of t_n; points below the table use the exact path.
  {
    const std::size_t rows = std::min<std::size_t>(depth + 2, 1 << 16);
    auto tt = std::make_shared<std::vector<double>>(rows + 2);
    auto ratio = std::make_shared<std::vector<double>>(rows + 2);
    for (std::size_t n = 1; n <= rows + 1; ++n) {
      (*tt)[n] = static_cast<double>(spec.t(n));
      (*ratio)[n] = n >= 2 ? static_cast<double>(std::exp(spec.log_a(n - 1) - spec.log_a(n))) : 0.0;
    }
    const double a1 = static_cast<double>(spec.a(1));
    m->step = [m_apply = m->apply, tt, ratio, rows, a1](double x) {
      const auto& t = *tt;
      if (!(x > 0)) return detail::kNaN;
      if (x > t[rows + 1]) {
        // largest n with t_n >= x; t is decreasing in n
        std::size_t lo = 1, hi = rows;
        while (lo < hi) {
          const std::size_t mid = (lo + hi + 1) / 2;
          if (t[mid] >= x)
            lo = mid;
          else
            hi = mid - 1;
        }
        if (x > t[lo + 1]) return lo == 1 ? (1 - x) / a1 : t[lo] + (x - t[lo + 1]) * (*ratio)[lo];
      }
      auto r = m_apply(x);
      return r ? static_cast<double>(r->y) : detail::kNaN;
    };
  }
  m->abs_derivative = [spec, level](coord x) {
    const std::size_t n = level(x);
    return n == 1 ? 1 / spec.a(1) : std::exp(spec.log_a(n - 1) - spec.log_a(n));
  };
  m->index_of = [spec](coord x) -> std::size_t {
    if (!(x > 0)) return std::numeric_limits<std::size_t>::max() / 2;
    return spec.level_of(x) - 1;
  };
  // Invariant density t_n / a_n on A_n, normalised by sum_n t_n.
  auto sums = std::make_shared<const FareyTailSums>(spec, std::min<std::size_t>(depth + 1, 200000));
  m->density = Density{[spec, sums, level](coord x) -> coord {
                         if (!(x > 0)) return 0;
                         const std::size_t n = level(x);
                         return std::exp(spec.log_t(n) - spec.log_a(n)) / sums->total();
                       },
                       [spec, sums, level](coord x) -> coord {
                         if (!(x > 0)) return 0;
                         if (x >= 1) return 1;
                         const std::size_t n = level(x);
                         const coord inside = (x - spec.t(n + 1)) * std::exp(spec.log_t(n) - spec.log_a(n));
                         return (sums->from(n + 1) + inside) / sums->total();
                       },
                       "piecewise constant t_n/a_n on A_n",
                       [spec, sums, depth](coord u) -> coord {
                         // cdf(t_n) = T_n / Z; find n with T_{n+1} <= uZ < T_n
                         const coord target = u * sums->total();
                         std::size_t lo = 1, hi = depth + 1;
                         while (lo < hi) {
                           const std::size_t mid = (lo + hi + 1) / 2;
                           if (sums->from(mid) > target)
                             lo = mid;
                           else
                             hi = mid - 1;
                         }
                         const std::size_t n = lo;
                         // below the truncation depth (mass < 1e-10) the point is clamped
                         return std::max(spec.t(n + 1) + (target - sums->from(n + 1)) * std::exp(spec.log_a(n) - spec.log_t(n)), spec.t(n + 2));
                       }};
  m->lebesgue_invariant = spec.cls == TailSpec::Class::Exponential;
  m->boundary_points = {0};
  return m;
}

/// Catalogue lookup by name with a parameter map.
inline MapPtr make_map(const std::string& name, const std::map<std::string, double>& p = {}) {
  auto get = [&](const char* key, double fallback) {
    auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
  };
  if (name == "doubling") return make_doubling();
  if (name == "ly_tent") return make_ly_tent(get("slope", 1.8));
  if (name == "gauss") return make_gauss(static_cast<std::size_t>(get("j_max", 100000)));
  if (name == "lsv") return make_lsv(get("gamma", 0.5));
  if (name == "farey") {
    const std::string cls = p.count("theta") ? "exponential" : p.count("beta") ? "polynomial" : "stretched";
    TailSpec s = cls == "exponential"   ? TailSpec::exponential(get("theta", 0.5))
                 : cls == "polynomial" ? TailSpec::polynomial(get("beta", 2))
                                       : TailSpec::stretched(get("c", 1), get("gamma", 0.5));
    s.depth = static_cast<std::size_t>(get("depth", 0));
    return make_farey(s);
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown map '" + name + "'");
}

inline const std::vector<std::string>& catalogue_names() {
  static const std::vector<std::string> names{"doubling", "ly_tent(slope)", "gauss", "lsv(gamma)", "farey(tail_spec)"};
  return names;
}

}  // namespace odx
