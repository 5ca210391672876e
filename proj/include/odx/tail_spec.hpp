#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "odx/error.hpp"
#include "odx/interval_set.hpp"

namespace odx {

/// Return-time tail t_n (t_1 = 1) and the derived lengths a_n = t_n - t_{n+1}
/// of the Farey partition intervals A_n = (t_{n+1}, t_n].
struct TailSpec {
  enum class Class { Exponential, Stretched, Polynomial, Custom };

  Class cls = Class::Exponential;
  double theta = 0.5;  // Exponential: t_n = theta^(n-1)
  double c = 1.0;      // Stretched:   t_n = exp(-c (n^gamma - 1))
  double gamma = 0.5;
  double beta = 2.0;   // Polynomial:  t_n = n^(-beta)
  std::function<coord(std::size_t)> custom_log_t;  // Custom: log t_n
  std::size_t depth = 0;  // 0: chosen so the omitted mass is below 1e-10

  static TailSpec exponential(double theta) {
    TailSpec s;
    s.cls = Class::Exponential;
    s.theta = theta;
    return s;
  }
  static TailSpec stretched(double c, double gamma) {
    TailSpec s;
    s.cls = Class::Stretched;
    s.c = c;
    s.gamma = gamma;
    return s;
  }
  static TailSpec polynomial(double beta) {
    TailSpec s;
    s.cls = Class::Polynomial;
    s.beta = beta;
    return s;
  }

  std::string class_name() const {
    switch (cls) {
      case Class::Exponential: return "exponential";
      case Class::Stretched: return "stretched";
      case Class::Polynomial: return "polynomial";
      case Class::Custom: return "custom";
    }
    return "?";
  }

  /// log t_n for n >= 1.
  coord log_t(std::size_t n) const {
    const coord nn = static_cast<coord>(n);
    switch (cls) {
      case Class::Exponential: return (nn - 1) * std::log(static_cast<coord>(theta));
      case Class::Stretched: return -static_cast<coord>(c) * (std::pow(nn, static_cast<coord>(gamma)) - 1);
      case Class::Polynomial: return -static_cast<coord>(beta) * std::log(nn);
      case Class::Custom: return custom_log_t(n);
    }
    return 0;
  }
  coord t(std::size_t n) const { return std::exp(log_t(n)); }

  /// log a_n, evaluated without cancellation.
  coord log_a(std::size_t n) const {
    const coord d = log_t(n + 1) - log_t(n);
    return log_t(n) + std::log(-std::expm1(d));
  }
  coord a(std::size_t n) const { return std::exp(log_a(n)); }

  /// Level n with x in A_n = (t_{n+1}, t_n]; x must lie in (0,1].
  std::size_t level_of(coord x) const {
    const coord lx = std::log(x);
    std::size_t n = 1;
    switch (cls) {
      case Class::Exponential: n = 1 + static_cast<std::size_t>(std::max<coord>(0, std::floor(lx / std::log(static_cast<coord>(theta))))); break;
      case Class::Stretched: n = static_cast<std::size_t>(std::max<coord>(1, std::floor(std::pow(1 - lx / static_cast<coord>(c), 1 / static_cast<coord>(gamma))))); break;
      case Class::Polynomial: n = static_cast<std::size_t>(std::max<coord>(1, std::floor(std::exp(-lx / static_cast<coord>(beta))))); break;
      case Class::Custom: {
        std::size_t hi = 1;
        while (log_t(hi + 1) >= lx) hi *= 2;
        std::size_t lo = hi / 2 + (hi == 1 ? 0 : 0);
        lo = std::max<std::size_t>(1, lo);
        while (lo < hi) {
          std::size_t mid = (lo + hi) / 2;
          if (log_t(mid + 1) >= lx)
            lo = mid + 1;
          else
            hi = mid;
        }
        n = lo;
      } break;
    }
    while (n > 1 && t(n) < x) --n;
    while (t(n + 1) >= x) ++n;
    return n;
  }

  /// Integral of t(u) over [L, inf) for the closed-form classes; Custom returns 0.
  coord tail_integral(coord L) const {
    switch (cls) {
      case Class::Exponential: {
        const coord lt = std::log(static_cast<coord>(theta));
        return -std::exp((L - 1) * lt) / lt;
      }
      case Class::Polynomial: return std::pow(L, 1 - static_cast<coord>(beta)) / (static_cast<coord>(beta) - 1);
      case Class::Stretched: {
        const coord g = gamma, cc = c;
        return std::exp(cc) / g * std::pow(cc, -1 / g) * boost::math::tgamma(1 / g, cc * std::pow(L, g));
      }
      case Class::Custom: return 0;
    }
    return 0;
  }

  /// Sum of t_k over k >= n past a direct-summation window (Euler-Maclaurin remainder).
  coord tail_sum_from(std::size_t n) const {
    constexpr std::size_t window = 4096;
    coord s = 0;
    const std::size_t end = n + window;
    for (std::size_t k = n; k < end; ++k) s += t(k);
    if (cls == Class::Custom) {
      for (std::size_t k = end; k < end + 16 * window; ++k) s += t(k);
      return s;
    }
    return s + tail_integral(static_cast<coord>(end)) + t(end) / 2;
  }

  /// Smallest depth whose omitted mass t_{depth+1} is below tol.
  std::size_t depth_for(coord tol = 1e-10L) const {
    if (depth) return depth;
    return level_of(tol);
  }

  /// Checks a_n > 0 and a_n nonincreasing up to `to`; throws with the first offending n.
  void validate(std::size_t to) const {
    coord prev = a(1);
    if (!(prev > 0) || !(t(1) > 0.999999L && t(1) < 1.000001L))
      throw Error(ErrorCode::NonMonotoneLengths, "tail must start at t_1 = 1 with a_1 > 0", 1);
    for (std::size_t n = 2; n <= to; ++n) {
      coord cur = a(n);
      if (!(cur > 0) || cur > prev * (1 + 1e-15L))
        throw Error(ErrorCode::NonMonotoneLengths, "a_n not positive and nonincreasing", static_cast<std::int64_t>(n));
      prev = cur;
    }
  }
};

}  // namespace odx
