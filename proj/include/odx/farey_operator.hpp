#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "odx/catalogue.hpp"
#include "odx/lscan.hpp"
#include "odx/survival.hpp"
#include "odx/tail_spec.hpp"

namespace odx {

/// t_n ~ sum_k W_k rho_k^n for n in [n_min, n_max], from a quadrature of the Laplace
/// representation t_n = int e^{-ns} dnu(s). All weights are positive.
struct ExpSum {
  std::vector<long double> W, rho;
  std::size_t n_min = 0, n_max = 0;
  double err_t = 0, err_a = 0;  // max relative error of t_n and of a_n = t_n - t_{n+1}
};

namespace detail {

// log(sigma f(sigma)) for the one-sided stable law with E exp(-x S) = exp(-x^g),
// via Zolotarev's integral.
inline long double log_stable_sigma_density(long double g, long double sigma) {
  const long double q = 1 / (1 - g);
  const long double X = std::pow(sigma, -g * q);
  auto A = [&](long double phi) {
    return std::pow(std::sin(g * phi) / std::sin(phi), q) * std::sin((1 - g) * phi) / std::sin(g * phi);
  };
  const long double A0 = std::pow(g, g * q) * (1 - g);
  const std::size_t m = std::max<std::size_t>(2000, static_cast<std::size_t>(60 * std::sqrt(static_cast<double>(X))));
  const long double h = std::numbers::pi_v<long double> / static_cast<long double>(m);
  long double acc = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const long double phi = (static_cast<long double>(i) + 0.5L) * h;
    const long double a = A(phi);
    const long double e = X * (a - A0);
    if (e > 20000) break;  // A increases on (0, pi)
    acc += a * std::exp(-e);
  }
  acc *= h;
  return std::log(g * q / std::numbers::pi_v<long double>) + std::log(X) - X * A0 + std::log(acc);
}

inline long double log_sum_exp_terms(const ExpSum& e, long double n, bool diff) {
  long double mx = -std::numeric_limits<long double>::infinity();
  std::vector<long double> v(e.W.size());
  for (std::size_t k = 0; k < e.W.size(); ++k) {
    const long double lr = std::log(e.rho[k]);
    v[k] = std::log(e.W[k]) + n * lr + (diff ? std::log(-std::expm1(lr)) : 0);
    mx = std::max(mx, v[k]);
  }
  long double s = 0;
  for (auto x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

}  // namespace detail

/// Builds the exponential sum for Exponential, Polynomial and Stretched tails; the step
/// is halved until the relative error is below tol. Custom tails have no representation.
inline ExpSum tail_exponential_sum(const TailSpec& spec, std::size_t n_min, std::size_t n_max, double tol = 1e-8) {
  ExpSum out;
  out.n_min = n_min;
  out.n_max = n_max;
  if (spec.cls == TailSpec::Class::Custom) throw Error(ErrorCode::HypothesisFailed, "custom tails have no Laplace representation");
  if (spec.cls == TailSpec::Class::Exponential) {
    out.W = {1 / static_cast<long double>(spec.theta)};
    out.rho = {static_cast<long double>(spec.theta)};
    return out;
  }
  const long double nlo = static_cast<long double>(n_min), nhi = static_cast<long double>(n_max);
  long double s_hi, s_lo;  // saddle points of the two ends
  if (spec.cls == TailSpec::Class::Polynomial) {
    s_hi = spec.beta / nlo;
    s_lo = spec.beta / nhi;
  } else {
    s_hi = spec.c * spec.gamma * std::pow(nlo, static_cast<long double>(spec.gamma) - 1);
    s_lo = spec.c * spec.gamma * std::pow(nhi, static_cast<long double>(spec.gamma) - 1);
  }
  // Nodes are uniform in xi, with dv/dxi = E/(1+E), E = (s/s_hi)^p: the peak width of
  // the integrand in v = log s scales like s^p for stretched tails.
  const long double p = spec.cls == TailSpec::Class::Polynomial ? 0 : spec.gamma / (2 * (1 - spec.gamma));
  const long double sp = std::pow(s_hi, p);
  auto xi_of = [&](long double v) { return p == 0 ? v : v - sp * std::exp(-p * v) / p; };
  auto v_of = [&](long double xi) {
    long double lo = std::log(s_lo) - 60, hi = std::log(s_hi) + 60;
    for (int it = 0; it < 200; ++it) {
      const long double mid = (lo + hi) / 2;
      (xi_of(mid) < xi ? lo : hi) = mid;
    }
    return (lo + hi) / 2;
  };
  // saddle width at n_max: 1 / sqrt((1+q) gamma c n^gamma), q = gamma/(1-gamma)
  const long double w_lo = p == 0 ? 1 / std::sqrt(static_cast<long double>(spec.beta))
                                  : 1 / std::sqrt(spec.c * spec.gamma / (1 - spec.gamma) * std::pow(nhi, static_cast<long double>(spec.gamma)));
  // below the saddle the polynomial integrand only decays like s^beta
  const long double m_lo = p == 0 ? (5 - std::log(static_cast<long double>(tol))) / spec.beta : 8 * w_lo;
  const long double xi_lo = xi_of(std::log(s_lo) - m_lo), xi_hi = xi_of(std::log(s_hi) + 5);

  std::vector<std::size_t> probe;
  for (std::size_t n = n_min; n <= std::min(n_max, n_min + 400); ++n) probe.push_back(n);
  for (long double x = std::log(nlo + 400); x < std::log(nhi); x += 0.05L) probe.push_back(static_cast<std::size_t>(std::exp(x)));
  probe.push_back(n_max);

  for (long double h = 0.4L; h > 0.01L; h /= 2) {
    out.W.clear();
    out.rho.clear();
    for (long double xi = xi_lo; xi <= xi_hi; xi += h) {
      const long double v = v_of(xi), s = std::exp(v);
      const long double E = std::pow(s / s_hi, p), dv = p == 0 ? 1 : E / (1 + E);
      long double lw;
      if (spec.cls == TailSpec::Class::Polynomial) {
        lw = spec.beta * v - boost::math::lgamma(static_cast<long double>(spec.beta));
      } else {
        const long double g = spec.gamma, lam = std::pow(static_cast<long double>(spec.c), 1 / g);
        lw = spec.c + detail::log_stable_sigma_density(g, s / lam);
      }
      const long double w = h * dv * std::exp(lw);
      if (!(w > 0)) continue;
      out.W.push_back(w);
      out.rho.push_back(std::exp(-s));
    }
    out.err_t = out.err_a = 0;
    for (std::size_t n : probe) {
      const long double nn = static_cast<long double>(n);
      out.err_t = std::max(out.err_t, static_cast<double>(std::fabs(std::expm1(detail::log_sum_exp_terms(out, nn, false) - spec.log_t(n)))));
      out.err_a = std::max(out.err_a, static_cast<double>(std::fabs(std::expm1(detail::log_sum_exp_terms(out, nn, true) - spec.log_a(n)))));
    }
    if (out.err_t < tol && out.err_a < tol) return out;
  }
  throw Error(ErrorCode::NoConvergence, "exponential sum for the tail did not reach the tolerance");
}

struct FareyOperatorOptions {
  std::size_t cells = 256;      // A_1 cells away from the hole
  std::size_t hole_cells = 32;  // cells inside the hole
  double sum_tol = 1e-8;
};

/// Survival mu(tau > t) for the Farey map with a hole inside A_1, by iterating the
/// transfer operator in renewal form. A_1 is resolved by an Ulam grid in the affine
/// coordinate u = (x - t_2)/a_1; levels n >= 2 are carried exactly, since f moves A_n
/// onto A_{n-1} affinely. Mass that returns from deep levels comes back uniform in u
/// and is summed through an exponential-sum representation of a_n.
class FareyRenewalOperator {
 public:
  FareyRenewalOperator(const TailSpec& spec, Interval hole, std::size_t horizon, FareyOperatorOptions opt = {})
      : spec_(spec), hole_(hole), horizon_(horizon) {
    const coord t2 = spec.t(2), a1 = spec.a(1);
    if (!(hole.lo > t2 && hole.hi <= 1 && hole.hi > hole.lo))
      throw Error(ErrorCode::HypothesisFailed, "hole must be a nonempty interval inside A_1");
    const coord ulo = (hole.lo - t2) / a1, uhi = (hole.hi - t2) / a1;
    // piecewise-uniform grid: [0,ulo], [ulo,uhi], [uhi,1]
    auto seg = [&](coord a, coord b, std::size_t k) {
      for (std::size_t i = 0; i < k; ++i) b_.push_back(a + (b - a) * static_cast<coord>(i) / static_cast<coord>(k));
    };
    const auto k1 = ulo > 0 ? std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(ulo) * opt.cells))) : 0;
    const auto k3 = uhi < 1 ? std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(1 - uhi) * opt.cells))) : 0;
    seg(0, ulo, k1);
    hole_first_ = b_.size();
    seg(ulo, uhi, opt.hole_cells);
    hole_last_ = b_.size();
    seg(uhi, 1, k3);
    b_.push_back(1);
    const std::size_t K = b_.size() - 1;
    width_.resize(K);
    for (std::size_t i = 0; i < K; ++i) width_[i] = b_[i + 1] - b_[i];

    const coord w_last = width_.back();
    std::size_t L = spec.level_of(w_last);
    nd_ = spec.t(L) <= w_last ? L : L + 1;
    sums_ = std::make_shared<FareyTailSums>(spec, horizon + 4);
    z_norm_ = sums_->total();

    // Deposit instructions: cell i, branch n, u' range in the target cell grid.
    for (std::size_t i = 0; i < K; ++i) {
      const coord y_hi = 1 - b_[i];
      const coord y_lo = i + 1 == K ? spec.t(nd_) : 1 - b_[i + 1];
      std::size_t n = spec.level_of(y_hi);
      for (;; ++n) {
        const coord tn = spec.t(n), tn1 = spec.t(n + 1), an = spec.a(n);
        const coord lo = std::max(y_lo, tn1), hi = std::min(y_hi, tn);
        if (hi > lo) add_instruction(i, n, (lo - tn1) / an, (hi - tn1) / an, an / width_[i]);
        if (tn1 <= y_lo) break;
      }
    }
    if (spec.cls != TailSpec::Class::Custom) sum_ = tail_exponential_sum(spec, nd_, std::max(horizon + 2, nd_ + 2), opt.sum_tol);
  }

  std::size_t cells() const { return width_.size(); }
  std::size_t deep_level() const { return nd_; }
  const ExpSum& exp_sum() const { return sum_; }
  const std::vector<coord>& boundaries() const { return b_; }

  SurvivalCurve survival(const std::vector<std::size_t>& t_grid) const {
    const std::size_t K = cells(), R = nd_ + 1;
    const std::size_t t_max = t_grid.empty() ? 0 : *std::max_element(t_grid.begin(), t_grid.end());
    if (t_max > horizon_) throw Error(ErrorCode::ConfigInvalid, "t grid exceeds the operator horizon", static_cast<std::int64_t>(t_max));
    std::vector<std::vector<long double>> direct(R, std::vector<long double>(K, 0)), dd(R, std::vector<long double>(K + 1, 0));
    std::vector<long double> slot_total(R, 0), c_ring(R, 0), M(K);
    const std::size_t E = sum_.W.size();
    std::vector<long double> z(E, 0), rho_nd(E), w_arr(E), w_pend(E);
    for (std::size_t k = 0; k < E; ++k) {
      rho_nd[k] = std::pow(sum_.rho[k], static_cast<long double>(nd_));
      w_arr[k] = sum_.W[k] * (1 - sum_.rho[k]);
      w_pend[k] = sum_.W[k] * sum_.rho[k];
    }
    std::vector<long double> c_hist;  // custom tails only
    const bool custom = spec_.cls == TailSpec::Class::Custom;
    const long double t_nd = spec_.t(nd_);

    std::vector<long double> out(t_grid.size(), 0);
    std::vector<std::vector<std::size_t>> want(t_max + 1);
    for (std::size_t i = 0; i < t_grid.size(); ++i) want[t_grid[i]].push_back(i);

    for (std::size_t i = 0; i < K; ++i) M[i] = width_[i] / z_norm_;
    for (std::size_t T = 0; T <= t_max; ++T) {
      const std::size_t r = T % R;
      if (T > 0) {
        long double uni = spec_.t(T + 1) / z_norm_;
        if (custom) {
          for (std::size_t s = 0; s + nd_ <= T; ++s) uni += c_hist[s] * spec_.a(T - s);
        } else {
          for (std::size_t k = 0; k < E; ++k) uni += w_arr[k] * z[k];
        }
        long double run = 0;
        for (std::size_t j = 0; j < K; ++j) {
          run += dd[r][j];
          M[j] = direct[r][j] + (run + uni) * width_[j];
          direct[r][j] = 0;
          dd[r][j] = 0;
        }
        dd[r][K] = 0;
        slot_total[r] = 0;
        for (std::size_t j = hole_first_; j < hole_last_; ++j) M[j] = 0;
      }
      if (!want[T].empty()) {
        long double p = 0;
        for (auto m : M) p += m;
        for (std::size_t q = 0; q < R; ++q) p += slot_total[q];
        p += sums_->from(T + 2) / z_norm_;
        for (std::size_t s = T >= nd_ ? T - nd_ + 1 : 0; s < T; ++s) p += c_ring[s % R] * t_nd;
        if (custom) {
          for (std::size_t s = 0; s + nd_ <= T; ++s) p += c_hist[s] * spec_.t(T - s + 1);
        } else {
          for (std::size_t k = 0; k < E; ++k) p += w_pend[k] * z[k];
        }
        for (auto i : want[T]) out[i] = std::log(p);
      }
      if (T == t_max) break;
      // leave A_1
      const long double c = M[K - 1] / width_[K - 1];
      c_ring[r] = c;
      if (custom) c_hist.push_back(c);
      for (const Instr& in : instr_) {
        const long double m = M[in.cell];
        if (m == 0) continue;
        const std::size_t q = (T + in.delay) % R;
        direct[q][in.ja] += m * in.fa;
        direct[q][in.jb] += m * in.fb;
        dd[q][in.ja + 1] += m * in.fd;
        dd[q][in.jb] -= m * in.fd;
        slot_total[q] += m * in.total;
      }
      if (!custom && T + 1 >= nd_) {
        const long double cin = c_ring[(T + 1 - nd_) % R];
        for (std::size_t k = 0; k < E; ++k) z[k] = sum_.rho[k] * z[k] + cin * rho_nd[k];
      } else if (!custom) {
        for (std::size_t k = 0; k < E; ++k) z[k] *= sum_.rho[k];
      }
    }
    SurvivalCurve cv;
    cv.method = "operator";
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
      cv.t.push_back(t_grid[i]);
      cv.log_p.push_back(out[i]);
      const double pv = static_cast<double>(std::exp(out[i]));
      cv.p_hat.push_back(pv);
      cv.ci_lo.push_back(pv);
      cv.ci_hi.push_back(pv);
    }
    return cv;
  }

 private:
  struct Instr {
    std::size_t cell, delay, ja, jb;
    long double fa, fb, fd, total;
  };

  std::size_t locate(coord u) const {
    auto it = std::upper_bound(b_.begin(), b_.end(), u);
    std::size_t j = static_cast<std::size_t>(it - b_.begin());
    return std::min(j == 0 ? 0 : j - 1, width_.size() - 1);
  }

  // Uniform density d (per unit u') on [lo, hi), per unit source mass.
  void add_instruction(std::size_t cell, std::size_t delay, coord lo, coord hi, coord d) {
    Instr in{cell, delay, locate(lo), 0, 0, 0, 0, d * (hi - lo)};
    in.jb = hi >= 1 ? width_.size() - 1 : locate(hi);
    if (in.jb > in.ja && hi <= b_[in.jb]) --in.jb;
    if (in.ja == in.jb) {
      in.fa = d * (hi - lo);
      in.jb = in.ja;
      in.fb = 0;
      in.fd = 0;
    } else {
      in.fa = d * (b_[in.ja + 1] - lo);
      in.fb = d * (hi - b_[in.jb]);
      in.fd = d;
    }
    instr_.push_back(in);
  }

  TailSpec spec_;
  Interval hole_;
  std::size_t horizon_;
  std::vector<coord> b_, width_;
  std::size_t hole_first_ = 0, hole_last_ = 0, nd_ = 0;
  std::shared_ptr<FareyTailSums> sums_;
  long double z_norm_ = 1;
  std::vector<Instr> instr_;
  ExpSum sum_;
};

/// Survival engine over holes inside A_1 of the Farey map.
inline SurvivalEngine farey_operator_engine(const TailSpec& spec, FareyOperatorOptions opt = {}) {
  return {"operator", [spec, opt](Interval u, const std::vector<std::size_t>& ts) {
            const std::size_t t_max = ts.empty() ? 0 : *std::max_element(ts.begin(), ts.end());
            return FareyRenewalOperator(spec, u, t_max, opt).survival(ts);
          }};
}

}  // namespace odx
