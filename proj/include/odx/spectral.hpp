#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <numeric>
#include <vector>

#include "odx/ulam.hpp"

namespace odx {

struct SpectralData {
  double lambda = 0;
  std::vector<real> g;     // leading eigenvector as cell densities, integral 1
  std::vector<real> left;  // left eigenvector, normalised so <left, mass(g)> = 1
  double rho = 0;          // modulus of the second eigenvalue (deflated estimate)
  double residual = 0;     // |M g - lambda g|_1 in mass form
  std::size_t iterations = 0;
};

struct PowerOptions {
  double tol = 1e-13;
  std::size_t max_iter = 200000;
  std::size_t rho_iters = 400;
  bool want_rho = true;
};

namespace detail {

inline real l1(const std::vector<real>& v) {
  real s = 0;
  for (real x : v) s += std::fabs(x);
  return s;
}

// Normalised fixed vector of v -> A v by L1-normalised power iteration.
template <class Apply>
inline std::pair<std::vector<real>, std::size_t> power_fixed(std::size_t n, const std::vector<real>& start, Apply&& apply,
                                                            double tol, std::size_t max_iter, real& lambda) {
  std::vector<real> v = start, y;
  real s = l1(v);
  for (auto& x : v) x /= s;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    apply(v, y);
    lambda = l1(y);
    if (!(lambda > 0)) throw Error(ErrorCode::Degenerate, "operator annihilates the iterate", static_cast<std::int64_t>(it));
    real diff = 0;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] /= lambda;
      diff += std::fabs(y[i] - v[i]);
    }
    v.swap(y);
    if (diff < tol) return {v, it};
  }
  throw Error(ErrorCode::NoConvergence, "power iteration did not converge", static_cast<std::int64_t>(max_iter));
}

}  // namespace detail

/// Leading eigenpair of the punctured operator with a deflated second-eigenvalue estimate.
inline SpectralData power_leading(const PuncturedOperator& p, PowerOptions opt = {}) {
  const std::size_t n = p.size();
  const Partition& part = p.base->partition;
  SpectralData out;
  std::vector<real> start(n);
  for (std::size_t i = 0; i < n; ++i) start[i] = part.width(i);
  real lam = 0;
  auto [v, it] = detail::power_fixed(
      n, start, [&](const std::vector<real>& x, std::vector<real>& y) { p.apply(x, y); }, opt.tol, opt.max_iter, lam);
  out.lambda = static_cast<double>(lam);
  out.iterations = it;
  std::vector<real> mv;
  p.apply(v, mv);
  real res = 0;
  for (std::size_t i = 0; i < n; ++i) res += std::fabs(mv[i] - lam * v[i]);
  out.residual = static_cast<double>(res);
  out.g.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.g[i] = v[i] / part.width(i);

  if (opt.want_rho) {
    std::vector<real> ones(n, 1);
    real laml = 0;
    auto [l, itl] = detail::power_fixed(
        n, ones, [&](const std::vector<real>& x, std::vector<real>& y) { p.apply_transpose(x, y); }, opt.tol, opt.max_iter, laml);
    real dot = 0;
    for (std::size_t i = 0; i < n; ++i) dot += l[i] * v[i];
    for (auto& x : l) x /= dot;
    out.left = l;
    // Iterate on the complement of the leading direction: u <- M u - <l, M u> v.
    Rng rng(0x5eed, n);
    std::vector<real> u(n), y;
    for (auto& x : u) x = rng.uniform_ld() - 0.5L;
    auto project = [&](std::vector<real>& w) {
      real c = 0;
      for (std::size_t i = 0; i < n; ++i) c += l[i] * w[i];
      for (std::size_t i = 0; i < n; ++i) w[i] -= c * v[i];
    };
    project(u);
    real s = detail::l1(u);
    for (auto& x : u) x /= s;
    const std::size_t warm = opt.rho_iters / 2;
    real log_growth = 0;
    for (std::size_t k = 0; k < opt.rho_iters; ++k) {
      p.apply(u, y);
      project(y);
      real ny = detail::l1(y);
      if (!(ny > 0)) {
        log_growth = -std::numeric_limits<real>::infinity();
        break;
      }
      if (k >= warm) log_growth += std::log(ny);
      for (std::size_t i = 0; i < n; ++i) u[i] = y[i] / ny;
    }
    out.rho = std::isfinite(static_cast<double>(log_growth))
                  ? static_cast<double>(std::exp(log_growth / static_cast<real>(opt.rho_iters - warm)))
                  : 0.0;
  }
  return out;
}

/// Unpunctured leading eigenpair.
inline SpectralData power_leading(std::shared_ptr<const UlamOperator> op, PowerOptions opt = {}) {
  return power_leading(puncture(std::move(op), IntervalSet{}), opt);
}

/// Invariant density of M by a sparse LU solve of (M - I) v = 0 with sum(v) = 1.
inline std::vector<real> invariant_density(const UlamOperator& op) {
  const std::size_t n = op.partition.size();
  const SparseMatrix& m = op.matrix;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(m.nnz() + 2 * n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = m.col_ptr[j]; k < m.col_ptr[j + 1]; ++k)
      if (m.row_idx[k] != n - 1) trip.emplace_back(m.row_idx[k], static_cast<int>(j), static_cast<double>(m.values[k]));
    if (j != n - 1) trip.emplace_back(static_cast<int>(j), static_cast<int>(j), -1.0);
    trip.emplace_back(static_cast<int>(n - 1), static_cast<int>(j), 1.0);
  }
  Eigen::SparseMatrix<double> a(static_cast<long>(n), static_cast<long>(n));
  a.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) throw Error(ErrorCode::NumericalFailure, "sparse LU factorisation failed");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<long>(n));
  rhs[static_cast<long>(n) - 1] = 1;
  Eigen::VectorXd v = lu.solve(rhs);
  std::vector<real> mass(n);
  for (std::size_t i = 0; i < n; ++i) mass[i] = std::max(0.0, v[static_cast<long>(i)]);
  // A few power steps polish the solve in extended precision.
  std::vector<real> y;
  for (int k = 0; k < 4; ++k) {
    m.multiply(mass, y);
    real s = detail::l1(y);
    for (std::size_t i = 0; i < n; ++i) mass[i] = y[i] / s;
  }
  std::vector<real> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = mass[i] / op.partition.width(i);
  return g;
}

/// Piecewise-linear cdf of a cell-density vector.
inline std::function<coord(coord)> density_cdf(const Partition& part, const std::vector<real>& g) {
  auto cum = std::make_shared<std::vector<coord>>(part.size() + 1, 0);
  for (std::size_t i = 0; i < part.size(); ++i) (*cum)[i + 1] = (*cum)[i] + g[i] * part.width(i);
  const coord total = cum->back();
  for (auto& c : *cum) c /= total;
  auto b = std::make_shared<std::vector<coord>>(part.boundaries());
  return [cum, b](coord x) -> coord {
    if (x <= 0) return 0;
    if (x >= 1) return 1;
    auto it = std::upper_bound(b->begin(), b->end(), x);
    std::size_t i = static_cast<std::size_t>(it - b->begin()) - 1;
    const coord f = (x - (*b)[i]) / ((*b)[i + 1] - (*b)[i]);
    return (*cum)[i] + f * ((*cum)[i + 1] - (*cum)[i]);
  };
}

/// Dense eigenvalues (moduli sorted descending) for validation on small grids.
inline std::vector<double> dense_eigen_moduli(const PuncturedOperator& p) {
  const std::size_t n = p.size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<long>(n), static_cast<long>(n));
  const SparseMatrix& m = p.base->matrix;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = m.col_ptr[j]; k < m.col_ptr[j + 1]; ++k)
      a(m.row_idx[k], static_cast<long>(j)) = static_cast<double>(m.values[k] * p.w[j]);
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  std::vector<double> mod;
  for (long i = 0; i < es.eigenvalues().size(); ++i) mod.push_back(std::abs(es.eigenvalues()[i]));
  std::sort(mod.rbegin(), mod.rend());
  return mod;
}

}  // namespace odx
