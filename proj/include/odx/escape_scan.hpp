#pragma once

#include <functional>
#include <vector>

#include "odx/open_system.hpp"
#include "odx/spectral.hpp"
#include "odx/stats.hpp"

namespace odx {

struct EscapeRow {
  double r = 0;
  double mu_hole = 0;
  double lambda = 0;
  double neg_log_lambda = 0;
  double ratio = 0;  // -log lambda / mu(U)
  double rho = 0;
  std::size_t cells = 0;
};

struct EscapeScan {
  std::vector<EscapeRow> rows;
  double limit = 0;  // intercept of ratio against mu(U) over the three smallest holes
  LinearFit fit;
};

using PartitionRule = std::function<Partition(coord r, Interval hole)>;

/// -log(lambda_r) / mu(U_r) over a hole family, extrapolated to r -> 0.
inline EscapeScan escape_derivative_scan(const IntervalMap& map, const HoleFamily& holes, const PartitionRule& rule,
                                         PowerOptions opt = {}) {
  EscapeScan out;
  for (coord r : holes.radii) {
    const Interval u = holes.at(r);
    Partition part = rule(r, u);
    std::size_t inside = 0;
    for (std::size_t i = 0; i < part.size(); ++i) inside += overlap(part.cell(i), u) > 0;
    if (inside < 8) throw Error(ErrorCode::ConfigInvalid, "partition must place at least 8 cells inside the hole");
    auto op = std::make_shared<const UlamOperator>(build_ulam(map, part));
    std::function<coord(coord)> cdf;
    if (map.density)
      cdf = map.density->cdf;
    else
      cdf = density_cdf(part, invariant_density(*op));
    auto sd = power_leading(puncture(op, u), opt);
    EscapeRow row;
    row.r = static_cast<double>(r);
    row.mu_hole = static_cast<double>(cdf(u.hi) - cdf(u.lo));
    row.lambda = sd.lambda;
    row.neg_log_lambda = -std::log(sd.lambda);
    row.ratio = row.neg_log_lambda / row.mu_hole;
    row.rho = sd.rho;
    row.cells = part.size();
    out.rows.push_back(row);
  }
  std::vector<EscapeRow> sorted = out.rows;
  std::sort(sorted.begin(), sorted.end(), [](auto& a, auto& b) { return a.mu_hole < b.mu_hole; });
  const std::size_t k = std::min<std::size_t>(3, sorted.size());
  if (k >= 2) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < k; ++i) {
      x.push_back(sorted[i].mu_hole);
      y.push_back(sorted[i].ratio);
    }
    out.fit = linear_fit(x, y);
    out.limit = out.fit.intercept;
  } else if (k == 1) {
    out.limit = sorted[0].ratio;
  }
  return out;
}

}  // namespace odx
