#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "odx/interval_map.hpp"
#include "odx/random.hpp"
#include "odx/spectral.hpp"

namespace odx {

struct SamplerConfig {
  enum class Source { LongOrbit, UlamDensity, ExactDensity };

  std::uint64_t seed = 1;
  std::size_t burn_in = 1000;
  std::size_t thinning = 1;
  Source source = Source::ExactDensity;
  std::size_t ulam_cells = 4096;  // UlamDensity: uniform grid size when no partition is supplied
  std::optional<Partition> partition;

  void validate() const {
    if (thinning < 1) throw Error(ErrorCode::ConfigInvalid, "thinning must be >= 1");
    if (source == Source::LongOrbit && burn_in < 1000) throw Error(ErrorCode::ConfigInvalid, "long-orbit sampling needs burn_in >= 1000");
  }
};

/// Draws points from the invariant measure by inverting a cdf.
class DensitySampler {
 public:
  /// Piecewise-constant density on a partition.
  DensitySampler(const Partition& part, const std::vector<real>& g) : b_(part.boundaries()), cum_(part.size() + 1, 0) {
    for (std::size_t i = 0; i < part.size(); ++i) cum_[i + 1] = cum_[i] + static_cast<double>(g[i] * part.width(i));
    for (auto& c : cum_) c /= cum_.back();
  }
  /// Closed-form cdf inverted by bisection (identity cdf short-circuits).
  explicit DensitySampler(std::function<coord(coord)> cdf, bool lebesgue, std::function<coord(coord)> quantile = {})
      : cdf_(std::move(cdf)), quantile_(std::move(quantile)), lebesgue_(lebesgue) {}

  double draw(Rng& rng) const {
    const double u = rng.uniform();
    if (lebesgue_) return u;
    if (quantile_) return static_cast<double>(quantile_(u));
    if (cdf_) {
      coord lo = 0, hi = 1;
      for (int it = 0; it < 64; ++it) {
        coord mid = (lo + hi) / 2;
        (cdf_(mid) < u ? lo : hi) = mid;
      }
      return static_cast<double>((lo + hi) / 2);
    }
    auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
    std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - cum_.begin()), cum_.size() - 1) - 1;
    const double span = cum_[i + 1] - cum_[i];
    const double f = span > 0 ? (u - cum_[i]) / span : rng.uniform();
    return static_cast<double>(b_[i] + f * (b_[i + 1] - b_[i]));
  }

 private:
  std::vector<coord> b_;
  std::vector<double> cum_;
  std::function<coord(coord)> cdf_, quantile_;
  bool lebesgue_ = false;
};

/// One double-precision step with the map's bit-refresh hook; NaN when the orbit meets D.
inline double mc_step(const IntervalMap& map, double x, Rng& rng) {
  double y = map.step(x);
  if (map.refresh && std::isfinite(y)) y = map.refresh(y, rng);
  return y;
}

/// Builds the sampler a configuration asks for.
inline DensitySampler make_sampler(const IntervalMap& map, const SamplerConfig& cfg) {
  if (cfg.source == SamplerConfig::Source::ExactDensity && map.density)
    return DensitySampler(map.density->cdf, map.lebesgue_invariant, map.density->quantile);
  Partition part = cfg.partition ? *cfg.partition : Partition::uniform(cfg.ulam_cells);
  UlamOperator op = build_ulam(map, part);
  return DensitySampler(part, invariant_density(op));
}

/// n points distributed by the invariant measure. Sample i depends only on (seed, i).
inline std::vector<double> stationary_sample(const IntervalMap& map, const SamplerConfig& cfg, std::size_t n,
                                             std::size_t* resampled = nullptr) {
  cfg.validate();
  std::vector<double> out(n);
  std::size_t redo = 0;
  if (cfg.source == SamplerConfig::Source::LongOrbit) {
    Rng rng(cfg.seed, 0x0b17);
    double x = rng.uniform();
    auto advance = [&](std::size_t steps) {
      for (std::size_t k = 0; k < steps; ++k) {
        double y = mc_step(map, x, rng);
        while (!std::isfinite(y)) {
          ++redo;
          x = rng.uniform();
          y = mc_step(map, x, rng);
        }
        x = y;
      }
    };
    advance(cfg.burn_in);
    for (std::size_t i = 0; i < n; ++i) {
      advance(cfg.thinning);
      out[i] = x;
    }
  } else {
    DensitySampler sampler = make_sampler(map, cfg);
    const std::size_t steps = cfg.source == SamplerConfig::Source::UlamDensity ? cfg.thinning : 0;
    for (std::size_t i = 0; i < n; ++i) {
      Rng rng(cfg.seed, i);
      for (;;) {
        double x = sampler.draw(rng);
        bool ok = true;
        for (std::size_t k = 0; k < steps && ok; ++k) {
          x = mc_step(map, x, rng);
          ok = std::isfinite(x);
        }
        if (ok) {
          out[i] = x;
          break;
        }
        ++redo;
      }
    }
  }
  if (resampled) *resampled = redo;
  return out;
}

}  // namespace odx
