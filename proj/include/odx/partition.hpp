#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "odx/error.hpp"
#include "odx/interval_set.hpp"

namespace odx {

/// Cell boundaries 0 = b_0 < ... < b_N = 1.
class Partition {
 public:
  Partition() = default;
  explicit Partition(std::vector<coord> b, std::string grading = "custom") : b_(std::move(b)), grading_(std::move(grading)) {
    check();
  }

  static Partition uniform(std::size_t n) {
    if (n == 0) throw Error(ErrorCode::ConfigInvalid, "partition needs at least one cell");
    std::vector<coord> b(n + 1);
    for (std::size_t i = 0; i <= n; ++i) b[i] = static_cast<coord>(i) / static_cast<coord>(n);
    b[n] = 1;
    return Partition(std::move(b), "uniform(" + std::to_string(n) + ")");
  }

  /// Uniform base grid refined geometrically toward each point: boundaries at
  /// p +- h ratio^k down to the floor width, plus p itself.
  static Partition graded(std::size_t n_base, const std::vector<coord>& points, coord ratio = 0.9L, coord floor = 1e-9L) {
    if (!(ratio > 0 && ratio < 1) || !(floor > 0)) throw Error(ErrorCode::ConfigInvalid, "graded partition needs ratio in (0,1) and floor > 0");
    Partition base = uniform(n_base);
    std::vector<coord> b = base.b_;
    const coord h = 1 / static_cast<coord>(n_base);
    for (coord p : points) {
      b.push_back(p);
      for (coord d = h * ratio; d >= floor; d *= ratio) {
        b.push_back(p - d);
        b.push_back(p + d);
      }
    }
    Partition out = build(std::move(b), floor / 4);
    out.grading_ = "graded(" + std::to_string(n_base) + ", ratio " + std::to_string(static_cast<double>(ratio)) + ")";
    return out;
  }

  /// Copy with extra boundaries (e.g. hole endpoints).
  Partition with_breakpoints(const std::vector<coord>& pts) const {
    std::vector<coord> b = b_;
    b.insert(b.end(), pts.begin(), pts.end());
    Partition out = build(std::move(b), 0);
    out.grading_ = grading_ + "+breakpoints";
    return out;
  }

  std::size_t size() const { return b_.empty() ? 0 : b_.size() - 1; }
  const std::vector<coord>& boundaries() const { return b_; }
  const std::string& grading() const { return grading_; }
  Interval cell(std::size_t i) const { return {b_[i], b_[i + 1]}; }
  coord width(std::size_t i) const { return b_[i + 1] - b_[i]; }
  coord max_width() const {
    coord w = 0;
    for (std::size_t i = 0; i + 1 < b_.size(); ++i) w = std::max(w, width(i));
    return w;
  }

  /// Cell index holding x (x = 1 maps to the last cell).
  std::size_t cell_of(coord x) const {
    auto it = std::upper_bound(b_.begin(), b_.end(), x);
    if (it == b_.begin()) return 0;
    std::size_t i = static_cast<std::size_t>(it - b_.begin()) - 1;
    return std::min(i, size() - 1);
  }

  bool operator==(const Partition& o) const { return b_ == o.b_; }

 private:
  static Partition build(std::vector<coord> b, coord min_gap) {
    for (auto& x : b) x = std::clamp<coord>(x, 0, 1);
    std::sort(b.begin(), b.end());
    std::vector<coord> out;
    for (coord x : b) {
      if (!out.empty() && x - out.back() <= min_gap) {
        if (x == 1) out.back() = 1;
        continue;
      }
      out.push_back(x);
    }
    if (out.front() != 0) out.insert(out.begin(), 0);
    if (out.back() != 1) out.push_back(1);
    return Partition(std::move(out));
  }

  void check() const {
    if (b_.size() < 2 || b_.front() != 0 || b_.back() != 1)
      throw Error(ErrorCode::ConfigInvalid, "partition must run from 0 to 1");
    for (std::size_t i = 1; i < b_.size(); ++i)
      if (!(b_[i] > b_[i - 1])) throw Error(ErrorCode::ConfigInvalid, "partition boundaries must increase", static_cast<std::int64_t>(i));
  }

  std::vector<coord> b_;
  std::string grading_ = "custom";
};

}  // namespace odx
