#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "odx/interval_map.hpp"
#include "odx/partition.hpp"
#include "odx/random.hpp"

namespace odx {

using real = long double;

/// Compressed sparse column matrix.
struct SparseMatrix {
  std::size_t rows = 0, cols = 0;
  std::vector<std::size_t> col_ptr;
  std::vector<std::uint32_t> row_idx;
  std::vector<real> values;

  std::size_t nnz() const { return values.size(); }
  real column_sum(std::size_t j) const {
    real s = 0;
    for (std::size_t k = col_ptr[j]; k < col_ptr[j + 1]; ++k) s += values[k];
    return s;
  }
  real at(std::size_t i, std::size_t j) const {
    for (std::size_t k = col_ptr[j]; k < col_ptr[j + 1]; ++k)
      if (row_idx[k] == i) return values[k];
    return 0;
  }
  /// y = A diag(w) x (w empty means identity).
  void multiply(const std::vector<real>& x, std::vector<real>& y, const std::vector<real>* w = nullptr) const {
    y.assign(rows, 0);
    for (std::size_t j = 0; j < cols; ++j) {
      real xj = w ? x[j] * (*w)[j] : x[j];
      if (xj == 0) continue;
      for (std::size_t k = col_ptr[j]; k < col_ptr[j + 1]; ++k) y[row_idx[k]] += values[k] * xj;
    }
  }
  /// y = diag(w) A^T x.
  void multiply_transpose(const std::vector<real>& x, std::vector<real>& y, const std::vector<real>* w = nullptr) const {
    y.assign(cols, 0);
    for (std::size_t j = 0; j < cols; ++j) {
      real s = 0;
      for (std::size_t k = col_ptr[j]; k < col_ptr[j + 1]; ++k) s += values[k] * x[row_idx[k]];
      y[j] = w ? s * (*w)[j] : s;
    }
  }
};

/// Column-stochastic discretisation M[i][j] = m(I_j and f^{-1} I_i) / m(I_j); acts on cell masses.
struct UlamOperator {
  Partition partition;
  SparseMatrix matrix;
  std::string method;  // exact-inverse | bisection
  coord truncation_mass = 0;
  std::string map_name;
};

namespace detail {

struct ColumnBuilder {
  const IntervalMap& map;
  const Partition& part;
  std::vector<std::pair<std::uint32_t, real>> entries;

  void add_piece(const Branch& br, Interval piece, coord h) {
    if (piece.empty()) return;
    Interval img = br.image_of(piece);
    img.lo = std::max<coord>(img.lo, 0);
    img.hi = std::min<coord>(img.hi, 1);
    if (img.empty()) return;
    std::size_t first = part.cell_of(img.lo), last = part.cell_of(img.hi);
    if (last > first && part.boundaries()[last] >= img.hi) --last;
    for (std::size_t i = first; i <= last; ++i) {
      Interval q = intersect(part.cell(i), img);
      if (q.empty()) continue;
      coord len;
      if (q.lo == img.lo && q.hi == img.hi)
        len = piece.length();
      else {
        coord a = q.lo == img.lo ? (br.increasing ? piece.lo : piece.hi) : br.invert(q.lo);
        coord b = q.hi == img.hi ? (br.increasing ? piece.hi : piece.lo) : br.invert(q.hi);
        len = std::fabs(b - a);
      }
      if (len > 0) entries.emplace_back(static_cast<std::uint32_t>(i), len / h);
    }
  }

  void build(std::size_t j) {
    entries.clear();
    const Interval c = part.cell(j);
    const coord h = c.length();
    if (map.countable() && map.range_preimage) {
      const std::size_t depth_cap = std::numeric_limits<std::size_t>::max() / 4;
      const std::size_t i_hi = map.index_of(c.hi);
      const bool to_zero = !(c.lo > 0);
      const std::size_t i_lo = to_zero ? depth_cap : map.index_of(c.lo);
      std::set<std::size_t> explicit_idx;
      for (std::size_t d = 0; d < 3; ++d) {
        if (i_hi + d >= 1) explicit_idx.insert(i_hi + d - 1);
        if (!to_zero && i_lo + d >= 1) explicit_idx.insert(i_lo + d - 1);
      }
      for (std::size_t i : explicit_idx) {
        Branch br = map.branch(i);
        add_piece(br, intersect(br.domain, c), h);
      }
      const std::size_t first_full = i_hi + 2;
      const bool has_run = to_zero || (i_lo >= 2 && first_full <= i_lo - 2);
      if (has_run) {
        std::optional<std::size_t> last_full;
        if (!to_zero) last_full = i_lo - 2;
        for (std::size_t i = 0; i < part.size(); ++i) {
          Interval t = part.cell(i);
          real v = map.range_preimage(first_full, last_full, t.lo, t.hi);
          if (v > 0) entries.emplace_back(static_cast<std::uint32_t>(i), v / h);
        }
      }
    } else {
      for (std::size_t b : map.branches_overlapping(c)) {
        Branch br = map.branch(b);
        add_piece(br, intersect(br.domain, c), h);
      }
    }
    std::sort(entries.begin(), entries.end(), [](auto& a, auto& b) { return a.first < b.first; });
    std::vector<std::pair<std::uint32_t, real>> merged;
    for (auto& e : entries) {
      if (!merged.empty() && merged.back().first == e.first)
        merged.back().second += e.second;
      else
        merged.push_back(e);
    }
    entries.swap(merged);
  }
};

}  // namespace detail

/// Ulam matrix of the geometric-potential transfer operator on the given partition.
inline UlamOperator build_ulam(const IntervalMap& map, const Partition& part, unsigned workers = thread_count()) {
  UlamOperator op;
  op.partition = part;
  op.map_name = map.name;
  op.truncation_mass = map.range_preimage ? 0 : map.truncation_mass;
  bool all_exact = true;
  for (std::size_t b = 0; b < std::min<std::size_t>(map.enumerable_branches(), 64); ++b)
    all_exact &= map.branch(b).has_exact_inverse();
  op.method = all_exact ? "exact-inverse" : "bisection";

  const std::size_t n = part.size();
  std::vector<std::vector<std::pair<std::uint32_t, real>>> cols(n);
  parallel_chunks(n, workers, [&](unsigned, std::size_t b, std::size_t e) {
    detail::ColumnBuilder cb{map, part, {}};
    for (std::size_t j = b; j < e; ++j) {
      cb.build(j);
      cols[j] = cb.entries;
    }
  });
  SparseMatrix& m = op.matrix;
  m.rows = m.cols = n;
  m.col_ptr.assign(n + 1, 0);
  for (std::size_t j = 0; j < n; ++j) m.col_ptr[j + 1] = m.col_ptr[j] + cols[j].size();
  m.row_idx.reserve(m.col_ptr[n]);
  m.values.reserve(m.col_ptr[n]);
  for (auto& c : cols)
    for (auto& [i, v] : c) {
      m.row_idx.push_back(i);
      m.values.push_back(v);
    }
  return op;
}

/// L(psi 1_{outside U}) in discrete form: column j scaled by the fraction w_j of I_j outside the hole.
struct PuncturedOperator {
  std::shared_ptr<const UlamOperator> base;
  IntervalSet hole;
  std::vector<real> w;

  std::size_t size() const { return w.size(); }
  void apply(const std::vector<real>& x, std::vector<real>& y) const { base->matrix.multiply(x, y, &w); }
  void apply_transpose(const std::vector<real>& x, std::vector<real>& y) const { base->matrix.multiply_transpose(x, y, &w); }
  real entry(std::size_t i, std::size_t j) const { return base->matrix.at(i, j) * w[j]; }
};

inline PuncturedOperator puncture(std::shared_ptr<const UlamOperator> op, const IntervalSet& hole) {
  PuncturedOperator p;
  p.base = op;
  p.hole = hole;
  const Partition& part = op->partition;
  p.w.assign(part.size(), 1);
  for (const Interval& u : hole.parts()) {
    if (u.empty()) continue;
    std::size_t a = part.cell_of(u.lo), b = part.cell_of(u.hi);
    for (std::size_t j = a; j <= b && j < part.size(); ++j) p.w[j] -= overlap(part.cell(j), u) / part.width(j);
  }
  for (auto& x : p.w) x = std::clamp<real>(x, 0, 1);
  return p;
}

inline PuncturedOperator puncture(std::shared_ptr<const UlamOperator> op, Interval hole) {
  return puncture(std::move(op), IntervalSet::single(hole, "U"));
}

/// L1 size of L - L_U applied to the unit constant density: sum_j |I_j| (1 - w_j) colsum_j.
inline real operator_l1_distance(const UlamOperator& op, const PuncturedOperator& p) {
  if (!(p.base->partition == op.partition)) throw Error(ErrorCode::PartitionMismatch, "operators live on different partitions");
  real d = 0;
  for (std::size_t j = 0; j < op.partition.size(); ++j)
    d += op.partition.width(j) * (1 - p.w[j]) * op.matrix.column_sum(j);
  return d;
}

/// Coordinate-triplet CSV (row,col,value).
inline void write_matrix_csv(const SparseMatrix& m, std::ostream& os) {
  os << "row,col,value\n";
  os.precision(17);
  for (std::size_t j = 0; j < m.cols; ++j)
    for (std::size_t k = m.col_ptr[j]; k < m.col_ptr[j + 1]; ++k)
      os << m.row_idx[k] << ',' << j << ',' << static_cast<double>(m.values[k]) << '\n';
}

/// Cell masses of a measure given by its cdf.
inline std::vector<real> cell_masses(const Partition& part, const std::function<coord(coord)>& cdf) {
  std::vector<real> v(part.size());
  for (std::size_t i = 0; i < part.size(); ++i) v[i] = cdf(part.boundaries()[i + 1]) - cdf(part.boundaries()[i]);
  return v;
}

}  // namespace odx
