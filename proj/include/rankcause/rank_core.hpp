#pragma once

// Distance-rank kernel: pairwise squared distances in block-scaled spaces,
// k-nearest-neighbor selection, rank lookups, and the Information Imbalance.
//
// Arithmetic contract (relied on by exact-equality tests): the squared
// distance between points i and j is
//   sum_b (s_b * s_b) * acc_b,   acc_b = sum_c (p_b(j,c) - p_b(i,c))^2,
// with c in variable order and b in block order, accumulated left to right.
// Ties are broken by ascending point index everywhere.

#include "rankcause/error.hpp"
#include "rankcause/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rankcause {

using Index = Eigen::Index;

template <typename Scalar>
using PointMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using IndexMatrix = Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// out[j] = sum_c (points(j,c) - points(i,c))^2, variables in column order.
template <typename Scalar>
void block_squared_distances(const PointMatrix<Scalar>& points, Index i, std::span<Scalar> out) {
  const Index n = points.rows();
  std::fill(out.begin(), out.begin() + n, Scalar(0));
  for (Index c = 0; c < points.cols(); ++c) {
    const Scalar* col = points.col(c).data();
    const Scalar ref = col[i];
    for (Index j = 0; j < n; ++j) {
      const Scalar diff = col[j] - ref;
      out[j] += diff * diff;
    }
  }
}

template <typename Scalar>
struct ScaledBlock {
  PointMatrix<Scalar> points;  // N x d
  Scalar scale = Scalar(1);
};

template <typename Scalar>
class ScaledSpace {
 public:
  ScaledSpace() = default;

  template <typename Derived>
  ScaledSpace(const Eigen::MatrixBase<Derived>& points, Scalar scale = Scalar(1)) {
    add(points, scale);
  }

  template <typename Derived>
  ScaledSpace& add(const Eigen::MatrixBase<Derived>& points, Scalar scale = Scalar(1)) {
    if (!blocks_.empty() && points.rows() != size())
      throw ConfigError("scaled space blocks must share N (" + std::to_string(size()) + " vs " +
                        std::to_string(points.rows()) + ")");
    if (!(scale >= Scalar(0))) throw ConfigError("block scale must be nonnegative");
    blocks_.push_back({points.template cast<Scalar>(), scale});
    return *this;
  }

  Index size() const noexcept { return blocks_.empty() ? 0 : blocks_.front().points.rows(); }
  const std::vector<ScaledBlock<Scalar>>& blocks() const noexcept { return blocks_; }

  // Every block scale multiplied by c.
  ScaledSpace scaled(Scalar c) const {
    ScaledSpace out = *this;
    for (auto& b : out.blocks_) b.scale *= c;
    return out;
  }

  void validate() const {
    if (size() < 2) throw ConfigError("scaled space needs N >= 2 points");
    const bool any = std::any_of(blocks_.begin(), blocks_.end(), [](const auto& b) { return b.scale > Scalar(0); });
    if (!any) throw ConfigError("degenerate scaled space: every block scale is zero");
  }

  Scalar squared_distance(Index i, Index j) const {
    Scalar total(0);
    bool first = true;
    for (const auto& b : blocks_) {
      Scalar acc(0);
      for (Index c = 0; c < b.points.cols(); ++c) {
        const Scalar diff = b.points(j, c) - b.points(i, c);
        acc += diff * diff;
      }
      const Scalar term = (b.scale * b.scale) * acc;
      total = first ? term : total + term;
      first = false;
    }
    return total;
  }

  // out[j] = squared_distance(i, j) for every j (out[i] = 0). `scratch` must
  // have size N; it holds one block's unscaled accumulator.
  void squared_distances(Index i, std::span<Scalar> out, std::span<Scalar> scratch) const {
    const Index n = size();
    bool first = true;
    for (const auto& b : blocks_) {
      block_squared_distances(b.points, i, scratch);
      const Scalar s2 = b.scale * b.scale;
      if (first) {
        for (Index j = 0; j < n; ++j) out[j] = s2 * scratch[j];
      } else {
        for (Index j = 0; j < n; ++j) out[j] = out[j] + s2 * scratch[j];
      }
      first = false;
    }
  }

 private:
  std::vector<ScaledBlock<Scalar>> blocks_;
};

// Strict weak order on point indices by (distance, index).
template <typename Scalar>
struct DistanceIndexLess {
  const Scalar* d;
  bool operator()(Index a, Index b) const { return d[a] < d[b] || (d[a] == d[b] && a < b); }
};

// The k smallest entries of `dist` (self excluded), ascending by
// (distance, index). O(N log k).
template <typename Scalar>
void select_k_nearest(std::span<const Scalar> dist, Index self, Index k, std::span<Index> out) {
  const auto n = static_cast<Index>(dist.size());
  const DistanceIndexLess<Scalar> less{dist.data()};
  if (k == 1) {
    Index best = self == 0 ? 1 : 0;
    for (Index j = best + 1; j < n; ++j)
      if (j != self && dist[j] < dist[best]) best = j;
    out[0] = best;
    return;
  }
  Index filled = 0;
  Index* heap = out.data();
  for (Index j = 0; j < n; ++j) {
    if (j == self) continue;
    if (filled < k) {
      heap[filled++] = j;
      std::push_heap(heap, heap + filled, less);
    } else if (less(j, heap[0])) {
      std::pop_heap(heap, heap + k, less);
      heap[k - 1] = j;
      std::push_heap(heap, heap + k, less);
    }
  }
  std::sort_heap(heap, heap + k, less);
}

// ranks[j] = 1-based position of j in the (distance, index) order of row
// `self`; ranks[self] = 0. `order` is scratch of size N.
template <typename Scalar>
void rank_row(std::span<const Scalar> dist, Index self, std::span<Index> ranks, std::vector<Index>& order) {
  const auto n = static_cast<Index>(dist.size());
  order.resize(static_cast<std::size_t>(n - 1));
  Index m = 0;
  for (Index j = 0; j < n; ++j)
    if (j != self) order[static_cast<std::size_t>(m++)] = j;
  std::sort(order.begin(), order.end(), DistanceIndexLess<Scalar>{dist.data()});
  ranks[self] = 0;
  for (Index r = 0; r < n - 1; ++r) ranks[order[static_cast<std::size_t>(r)]] = r + 1;
}

// Per-reference-point sorted squared distances with co-sorted indices,
// self excluded. Materializes N x (N-1) entries; the streaming overload of
// information_imbalance avoids this.
template <typename Scalar>
class SortedDistanceRows {
 public:
  using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  SortedDistanceRows(ScaledSpace<Scalar> space, RowMatrix dist, IndexMatrix index)
      : space_(std::move(space)), dist_(std::move(dist)), index_(std::move(index)) {}

  Index size() const noexcept { return space_.size(); }
  const ScaledSpace<Scalar>& space() const noexcept { return space_; }
  auto distances(Index i) const { return dist_.row(i); }
  auto indices(Index i) const { return index_.row(i); }

  // 1-based rank of j among i's neighbors; binary search on (d_ij, j).
  Index rank_of(Index i, Index j) const {
    if (i == j) throw ConfigError("rank_of requires i != j");
    const Scalar dij = space_.squared_distance(i, j);
    const Index m = size() - 1;
    Index lo = 0, hi = m;
    while (lo < hi) {
      const Index mid = lo + (hi - lo) / 2;
      const Scalar dm = dist_(i, mid);
      const Index im = index_(i, mid);
      if (dm < dij || (dm == dij && im < j)) lo = mid + 1;
      else hi = mid;
    }
    if (lo >= m || index_(i, lo) != j) throw InternalError("rank lookup failed: distance recomputation mismatch");
    return lo + 1;
  }

 private:
  ScaledSpace<Scalar> space_;
  RowMatrix dist_;  // squared distances, row i ascending
  IndexMatrix index_;
};

template <typename Scalar>
SortedDistanceRows<Scalar> sort_rows(const ScaledSpace<Scalar>& space) {
  space.validate();
  const Index n = space.size();
  typename SortedDistanceRows<Scalar>::RowMatrix dist(n, n - 1);
  IndexMatrix index(n, n - 1);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t begin, std::size_t end, std::size_t) {
    std::vector<Scalar> row(static_cast<std::size_t>(n)), scratch(static_cast<std::size_t>(n));
    std::vector<Index> order;
    for (auto i = static_cast<Index>(begin); i < static_cast<Index>(end); ++i) {
      space.squared_distances(i, row, scratch);
      order.clear();
      for (Index j = 0; j < n; ++j)
        if (j != i) order.push_back(j);
      std::sort(order.begin(), order.end(), DistanceIndexLess<Scalar>{row.data()});
      for (Index m = 0; m < n - 1; ++m) {
        index(i, m) = order[static_cast<std::size_t>(m)];
        dist(i, m) = row[static_cast<std::size_t>(order[static_cast<std::size_t>(m)])];
      }
    }
  });
  return SortedDistanceRows<Scalar>(space, std::move(dist), std::move(index));
}

// Row i holds the k nearest neighbors of i by (distance, index).
struct NeighborTable {
  IndexMatrix neighbors;  // N x k

  Index size() const noexcept { return neighbors.rows(); }
  Index k() const noexcept { return neighbors.cols(); }
};

inline void check_neighbor_count(Index k, Index n) {
  if (k < 1 || k > n - 1)
    throw ConfigError("neighbor count k=" + std::to_string(k) + " outside [1, N-1] for N=" + std::to_string(n));
}

template <typename Scalar>
NeighborTable k_nearest(const ScaledSpace<Scalar>& space, Index k) {
  space.validate();
  const Index n = space.size();
  check_neighbor_count(k, n);
  NeighborTable table{IndexMatrix(n, k)};
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t begin, std::size_t end, std::size_t) {
    std::vector<Scalar> row(static_cast<std::size_t>(n)), scratch(static_cast<std::size_t>(n));
    std::vector<Index> picked(static_cast<std::size_t>(k));
    for (auto i = static_cast<Index>(begin); i < static_cast<Index>(end); ++i) {
      space.squared_distances(i, row, scratch);
      select_k_nearest<Scalar>(row, i, k, picked);
      for (Index m = 0; m < k; ++m) table.neighbors(i, m) = picked[static_cast<std::size_t>(m)];
    }
  });
  return table;
}

template <typename Scalar>
Index rank_of(const SortedDistanceRows<Scalar>& rows, Index i, Index j) {
  return rows.rank_of(i, j);
}

// Delta = 2 S / (N^2 k) for an integer rank sum S. Both operands are exact
// integers in double, so the result is the correctly rounded rational.
inline double imbalance_from_rank_sum(std::uint64_t rank_sum, Index n, Index k) {
  return static_cast<double>(2 * rank_sum) /
         (static_cast<double>(n) * static_cast<double>(n) * static_cast<double>(k));
}

// Information Imbalance Delta(d_A -> d_B) against precomputed B rows.
template <typename Scalar>
double information_imbalance(const ScaledSpace<Scalar>& space_a, const SortedDistanceRows<Scalar>& rows_b, Index k) {
  space_a.validate();
  const Index n = space_a.size();
  if (rows_b.size() != n) throw ConfigError("information imbalance: spaces have different N");
  check_neighbor_count(k, n);
  std::vector<std::uint64_t> partial(planned_workers(static_cast<std::size_t>(n)), 0);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t begin, std::size_t end, std::size_t w) {
    std::vector<Scalar> row(static_cast<std::size_t>(n)), scratch(static_cast<std::size_t>(n));
    std::vector<Index> picked(static_cast<std::size_t>(k));
    std::uint64_t sum = 0;
    for (auto i = static_cast<Index>(begin); i < static_cast<Index>(end); ++i) {
      space_a.squared_distances(i, row, scratch);
      select_k_nearest<Scalar>(row, i, k, picked);
      for (Index j : picked) sum += static_cast<std::uint64_t>(rows_b.rank_of(i, j));
    }
    partial[w] = sum;
  });
  return imbalance_from_rank_sum(std::accumulate(partial.begin(), partial.end(), std::uint64_t{0}), n, k);
}

// Streaming variant: B ranks are computed row by row, O(N) memory per worker.
template <typename Scalar>
double information_imbalance(const ScaledSpace<Scalar>& space_a, const ScaledSpace<Scalar>& space_b, Index k) {
  space_a.validate();
  space_b.validate();
  const Index n = space_a.size();
  if (space_b.size() != n) throw ConfigError("information imbalance: spaces have different N");
  check_neighbor_count(k, n);
  std::vector<std::uint64_t> partial(planned_workers(static_cast<std::size_t>(n)), 0);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t begin, std::size_t end, std::size_t w) {
    const auto un = static_cast<std::size_t>(n);
    std::vector<Scalar> row(un), scratch(un);
    std::vector<Index> picked(static_cast<std::size_t>(k)), ranks(un), order;
    std::uint64_t sum = 0;
    for (auto i = static_cast<Index>(begin); i < static_cast<Index>(end); ++i) {
      space_b.squared_distances(i, row, scratch);
      rank_row<Scalar>(row, i, ranks, order);
      space_a.squared_distances(i, row, scratch);
      select_k_nearest<Scalar>(row, i, k, picked);
      for (Index j : picked) sum += static_cast<std::uint64_t>(ranks[static_cast<std::size_t>(j)]);
    }
    partial[w] = sum;
  });
  return imbalance_from_rank_sum(std::accumulate(partial.begin(), partial.end(), std::uint64_t{0}), n, k);
}

}  // namespace rankcause
