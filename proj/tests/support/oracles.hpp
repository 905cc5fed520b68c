#pragma once

// Brute-force reference implementations used by the unit and acceptance
// tests. They share only the distance arithmetic contract with the library
// (per-block squared sums in column order, scaled by s^2, blocks summed left
// to right); every ordering step is a plain full sort.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using Eigen::Index;
using Eigen::MatrixXd;

struct Block {
  const MatrixXd* points;
  double scale;
};

inline MatrixXd distance_matrix(const std::vector<Block>& blocks) {
  const Index n = blocks.front().points->rows();
  MatrixXd d = MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      double total = 0.0;
      bool first = true;
      for (const auto& b : blocks) {
        double acc = 0.0;
        for (Index c = 0; c < b.points->cols(); ++c) {
          const double diff = (*b.points)(j, c) - (*b.points)(i, c);
          acc += diff * diff;
        }
        const double term = (b.scale * b.scale) * acc;
        total = first ? term : total + term;
        first = false;
      }
      d(i, j) = total;
    }
  return d;
}

inline MatrixXd distance_matrix(const MatrixXd& points) { return distance_matrix({{&points, 1.0}}); }

// order[i] = all j != i sorted by (d(i,j), j).
inline std::vector<std::vector<Index>> sorted_neighbors(const MatrixXd& d) {
  const Index n = d.rows();
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    auto& row = out[static_cast<std::size_t>(i)];
    for (Index j = 0; j < n; ++j)
      if (j != i) row.push_back(j);
    std::stable_sort(row.begin(), row.end(), [&](Index a, Index b) { return d(i, a) < d(i, b); });
  }
  return out;
}

// rank[i][j], 1-based; rank[i][i] = 0.
inline std::vector<std::vector<Index>> rank_matrix(const MatrixXd& d) {
  const auto order = sorted_neighbors(d);
  const Index n = d.rows();
  std::vector<std::vector<Index>> rank(static_cast<std::size_t>(n), std::vector<Index>(static_cast<std::size_t>(n), 0));
  for (Index i = 0; i < n; ++i)
    for (std::size_t r = 0; r < order[static_cast<std::size_t>(i)].size(); ++r)
      rank[static_cast<std::size_t>(i)][static_cast<std::size_t>(order[static_cast<std::size_t>(i)][r])] =
          static_cast<Index>(r) + 1;
  return rank;
}

inline std::uint64_t rank_sum(const MatrixXd& da, const MatrixXd& db, Index k) {
  const auto na = sorted_neighbors(da);
  const auto rb = rank_matrix(db);
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < na.size(); ++i)
    for (Index m = 0; m < k; ++m) s += static_cast<std::uint64_t>(rb[i][static_cast<std::size_t>(na[i][static_cast<std::size_t>(m)])]);
  return s;
}

inline double information_imbalance(const MatrixXd& da, const MatrixXd& db, Index k) {
  const double n = static_cast<double>(da.rows());
  return static_cast<double>(2 * rank_sum(da, db, k)) / (n * n * static_cast<double>(k));
}

inline MatrixXd gaussian(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = g(rng);
  return m;
}

// Coarse integer-valued points: many exact distance ties.
inline MatrixXd lattice(Index rows, Index cols, int levels, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> u(0, levels - 1);
  MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

// Kendall tau-b by exhaustive pair enumeration.
inline double kendall_tau_b(const std::vector<double>& a, const std::vector<double>& b) {
  double conc = 0, disc = 0, ta = 0, tb = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const double x = a[i] - a[j], y = b[i] - b[j];
      if (x == 0 && y == 0) continue;
      if (x == 0) ++ta;
      else if (y == 0) ++tb;
      else if ((x > 0) == (y > 0)) ++conc;
      else ++disc;
    }
  return (conc - disc) / std::sqrt((conc + disc + ta) * (conc + disc + tb));
}

}  // namespace oracle
