#include "rankcause/baselines.hpp"

#include "rankcause/error.hpp"
#include "rankcause/parallel.hpp"
#include "rankcause/random.hpp"
#include "rankcause/rank_core.hpp"

#include <boost/math/special_functions/digamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rankcause {

Eigen::MatrixXd embed_series(std::span<const double> series, Index dimension, Index lag) {
  if (dimension < 1 || lag < 1) throw ConfigError("embedding needs E >= 1 and tau_e >= 1");
  const auto t = static_cast<Index>(series.size());
  const Index w = (dimension - 1) * lag;
  if (w >= t) throw ConfigError("series too short for the embedding window");
  Eigen::MatrixXd out(t - w, dimension);
  for (Index r = 0; r < t - w; ++r)
    for (Index j = 0; j < dimension; ++j) out(r, j) = series[static_cast<std::size_t>(w + r - j * lag)];
  return out;
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size() || a.size() < 2) throw ConfigError("pearson needs two equal-length samples");
  const Eigen::ArrayXd da = a.array() - a.mean();
  const Eigen::ArrayXd db = b.array() - b.mean();
  const double saa = (da * da).sum(), sbb = (db * db).sum();
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return (da * db).sum() / std::sqrt(saa * sbb);
}

double measure_L(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, Index k, Index theiler) {
  const Index n = x.rows();
  if (y.rows() != n) throw ConfigError("measure_L needs equal sample counts");
  if (n < 2) throw ConfigError("measure_L needs at least 2 points");
  if (k < 1) throw ConfigError("measure_L needs k >= 1");
  if (theiler < 0) throw ConfigError("Theiler window must be >= 0");

  std::vector<double> terms(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t begin, std::size_t end, std::size_t) {
    std::vector<double> dx(static_cast<std::size_t>(n)), dy(static_cast<std::size_t>(n));
    std::vector<Index> cand, rank_x(static_cast<std::size_t>(n));
    for (auto i = static_cast<Index>(begin); i < static_cast<Index>(end); ++i) {
      block_squared_distances<double>(x, i, dx);
      block_squared_distances<double>(y, i, dy);
      cand.clear();
      for (Index j = 0; j < n; ++j)
        if (j != i && std::abs(j - i) > theiler) cand.push_back(j);
      const auto m = static_cast<Index>(cand.size());
      if (m <= k) throw ConfigError("measure_L: k and the Theiler window exhaust the candidate set");
      std::sort(cand.begin(), cand.end(), DistanceIndexLess<double>{dx.data()});
      for (Index r = 0; r < m; ++r) rank_x[static_cast<std::size_t>(cand[static_cast<std::size_t>(r)])] = r + 1;
      std::nth_element(cand.begin(), cand.begin() + (k - 1), cand.end(), DistanceIndexLess<double>{dy.data()});
      std::int64_t sum = 0;
      for (Index q = 0; q < k; ++q) sum += rank_x[static_cast<std::size_t>(cand[static_cast<std::size_t>(q)])];
      const double g = 0.5 * static_cast<double>(m + 1);
      const double gk = 0.5 * static_cast<double>(k + 1);
      const double gxy = static_cast<double>(sum) / static_cast<double>(k);
      terms[static_cast<std::size_t>(i)] = (g - gxy) / (g - gk);
    }
  });
  double total = 0.0;
  for (double t : terms) total += t;
  return total / static_cast<double>(n);
}

EgcResult extended_granger(std::span<const double> x, std::span<const double> y, const EgcOptions& o) {
  if (x.size() != y.size()) throw ConfigError("EGC needs equal-length series");
  const Index e = o.dimension, lag = o.lag;
  if (e < 1 || lag < 1) throw ConfigError("EGC needs E >= 1 and tau_e >= 1");
  const Index h = o.horizon > 0 ? o.horizon : lag;
  const Index ex = o.static_driver ? 1 : e;
  if (o.k_local < 2 * e + 2) throw ConfigError("EGC needs k_local >= 2E + 2");
  if (o.n_regressions < 1) throw ConfigError("EGC needs n_regressions >= 1");
  const auto t_total = static_cast<Index>(x.size());
  const Index w = (e - 1) * lag;
  const Index points = t_total - w - h;
  if (points < o.k_local) throw ConfigError("EGC: series too short for k_local neighbors");

  // Row r is time t = w + r.
  Eigen::MatrixXd yz(points, e), xz(points, ex);
  Eigen::VectorXd target(points);
  for (Index r = 0; r < points; ++r) {
    const Index t = w + r;
    for (Index j = 0; j < e; ++j) yz(r, j) = y[static_cast<std::size_t>(t - j * lag)];
    for (Index j = 0; j < ex; ++j) xz(r, j) = x[static_cast<std::size_t>(t - j * lag)];
    target(r) = y[static_cast<std::size_t>(t + h)];
  }
  Eigen::MatrixXd joint(points, e + ex);
  joint << xz, yz;

  const Index k = o.k_local;
  std::vector<double> dist(static_cast<std::size_t>(points));
  std::vector<Index> order(static_cast<std::size_t>(points));
  Eigen::MatrixXd ay(k, e + 1), axy(k, e + ex + 1), ax(k, ex + 1);
  Eigen::VectorXd b(k);
  auto residual_var = [&](const Eigen::MatrixXd& a, const Eigen::VectorXd& coef) {
    return (b - a * coef).squaredNorm() / static_cast<double>(k);
  };

  EgcResult out;
  double total = 0.0;
  Index attempt = 0;
  Rng rng = make_rng(o.seed, "egc");
  std::uniform_int_distribution<Index> pick(0, points - 1);
  while (out.regressions < o.n_regressions) {
    if (out.failures > o.n_regressions)
      throw DataError("EGC: more than half of the local regressions were rank-deficient");
    ++attempt;
    const Index c = pick(rng);
    block_squared_distances<double>(joint, c, dist);
    std::iota(order.begin(), order.end(), Index{0});
    std::nth_element(order.begin(), order.begin() + (k - 1), order.end(), DistanceIndexLess<double>{dist.data()});
    for (Index q = 0; q < k; ++q) {
      const Index r = order[static_cast<std::size_t>(q)];
      b(q) = target(r);
      ay(q, 0) = axy(q, 0) = ax(q, 0) = 1.0;
      ay.row(q).tail(e) = yz.row(r);
      axy.row(q).segment(1, e) = yz.row(r);
      axy.row(q).tail(ex) = xz.row(r);
      ax.row(q).tail(ex) = xz.row(r);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_y(ay);
    if (qr_y.rank() < ay.cols()) {
      ++out.failures;
      continue;
    }
    const double var_y = residual_var(ay, qr_y.solve(b));
    const double var_xy = residual_var(axy, Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(axy).solve(b));
    double denom = var_y;
    if (o.literal_denominator) denom = residual_var(ax, Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(ax).solve(b));
    if (!(denom > 0.0)) {
      ++out.failures;
      continue;
    }
    total += 1.0 - var_xy / denom;
    ++out.regressions;
  }
  out.index = total / static_cast<double>(out.regressions);
  return out;
}

namespace {

// Leave-self-out simplex prediction of x at every library point from its
// E+1 nearest library neighbors in the shadow manifold.
double cross_map_skill(const Eigen::MatrixXd& manifold, const Eigen::VectorXd& x, std::span<const Index> library) {
  const auto l = static_cast<Index>(library.size());
  const Index nn = manifold.cols() + 1;
  Eigen::MatrixXd lib(l, manifold.cols());
  Eigen::VectorXd truth(l), pred(l);
  for (Index q = 0; q < l; ++q) {
    lib.row(q) = manifold.row(library[static_cast<std::size_t>(q)]);
    truth(q) = x(library[static_cast<std::size_t>(q)]);
  }
  std::vector<double> dist(static_cast<std::size_t>(l));
  std::vector<Index> nb(static_cast<std::size_t>(nn));
  std::vector<double> w(static_cast<std::size_t>(nn));
  for (Index i = 0; i < l; ++i) {
    block_squared_distances<double>(lib, i, dist);
    select_k_nearest<double>(dist, i, nn, nb);
    const double d1 = std::sqrt(dist[static_cast<std::size_t>(nb[0])]);
    double ws = 0.0;
    for (Index q = 0; q < nn; ++q) {
      const double d = std::sqrt(dist[static_cast<std::size_t>(nb[static_cast<std::size_t>(q)])]);
      double wq;
      if (d1 > 0.0) wq = std::exp(-d / d1);
      else wq = d == 0.0 ? 1.0 : 0.0;
      w[static_cast<std::size_t>(q)] = wq;
      ws += wq;
    }
    double p = 0.0;
    for (Index q = 0; q < nn; ++q) p += w[static_cast<std::size_t>(q)] / ws * truth(nb[static_cast<std::size_t>(q)]);
    pred(i) = p;
  }
  return pearson(pred, truth);
}

}  // namespace

CcmCurve ccm(std::span<const double> x, std::span<const double> y, const CcmOptions& o) {
  if (x.size() != y.size()) throw ConfigError("CCM needs equal-length series");
  if (o.library_lengths.empty()) throw ConfigError("CCM needs at least one library length");
  if (o.n_draws < 1) throw ConfigError("CCM needs n_draws >= 1");
  const Eigen::MatrixXd manifold = embed_series(y, o.dimension, o.lag);
  const Index m = manifold.rows();
  const Index w = (o.dimension - 1) * o.lag;
  Eigen::VectorXd target(m);
  for (Index r = 0; r < m; ++r) target(r) = x[static_cast<std::size_t>(w + r)];

  CcmCurve curve;
  curve.library_lengths = o.library_lengths;
  const auto nl = static_cast<Index>(o.library_lengths.size());
  curve.rho.resize(nl);
  curve.rho_sd.resize(nl);
  for (Index li = 0; li < nl; ++li) {
    const Index l = o.library_lengths[static_cast<std::size_t>(li)];
    if (l < o.dimension + 2 || l > m)
      throw ConfigError("CCM library length " + std::to_string(l) + " outside [E+2, " + std::to_string(m) + "]");
    std::vector<double> rhos(static_cast<std::size_t>(o.n_draws));
    parallel_for(
        static_cast<std::size_t>(o.n_draws),
        [&](std::size_t begin, std::size_t end, std::size_t) {
          std::vector<Index> lib(static_cast<std::size_t>(l));
          for (std::size_t d = begin; d < end; ++d) {
            Rng rng = make_rng(o.seed, "ccm", {static_cast<std::uint64_t>(l), d});
            if (o.contiguous) {
              const Index start = std::uniform_int_distribution<Index>(0, m - l)(rng);
              std::iota(lib.begin(), lib.end(), start);
            } else {
              std::vector<Index> all(static_cast<std::size_t>(m));
              std::iota(all.begin(), all.end(), Index{0});
              for (Index q = 0; q < l; ++q) {
                const Index r = std::uniform_int_distribution<Index>(q, m - 1)(rng);
                std::swap(all[static_cast<std::size_t>(q)], all[static_cast<std::size_t>(r)]);
              }
              std::copy(all.begin(), all.begin() + l, lib.begin());
              std::sort(lib.begin(), lib.end());
            }
            rhos[d] = cross_map_skill(manifold, target, lib);
          }
        },
        1);
    const Eigen::Map<const Eigen::VectorXd> r(rhos.data(), o.n_draws);
    curve.rho(li) = r.mean();
    curve.rho_sd(li) = o.n_draws > 1 ? std::sqrt((r.array() - r.mean()).square().sum() / static_cast<double>(o.n_draws - 1)) : 0.0;
  }
  return curve;
}

double conditional_mutual_information(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& c,
                                      Index k) {
  const Index n = a.rows();
  if (b.rows() != n || c.rows() != n) throw ConfigError("CMI needs equal sample counts");
  if (k < 1 || k >= n) throw ConfigError("CMI needs 1 <= k < N");
  using boost::math::digamma;

  auto max_dist = [](const Eigen::MatrixXd& m, Index i, Index j) {
    double d = 0.0;
    for (Index col = 0; col < m.cols(); ++col) d = std::max(d, std::abs(m(i, col) - m(j, col)));
    return d;
  };

  std::vector<double> terms(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t begin, std::size_t end, std::size_t) {
    std::vector<double> da(static_cast<std::size_t>(n)), db(static_cast<std::size_t>(n)), dc(static_cast<std::size_t>(n)),
        dj(static_cast<std::size_t>(n));
    std::vector<Index> nb(static_cast<std::size_t>(k));
    for (auto i = static_cast<Index>(begin); i < static_cast<Index>(end); ++i) {
      for (Index j = 0; j < n; ++j) {
        da[static_cast<std::size_t>(j)] = max_dist(a, i, j);
        db[static_cast<std::size_t>(j)] = max_dist(b, i, j);
        dc[static_cast<std::size_t>(j)] = max_dist(c, i, j);
        dj[static_cast<std::size_t>(j)] = std::max({da[static_cast<std::size_t>(j)], db[static_cast<std::size_t>(j)], dc[static_cast<std::size_t>(j)]});
      }
      select_k_nearest<double>(dj, i, k, nb);
      const double eps = dj[static_cast<std::size_t>(nb[static_cast<std::size_t>(k - 1)])];
      Index n_ac = 0, n_bc = 0, n_c = 0;
      if (eps > 0.0) {
        for (Index j = 0; j < n; ++j) {
          if (j == i) continue;
          const double zc = dc[static_cast<std::size_t>(j)];
          if (zc >= eps) continue;
          ++n_c;
          if (da[static_cast<std::size_t>(j)] < eps) ++n_ac;
          if (db[static_cast<std::size_t>(j)] < eps) ++n_bc;
        }
        terms[static_cast<std::size_t>(i)] = digamma(static_cast<double>(k)) - digamma(static_cast<double>(n_ac + 1)) -
                                              digamma(static_cast<double>(n_bc + 1)) +
                                              digamma(static_cast<double>(n_c + 1));
      } else {
        // Duplicated points: the ball has radius zero, so use every exact
        // copy as a neighbor and count marginal copies inclusively.
        Index k_tilde = 0;
        for (Index j = 0; j < n; ++j) {
          if (j == i) continue;
          if (dj[static_cast<std::size_t>(j)] == 0.0) ++k_tilde;
          if (dc[static_cast<std::size_t>(j)] == 0.0) {
            ++n_c;
            if (da[static_cast<std::size_t>(j)] == 0.0) ++n_ac;
            if (db[static_cast<std::size_t>(j)] == 0.0) ++n_bc;
          }
        }
        terms[static_cast<std::size_t>(i)] = digamma(static_cast<double>(k_tilde)) -
                                              digamma(static_cast<double>(n_ac + 1)) -
                                              digamma(static_cast<double>(n_bc + 1)) +
                                              digamma(static_cast<double>(n_c + 1));
      }
    }
  });
  double total = 0.0;
  for (double t : terms) total += t;
  return total / static_cast<double>(n);
}

}  // namespace rankcause
