#pragma once

#include "rankcause/ensemble.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace rankcause {

// One scalar from a comparison method, in the same report schema as a
// GainEstimate.
struct BaselineResult {
  std::string method;  // measure_L, egc, ccm, transfer_entropy
  double value = 0.0;
  std::string driver, driven;
  std::map<std::string, double> params;
};

// Rank statistic L(X|Y) with X-ranks of the k nearest Y-neighbors. Rows are
// sample points (time indices or realizations); candidates j with
// |i - j| <= theiler are excluded from every neighborhood and ranking.
// Positive values indicate X -> Y.
double measure_L(const Eigen::MatrixXd& x_embedded, const Eigen::MatrixXd& y_embedded, Index k, Index theiler = 0);

struct EgcOptions {
  Index dimension = 3;  // E
  Index lag = 1;        // tau_e
  Index horizon = 0;    // predict y(t + horizon); 0 means horizon = lag
  Index k_local = 200;  // neighborhood size, at least 2E + 2
  Index n_regressions = 200;
  std::uint64_t seed = 0;
  bool static_driver = false;       // use the scalar x(t) instead of its embedding
  bool literal_denominator = false;  // divide by the x-only residual variance
};

struct EgcResult {
  double index = 0.0;
  Index regressions = 0;
  Index failures = 0;  // rank-deficient neighborhoods that were resampled
};

// Local-linear Granger index for x -> y from two scalar series.
EgcResult extended_granger(std::span<const double> x, std::span<const double> y, const EgcOptions& options);

struct CcmOptions {
  Index dimension = 3;
  Index lag = 1;
  std::vector<Index> library_lengths;
  Index n_draws = 10;
  std::uint64_t seed = 0;
  bool contiguous = true;  // false draws library points at random without replacement
};

struct CcmCurve {
  std::vector<Index> library_lengths;
  Eigen::VectorXd rho;     // mean Pearson skill per length
  Eigen::VectorXd rho_sd;  // spread over draws

  double converged() const { return rho(rho.size() - 1); }
};

// Cross-map skill of recovering x from the shadow manifold of y; high
// converged skill indicates x -> y.
CcmCurve ccm(std::span<const double> x, std::span<const double> y, const CcmOptions& options);

// Nearest-neighbor estimate of I(A; B | C) in nats with max-norm balls.
// Rows are samples. Points tied at the k-th distance are resolved by index.
double conditional_mutual_information(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& c,
                                      Index k = 3);

// TE(x -> y) = I(x(0); y(tau) | y(0)).
inline double transfer_entropy(const Eigen::MatrixXd& x_at_0, const Eigen::MatrixXd& y_at_tau,
                               const Eigen::MatrixXd& y_at_0, Index k = 3) {
  return conditional_mutual_information(x_at_0, y_at_tau, y_at_0, k);
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// E-dimensional backward delay vectors of a scalar series for every t with a
// complete window: row r corresponds to t = (E-1) * lag + r.
Eigen::MatrixXd embed_series(std::span<const double> series, Index dimension, Index lag);

}  // namespace rankcause
