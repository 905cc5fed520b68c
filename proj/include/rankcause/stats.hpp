#pragma once

#include "rankcause/gain.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rankcause {

struct PermutationTestResult {
  double observed_gain = 0.0;
  Eigen::VectorXd null_samples;
  double p_value = 1.0;
  bool small_sample = false;  // N < 10: too few labels for a meaningful null
};

// (1 + #{null >= observed}) / (1 + n).
double add_one_p_value(double observed, std::span<const double> null_samples);

// Driver-only relabelings sigma_p, p = 0..n-1, derived from `seed`.
std::vector<Permutation> driver_permutations(Index n_realizations, Index n_perms, std::uint64_t seed);

// Null samples recompute the gain with realization indices permuted in the
// driver block only, over the same alpha grid.
PermutationTestResult permutation_test(const TrajectoryEnsemble& ensemble, const SystemView& driver,
                                       const SystemView& driven, const ScanConfig& config, Index n_perms,
                                       std::uint64_t seed);

PermutationTestResult conditional_permutation_test(const TrajectoryEnsemble& ensemble, const SystemView& driver,
                                                   const SystemView& conditioner, const SystemView& driven,
                                                   const ScanConfig& config, const Eigen::VectorXd& alpha_z_grid,
                                                   Index n_perms, std::uint64_t seed);

// One-tailed critical value of Student's t with `dof` degrees of freedom.
double t_threshold(double p, Index dof);

struct TTestResult {
  double t_stat = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  Index n = 0;
  double threshold = 0.0;
  bool reject = false;
  bool infinite = false;  // zero spread with nonzero mean
};

// t = mean / (sd / sqrt(n)), sd with n - 1 in the denominator.
TTestResult repeated_t_test(std::span<const double> estimates, double threshold);
TTestResult repeated_t_test_p(std::span<const double> estimates, double p);

// Kendall tau-b with tie correction.
double kendall_tau(std::span<const double> a, std::span<const double> b);

// One cell of a false-positive campaign: the method value for coupling `eps`
// and independent estimate `estimate`. `cell_seed` is derived from the
// campaign seed and the cell coordinates.
using CellEstimator = std::function<double(double eps, Index estimate, std::uint64_t cell_seed)>;

struct FprRow {
  double eps = 0.0;
  std::vector<double> estimates;
  std::vector<std::string> failures;  // one message per failed cell
  bool valid = true;                  // false when any estimate failed
  TTestResult test;
};

struct FprSweepPoint {
  double p_threshold = 0.0;
  double fpr = 0.0;
};

struct FprReport {
  std::string method;
  std::string direction;
  double p_threshold = 0.001;
  std::vector<FprRow> rows;
  Index rejections = 0;
  Index tested = 0;  // valid rows
  double fpr = 0.0;
  std::vector<FprSweepPoint> sweep;
};

struct FprOptions {
  std::vector<double> eps_grid;
  Index n_estimates = 20;
  double p_threshold = 0.001;
  std::vector<double> sweep;  // extra thresholds for the FPR-vs-p curve
  std::uint64_t seed = 0;
  std::string method = "gain";
  std::string direction = "Y->X";
};

FprReport fpr_protocol(const FprOptions& options, const CellEstimator& estimator);

// Seed of cell (eps index, estimate index) in a campaign.
std::uint64_t fpr_cell_seed(std::uint64_t campaign_seed, std::size_t eps_index, Index estimate);

// The aggregation half of fpr_protocol for rows whose estimates were
// computed elsewhere: t-test per valid row, FPR, and the threshold sweep.
FprReport summarize_fpr(std::vector<FprRow> rows, const FprOptions& options);

// Log-spaced thresholds from 1e-4 to 0.5, the usual sweep for FPR curves.
std::vector<double> default_threshold_sweep();

}  // namespace rankcause
