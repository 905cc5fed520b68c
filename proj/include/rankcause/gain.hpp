#pragma once

#include "rankcause/ensemble.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rankcause {

// Evenly spaced grid of `points` values over [0, max], starting at 0.
Eigen::VectorXd linear_alpha_grid(double max, Index points);
// 50 points over [0, 1.5].
Eigen::VectorXd default_alpha_grid();
// min(20, floor(0.05 N)), at least 1.
Index default_neighbor_count(Index n);

struct ScanConfig {
  Index k = 1;
  Index tau = 1;  // prediction lag in samples
  Eigen::VectorXd alpha_grid = default_alpha_grid();
  std::optional<Index> t0;  // defaults to the earliest index the embeddings allow

  void validate_grid() const;
};

// Which coordinates represent one system: every variable of a group, or the
// delay embedding of one of its variables.
struct SystemView {
  std::string group;
  std::optional<EmbeddingSpec> embedding;

  Index window() const noexcept { return embedding ? embedding->window() : 0; }
};

struct ImbalanceProfile {
  Eigen::VectorXd alpha_grid;
  Eigen::VectorXd delta;  // delta(0) is the self-prediction Delta(d_Y(0) -> d_Y(tau))
  Index k = 1;
  Index tau = 1;
  Index t0 = 0;
  Index n = 0;  // realizations
  std::string driver;
  std::string driven;
};

struct GainEstimate {
  double gain = 0.0;
  double alpha_opt = 0.0;
  Index alpha_index = 0;
  std::optional<double> p_value;
  ImbalanceProfile profile;
};

struct ConditionalGainEstimate {
  double gain = 0.0;
  double alpha_x_opt = 0.0;
  double alpha_z_opt = 0.0;
  double baseline_alpha_z = 0.0;  // minimizer of the Z-only baseline
  double numerator = 0.0;         // min over (alpha_X, alpha_Z)
  double denominator = 0.0;       // min over alpha_Z with alpha_X = 0
  Eigen::VectorXd alpha_x_grid;
  Eigen::VectorXd alpha_z_grid;
  Eigen::MatrixXd surface;  // Delta(alpha_X, alpha_Z); row 0 is the baseline
  std::optional<double> p_value;
  Index k = 1;
  Index tau = 1;
  Index t0 = 0;
  Index n = 0;
  std::string driver, conditioner, driven;
};

struct AverageGain {
  double gain = 0.0;
  double standard_error = 0.0;
  double alpha_shared = 0.0;
  Index alpha_index = 0;
  Eigen::VectorXd mean_curve;    // mean relative gain per alpha
  Eigen::VectorXd per_estimate;  // relative gains at alpha_shared
};

// Permutation of realization indices applied to the driver block only;
// empty means identity.
using Permutation = std::vector<Index>;

ImbalanceProfile scan_alpha(const TrajectoryEnsemble& ensemble, const SystemView& driver, const SystemView& driven,
                            const ScanConfig& config);

// One profile per driver permutation, sharing the driven-space work.
std::vector<ImbalanceProfile> scan_alpha_permuted(const TrajectoryEnsemble& ensemble, const SystemView& driver,
                                                  const SystemView& driven, const ScanConfig& config,
                                                  std::span<const Permutation> permutations);

GainEstimate imbalance_gain(const ImbalanceProfile& profile);

ConditionalGainEstimate conditional_scan(const TrajectoryEnsemble& ensemble, const SystemView& driver,
                                         const SystemView& conditioner, const SystemView& driven,
                                         const ScanConfig& config, const Eigen::VectorXd& alpha_z_grid);

std::vector<ConditionalGainEstimate> conditional_scan_permuted(const TrajectoryEnsemble& ensemble,
                                                               const SystemView& driver, const SystemView& conditioner,
                                                               const SystemView& driven, const ScanConfig& config,
                                                               const Eigen::VectorXd& alpha_z_grid,
                                                               std::span<const Permutation> permutations);

AverageGain average_gain(std::span<const ImbalanceProfile> profiles);

// Shared alpha_X over estimates, alpha_Z optimized per estimate.
AverageGain average_conditional_gain(std::span<const ConditionalGainEstimate> estimates);

std::vector<GainEstimate> tau_scan(const TrajectoryEnsemble& ensemble, const SystemView& driver,
                                   const SystemView& driven, const ScanConfig& config, std::span<const Index> taus);

struct TauPoint {
  Index tau = 0;
  AverageGain average;
};

// Gain-vs-tau over independent ensembles (one estimate each).
std::vector<TauPoint> tau_scan(std::span<const TrajectoryEnsemble> ensembles, const SystemView& driver,
                               const SystemView& driven, const ScanConfig& config, std::span<const Index> taus);

// Raw kernel: rank sums sum_i sum_{j in kNN_A(i)} r^B_ij over an
// (alpha_X, alpha_Z) grid for each driver permutation. Space A is
// {(driver, alpha_X), (conditioner, alpha_Z), (present, 1)}; B is `future`.
// `conditioner` may have zero columns.
struct ScanInputs {
  Eigen::MatrixXd driver;
  Eigen::MatrixXd conditioner;
  Eigen::MatrixXd present;
  Eigen::MatrixXd future;
};

using RankSumGrid = Eigen::Matrix<std::uint64_t, Eigen::Dynamic, Eigen::Dynamic>;

std::vector<RankSumGrid> scan_rank_sums(const ScanInputs& inputs, Index k, const Eigen::VectorXd& alpha_x,
                                        const Eigen::VectorXd& alpha_z, std::span<const Permutation> permutations);

}  // namespace rankcause
