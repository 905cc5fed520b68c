#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rankcause {

using Index = Eigen::Index;
using GroupMap = std::map<std::string, std::vector<Index>>;

// N independent realizations of a T x D multivariate time series.
// Immutable after construction; construction validates shape, finiteness and
// the subsystem group map.
class TrajectoryEnsemble {
 public:
  TrajectoryEnsemble(std::vector<Eigen::MatrixXd> realizations, GroupMap groups, double dt,
                     std::optional<std::uint64_t> seed = std::nullopt,
                     std::vector<std::string> variable_names = {});

  Index realizations() const noexcept { return static_cast<Index>(data_.size()); }
  Index samples() const noexcept { return data_.front().rows(); }
  Index variables() const noexcept { return data_.front().cols(); }

  // T x D block of realization n.
  const Eigen::MatrixXd& realization(Index n) const { return data_.at(static_cast<std::size_t>(n)); }
  double operator()(Index n, Index t, Index d) const { return data_[static_cast<std::size_t>(n)](t, d); }

  const GroupMap& groups() const noexcept { return groups_; }
  const std::vector<Index>& group(const std::string& name) const;
  bool has_group(const std::string& name) const { return groups_.count(name) > 0; }

  const std::vector<std::string>& variable_names() const noexcept { return names_; }
  Index variable_index(const std::string& name) const;

  double dt() const noexcept { return dt_; }
  std::optional<std::uint64_t> seed() const noexcept { return seed_; }

 private:
  std::vector<Eigen::MatrixXd> data_;
  GroupMap groups_;
  double dt_;
  std::optional<std::uint64_t> seed_;
  std::vector<std::string> names_;
};

// Backward-pointing delay embedding of one variable:
// (x(t), x(t - tau_e), ..., x(t - (E-1) tau_e)).
struct EmbeddingSpec {
  Index variable_index = 0;
  Index dimension = 1;  // E
  Index lag = 1;        // tau_e, in samples

  Index window() const noexcept { return (dimension - 1) * lag; }
};

// N x d state vectors taken from an ensemble at one sample index.
struct SnapshotView {
  Eigen::MatrixXd points;
  Index source_time = 0;

  Index size() const noexcept { return points.rows(); }
  Index dimension() const noexcept { return points.cols(); }
};

SnapshotView snapshot(const TrajectoryEnsemble& ensemble, std::span<const Index> variables, Index t);
SnapshotView delay_embed(const TrajectoryEnsemble& ensemble, const EmbeddingSpec& spec, Index t);

// Cuts one long T_total x D series into n non-overlapping subtrajectories
// of length floor(T_total / n) - gap; `gap` samples are dropped after each.
TrajectoryEnsemble split_series(const Eigen::MatrixXd& series, Index n_realizations, Index gap,
                                GroupMap groups = {}, double dt = 1.0,
                                std::optional<std::uint64_t> seed = std::nullopt,
                                std::vector<std::string> variable_names = {});

struct LaggedMutualInformation {
  Eigen::VectorXd curve;  // curve[l] = MI(x(t), x(t + l)), l = 0..max_lag
  Index first_minimum = 0;
  bool has_minimum = false;
};

// Equal-width histogram estimate on the series' global range. The first
// minimum is the usual embedding-lag heuristic.
LaggedMutualInformation lagged_mutual_information(std::span<const double> series, Index max_lag,
                                                  Index n_bins = 32);

// Histogram MI of paired samples binned on a shared [lo, hi] range, in nats.
double histogram_mutual_information(std::span<const double> a, std::span<const double> b, Index n_bins,
                                    double lo, double hi);

// On-disk formats. Both use a JSON sidecar `<file>.groups.json` holding
// variable names, groups (by variable name), dt, and seed.
enum class EnsembleFormat { csv_long, binary };

EnsembleFormat format_from_path(const std::filesystem::path& path);

TrajectoryEnsemble read_ensemble(const std::filesystem::path& path, EnsembleFormat format);
void write_ensemble(const TrajectoryEnsemble& ensemble, const std::filesystem::path& path, EnsembleFormat format);

// Raw payload of a binary "RKC1" file without the N >= 2 ensemble invariant
// (simulated long trajectories are stored as a single realization).
struct RawSeries {
  std::vector<Eigen::MatrixXd> realizations;
  GroupMap groups;
  std::vector<std::string> variable_names;
  double dt = 1.0;
  std::optional<std::uint64_t> seed;
};

RawSeries read_raw(const std::filesystem::path& path, EnsembleFormat format);
void write_raw(const RawSeries& raw, const std::filesystem::path& path, EnsembleFormat format);

std::filesystem::path sidecar_path(const std::filesystem::path& path);

}  // namespace rankcause
