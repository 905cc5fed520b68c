#include "rankcause/ensemble.hpp"

#include "rankcause/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace rankcause {

namespace {

std::vector<std::string> default_names(Index d) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(d));
  for (Index i = 0; i < d; ++i) names.push_back("v" + std::to_string(i));
  return names;
}

}  // namespace

TrajectoryEnsemble::TrajectoryEnsemble(std::vector<Eigen::MatrixXd> realizations, GroupMap groups, double dt,
                                       std::optional<std::uint64_t> seed, std::vector<std::string> variable_names)
    : data_(std::move(realizations)), groups_(std::move(groups)), dt_(dt), seed_(seed), names_(std::move(variable_names)) {
  if (data_.size() < 2) throw DataError("ensemble needs at least 2 realizations, got " + std::to_string(data_.size()));
  const Index t = data_.front().rows();
  const Index d = data_.front().cols();
  if (t < 1 || d < 1) throw DataError("ensemble realizations must have T >= 1 samples and D >= 1 variables");
  for (std::size_t n = 0; n < data_.size(); ++n) {
    if (data_[n].rows() != t || data_[n].cols() != d)
      throw DataError("ragged ensemble: realization " + std::to_string(n) + " has shape " +
                      std::to_string(data_[n].rows()) + "x" + std::to_string(data_[n].cols()));
    if (!data_[n].allFinite()) throw DataError("non-finite value in realization " + std::to_string(n));
  }
  if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw DataError("sampling step dt must be positive");
  if (names_.empty()) names_ = default_names(d);
  if (static_cast<Index>(names_.size()) != d) throw DataError("variable name count does not match D");
  if (std::set<std::string>(names_.begin(), names_.end()).size() != names_.size())
    throw DataError("duplicate variable names");
  std::set<Index> used;
  for (const auto& [name, indices] : groups_) {
    for (Index idx : indices) {
      if (idx < 0 || idx >= d) throw DataError("group '" + name + "' references variable " + std::to_string(idx) + " >= D");
      if (!used.insert(idx).second) throw DataError("variable " + std::to_string(idx) + " belongs to more than one group");
    }
  }
}

const std::vector<Index>& TrajectoryEnsemble::group(const std::string& name) const {
  auto it = groups_.find(name);
  if (it == groups_.end()) throw ConfigError("unknown group '" + name + "'");
  return it->second;
}

Index TrajectoryEnsemble::variable_index(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw ConfigError("unknown variable '" + name + "'");
  return static_cast<Index>(it - names_.begin());
}

SnapshotView snapshot(const TrajectoryEnsemble& ensemble, std::span<const Index> variables, Index t) {
  if (t < 0 || t >= ensemble.samples())
    throw ConfigError("snapshot time " + std::to_string(t) + " outside [0, " + std::to_string(ensemble.samples()) + ")");
  SnapshotView view;
  view.source_time = t;
  view.points.resize(ensemble.realizations(), static_cast<Index>(variables.size()));
  for (std::size_t c = 0; c < variables.size(); ++c) {
    const Index v = variables[c];
    if (v < 0 || v >= ensemble.variables()) throw ConfigError("variable index " + std::to_string(v) + " out of range");
    for (Index n = 0; n < ensemble.realizations(); ++n) view.points(n, static_cast<Index>(c)) = ensemble(n, t, v);
  }
  return view;
}

SnapshotView delay_embed(const TrajectoryEnsemble& ensemble, const EmbeddingSpec& spec, Index t) {
  if (spec.dimension < 1 || spec.lag < 1) throw ConfigError("embedding needs E >= 1 and tau_e >= 1");
  if (spec.variable_index < 0 || spec.variable_index >= ensemble.variables())
    throw ConfigError("embedding variable index " + std::to_string(spec.variable_index) + " out of range");
  if (spec.window() >= ensemble.samples()) throw ConfigError("embedding window (E-1)*tau_e must be < T");
  if (t - spec.window() < 0 || t >= ensemble.samples())
    throw std::out_of_range("delay window [" + std::to_string(t - spec.window()) + ", " + std::to_string(t) +
                            "] exits [0, " + std::to_string(ensemble.samples()) + ")");
  SnapshotView view;
  view.source_time = t;
  view.points.resize(ensemble.realizations(), spec.dimension);
  for (Index j = 0; j < spec.dimension; ++j)
    for (Index n = 0; n < ensemble.realizations(); ++n)
      view.points(n, j) = ensemble(n, t - j * spec.lag, spec.variable_index);
  return view;
}

TrajectoryEnsemble split_series(const Eigen::MatrixXd& series, Index n_realizations, Index gap, GroupMap groups,
                                double dt, std::optional<std::uint64_t> seed, std::vector<std::string> variable_names) {
  if (n_realizations < 1) throw ConfigError("n_realizations must be >= 1");
  if (gap < 0) throw ConfigError("gap must be >= 0");
  const Index sub_length = series.rows() / n_realizations - gap;
  if (sub_length < 1)
    throw ConfigError("infeasible split: " + std::to_string(series.rows()) + " samples cannot hold " +
                      std::to_string(n_realizations) + " subtrajectories with gap " + std::to_string(gap));
  std::vector<Eigen::MatrixXd> parts;
  parts.reserve(static_cast<std::size_t>(n_realizations));
  for (Index r = 0; r < n_realizations; ++r)
    parts.emplace_back(series.middleRows(r * (sub_length + gap), sub_length));
  return TrajectoryEnsemble(std::move(parts), std::move(groups), dt, seed, std::move(variable_names));
}

double histogram_mutual_information(std::span<const double> a, std::span<const double> b, Index n_bins, double lo,
                                    double hi) {
  if (a.size() != b.size() || a.empty()) throw ConfigError("histogram MI needs equal, non-empty samples");
  if (n_bins < 2) throw ConfigError("histogram MI needs n_bins >= 2");
  if (!(hi > lo)) throw DataError("undefined mutual information: constant series");
  const auto bins = static_cast<std::size_t>(n_bins);
  const double width = (hi - lo) / static_cast<double>(n_bins);
  auto bin_of = [&](double v) {
    auto k = static_cast<std::ptrdiff_t>((v - lo) / width);
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(k, 0, n_bins - 1));
  };
  std::vector<std::uint64_t> joint(bins * bins, 0), ma(bins, 0), mb(bins, 0);
  for (std::size_t s = 0; s < a.size(); ++s) {
    const std::size_t i = bin_of(a[s]), j = bin_of(b[s]);
    ++joint[i * bins + j];
    ++ma[i];
    ++mb[j];
  }
  const double m = static_cast<double>(a.size());
  auto term = [&](std::size_t i, std::size_t j) {
    const std::uint64_t c = joint[i * bins + j];
    if (c == 0) return 0.0;
    const double cd = static_cast<double>(c);
    return cd / m * std::log(cd * m / (static_cast<double>(ma[i]) * static_cast<double>(mb[j])));
  };
  // Cell pairs (i,j),(j,i) are summed together so swapping the roles of a
  // and b (i.e. reversing a lagged series) reproduces the value bit-exactly.
  double mi = 0.0;
  for (std::size_t i = 0; i < bins; ++i) {
    mi += term(i, i);
    for (std::size_t j = i + 1; j < bins; ++j) mi += term(i, j) + term(j, i);
  }
  return mi;
}

LaggedMutualInformation lagged_mutual_information(std::span<const double> series, Index max_lag, Index n_bins) {
  const auto t = static_cast<Index>(series.size());
  if (max_lag < 1 || 2 * max_lag >= t) throw ConfigError("lagged MI needs 1 <= max_lag < T/2");
  if (n_bins < 2) throw ConfigError("lagged MI needs n_bins >= 2");
  const auto [lo_it, hi_it] = std::minmax_element(series.begin(), series.end());
  if (!(*hi_it > *lo_it)) throw DataError("undefined mutual information: constant series");

  LaggedMutualInformation out;
  out.curve.resize(max_lag + 1);
  for (Index lag = 0; lag <= max_lag; ++lag) {
    const auto m = static_cast<std::size_t>(t - lag);
    out.curve(lag) = histogram_mutual_information(series.subspan(0, m), series.subspan(static_cast<std::size_t>(lag), m),
                                                  n_bins, *lo_it, *hi_it);
  }
  out.first_minimum = max_lag;
  for (Index lag = 1; lag < max_lag; ++lag) {
    if (out.curve(lag) < out.curve(lag - 1) && out.curve(lag) <= out.curve(lag + 1)) {
      out.first_minimum = lag;
      out.has_minimum = true;
      break;
    }
  }
  return out;
}

}  // namespace rankcause
