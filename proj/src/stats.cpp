#include "rankcause/stats.hpp"

#include "rankcause/error.hpp"
#include "rankcause/random.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rankcause {

double add_one_p_value(double observed, std::span<const double> null_samples) {
  const auto exceed = std::count_if(null_samples.begin(), null_samples.end(), [&](double v) { return v >= observed; });
  return (1.0 + static_cast<double>(exceed)) / (1.0 + static_cast<double>(null_samples.size()));
}

std::vector<Permutation> driver_permutations(Index n_realizations, Index n_perms, std::uint64_t seed) {
  std::vector<Permutation> perms(static_cast<std::size_t>(n_perms));
  for (Index p = 0; p < n_perms; ++p) {
    Rng rng = make_rng(seed, "permutation", {static_cast<std::uint64_t>(p)});
    auto& perm = perms[static_cast<std::size_t>(p)];
    perm.resize(static_cast<std::size_t>(n_realizations));
    std::iota(perm.begin(), perm.end(), Index{0});
    for (Index i = n_realizations - 1; i > 0; --i) {
      const Index j = std::uniform_int_distribution<Index>(0, i)(rng);
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
  }
  return perms;
}

namespace {

void check_perm_count(Index n_perms) {
  if (n_perms < 19) throw ConfigError("permutation test needs n_perms >= 19");
}

PermutationTestResult finish(std::vector<double> gains, Index n) {
  PermutationTestResult r;
  r.observed_gain = gains.front();
  r.null_samples = Eigen::Map<const Eigen::VectorXd>(gains.data() + 1, static_cast<Index>(gains.size()) - 1);
  r.p_value = add_one_p_value(r.observed_gain, std::span<const double>(gains).subspan(1));
  r.small_sample = n < 10;
  return r;
}

}  // namespace

PermutationTestResult permutation_test(const TrajectoryEnsemble& ensemble, const SystemView& driver,
                                       const SystemView& driven, const ScanConfig& config, Index n_perms,
                                       std::uint64_t seed) {
  check_perm_count(n_perms);
  std::vector<Permutation> variants{Permutation{}};
  auto perms = driver_permutations(ensemble.realizations(), n_perms, seed);
  std::move(perms.begin(), perms.end(), std::back_inserter(variants));
  const auto profiles = scan_alpha_permuted(ensemble, driver, driven, config, variants);
  std::vector<double> gains;
  gains.reserve(profiles.size());
  for (const auto& p : profiles) gains.push_back(imbalance_gain(p).gain);
  return finish(std::move(gains), ensemble.realizations());
}

PermutationTestResult conditional_permutation_test(const TrajectoryEnsemble& ensemble, const SystemView& driver,
                                                   const SystemView& conditioner, const SystemView& driven,
                                                   const ScanConfig& config, const Eigen::VectorXd& alpha_z_grid,
                                                   Index n_perms, std::uint64_t seed) {
  check_perm_count(n_perms);
  std::vector<Permutation> variants{Permutation{}};
  auto perms = driver_permutations(ensemble.realizations(), n_perms, seed);
  std::move(perms.begin(), perms.end(), std::back_inserter(variants));
  const auto estimates = conditional_scan_permuted(ensemble, driver, conditioner, driven, config, alpha_z_grid, variants);
  std::vector<double> gains;
  gains.reserve(estimates.size());
  for (const auto& e : estimates) gains.push_back(e.gain);
  return finish(std::move(gains), ensemble.realizations());
}

double t_threshold(double p, Index dof) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("t threshold needs 0 < p < 1");
  if (dof < 1) throw ConfigError("t threshold needs dof >= 1");
  const boost::math::students_t dist(static_cast<double>(dof));
  return boost::math::quantile(boost::math::complement(dist, p));
}

TTestResult repeated_t_test(std::span<const double> estimates, double threshold) {
  if (estimates.size() < 2) throw ConfigError("t-test needs at least 2 estimates");
  TTestResult r;
  r.n = static_cast<Index>(estimates.size());
  r.threshold = threshold;
  const double n = static_cast<double>(r.n);
  r.mean = std::accumulate(estimates.begin(), estimates.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : estimates) ss += (v - r.mean) * (v - r.mean);
  const auto [lo, hi] = std::minmax_element(estimates.begin(), estimates.end());
  r.sd = *lo == *hi ? 0.0 : std::sqrt(ss / (n - 1.0));
  if (r.sd == 0.0) {
    if (r.mean == 0.0) {
      r.t_stat = 0.0;
    } else {
      r.infinite = true;
      r.t_stat = r.mean > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    }
  } else {
    r.t_stat = r.mean / (r.sd / std::sqrt(n));
  }
  r.reject = r.t_stat > threshold;
  return r;
}

TTestResult repeated_t_test_p(std::span<const double> estimates, double p) {
  if (estimates.size() < 2) throw ConfigError("t-test needs at least 2 estimates");
  return repeated_t_test(estimates, t_threshold(p, static_cast<Index>(estimates.size()) - 1));
}

double kendall_tau(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw ConfigError("Kendall tau needs two equal-length samples (n >= 2)");
  std::int64_t concordant = 0, discordant = 0, ties_a = 0, ties_b = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const double da = a[j] - a[i], db = b[j] - b[i];
      if (da == 0.0 && db == 0.0) {
        ++ties_a;
        ++ties_b;
      } else if (da == 0.0) {
        ++ties_a;
      } else if (db == 0.0) {
        ++ties_b;
      } else if ((da > 0.0) == (db > 0.0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  const auto pairs = static_cast<std::int64_t>(a.size() * (a.size() - 1) / 2);
  const double denom = std::sqrt(static_cast<double>(pairs - ties_a) * static_cast<double>(pairs - ties_b));
  if (denom == 0.0) throw DataError("Kendall tau undefined: one sample is entirely tied");
  return static_cast<double>(concordant - discordant) / denom;
}

std::vector<double> default_threshold_sweep() {
  std::vector<double> s;
  for (int i = 0; i <= 16; ++i) s.push_back(std::pow(10.0, -4.0 + i * (std::log10(0.5) + 4.0) / 16.0));
  return s;
}

std::uint64_t fpr_cell_seed(std::uint64_t campaign_seed, std::size_t eps_index, Index estimate) {
  return derive_seed(campaign_seed, "fpr-cell", {eps_index, static_cast<std::uint64_t>(estimate)});
}

FprReport summarize_fpr(std::vector<FprRow> rows, const FprOptions& o) {
  FprReport rep;
  rep.method = o.method;
  rep.direction = o.direction;
  rep.p_threshold = o.p_threshold;
  for (auto& row : rows) {
    row.valid = row.failures.empty() && row.estimates.size() >= 2;
    if (row.valid) {
      row.test = repeated_t_test_p(row.estimates, o.p_threshold);
      ++rep.tested;
      if (row.test.reject) ++rep.rejections;
    }
  }
  rep.rows = std::move(rows);
  rep.fpr = rep.tested > 0 ? static_cast<double>(rep.rejections) / static_cast<double>(rep.tested) : 0.0;
  for (double p : o.sweep) {
    Index rej = 0;
    for (const auto& row : rep.rows)
      if (row.valid && row.test.t_stat > t_threshold(p, row.test.n - 1)) ++rej;
    rep.sweep.push_back({p, rep.tested > 0 ? static_cast<double>(rej) / static_cast<double>(rep.tested) : 0.0});
  }
  return rep;
}

FprReport fpr_protocol(const FprOptions& o, const CellEstimator& estimator) {
  if (o.eps_grid.empty()) throw ConfigError("FPR protocol needs a non-empty eps grid");
  if (o.n_estimates < 2) throw ConfigError("FPR protocol needs n_estimates >= 2");
  t_threshold(o.p_threshold, o.n_estimates - 1);
  std::vector<FprRow> rows;
  for (std::size_t e = 0; e < o.eps_grid.size(); ++e) {
    FprRow row;
    row.eps = o.eps_grid[e];
    for (Index i = 0; i < o.n_estimates; ++i) {
      try {
        row.estimates.push_back(estimator(row.eps, i, fpr_cell_seed(o.seed, e, i)));
      } catch (const SimulationError& err) {
        row.failures.push_back(err.what());
      } catch (const DataError& err) {
        row.failures.push_back(err.what());
      }
    }
    rows.push_back(std::move(row));
  }
  return summarize_fpr(std::move(rows), o);
}

}  // namespace rankcause
