#include "rankcause/gain.hpp"

#include "rankcause/error.hpp"
#include "rankcause/parallel.hpp"
#include "rankcause/rank_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rankcause {

Eigen::VectorXd linear_alpha_grid(double max, Index points) {
  if (points < 1) throw ConfigError("alpha grid needs at least one point");
  if (points == 1) return Eigen::VectorXd::Zero(1);
  if (!(max > 0.0)) throw ConfigError("alpha grid maximum must be positive");
  return Eigen::VectorXd::LinSpaced(points, 0.0, max);
}

Eigen::VectorXd default_alpha_grid() { return linear_alpha_grid(1.5, 50); }

Index default_neighbor_count(Index n) { return std::max<Index>(1, std::min<Index>(20, n / 20)); }

namespace {

void validate_grid(const Eigen::VectorXd& grid, const char* what) {
  if (grid.size() < 1) throw ConfigError(std::string(what) + " grid is empty");
  if (grid(0) != 0.0) throw ConfigError(std::string(what) + " grid must start at 0");
  for (Index g = 1; g < grid.size(); ++g)
    if (!(grid(g) > grid(g - 1)) || !std::isfinite(grid(g)))
      throw ConfigError(std::string(what) + " grid must be finite and strictly increasing");
}

SnapshotView view_at(const TrajectoryEnsemble& ensemble, const SystemView& system, Index t) {
  const auto& vars = ensemble.group(system.group);
  if (system.embedding) {
    if (std::find(vars.begin(), vars.end(), system.embedding->variable_index) == vars.end())
      throw ConfigError("embedded variable " + std::to_string(system.embedding->variable_index) +
                        " is not part of group '" + system.group + "'");
    return delay_embed(ensemble, *system.embedding, t);
  }
  if (vars.empty()) throw ConfigError("group '" + system.group + "' has no variables");
  return snapshot(ensemble, vars, t);
}

void check_disjoint(std::initializer_list<const SystemView*> systems) {
  std::vector<std::string> names;
  for (const auto* s : systems) names.push_back(s->group);
  std::sort(names.begin(), names.end());
  if (std::adjacent_find(names.begin(), names.end()) != names.end())
    throw ConfigError("driver, driven and conditioner groups must be distinct");
}

Index resolve_t0(const TrajectoryEnsemble& ensemble, const ScanConfig& config,
                 std::initializer_list<const SystemView*> systems) {
  Index window = 0;
  for (const auto* s : systems) window = std::max(window, s->window());
  const Index t0 = config.t0.value_or(window);
  if (t0 < window) throw ConfigError("t0=" + std::to_string(t0) + " precedes the embedding window " + std::to_string(window));
  if (config.tau < 0) throw ConfigError("tau must be >= 0");
  if (t0 + config.tau >= ensemble.samples())
    throw ConfigError("t0 + tau = " + std::to_string(t0 + config.tau) + " must be < T = " +
                      std::to_string(ensemble.samples()));
  return t0;
}

void check_permutations(std::span<const Permutation> permutations, Index n) {
  std::vector<char> seen(static_cast<std::size_t>(n));
  for (const auto& p : permutations) {
    if (p.empty()) continue;
    if (static_cast<Index>(p.size()) != n) throw ConfigError("permutation length does not match N");
    std::fill(seen.begin(), seen.end(), 0);
    for (Index v : p) {
      if (v < 0 || v >= n || seen[static_cast<std::size_t>(v)]) throw ConfigError("invalid permutation");
      seen[static_cast<std::size_t>(v)] = 1;
    }
  }
}

struct Candidate {
  double d;
  Index j;
  bool operator<(const Candidate& o) const { return d < o.d || (d == o.d && j < o.j); }
};

}  // namespace

void ScanConfig::validate_grid() const { rankcause::validate_grid(alpha_grid, "alpha"); }

std::vector<RankSumGrid> scan_rank_sums(const ScanInputs& inputs, Index k, const Eigen::VectorXd& alpha_x,
                                        const Eigen::VectorXd& alpha_z, std::span<const Permutation> permutations) {
  const Index n = inputs.present.rows();
  if (n < 2) throw ConfigError("scan needs N >= 2 realizations");
  if (inputs.driver.rows() != n || inputs.future.rows() != n ||
      (inputs.conditioner.cols() > 0 && inputs.conditioner.rows() != n))
    throw ConfigError("scan blocks must share N");
  check_neighbor_count(k, n);
  if (alpha_x.size() < 1 || alpha_z.size() < 1) throw ConfigError("empty alpha grid");
  if ((alpha_x.array() < 0.0).any() || (alpha_z.array() < 0.0).any()) throw ConfigError("alpha must be nonnegative");
  const bool has_z = inputs.conditioner.cols() > 0;
  if (!has_z && alpha_z.size() != 1) throw ConfigError("alpha_Z grid given without a conditioner block");

  static const Permutation identity;
  const std::span<const Permutation> variants = permutations.empty() ? std::span<const Permutation>(&identity, 1) : permutations;
  check_permutations(variants, n);

  const Index gx = alpha_x.size(), gz = alpha_z.size();
  const auto nv = static_cast<Index>(variants.size());
  const Eigen::VectorXd ax2 = alpha_x.array().square();
  const Eigen::VectorXd az2 = alpha_z.array().square();
  const auto cells = static_cast<std::size_t>(nv * gx * gz);
  const auto un = static_cast<std::size_t>(n);
  const Index m_total = n - 1;

  const std::size_t workers = planned_workers(un, 8);
  std::vector<std::vector<std::uint64_t>> partial(workers, std::vector<std::uint64_t>(cells, 0));

  const Eigen::MatrixXd& x = inputs.driver;
  const Index dx = x.cols();

  parallel_for(
      un,
      [&](std::size_t begin, std::size_t end, std::size_t w) {
        std::vector<double> row(un), dys(un), dzs(un), dxs(un);
        std::vector<Index> ranks_b(un), order, ord(un);
        std::vector<Candidate> heap;
        heap.reserve(static_cast<std::size_t>(k));
        auto& acc = partial[w];

        for (auto i = static_cast<Index>(begin); i < static_cast<Index>(end); ++i) {
          block_squared_distances<double>(inputs.future, i, row);
          rank_row<double>(row, i, ranks_b, order);

          block_squared_distances<double>(inputs.present, i, row);
          Index m = 0;
          for (Index j = 0; j < n; ++j)
            if (j != i) ord[static_cast<std::size_t>(m++)] = j;
          std::sort(ord.begin(), ord.begin() + m_total, DistanceIndexLess<double>{row.data()});
          for (Index q = 0; q < m_total; ++q) dys[static_cast<std::size_t>(q)] = row[static_cast<std::size_t>(ord[static_cast<std::size_t>(q)])];
          if (has_z) {
            block_squared_distances<double>(inputs.conditioner, i, row);
            for (Index q = 0; q < m_total; ++q) dzs[static_cast<std::size_t>(q)] = row[static_cast<std::size_t>(ord[static_cast<std::size_t>(q)])];
          }

          for (Index v = 0; v < nv; ++v) {
            const Permutation& sigma = variants[static_cast<std::size_t>(v)];
            const Index si = sigma.empty() ? i : sigma[static_cast<std::size_t>(i)];
            Index computed = 0;
            // Driver distances in present-space order, filled on demand: the
            // scan below stops once present-space distance alone exceeds the
            // current k-th candidate, so only a short prefix is ever needed.
            auto ensure = [&](Index upto) {
              for (; computed <= upto; ++computed) {
                const Index j = ord[static_cast<std::size_t>(computed)];
                const Index sj = sigma.empty() ? j : sigma[static_cast<std::size_t>(j)];
                double s = 0.0;
                for (Index c = 0; c < dx; ++c) {
                  const double diff = x(sj, c) - x(si, c);
                  s += diff * diff;
                }
                dxs[static_cast<std::size_t>(computed)] = s;
              }
            };

            for (Index a = 0; a < gx; ++a) {
              const double a2 = ax2(a);
              for (Index b = 0; b < gz; ++b) {
                const double z2 = az2(b);
                std::uint64_t sum = 0;
                if (k == 1) {
                  double best = std::numeric_limits<double>::infinity();
                  Index best_j = -1;
                  for (Index q = 0; q < m_total; ++q) {
                    const double y = dys[static_cast<std::size_t>(q)];
                    if (y > best) break;
                    if (q >= computed) ensure(q);
                    double c = a2 * dxs[static_cast<std::size_t>(q)];
                    if (has_z) c = c + z2 * dzs[static_cast<std::size_t>(q)];
                    c = c + y;
                    const Index j = ord[static_cast<std::size_t>(q)];
                    if (c < best || (c == best && j < best_j)) {
                      best = c;
                      best_j = j;
                    }
                  }
                  sum = static_cast<std::uint64_t>(ranks_b[static_cast<std::size_t>(best_j)]);
                } else {
                  heap.clear();
                  for (Index q = 0; q < m_total; ++q) {
                    const double y = dys[static_cast<std::size_t>(q)];
                    const bool full = static_cast<Index>(heap.size()) == k;
                    if (full && y > heap.front().d) break;
                    if (q >= computed) ensure(q);
                    double c = a2 * dxs[static_cast<std::size_t>(q)];
                    if (has_z) c = c + z2 * dzs[static_cast<std::size_t>(q)];
                    c = c + y;
                    const Candidate cand{c, ord[static_cast<std::size_t>(q)]};
                    if (!full) {
                      heap.push_back(cand);
                      std::push_heap(heap.begin(), heap.end());
                    } else if (cand < heap.front()) {
                      std::pop_heap(heap.begin(), heap.end());
                      heap.back() = cand;
                      std::push_heap(heap.begin(), heap.end());
                    }
                  }
                  for (const auto& h : heap) sum += static_cast<std::uint64_t>(ranks_b[static_cast<std::size_t>(h.j)]);
                }
                acc[static_cast<std::size_t>((v * gx + a) * gz + b)] += sum;
              }
            }
          }
        }
      },
      8);

  std::vector<RankSumGrid> out(static_cast<std::size_t>(nv), RankSumGrid::Zero(gx, gz));
  for (const auto& p : partial)
    for (Index v = 0; v < nv; ++v)
      for (Index a = 0; a < gx; ++a)
        for (Index b = 0; b < gz; ++b) out[static_cast<std::size_t>(v)](a, b) += p[static_cast<std::size_t>((v * gx + a) * gz + b)];
  return out;
}

std::vector<ImbalanceProfile> scan_alpha_permuted(const TrajectoryEnsemble& ensemble, const SystemView& driver,
                                                  const SystemView& driven, const ScanConfig& config,
                                                  std::span<const Permutation> permutations) {
  check_disjoint({&driver, &driven});
  config.validate_grid();
  const Index n = ensemble.realizations();
  check_neighbor_count(config.k, n);
  const Index t0 = resolve_t0(ensemble, config, {&driver, &driven});

  ScanInputs inputs;
  inputs.driver = view_at(ensemble, driver, t0).points;
  inputs.present = view_at(ensemble, driven, t0).points;
  inputs.future = view_at(ensemble, driven, t0 + config.tau).points;
  const Eigen::VectorXd no_z = Eigen::VectorXd::Zero(1);
  const auto sums = scan_rank_sums(inputs, config.k, config.alpha_grid, no_z, permutations);

  std::vector<ImbalanceProfile> profiles;
  profiles.reserve(sums.size());
  for (const auto& s : sums) {
    ImbalanceProfile p;
    p.alpha_grid = config.alpha_grid;
    p.delta.resize(config.alpha_grid.size());
    for (Index a = 0; a < p.delta.size(); ++a) p.delta(a) = imbalance_from_rank_sum(s(a, 0), n, config.k);
    p.k = config.k;
    p.tau = config.tau;
    p.t0 = t0;
    p.n = n;
    p.driver = driver.group;
    p.driven = driven.group;
    profiles.push_back(std::move(p));
  }
  return profiles;
}

ImbalanceProfile scan_alpha(const TrajectoryEnsemble& ensemble, const SystemView& driver, const SystemView& driven,
                            const ScanConfig& config) {
  return std::move(scan_alpha_permuted(ensemble, driver, driven, config, {}).front());
}

GainEstimate imbalance_gain(const ImbalanceProfile& profile) {
  if (profile.delta.size() < 1 || profile.delta.size() != profile.alpha_grid.size())
    throw ConfigError("malformed imbalance profile");
  const double d0 = profile.delta(0);
  if (!(d0 > 0.0)) throw InternalError("imbalance profile has Delta(alpha=0) <= 0");
  Index best = 0;
  for (Index a = 1; a < profile.delta.size(); ++a)
    if (profile.delta(a) < profile.delta(best)) best = a;
  GainEstimate est;
  est.gain = (d0 - profile.delta(best)) / d0;
  est.alpha_index = best;
  est.alpha_opt = profile.alpha_grid(best);
  est.profile = profile;
  return est;
}

std::vector<ConditionalGainEstimate> conditional_scan_permuted(const TrajectoryEnsemble& ensemble,
                                                               const SystemView& driver, const SystemView& conditioner,
                                                               const SystemView& driven, const ScanConfig& config,
                                                               const Eigen::VectorXd& alpha_z_grid,
                                                               std::span<const Permutation> permutations) {
  check_disjoint({&driver, &conditioner, &driven});
  config.validate_grid();
  validate_grid(alpha_z_grid, "alpha_Z");
  const Index n = ensemble.realizations();
  check_neighbor_count(config.k, n);
  const Index t0 = resolve_t0(ensemble, config, {&driver, &conditioner, &driven});

  ScanInputs inputs;
  inputs.driver = view_at(ensemble, driver, t0).points;
  inputs.conditioner = view_at(ensemble, conditioner, t0).points;
  inputs.present = view_at(ensemble, driven, t0).points;
  inputs.future = view_at(ensemble, driven, t0 + config.tau).points;
  const auto sums = scan_rank_sums(inputs, config.k, config.alpha_grid, alpha_z_grid, permutations);

  std::vector<ConditionalGainEstimate> out;
  for (const auto& s : sums) {
    ConditionalGainEstimate e;
    e.alpha_x_grid = config.alpha_grid;
    e.alpha_z_grid = alpha_z_grid;
    e.surface.resize(s.rows(), s.cols());
    for (Index a = 0; a < s.rows(); ++a)
      for (Index b = 0; b < s.cols(); ++b) e.surface(a, b) = imbalance_from_rank_sum(s(a, b), n, config.k);
    Index zb = 0;
    for (Index b = 1; b < s.cols(); ++b)
      if (e.surface(0, b) < e.surface(0, zb)) zb = b;
    Index na = 0, nb = 0;
    for (Index a = 0; a < s.rows(); ++a)
      for (Index b = 0; b < s.cols(); ++b)
        if (e.surface(a, b) < e.surface(na, nb)) {
          na = a;
          nb = b;
        }
    e.denominator = e.surface(0, zb);
    e.numerator = e.surface(na, nb);
    if (!(e.denominator > 0.0)) throw InternalError("conditional baseline Delta <= 0");
    e.gain = (e.denominator - e.numerator) / e.denominator;
    e.baseline_alpha_z = alpha_z_grid(zb);
    e.alpha_x_opt = config.alpha_grid(na);
    e.alpha_z_opt = alpha_z_grid(nb);
    e.k = config.k;
    e.tau = config.tau;
    e.t0 = t0;
    e.n = n;
    e.driver = driver.group;
    e.conditioner = conditioner.group;
    e.driven = driven.group;
    out.push_back(std::move(e));
  }
  return out;
}

ConditionalGainEstimate conditional_scan(const TrajectoryEnsemble& ensemble, const SystemView& driver,
                                         const SystemView& conditioner, const SystemView& driven,
                                         const ScanConfig& config, const Eigen::VectorXd& alpha_z_grid) {
  return std::move(conditional_scan_permuted(ensemble, driver, conditioner, driven, config, alpha_z_grid, {}).front());
}

namespace {

AverageGain average_curves(const Eigen::MatrixXd& rel, const Eigen::VectorXd& grid) {
  // rel: estimates x grid relative gains
  AverageGain out;
  const Index ne = rel.rows();
  out.mean_curve = rel.colwise().mean().transpose();
  Index best = 0;
  for (Index a = 1; a < out.mean_curve.size(); ++a)
    if (out.mean_curve(a) > out.mean_curve(best)) best = a;
  out.alpha_index = best;
  out.alpha_shared = grid(best);
  out.per_estimate = rel.col(best);
  out.gain = out.mean_curve(best);
  if (ne > 1) {
    const double var = (out.per_estimate.array() - out.gain).square().sum() / static_cast<double>(ne - 1);
    out.standard_error = std::sqrt(var / static_cast<double>(ne));
  }
  return out;
}

}  // namespace

AverageGain average_gain(std::span<const ImbalanceProfile> profiles) {
  if (profiles.empty()) throw ConfigError("average_gain needs at least one profile");
  const auto& ref = profiles.front();
  const Index g = ref.alpha_grid.size();
  Eigen::MatrixXd rel(static_cast<Index>(profiles.size()), g);
  for (std::size_t e = 0; e < profiles.size(); ++e) {
    const auto& p = profiles[e];
    if (p.alpha_grid.size() != g || p.alpha_grid != ref.alpha_grid)
      throw ConfigError("average_gain: heterogeneous alpha grids");
    if (p.k != ref.k || p.tau != ref.tau) throw ConfigError("average_gain: heterogeneous scan configs");
    const double d0 = p.delta(0);
    if (!(d0 > 0.0)) throw InternalError("imbalance profile has Delta(alpha=0) <= 0");
    for (Index a = 0; a < g; ++a) rel(static_cast<Index>(e), a) = (d0 - p.delta(a)) / d0;
  }
  return average_curves(rel, ref.alpha_grid);
}

AverageGain average_conditional_gain(std::span<const ConditionalGainEstimate> estimates) {
  if (estimates.empty()) throw ConfigError("average_conditional_gain needs at least one estimate");
  const auto& ref = estimates.front();
  const Index g = ref.alpha_x_grid.size();
  Eigen::MatrixXd rel(static_cast<Index>(estimates.size()), g);
  for (std::size_t e = 0; e < estimates.size(); ++e) {
    const auto& c = estimates[e];
    if (c.alpha_x_grid != ref.alpha_x_grid || c.alpha_z_grid != ref.alpha_z_grid)
      throw ConfigError("average_conditional_gain: heterogeneous grids");
    for (Index a = 0; a < g; ++a) {
      const double m = c.surface.row(a).minCoeff();
      rel(static_cast<Index>(e), a) = (c.denominator - m) / c.denominator;
    }
  }
  return average_curves(rel, ref.alpha_x_grid);
}

std::vector<GainEstimate> tau_scan(const TrajectoryEnsemble& ensemble, const SystemView& driver,
                                   const SystemView& driven, const ScanConfig& config, std::span<const Index> taus) {
  if (taus.empty()) throw ConfigError("tau list is empty");
  std::vector<GainEstimate> out;
  for (Index tau : taus) {
    ScanConfig c = config;
    c.tau = tau;
    out.push_back(imbalance_gain(scan_alpha(ensemble, driver, driven, c)));
  }
  return out;
}

std::vector<TauPoint> tau_scan(std::span<const TrajectoryEnsemble> ensembles, const SystemView& driver,
                               const SystemView& driven, const ScanConfig& config, std::span<const Index> taus) {
  if (taus.empty()) throw ConfigError("tau list is empty");
  if (ensembles.empty()) throw ConfigError("no ensembles given");
  std::vector<TauPoint> out;
  for (Index tau : taus) {
    ScanConfig c = config;
    c.tau = tau;
    std::vector<ImbalanceProfile> profiles;
    for (const auto& e : ensembles) profiles.push_back(scan_alpha(e, driver, driven, c));
    out.push_back({tau, average_gain(profiles)});
  }
  return out;
}

}  // namespace rankcause
