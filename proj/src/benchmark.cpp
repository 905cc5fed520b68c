#include "rankcause/benchmark.hpp"

#include "rankcause/error.hpp"
#include "rankcause/random.hpp"

#include <cmath>
#include <map>

namespace rankcause {

std::string to_string(Method method) {
  switch (method) {
    case Method::gain: return "gain";
    case Method::measure_L: return "measure_L";
    case Method::egc: return "egc";
    case Method::ccm: return "ccm";
    case Method::transfer_entropy: return "transfer_entropy";
  }
  throw InternalError("unknown method");
}

Method method_from_string(const std::string& name) {
  if (name == "gain") return Method::gain;
  if (name == "measure_L" || name == "L") return Method::measure_L;
  if (name == "egc") return Method::egc;
  if (name == "ccm") return Method::ccm;
  if (name == "transfer_entropy" || name == "te") return Method::transfer_entropy;
  throw ConfigError("unknown method '" + name + "'");
}

TrajectoryEnsemble ensemble_from_trajectory(const Trajectory& trajectory, const EnsembleProtocol& p) {
  if (p.n_realizations < 2 || p.sub_length < 1 || p.gap < 0) throw ConfigError("invalid ensemble protocol");
  if (trajectory.samples.rows() < p.samples_needed())
    throw ConfigError("trajectory too short for the ensemble protocol");
  return split_series(trajectory.samples.topRows(p.samples_needed()), p.n_realizations, p.gap, trajectory.groups,
                      trajectory.sampling_step, trajectory.seed, trajectory.variable_names);
}

TrajectoryEnsemble simulate_ensemble(SystemSpec spec, const EnsembleProtocol& protocol) {
  spec.n_samples = protocol.samples_needed();
  return ensemble_from_trajectory(simulate(spec), protocol);
}

SystemSpec with_coupling(SystemSpec spec, const std::string& parameter, double value) {
  if (auto* r = std::get_if<RosslerParams>(&spec.params)) {
    if (parameter == "eps_xy") r->eps_xy = value;
    else if (parameter == "eps_yx") r->eps_yx = value;
    else throw ConfigError("unknown Rossler coupling '" + parameter + "'");
  } else if (auto* l = std::get_if<LorenzParams>(&spec.params)) {
    if (parameter == "eps_xy") l->eps_xy = value;
    else if (parameter == "eps_yx") l->eps_yx = value;
    else throw ConfigError("unknown Lorenz coupling '" + parameter + "'");
  } else if (auto* l96 = std::get_if<Lorenz96Params>(&spec.params)) {
    if (parameter == "eps" || parameter == "eps_xy") l96->eps = value;
    else throw ConfigError("unknown Lorenz 96 coupling '" + parameter + "'");
  } else {
    auto& n = std::get<RosslerNetworkParams>(spec.params);
    const auto arrow = parameter.find("->");
    if (arrow == std::string::npos) throw ConfigError("network coupling must be written 'A->B'");
    const Index from = n.index_of(parameter.substr(0, arrow));
    const Index to = n.index_of(parameter.substr(arrow + 2));
    n.coupling(to, from) = value;
  }
  return spec;
}

namespace {

Index group_variable(const TrajectoryEnsemble& e, const std::string& group, Index position) {
  const auto& vars = e.group(group);
  if (position < 0 || position >= static_cast<Index>(vars.size()))
    throw ConfigError("embedded variable position out of range for group '" + group + "'");
  return vars[static_cast<std::size_t>(position)];
}

std::vector<double> column(const Trajectory& run, Index var, Index length) {
  const Index n = length > 0 ? std::min(length, run.samples.rows()) : run.samples.rows();
  std::vector<double> out(static_cast<std::size_t>(n));
  for (Index t = 0; t < n; ++t) out[static_cast<std::size_t>(t)] = run.samples(t, var);
  return out;
}

}  // namespace

MethodValue evaluate_method(Method method, const Trajectory& run, const TrajectoryEnsemble& ensemble,
                            const Direction& d, const MethodSettings& s, std::uint64_t seed) {
  MethodValue out;
  const EmbeddingSpec drv{group_variable(ensemble, d.driver, s.embed_variable), s.embed_dimension, s.embed_lag};
  const EmbeddingSpec dvn{group_variable(ensemble, d.driven, s.embed_variable), s.embed_dimension, s.embed_lag};
  switch (method) {
    case Method::gain: {
      SystemView a{d.driver, std::nullopt}, b{d.driven, std::nullopt};
      if (s.embedded) {
        a.embedding = drv;
        b.embedding = dvn;
      }
      auto profile = scan_alpha(ensemble, a, b, s.scan);
      out.value = imbalance_gain(profile).gain;
      out.profile = std::move(profile);
      break;
    }
    case Method::measure_L: {
      const Index t0 = drv.window();
      out.value = measure_L(delay_embed(ensemble, drv, t0).points, delay_embed(ensemble, dvn, t0).points, s.k_L, 0);
      break;
    }
    case Method::transfer_entropy: {
      const Index t0 = drv.window();
      out.value = transfer_entropy(delay_embed(ensemble, drv, t0).points, delay_embed(ensemble, dvn, t0 + s.scan.tau).points,
                                   delay_embed(ensemble, dvn, t0).points, s.k_te);
      break;
    }
    case Method::egc: {
      EgcOptions o = s.egc;
      o.seed = derive_seed(seed, "egc");
      out.value = extended_granger(column(run, drv.variable_index, s.series_length),
                                   column(run, dvn.variable_index, s.series_length), o)
                      .index;
      break;
    }
    case Method::ccm: {
      CcmOptions o = s.ccm;
      o.seed = derive_seed(seed, "ccm");
      const auto x = column(run, drv.variable_index, s.series_length);
      const auto y = column(run, dvn.variable_index, s.series_length);
      if (o.library_lengths.empty())
        o.library_lengths = {std::min<Index>(static_cast<Index>(y.size()) - (o.dimension - 1) * o.lag, 1000)};
      out.value = ccm(x, y, o).converged();
      break;
    }
  }
  return out;
}

BenchmarkResult run_benchmark(const BenchmarkSpec& spec) {
  if (spec.eps_grid.empty()) throw ConfigError("benchmark needs a non-empty eps grid");
  if (spec.n_estimates < 2) throw ConfigError("benchmark needs n_estimates >= 2");
  if (spec.methods.empty()) throw ConfigError("benchmark needs at least one method");
  spec.system.validate();
  t_threshold(spec.p_threshold, spec.n_estimates - 1);

  const std::size_t ne = spec.eps_grid.size(), nm = spec.methods.size(), nd = spec.directions.size();
  // values[e][m][d] -> per-estimate values; profiles for gain.
  struct Slot {
    std::vector<double> values;
    std::vector<ImbalanceProfile> profiles;
    std::vector<std::string> failures;
  };
  std::vector<Slot> slots(ne * nm * nd);
  auto slot = [&](std::size_t e, std::size_t m, std::size_t d) -> Slot& { return slots[(e * nm + m) * nd + d]; };

  BenchmarkResult result;
  for (std::size_t e = 0; e < ne; ++e) {
    for (Index i = 0; i < spec.n_estimates; ++i) {
      ++result.total_cells;
      const std::uint64_t cell_seed = fpr_cell_seed(spec.seed, e, i);
      SystemSpec sys = with_coupling(spec.system, spec.coupling, spec.eps_grid[e]);
      sys.seed = derive_seed(cell_seed, "system");
      sys.n_samples = std::max(spec.ensemble.samples_needed(), spec.settings.series_length);
      std::optional<Trajectory> run;
      std::optional<TrajectoryEnsemble> ensemble;
      std::string failure;
      try {
        run = simulate(sys);
        ensemble = ensemble_from_trajectory(*run, spec.ensemble);
      } catch (const SimulationError& err) {
        failure = err.what();
      }
      if (!run) {
        ++result.failed_cells;
        for (std::size_t m = 0; m < nm; ++m)
          for (std::size_t d = 0; d < nd; ++d) slot(e, m, d).failures.push_back(failure);
        continue;
      }
      for (std::size_t m = 0; m < nm; ++m)
        for (std::size_t d = 0; d < nd; ++d) {
          auto& sl = slot(e, m, d);
          try {
            auto v = evaluate_method(spec.methods[m], *run, *ensemble, spec.directions[d], spec.settings,
                                     derive_seed(cell_seed, "method", {m, d}));
            sl.values.push_back(v.value);
            if (v.profile) sl.profiles.push_back(std::move(*v.profile));
          } catch (const DataError& err) {
            sl.failures.push_back(err.what());
          }
        }
    }
  }

  FprOptions fo;
  fo.p_threshold = spec.p_threshold;
  fo.sweep = spec.sweep;
  fo.seed = spec.seed;
  fo.direction = spec.null_direction.label();
  for (std::size_t m = 0; m < nm; ++m) {
    std::vector<FprRow> rows;
    for (std::size_t d = 0; d < nd; ++d) {
      for (std::size_t e = 0; e < ne; ++e) {
        auto& sl = slot(e, m, d);
        CurvePoint cp;
        cp.method = to_string(spec.methods[m]);
        cp.direction = spec.directions[d].label();
        cp.eps = spec.eps_grid[e];
        cp.failures = sl.failures;
        if (!sl.profiles.empty()) {
          const AverageGain avg = average_gain(sl.profiles);
          cp.mean = avg.gain;
          cp.se = avg.standard_error;
          cp.alpha_shared = avg.alpha_shared;
          cp.estimates.assign(avg.per_estimate.data(), avg.per_estimate.data() + avg.per_estimate.size());
        } else if (!sl.values.empty()) {
          cp.estimates = sl.values;
          const double n = static_cast<double>(sl.values.size());
          double mean = 0.0;
          for (double v : sl.values) mean += v;
          mean /= n;
          double ss = 0.0;
          for (double v : sl.values) ss += (v - mean) * (v - mean);
          cp.mean = mean;
          cp.se = sl.values.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
        }
        if (spec.directions[d].label() == spec.null_direction.label() &&
            (!spec.eps_cutoff || spec.eps_grid[e] < *spec.eps_cutoff)) {
          FprRow row;
          row.eps = cp.eps;
          row.estimates = cp.estimates;
          row.failures = cp.failures;
          rows.push_back(std::move(row));
        }
        result.curves.push_back(std::move(cp));
      }
    }
    fo.method = to_string(spec.methods[m]);
    if (!rows.empty()) result.fpr.push_back(summarize_fpr(std::move(rows), fo));
  }
  if (result.failed_cells > 0)
    result.warnings.push_back(std::to_string(result.failed_cells) + " of " + std::to_string(result.total_cells) +
                              " simulation cells failed");
  return result;
}

}  // namespace rankcause
