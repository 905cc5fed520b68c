#pragma once

#include "rankcause/baselines.hpp"
#include "rankcause/dynsys.hpp"
#include "rankcause/gain.hpp"
#include "rankcause/stats.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rankcause {

enum class Method { gain, measure_L, egc, ccm, transfer_entropy };

std::string to_string(Method method);
Method method_from_string(const std::string& name);

// Independent realizations cut from one long run of a benchmark system.
struct EnsembleProtocol {
  Index n_realizations = 2000;
  Index sub_length = 21;
  Index gap = 0;

  Index samples_needed() const { return n_realizations * (sub_length + gap); }
};

TrajectoryEnsemble ensemble_from_trajectory(const Trajectory& trajectory, const EnsembleProtocol& protocol);
TrajectoryEnsemble simulate_ensemble(SystemSpec spec, const EnsembleProtocol& protocol);

// Sets one coupling: eps_xy / eps_yx (pairs), eps (Lorenz 96), or
// "A->B" for a Rossler network link.
SystemSpec with_coupling(SystemSpec spec, const std::string& parameter, double value);

struct Direction {
  std::string driver = "X";
  std::string driven = "Y";

  std::string label() const { return driver + "->" + driven; }
};

struct MethodSettings {
  ScanConfig scan;         // gain: k, tau, alpha grid; tau is shared with TE
  bool embedded = false;   // gain on delay embeddings instead of all coordinates
  Index embed_dimension = 3;
  Index embed_lag = 1;
  Index embed_variable = 0;  // position of the embedded variable inside each group
  Index k_L = 5;
  Index k_te = 3;
  EgcOptions egc;
  CcmOptions ccm;
  Index series_length = 0;  // samples of the long run given to EGC / CCM; 0 means all
};

struct MethodValue {
  double value = 0.0;
  std::optional<ImbalanceProfile> profile;  // gain only
};

MethodValue evaluate_method(Method method, const Trajectory& run, const TrajectoryEnsemble& ensemble,
                            const Direction& direction, const MethodSettings& settings, std::uint64_t seed);

struct BenchmarkSpec {
  SystemSpec system;
  std::string coupling = "eps_xy";
  std::vector<double> eps_grid;
  Index n_estimates = 10;
  EnsembleProtocol ensemble;
  std::vector<Method> methods{Method::gain};
  MethodSettings settings;
  std::vector<Direction> directions{{"X", "Y"}, {"Y", "X"}};
  Direction null_direction{"Y", "X"};  // the direction without a causal link
  double p_threshold = 0.001;
  std::vector<double> sweep;
  std::optional<double> eps_cutoff;  // FPR uses only eps < cutoff
  std::uint64_t seed = 0;
};

struct CurvePoint {
  std::string method;
  std::string direction;
  double eps = 0.0;
  double mean = 0.0;
  double se = 0.0;
  std::optional<double> alpha_shared;
  std::vector<double> estimates;  // gain: relative gains at alpha_shared
  std::vector<std::string> failures;
};

struct BenchmarkResult {
  std::vector<CurvePoint> curves;
  std::vector<FprReport> fpr;
  Index total_cells = 0;
  Index failed_cells = 0;
  std::vector<std::string> warnings;
};

BenchmarkResult run_benchmark(const BenchmarkSpec& spec);

}  // namespace rankcause
