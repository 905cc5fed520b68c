#pragma once

#include "rankcause/baselines.hpp"
#include "rankcause/benchmark.hpp"
#include "rankcause/dynsys.hpp"
#include "rankcause/gain.hpp"
#include "rankcause/stats.hpp"

#include <json.hpp>

#include <ostream>
#include <string>

namespace rankcause {

using Json = nlohmann::ordered_json;

Json to_json(const ScanConfig& config);
ScanConfig scan_config_from_json(const Json& j);

Json to_json(const ImbalanceProfile& profile);
ImbalanceProfile profile_from_json(const Json& j);
Json to_json(const GainEstimate& estimate);
Json to_json(const ConditionalGainEstimate& estimate);
Json to_json(const AverageGain& average);
Json to_json(const PermutationTestResult& result);
Json to_json(const TTestResult& result);
Json to_json(const FprReport& report);
Json to_json(const BaselineResult& result);
Json to_json(const BenchmarkResult& result);

Json to_json(const SystemSpec& spec);
// Rejects unknown keys; missing keys keep the family defaults.
SystemSpec system_spec_from_json(const Json& j);

// Shortest round-trip decimal form.
std::string format_number(double value);

void write_profile_csv(std::ostream& out, const ImbalanceProfile& profile);                // alpha,delta
void write_tau_csv(std::ostream& out, const std::vector<TauPoint>& points);                // tau,gain,se
void write_fpr_csv(std::ostream& out, const FprReport& report);                            // rows + summary
void write_sweep_csv(std::ostream& out, const FprReport& report);                          // p_threshold,fpr
void write_curves_csv(std::ostream& out, const std::vector<CurvePoint>& curves);           // method,direction,eps,mean,se

}  // namespace rankcause
