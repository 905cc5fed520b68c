#include "rankcause/report.hpp"

#include "rankcause/error.hpp"

#include <charconv>
#include <cmath>
#include <set>

namespace rankcause {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

namespace {

Json vec(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vec_from(const Json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array of numbers");
  Eigen::VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(std::string(what) + " must be an array of numbers");
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  return v;
}

// JSON has no infinity; a non-finite t statistic is written as a string.
Json number(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& context) {
  if (!j.is_object()) throw ConfigError(context + " must be a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items())
    if (!ok.count(key)) throw ConfigError("unknown key '" + key + "' in " + context);
}

template <typename T>
T get(const Json& j, const char* key, const std::string& context) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("key '" + std::string(key) + "' in " + context + " is missing or has the wrong type");
  }
}

template <typename T>
void maybe(const Json& j, const char* key, T& target, const std::string& context) {
  if (j.contains(key)) target = get<T>(j, key, context);
}

}  // namespace

Json to_json(const ScanConfig& c) {
  Json j;
  j["k"] = c.k;
  j["tau"] = c.tau;
  j["alpha_grid"] = vec(c.alpha_grid);
  j["t0"] = c.t0 ? Json(*c.t0) : Json(nullptr);
  return j;
}

ScanConfig scan_config_from_json(const Json& j) {
  check_keys(j, {"k", "tau", "alpha_grid", "t0"}, "scan config");
  ScanConfig c;
  maybe(j, "k", c.k, "scan config");
  maybe(j, "tau", c.tau, "scan config");
  if (j.contains("alpha_grid")) c.alpha_grid = vec_from(j["alpha_grid"], "alpha_grid");
  if (j.contains("t0") && !j["t0"].is_null()) c.t0 = get<Index>(j, "t0", "scan config");
  return c;
}

Json to_json(const ImbalanceProfile& p) {
  Json j;
  j["driver"] = p.driver;
  j["driven"] = p.driven;
  j["k"] = p.k;
  j["tau"] = p.tau;
  j["t0"] = p.t0;
  j["n"] = p.n;
  j["alpha_grid"] = vec(p.alpha_grid);
  j["delta"] = vec(p.delta);
  return j;
}

ImbalanceProfile profile_from_json(const Json& j) {
  try {
    ImbalanceProfile p;
    p.driver = j.at("driver").get<std::string>();
    p.driven = j.at("driven").get<std::string>();
    p.k = j.at("k").get<Index>();
    p.tau = j.at("tau").get<Index>();
    p.t0 = j.value("t0", Index{0});
    p.n = j.value("n", Index{0});
    p.alpha_grid = vec_from(j.at("alpha_grid"), "alpha_grid");
    p.delta = vec_from(j.at("delta"), "delta");
    if (p.alpha_grid.size() != p.delta.size()) throw DataError("profile alpha_grid and delta lengths differ");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed profile: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("malformed profile: ") + e.what());
  }
}

Json to_json(const GainEstimate& e) {
  Json j;
  j["direction"] = e.profile.driver + "->" + e.profile.driven;
  j["gain"] = e.gain;
  j["alpha_opt"] = e.alpha_opt;
  j["p_value"] = e.p_value ? Json(*e.p_value) : Json(nullptr);
  j["profile"] = to_json(e.profile);
  return j;
}

Json to_json(const ConditionalGainEstimate& e) {
  Json j;
  j["direction"] = e.driver + "->" + e.driven + "|" + e.conditioner;
  j["gain"] = e.gain;
  j["alpha_x_opt"] = e.alpha_x_opt;
  j["alpha_z_opt"] = e.alpha_z_opt;
  j["baseline_alpha_z"] = e.baseline_alpha_z;
  j["numerator"] = e.numerator;
  j["denominator"] = e.denominator;
  j["p_value"] = e.p_value ? Json(*e.p_value) : Json(nullptr);
  j["k"] = e.k;
  j["tau"] = e.tau;
  j["t0"] = e.t0;
  j["n"] = e.n;
  j["alpha_x_grid"] = vec(e.alpha_x_grid);
  j["alpha_z_grid"] = vec(e.alpha_z_grid);
  Json rows = Json::array();
  for (Index a = 0; a < e.surface.rows(); ++a) rows.push_back(vec(e.surface.row(a).transpose()));
  j["surface"] = rows;
  return j;
}

Json to_json(const AverageGain& a) {
  Json j;
  j["gain"] = a.gain;
  j["standard_error"] = a.standard_error;
  j["alpha_shared"] = a.alpha_shared;
  j["mean_curve"] = vec(a.mean_curve);
  j["per_estimate"] = vec(a.per_estimate);
  return j;
}

Json to_json(const PermutationTestResult& r) {
  Json j;
  j["observed_gain"] = r.observed_gain;
  j["p_value"] = r.p_value;
  j["n_perms"] = r.null_samples.size();
  j["small_sample"] = r.small_sample;
  j["null_samples"] = vec(r.null_samples);
  return j;
}

Json to_json(const TTestResult& r) {
  Json j;
  j["t_stat"] = number(r.t_stat);
  j["mean"] = r.mean;
  j["sd"] = r.sd;
  j["n"] = r.n;
  j["threshold"] = r.threshold;
  j["reject"] = r.reject;
  j["infinite"] = r.infinite;
  return j;
}

Json to_json(const FprReport& r) {
  Json j;
  j["method"] = r.method;
  j["direction"] = r.direction;
  j["p_threshold"] = r.p_threshold;
  j["rejections"] = r.rejections;
  j["tested"] = r.tested;
  j["fpr"] = r.fpr;
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    Json x;
    x["eps"] = row.eps;
    x["valid"] = row.valid;
    x["estimates"] = row.estimates;
    x["failures"] = row.failures;
    if (row.valid) x["test"] = to_json(row.test);
    rows.push_back(x);
  }
  j["rows"] = rows;
  Json sweep = Json::array();
  for (const auto& s : r.sweep) sweep.push_back({{"p_threshold", s.p_threshold}, {"fpr", s.fpr}});
  j["sweep"] = sweep;
  return j;
}

Json to_json(const BaselineResult& r) {
  Json j;
  j["method"] = r.method;
  j["direction"] = r.driver + "->" + r.driven;
  j["value"] = r.value;
  Json p = Json::object();
  for (const auto& [k, v] : r.params) p[k] = v;
  j["params"] = p;
  return j;
}

Json to_json(const BenchmarkResult& r) {
  Json j;
  j["total_cells"] = r.total_cells;
  j["failed_cells"] = r.failed_cells;
  j["warnings"] = r.warnings;
  Json curves = Json::array();
  for (const auto& c : r.curves) {
    Json x;
    x["method"] = c.method;
    x["direction"] = c.direction;
    x["eps"] = c.eps;
    x["mean"] = c.mean;
    x["se"] = c.se;
    x["alpha_shared"] = c.alpha_shared ? Json(*c.alpha_shared) : Json(nullptr);
    x["estimates"] = c.estimates;
    x["failures"] = c.failures;
    curves.push_back(x);
  }
  j["curves"] = curves;
  Json fpr = Json::array();
  for (const auto& f : r.fpr) fpr.push_back(to_json(f));
  j["fpr"] = fpr;
  return j;
}

Json to_json(const SystemSpec& s) {
  Json j;
  j["family"] = to_string(s.family);
  Json p;
  std::visit(
      [&](const auto& v) {
        using P = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<P, RosslerParams>) {
          p = {{"omega1", v.omega1}, {"omega2", v.omega2}, {"eps_xy", v.eps_xy}, {"eps_yx", v.eps_yx}};
        } else if constexpr (std::is_same_v<P, LorenzParams>) {
          p = {{"eps_xy", v.eps_xy}, {"eps_yx", v.eps_yx}};
        } else if constexpr (std::is_same_v<P, Lorenz96Params>) {
          p = {{"forcing_x", v.forcing_x}, {"forcing_y", v.forcing_y}, {"eps", v.eps},
               {"omega_tilde", v.omega_tilde}, {"dimension", v.dimension}};
        } else {
          p["systems"] = v.systems;
          p["omegas"] = v.omegas;
          Json rows = Json::array();
          for (Index r = 0; r < v.coupling.rows(); ++r) rows.push_back(vec(v.coupling.row(r).transpose()));
          p["coupling"] = rows;
        }
      },
      s.params);
  j["params"] = p;
  j["dt"] = s.dt;
  j["downsample"] = s.downsample;
  j["transient"] = s.transient;
  j["n_samples"] = s.n_samples;
  j["seed"] = s.seed;
  j["integrator"] = s.integrator == Integrator::rk4 ? "rk4" : "euler";
  if (s.noise) {
    j["noise"] = {{"kind", s.noise->kind == NoiseKind::measurement ? "measurement" : "dynamical"},
                  {"amplitude", s.noise->amplitude},
                  {"targets", s.noise->targets}};
  } else {
    j["noise"] = nullptr;
  }
  j["initial_state"] = s.initial_state ? vec(*s.initial_state) : Json(nullptr);
  return j;
}

SystemSpec system_spec_from_json(const Json& j) {
  const std::string ctx = "system spec";
  check_keys(j, {"family", "params", "dt", "downsample", "transient", "n_samples", "seed", "integrator", "noise",
                 "initial_state"},
             ctx);
  SystemSpec s = default_spec(family_from_string(get<std::string>(j, "family", ctx)));
  if (j.contains("params")) {
    const Json& p = j["params"];
    const std::string pc = "params of " + to_string(s.family);
    std::visit(
        [&](auto& v) {
          using P = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<P, RosslerParams>) {
            check_keys(p, {"omega1", "omega2", "eps_xy", "eps_yx"}, pc);
            maybe(p, "omega1", v.omega1, pc);
            maybe(p, "omega2", v.omega2, pc);
            maybe(p, "eps_xy", v.eps_xy, pc);
            maybe(p, "eps_yx", v.eps_yx, pc);
          } else if constexpr (std::is_same_v<P, LorenzParams>) {
            check_keys(p, {"eps_xy", "eps_yx"}, pc);
            maybe(p, "eps_xy", v.eps_xy, pc);
            maybe(p, "eps_yx", v.eps_yx, pc);
          } else if constexpr (std::is_same_v<P, Lorenz96Params>) {
            check_keys(p, {"forcing_x", "forcing_y", "eps", "omega_tilde", "dimension"}, pc);
            maybe(p, "forcing_x", v.forcing_x, pc);
            maybe(p, "forcing_y", v.forcing_y, pc);
            maybe(p, "eps", v.eps, pc);
            maybe(p, "omega_tilde", v.omega_tilde, pc);
            maybe(p, "dimension", v.dimension, pc);
          } else {
            check_keys(p, {"systems", "omegas", "coupling"}, pc);
            maybe(p, "systems", v.systems, pc);
            maybe(p, "omegas", v.omegas, pc);
            const auto m = static_cast<Index>(v.systems.size());
            if (p.contains("coupling")) {
              const Json& c = p["coupling"];
              if (!c.is_array() || static_cast<Index>(c.size()) != m) throw ConfigError("coupling must be an M x M array");
              v.coupling.resize(m, m);
              for (Index r = 0; r < m; ++r) {
                const Eigen::VectorXd row = vec_from(c[static_cast<std::size_t>(r)], "coupling row");
                if (row.size() != m) throw ConfigError("coupling must be an M x M array");
                v.coupling.row(r) = row.transpose();
              }
            } else if (v.coupling.rows() != m) {
              v.coupling = Eigen::MatrixXd::Zero(m, m);
            }
          }
        },
        s.params);
  }
  maybe(j, "dt", s.dt, ctx);
  maybe(j, "downsample", s.downsample, ctx);
  maybe(j, "transient", s.transient, ctx);
  maybe(j, "n_samples", s.n_samples, ctx);
  maybe(j, "seed", s.seed, ctx);
  if (j.contains("integrator")) {
    const auto name = get<std::string>(j, "integrator", ctx);
    if (name == "rk4") s.integrator = Integrator::rk4;
    else if (name == "euler") s.integrator = Integrator::euler;
    else throw ConfigError("unknown integrator '" + name + "'");
  }
  if (j.contains("noise") && !j["noise"].is_null()) {
    const Json& n = j["noise"];
    check_keys(n, {"kind", "amplitude", "targets"}, "noise");
    NoiseSpec ns;
    const auto kind = get<std::string>(n, "kind", "noise");
    if (kind == "measurement") ns.kind = NoiseKind::measurement;
    else if (kind == "dynamical") ns.kind = NoiseKind::dynamical;
    else throw ConfigError("unknown noise kind '" + kind + "'");
    ns.amplitude = get<double>(n, "amplitude", "noise");
    maybe(n, "targets", ns.targets, "noise");
    s.noise = ns;
  }
  if (j.contains("initial_state") && !j["initial_state"].is_null())
    s.initial_state = vec_from(j["initial_state"], "initial_state");
  s.validate();
  return s;
}

void write_profile_csv(std::ostream& out, const ImbalanceProfile& p) {
  out << "alpha,delta\n";
  for (Index a = 0; a < p.delta.size(); ++a) out << format_number(p.alpha_grid(a)) << ',' << format_number(p.delta(a)) << '\n';
}

void write_tau_csv(std::ostream& out, const std::vector<TauPoint>& points) {
  out << "tau,gain,se\n";
  for (const auto& p : points)
    out << p.tau << ',' << format_number(p.average.gain) << ',' << format_number(p.average.standard_error) << '\n';
}

void write_fpr_csv(std::ostream& out, const FprReport& r) {
  out << "method,direction,eps,estimate,value\n";
  for (const auto& row : r.rows)
    for (std::size_t i = 0; i < row.estimates.size(); ++i)
      out << r.method << ',' << r.direction << ',' << format_number(row.eps) << ',' << i << ','
          << format_number(row.estimates[i]) << '\n';
  out << "\nmethod,direction,eps,t_stat,threshold,reject,valid\n";
  for (const auto& row : r.rows)
    out << r.method << ',' << r.direction << ',' << format_number(row.eps) << ','
        << (row.valid ? format_number(row.test.t_stat) : "") << ',' << (row.valid ? format_number(row.test.threshold) : "")
        << ',' << (row.valid && row.test.reject ? 1 : 0) << ',' << (row.valid ? 1 : 0) << '\n';
  out << "\nmethod,direction,p_threshold,rejections,tested,fpr\n";
  out << r.method << ',' << r.direction << ',' << format_number(r.p_threshold) << ',' << r.rejections << ',' << r.tested
      << ',' << format_number(r.fpr) << '\n';
}

void write_sweep_csv(std::ostream& out, const FprReport& r) {
  out << "p_threshold,fpr\n";
  for (const auto& s : r.sweep) out << format_number(s.p_threshold) << ',' << format_number(s.fpr) << '\n';
}

void write_curves_csv(std::ostream& out, const std::vector<CurvePoint>& curves) {
  out << "method,direction,eps,mean,se\n";
  for (const auto& c : curves)
    out << c.method << ',' << c.direction << ',' << format_number(c.eps) << ',' << format_number(c.mean) << ','
        << format_number(c.se) << '\n';
}

}  // namespace rankcause
