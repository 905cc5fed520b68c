// rankcause: command-line front end.
//
//   rankcause simulate  --family rossler --eps-xy 0.1293 --seed 7 -o out/
//   rankcause analyze   --input out/trajectory.rkc --split 2000 --tau 5 --perms 199 -o reports/
//   rankcause benchmark --family rossler --eps 0.05,0.1 --n-estimates 5 --methods gain,measure_L -o reports/
//   rankcause plotdata  reports/analyze-*/report.json -o figures/ --svg
//
// Every verb accepts --config <file.json>; flags override file values. The
// resolved configuration is embedded in every output.

#include "rankcause/benchmark.hpp"
#include "rankcause/error.hpp"
#include "rankcause/parallel.hpp"
#include "rankcause/report.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using namespace rankcause;

namespace {

constexpr const char* kVersion = "0.1.0";

Json load_json(const fs::path& path, bool config) {
  std::ifstream in(path);
  if (!in) {
    if (config) throw ConfigError("cannot open config file " + path.string());
    throw DataError("cannot open " + path.string());
  }
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    if (config) throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    throw DataError(path.string() + " is not valid JSON: " + e.what());
  }
}

// Overlays `overlay` onto `base`. Keys absent from `base` are rejected;
// keys listed in `opaque` are replaced wholesale and validated later.
void merge(Json& base, const Json& overlay, const std::string& path, const std::set<std::string>& opaque = {}) {
  if (!overlay.is_object()) throw ConfigError((path.empty() ? "config" : path) + " must be a JSON object");
  for (const auto& [key, value] : overlay.items()) {
    const std::string full = path.empty() ? key : path + "." + key;
    if (!base.contains(key)) throw ConfigError("unknown key '" + full + "'");
    if (base[key].is_object() && !opaque.count(full) && value.is_object()) merge(base[key], value, full, opaque);
    else base[key] = value;
  }
}

// The output root is where a report lands, not what it contains.
std::string content_hash(Json resolved) {
  resolved.erase("output");
  const std::string text = resolved.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
  if (!out) throw DataError("failed writing " + path.string());
}

fs::path report_dir(const fs::path& root, const std::string& verb, const Json& resolved) {
  const fs::path dir = root / (verb + "-" + content_hash(resolved));
  fs::create_directories(dir);
  return dir;
}

Json provenance(const std::string& verb, const Json& resolved) {
  return {{"tool", "rankcause"}, {"version", kVersion}, {"command", verb}, {"config", resolved}};
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<double> parse_doubles(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("not a number: '" + item + "'");
    }
  }
  return out;
}

std::pair<std::string, std::string> parse_direction(const std::string& d) {
  const auto arrow = d.find("->");
  if (arrow == std::string::npos || arrow == 0 || arrow + 2 >= d.size())
    throw ConfigError("direction must be written 'A->B', got '" + d + "'");
  return {d.substr(0, arrow), d.substr(arrow + 2)};
}

// Family-flag overrides shared by simulate and benchmark.
struct SystemFlags {
  std::optional<std::string> family;
  std::optional<double> eps_xy, eps_yx, eps, omega1, omega2, dt, omega_tilde;
  std::optional<Index> n_samples, transient, downsample;
  std::optional<std::uint64_t> seed;

  void add(CLI::App* app, bool with_seed) {
    app->add_option("--family", family, "rossler | lorenz | lorenz96 | rossler_network");
    app->add_option("--eps-xy", eps_xy, "coupling X -> Y");
    app->add_option("--eps-yx", eps_yx, "coupling Y -> X");
    app->add_option("--omega1", omega1, "Rossler frequency of X");
    app->add_option("--omega2", omega2, "Rossler frequency of Y");
    app->add_option("--omega-tilde", omega_tilde, "Lorenz 96 driver speed factor");
    app->add_option("--dt", dt, "integration step");
    app->add_option("--downsample", downsample, "keep every n-th step");
    app->add_option("--transient", transient, "retained-grid samples discarded first");
    app->add_option("--n-samples", n_samples, "retained samples");
    if (with_seed) app->add_option("--seed", seed, "master seed");
  }

  void apply(Json& system) const {
    if (family) {
      const std::string canonical = to_string(family_from_string(*family));
      if (!system.contains("family") || system["family"] != canonical) {
        system = Json::object();
        system["family"] = canonical;
      }
    }
    if (!system.contains("family")) system["family"] = "rossler_pair";
    auto param = [&](const char* key, const std::optional<double>& v) {
      if (v) system["params"][key] = *v;
    };
    const std::string fam = system["family"].get<std::string>();
    if (fam == "lorenz96_pair") {
      param("eps", eps ? eps : eps_xy);
      if (eps_yx) throw ConfigError("--eps-yx is not defined for lorenz96");
      param("omega_tilde", omega_tilde);
    } else {
      param("eps_xy", eps_xy);
      param("eps_yx", eps_yx);
    }
    param("omega1", omega1);
    param("omega2", omega2);
    if (dt) system["dt"] = *dt;
    if (downsample) system["downsample"] = *downsample;
    if (transient) system["transient"] = *transient;
    if (n_samples) system["n_samples"] = *n_samples;
    if (seed) system["seed"] = *seed;
  }
};

// ---------------------------------------------------------------- simulate

struct SimulateFlags {
  std::optional<std::string> config, out, format;
  SystemFlags system;
};

int cmd_simulate(const SimulateFlags& f) {
  Json resolved = {{"system", Json::object()}, {"output", "."}, {"format", "binary"}};
  if (f.config) merge(resolved, load_json(*f.config, true), "", {"system"});
  f.system.apply(resolved["system"]);
  if (f.out) resolved["output"] = *f.out;
  if (f.format) resolved["format"] = *f.format;

  const SystemSpec spec = system_spec_from_json(resolved["system"]);
  resolved["system"] = to_json(spec);
  const std::string fmt = resolved["format"].get<std::string>();
  if (fmt != "binary" && fmt != "csv") throw ConfigError("format must be binary or csv");

  const Trajectory traj = simulate(spec);
  const fs::path dir = resolved["output"].get<std::string>();
  fs::create_directories(dir);
  RawSeries raw;
  raw.realizations = {traj.samples};
  raw.groups = traj.groups;
  raw.variable_names = traj.variable_names;
  raw.dt = traj.sampling_step;
  raw.seed = spec.seed;
  const fs::path file = dir / (fmt == "binary" ? "trajectory.rkc" : "trajectory.csv");
  write_raw(raw, file, fmt == "binary" ? EnsembleFormat::binary : EnsembleFormat::csv_long);
  Json prov = provenance("simulate", resolved);
  prov["trajectory"] = file.filename().string();
  write_file(dir / "provenance.json", prov.dump(2) + "\n");
  std::cout << file.string() << "\n";
  return 0;
}

// ----------------------------------------------------------------- analyze

struct AnalyzeFlags {
  std::optional<std::string> config, out, conditional;
  std::vector<std::string> inputs, directions, embeds;
  std::optional<Index> split, gap, k, tau, perms, alpha_points, t0;
  std::optional<double> alpha_max, p;
  std::optional<std::string> taus;
  std::optional<std::uint64_t> seed;
};

Json analyze_defaults() {
  return {{"inputs", Json::array()},
          {"split", nullptr},
          {"gap", 0},
          {"directions", {"X->Y", "Y->X"}},
          {"embedding", Json::object()},
          {"k", 1},
          {"tau", 1},
          {"t0", nullptr},
          {"alpha_max", 1.5},
          {"alpha_points", 50},
          {"taus", Json::array()},
          {"permutations", 0},
          {"p_threshold", 0.05},
          {"conditional", nullptr},
          {"seed", 0},
          {"output", "."}};
}

TrajectoryEnsemble load_ensemble(const fs::path& path, const Json& split, Index gap) {
  RawSeries raw = read_raw(path, format_from_path(path));
  if (raw.realizations.size() == 1) {
    if (split.is_null())
      throw ConfigError(path.string() + " holds one long trajectory; give --split N to cut it into realizations");
    return split_series(raw.realizations.front(), split.get<Index>(), gap, raw.groups, raw.dt, raw.seed,
                        raw.variable_names);
  }
  if (!split.is_null()) throw ConfigError(path.string() + " already holds several realizations; drop --split");
  return TrajectoryEnsemble(std::move(raw.realizations), std::move(raw.groups), raw.dt, raw.seed,
                            std::move(raw.variable_names));
}

SystemView view_for(const TrajectoryEnsemble& e, const std::string& group, const Json& embedding) {
  SystemView v{group, std::nullopt};
  if (embedding.contains(group)) {
    const Json& s = embedding[group];
    if (!s.is_object()) throw ConfigError("embedding." + group + " must be an object");
    for (const auto& [key, _] : s.items())
      if (key != "variable" && key != "E" && key != "lag") throw ConfigError("unknown key 'embedding." + group + "." + key + "'");
    EmbeddingSpec spec;
    spec.variable_index = e.variable_index(s.at("variable").get<std::string>());
    spec.dimension = s.value("E", Index{1});
    spec.lag = s.value("lag", Index{1});
    v.embedding = spec;
  }
  return v;
}

int cmd_analyze(const AnalyzeFlags& f) {
  Json resolved = analyze_defaults();
  if (f.config) merge(resolved, load_json(*f.config, true), "", {"embedding"});
  if (!f.inputs.empty()) resolved["inputs"] = f.inputs;
  if (f.split) resolved["split"] = *f.split;
  if (f.gap) resolved["gap"] = *f.gap;
  if (!f.directions.empty()) resolved["directions"] = f.directions;
  for (const auto& e : f.embeds) {
    // GROUP:VARIABLE:E:LAG
    const auto parts = [&] {
      std::vector<std::string> p;
      std::stringstream ss(e);
      std::string item;
      while (std::getline(ss, item, ':')) p.push_back(item);
      return p;
    }();
    if (parts.size() != 4) throw ConfigError("--embed expects GROUP:VARIABLE:E:LAG, got '" + e + "'");
    try {
      resolved["embedding"][parts[0]] = {{"variable", parts[1]}, {"E", std::stol(parts[2])}, {"lag", std::stol(parts[3])}};
    } catch (const std::exception&) {
      throw ConfigError("--embed expects integer E and LAG, got '" + e + "'");
    }
  }
  if (f.k) resolved["k"] = *f.k;
  if (f.tau) resolved["tau"] = *f.tau;
  if (f.t0) resolved["t0"] = *f.t0;
  if (f.alpha_max) resolved["alpha_max"] = *f.alpha_max;
  if (f.alpha_points) resolved["alpha_points"] = *f.alpha_points;
  if (f.taus) {
    std::vector<Index> t;
    for (double v : parse_doubles(*f.taus)) t.push_back(static_cast<Index>(v));
    resolved["taus"] = t;
  }
  if (f.perms) resolved["permutations"] = *f.perms;
  if (f.p) resolved["p_threshold"] = *f.p;
  if (f.conditional) resolved["conditional"] = *f.conditional;
  if (f.seed) resolved["seed"] = *f.seed;
  if (f.out) resolved["output"] = *f.out;

  Json inputs_abs = Json::array();
  for (const auto& in : resolved["inputs"]) inputs_abs.push_back(in.get<std::string>());
  if (inputs_abs.empty()) throw ConfigError("analyze needs at least one --input");

  ScanConfig scan;
  Json embedding;
  Index perms = 0;
  double p_thr = 0.05;
  std::uint64_t seed = 0;
  std::vector<Index> taus;
  std::vector<std::pair<std::string, std::string>> dirs;
  std::optional<std::string> cond;
  try {
    scan.k = resolved["k"].get<Index>();
    scan.tau = resolved["tau"].get<Index>();
    if (!resolved["t0"].is_null()) scan.t0 = resolved["t0"].get<Index>();
    scan.alpha_grid = linear_alpha_grid(resolved["alpha_max"].get<double>(), resolved["alpha_points"].get<Index>());
    perms = resolved["permutations"].get<Index>();
    p_thr = resolved["p_threshold"].get<double>();
    seed = resolved["seed"].get<std::uint64_t>();
    taus = resolved["taus"].get<std::vector<Index>>();
    for (const auto& d : resolved["directions"]) dirs.push_back(parse_direction(d.get<std::string>()));
    if (!resolved["conditional"].is_null()) cond = resolved["conditional"].get<std::string>();
    embedding = resolved["embedding"];
    resolved["gap"].get<Index>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("analyze config has a value of the wrong type: ") + e.what());
  }
  if (perms != 0 && perms < 19) throw ConfigError("permutations must be 0 or >= 19");
  if (!(p_thr > 0 && p_thr < 1)) throw ConfigError("p_threshold must lie in (0, 1)");
  if (dirs.empty()) throw ConfigError("analyze needs at least one direction");

  std::vector<TrajectoryEnsemble> ensembles;
  for (const auto& in : inputs_abs) ensembles.push_back(load_ensemble(in.get<std::string>(), resolved["split"], resolved["gap"].get<Index>()));

  const fs::path dir = report_dir(resolved["output"].get<std::string>(), "analyze", resolved);
  Json report = provenance("analyze", resolved);
  report["kind"] = "analyze";
  Json jdirs = Json::array();
  for (std::size_t di = 0; di < dirs.size(); ++di) {
    const auto& [a, b] = dirs[di];
    const std::string label = a + "->" + b;
    const std::string tag = a + "_to_" + b;
    Json jd;
    jd["direction"] = label;
    std::vector<ImbalanceProfile> profiles;
    Json est = Json::array();
    for (std::size_t ei = 0; ei < ensembles.size(); ++ei) {
      const auto& ens = ensembles[ei];
      const SystemView va = view_for(ens, a, embedding), vb = view_for(ens, b, embedding);
      GainEstimate g = imbalance_gain(scan_alpha(ens, va, vb, scan));
      if (perms > 0) g.p_value = permutation_test(ens, va, vb, scan, perms, derive_seed(seed, "analyze", {di, ei})).p_value;
      Json je = to_json(g);
      je["causal"] = g.p_value ? Json(*g.p_value < p_thr) : Json(nullptr);
      est.push_back(je);
      profiles.push_back(g.profile);
      std::ofstream csv(dir / ("profile_" + tag + (ensembles.size() > 1 ? "_" + std::to_string(ei) : "") + ".csv"));
      write_profile_csv(csv, g.profile);
    }
    jd["estimates"] = est;
    if (ensembles.size() > 1) jd["average"] = to_json(average_gain(profiles));
    if (!taus.empty()) {
      std::vector<TauPoint> pts;
      for (Index t : taus) {
        ScanConfig c = scan;
        c.tau = t;
        std::vector<ImbalanceProfile> ps;
        for (const auto& ens : ensembles) ps.push_back(scan_alpha(ens, view_for(ens, a, embedding), view_for(ens, b, embedding), c));
        pts.push_back({t, average_gain(ps)});
      }
      Json jt = Json::array();
      for (const auto& p : pts) jt.push_back({{"tau", p.tau}, {"gain", p.average.gain}, {"se", p.average.standard_error}});
      jd["tau_scan"] = jt;
      std::ofstream csv(dir / ("tau_" + tag + ".csv"));
      write_tau_csv(csv, pts);
    }
    if (cond) {
      if (*cond == a || *cond == b) throw ConfigError("conditioner must differ from both groups of " + label);
      Json jc = Json::array();
      std::ofstream csv(dir / ("conditional_" + tag + ".csv"));
      csv << "input,gain,alpha_x_opt,alpha_z_opt,p_value\n";
      for (std::size_t ei = 0; ei < ensembles.size(); ++ei) {
        const auto& ens = ensembles[ei];
        const SystemView va = view_for(ens, a, embedding), vb = view_for(ens, b, embedding), vz = view_for(ens, *cond, embedding);
        ConditionalGainEstimate c = conditional_scan(ens, va, vz, vb, scan, scan.alpha_grid);
        if (perms > 0)
          c.p_value = conditional_permutation_test(ens, va, vz, vb, scan, scan.alpha_grid, perms,
                                                   derive_seed(seed, "analyze-conditional", {di, ei}))
                          .p_value;
        Json j = to_json(c);
        j["causal"] = c.p_value ? Json(*c.p_value < p_thr) : Json(nullptr);
        jc.push_back(j);
        csv << ei << ',' << format_number(c.gain) << ',' << format_number(c.alpha_x_opt) << ','
            << format_number(c.alpha_z_opt) << ',' << (c.p_value ? format_number(*c.p_value) : "") << '\n';
      }
      jd["conditional"] = jc;
    }
    jdirs.push_back(jd);
  }
  report["directions"] = jdirs;
  write_file(dir / "report.json", report.dump(2) + "\n");
  std::cout << (dir / "report.json").string() << "\n";
  return 0;
}

// --------------------------------------------------------------- benchmark

struct BenchmarkFlags {
  std::optional<std::string> config, out, coupling, eps_grid, methods, null_direction;
  SystemFlags system;
  std::optional<Index> n_estimates, n_realizations, sub_length, gap, k, tau, alpha_points;
  std::optional<double> p, eps_cutoff, alpha_max;
  std::optional<bool> embedded;
  std::optional<std::uint64_t> seed;
};

Json benchmark_defaults() {
  return {{"system", Json::object()},
          {"coupling", "eps_xy"},
          {"eps_grid", {0.0}},
          {"n_estimates", 10},
          {"ensemble", {{"n_realizations", 500}, {"sub_length", 21}, {"gap", 0}}},
          {"methods", {"gain"}},
          {"settings",
           {{"k", 1},
            {"tau", 20},
            {"alpha_max", 1.5},
            {"alpha_points", 50},
            {"embedded", false},
            {"embed_dimension", 3},
            {"embed_lag", 1},
            {"k_L", 5},
            {"k_te", 3},
            {"series_length", 0},
            {"egc", {{"dimension", 3}, {"lag", 1}, {"k_local", 200}, {"n_regressions", 200}}},
            {"ccm", {{"dimension", 3}, {"lag", 5}, {"library_lengths", Json::array()}, {"n_draws", 10}, {"contiguous", true}}}}},
          {"null_direction", "Y->X"},
          {"p_threshold", 0.001},
          {"sweep", true},
          {"eps_cutoff", nullptr},
          {"seed", 0},
          {"output", "."}};
}

int cmd_benchmark(const BenchmarkFlags& f) {
  Json resolved = benchmark_defaults();
  if (f.config) merge(resolved, load_json(*f.config, true), "", {"system"});
  f.system.apply(resolved["system"]);
  if (f.coupling) resolved["coupling"] = *f.coupling;
  if (f.eps_grid) resolved["eps_grid"] = parse_doubles(*f.eps_grid);
  if (f.methods) resolved["methods"] = split_list(*f.methods);
  if (f.null_direction) resolved["null_direction"] = *f.null_direction;
  if (f.n_estimates) resolved["n_estimates"] = *f.n_estimates;
  if (f.n_realizations) resolved["ensemble"]["n_realizations"] = *f.n_realizations;
  if (f.sub_length) resolved["ensemble"]["sub_length"] = *f.sub_length;
  if (f.gap) resolved["ensemble"]["gap"] = *f.gap;
  if (f.k) resolved["settings"]["k"] = *f.k;
  if (f.tau) resolved["settings"]["tau"] = *f.tau;
  if (f.alpha_max) resolved["settings"]["alpha_max"] = *f.alpha_max;
  if (f.alpha_points) resolved["settings"]["alpha_points"] = *f.alpha_points;
  if (f.embedded) resolved["settings"]["embedded"] = *f.embedded;
  if (f.p) resolved["p_threshold"] = *f.p;
  if (f.eps_cutoff) resolved["eps_cutoff"] = *f.eps_cutoff;
  if (f.seed) resolved["seed"] = *f.seed;
  if (f.out) resolved["output"] = *f.out;

  BenchmarkSpec spec;
  spec.system = system_spec_from_json(resolved["system"]);
  resolved["system"] = to_json(spec.system);
  try {
    spec.coupling = resolved["coupling"].get<std::string>();
    spec.eps_grid = resolved["eps_grid"].get<std::vector<double>>();
    spec.n_estimates = resolved["n_estimates"].get<Index>();
    const Json& en = resolved["ensemble"];
    spec.ensemble = {en["n_realizations"].get<Index>(), en["sub_length"].get<Index>(), en["gap"].get<Index>()};
    spec.methods.clear();
    for (const auto& m : resolved["methods"]) spec.methods.push_back(method_from_string(m.get<std::string>()));
    const Json& s = resolved["settings"];
    auto& ms = spec.settings;
    ms.scan.k = s["k"].get<Index>();
    ms.scan.tau = s["tau"].get<Index>();
    ms.scan.alpha_grid = linear_alpha_grid(s["alpha_max"].get<double>(), s["alpha_points"].get<Index>());
    ms.embedded = s["embedded"].get<bool>();
    ms.embed_dimension = s["embed_dimension"].get<Index>();
    ms.embed_lag = s["embed_lag"].get<Index>();
    ms.k_L = s["k_L"].get<Index>();
    ms.k_te = s["k_te"].get<Index>();
    ms.series_length = s["series_length"].get<Index>();
    const Json& eg = s["egc"];
    ms.egc.dimension = eg["dimension"].get<Index>();
    ms.egc.lag = eg["lag"].get<Index>();
    ms.egc.k_local = eg["k_local"].get<Index>();
    ms.egc.n_regressions = eg["n_regressions"].get<Index>();
    const Json& cc = s["ccm"];
    ms.ccm.dimension = cc["dimension"].get<Index>();
    ms.ccm.lag = cc["lag"].get<Index>();
    ms.ccm.library_lengths = cc["library_lengths"].get<std::vector<Index>>();
    ms.ccm.n_draws = cc["n_draws"].get<Index>();
    ms.ccm.contiguous = cc["contiguous"].get<bool>();
    const auto [nd, nv] = parse_direction(resolved["null_direction"].get<std::string>());
    spec.null_direction = {nd, nv};
    spec.directions = {{nv, nd}, {nd, nv}};
    spec.p_threshold = resolved["p_threshold"].get<double>();
    if (resolved["sweep"].is_boolean()) {
      if (resolved["sweep"].get<bool>()) spec.sweep = default_threshold_sweep();
    } else {
      spec.sweep = resolved["sweep"].get<std::vector<double>>();
    }
    if (!resolved["eps_cutoff"].is_null()) spec.eps_cutoff = resolved["eps_cutoff"].get<double>();
    spec.seed = resolved["seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("benchmark config has a value of the wrong type: ") + e.what());
  }

  const BenchmarkResult result = run_benchmark(spec);
  const fs::path dir = report_dir(resolved["output"].get<std::string>(), "benchmark", resolved);
  Json report = provenance("benchmark", resolved);
  report["kind"] = "benchmark";
  report["result"] = to_json(result);
  write_file(dir / "report.json", report.dump(2) + "\n");
  {
    std::ofstream csv(dir / "curves.csv");
    write_curves_csv(csv, result.curves);
  }
  for (const auto& r : result.fpr) {
    std::ofstream csv(dir / ("fpr_" + r.method + ".csv"));
    write_fpr_csv(csv, r);
    std::ofstream sweep(dir / ("sweep_" + r.method + ".csv"));
    write_sweep_csv(sweep, r);
  }
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << (dir / "report.json").string() << "\n";
  if (result.total_cells > 0 && result.failed_cells == result.total_cells)
    throw SimulationError("every benchmark cell failed", 0.0);
  return 0;
}

// ---------------------------------------------------------------- plotdata

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

std::string svg_chart(const std::vector<Series>& series, const std::string& xlabel, const std::string& ylabel) {
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  if (!(x1 > x0)) x1 = x0 + 1;
  if (!(y1 > y0)) y1 = y0 + 1;
  const double w = 480, h = 320, m = 40;
  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n"
    << "<text x=\"" << w / 2 << "\" y=\"" << h - 5 << "\">" << xlabel << "</text>\n"
    << "<text x=\"5\" y=\"15\">" << ylabel << "</text>\n";
  const char* colors[] = {"black", "red", "blue", "green", "orange", "purple"};
  for (std::size_t i = 0; i < series.size(); ++i) {
    o << "<polyline fill=\"none\" stroke=\"" << colors[i % 6] << "\" data-series=\"" << series[i].name << "\" points=\"";
    for (std::size_t p = 0; p < series[i].points.size(); ++p) {
      const auto [x, y] = series[i].points[p];
      o << (p ? " " : "") << format_number(m + (x - x0) / (x1 - x0) * (w - 2 * m)) << ','
        << format_number(h - m - (y - y0) / (y1 - y0) * (h - 2 * m));
    }
    o << "\"/>\n";
  }
  o << "</svg>\n";
  return o.str();
}

int cmd_plotdata(const std::vector<std::string>& reports, const std::string& out, bool svg) {
  if (reports.empty()) throw ConfigError("plotdata needs at least one report file");
  fs::create_directories(out);
  for (std::size_t ri = 0; ri < reports.size(); ++ri) {
    const Json r = load_json(reports[ri], false);
    const std::string prefix = reports.size() > 1 ? "r" + std::to_string(ri) + "_" : "";
    try {
      const std::string kind = r.at("kind").get<std::string>();
      if (kind == "analyze") {
        std::vector<Series> prof, taus;
        for (const auto& d : r.at("directions")) {
          const std::string label = d.at("direction").get<std::string>();
          std::string tag = label;
          tag.replace(tag.find("->"), 2, "_to_");
          const auto& ests = d.at("estimates");
          for (std::size_t e = 0; e < ests.size(); ++e) {
            const ImbalanceProfile p = profile_from_json(ests[e].at("profile"));
            std::ofstream csv(fs::path(out) / (prefix + "profile_" + tag + (ests.size() > 1 ? "_" + std::to_string(e) : "") + ".csv"));
            write_profile_csv(csv, p);
            Series s{label, {}};
            for (Index a = 0; a < p.delta.size(); ++a) s.points.emplace_back(p.alpha_grid(a), p.delta(a));
            prof.push_back(s);
          }
          if (d.contains("tau_scan")) {
            std::ofstream csv(fs::path(out) / (prefix + "tau_" + tag + ".csv"));
            csv << "tau,gain,se\n";
            Series s{label, {}};
            for (const auto& t : d["tau_scan"]) {
              csv << t.at("tau").get<Index>() << ',' << format_number(t.at("gain").get<double>()) << ','
                  << format_number(t.at("se").get<double>()) << '\n';
              s.points.emplace_back(static_cast<double>(t.at("tau").get<Index>()), t.at("gain").get<double>());
            }
            taus.push_back(s);
          }
        }
        if (svg) {
          write_file(fs::path(out) / (prefix + "profiles.svg"), svg_chart(prof, "alpha", "delta"));
          if (!taus.empty()) write_file(fs::path(out) / (prefix + "tau.svg"), svg_chart(taus, "tau", "gain"));
        }
      } else if (kind == "benchmark") {
        const Json& res = r.at("result");
        std::map<std::string, Series> curves;
        std::ofstream gcsv(fs::path(out) / (prefix + "gain_vs_eps.csv"));
        gcsv << "method,direction,eps,mean,se\n";
        for (const auto& c : res.at("curves")) {
          const std::string key = c.at("method").get<std::string>() + " " + c.at("direction").get<std::string>();
          gcsv << c.at("method").get<std::string>() << ',' << c.at("direction").get<std::string>() << ','
               << format_number(c.at("eps").get<double>()) << ',' << format_number(c.at("mean").get<double>()) << ','
               << format_number(c.at("se").get<double>()) << '\n';
          curves[key].name = key;
          curves[key].points.emplace_back(c.at("eps").get<double>(), c.at("mean").get<double>());
        }
        std::vector<Series> fpr;
        for (const auto& f : res.at("fpr")) {
          const std::string m = f.at("method").get<std::string>();
          std::ofstream csv(fs::path(out) / (prefix + "fpr_" + m + ".csv"));
          csv << "p_threshold,fpr\n";
          Series s{m, {}};
          for (const auto& p : f.at("sweep")) {
            csv << format_number(p.at("p_threshold").get<double>()) << ',' << format_number(p.at("fpr").get<double>()) << '\n';
            s.points.emplace_back(std::log10(p.at("p_threshold").get<double>()), p.at("fpr").get<double>());
          }
          fpr.push_back(s);
        }
        if (svg) {
          std::vector<Series> cs;
          for (auto& [_, s] : curves) cs.push_back(s);
          write_file(fs::path(out) / (prefix + "gain_vs_eps.svg"), svg_chart(cs, "eps", "mean"));
          if (!fpr.empty()) write_file(fs::path(out) / (prefix + "fpr.svg"), svg_chart(fpr, "log10 p_threshold", "fpr"));
        }
      } else {
        throw DataError("unknown report kind '" + kind + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError("malformed report " + reports[ri] + ": " + e.what());
    }
  }
  std::cout << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal discovery from distance-rank Information Imbalance", "rankcause"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  std::optional<std::size_t> threads;
  app.add_option("--threads", threads, "worker cap (default: RANKCAUSE_THREADS or all cores)");

  SimulateFlags sf;
  auto* sim = app.add_subcommand("simulate", "integrate a benchmark system");
  sim->add_option("--config", sf.config, "JSON config");
  sim->add_option("-o,--out", sf.out, "output directory");
  sim->add_option("--format", sf.format, "binary | csv");
  sf.system.add(sim, true);
  sim->add_option("--eps", sf.system.eps, "Lorenz 96 coupling");

  AnalyzeFlags af;
  auto* ana = app.add_subcommand("analyze", "Imbalance Gain analysis of ensemble files");
  ana->add_option("--config", af.config, "JSON config");
  ana->add_option("-i,--input", af.inputs, "ensemble file (repeat for independent estimates)");
  ana->add_option("--split", af.split, "cut a single long trajectory into N realizations");
  ana->add_option("--gap", af.gap, "samples dropped between realizations");
  ana->add_option("-d,--direction", af.directions, "direction A->B (repeatable)");
  ana->add_option("--embed", af.embeds, "GROUP:VARIABLE:E:LAG delay embedding (repeatable)");
  ana->add_option("-k", af.k, "neighbors");
  ana->add_option("--tau", af.tau, "prediction lag in samples");
  ana->add_option("--t0", af.t0, "sample index of time 0");
  ana->add_option("--taus", af.taus, "comma-separated tau scan");
  ana->add_option("--alpha-max", af.alpha_max, "alpha grid maximum");
  ana->add_option("--alpha-points", af.alpha_points, "alpha grid size");
  ana->add_option("--perms", af.perms, "permutations for the significance test (0 = none)");
  ana->add_option("--p", af.p, "significance threshold");
  ana->add_option("--conditional", af.conditional, "conditioning group");
  ana->add_option("--seed", af.seed, "master seed");
  ana->add_option("-o,--out", af.out, "report root directory");

  BenchmarkFlags bf;
  auto* ben = app.add_subcommand("benchmark", "false-positive campaign across methods");
  ben->add_option("--config", bf.config, "JSON config");
  bf.system.add(ben, false);
  ben->add_option("--coupling", bf.coupling, "coupling parameter swept by --eps");
  ben->add_option("--eps", bf.eps_grid, "comma-separated coupling grid");
  ben->add_option("--methods", bf.methods, "comma-separated: gain,measure_L,egc,ccm,transfer_entropy");
  ben->add_option("--null-direction", bf.null_direction, "direction without a causal link");
  ben->add_option("--n-estimates", bf.n_estimates, "independent estimates per coupling");
  ben->add_option("--n-realizations", bf.n_realizations, "ensemble size N");
  ben->add_option("--sub-length", bf.sub_length, "samples per realization");
  ben->add_option("--gap", bf.gap, "samples dropped between realizations");
  ben->add_option("-k", bf.k, "gain neighbors");
  ben->add_option("--tau", bf.tau, "prediction lag");
  ben->add_option("--alpha-max", bf.alpha_max, "alpha grid maximum");
  ben->add_option("--alpha-points", bf.alpha_points, "alpha grid size");
  ben->add_option("--embedded", bf.embedded, "gain on delay embeddings");
  ben->add_option("--p", bf.p, "t-test significance");
  ben->add_option("--eps-cutoff", bf.eps_cutoff, "FPR uses eps below this value");
  ben->add_option("--seed", bf.seed, "master seed");
  ben->add_option("-o,--out", bf.out, "report root directory");

  std::vector<std::string> plot_reports;
  std::string plot_out = ".";
  bool plot_svg = false;
  auto* plt = app.add_subcommand("plotdata", "per-figure CSV bundles from reports");
  plt->add_option("reports", plot_reports, "report.json files")->required();
  plt->add_option("-o,--out", plot_out, "output directory");
  plt->add_flag("--svg", plot_svg, "also write minimal SVG line charts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ExitCode::config);
  }

  try {
    if (threads) set_thread_count(*threads);
    if (sim->parsed()) return cmd_simulate(sf);
    if (ana->parsed()) return cmd_analyze(af);
    if (ben->parsed()) return cmd_benchmark(bf);
    if (plt->parsed()) return cmd_plotdata(plot_reports, plot_out, plot_svg);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::config);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::internal);
  }
  return static_cast<int>(ExitCode::internal);
}
