#include "rankcause/ensemble.hpp"

#include "rankcause/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace rankcause {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'R', 'K', 'C', '1'};
constexpr const char* kCsvHeader = "realization_id,time_index,variable_name,value";

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

template <typename T>
void put(std::ostream& out, T v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const fs::path& path) {
  T v;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw DataError("truncated binary file " + path.string());
  return to_little(v);
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_sidecar(const RawSeries& raw, const fs::path& path) {
  json doc;
  doc["variables"] = raw.variable_names;
  json groups = json::object();
  for (const auto& [name, idx] : raw.groups) {
    json names = json::array();
    for (Index i : idx) names.push_back(raw.variable_names.at(static_cast<std::size_t>(i)));
    groups[name] = names;
  }
  doc["groups"] = groups;
  doc["dt"] = raw.dt;
  if (raw.seed) doc["seed"] = *raw.seed;
  else doc["seed"] = nullptr;
  std::ofstream out(sidecar_path(path));
  if (!out) throw DataError("cannot write sidecar for " + path.string());
  out << doc.dump(2) << '\n';
}

// Reads the sidecar (if any) into raw; `names` may already be filled from
// the data file and is then checked for consistency.
void read_sidecar(RawSeries& raw, const fs::path& path, bool names_from_data, bool resolve_groups = true) {
  const fs::path side = sidecar_path(path);
  if (!fs::exists(side)) return;
  std::ifstream in(side);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("malformed sidecar " + side.string() + ": " + e.what());
  }
  try {
    if (doc.contains("variables")) {
      auto names = doc.at("variables").get<std::vector<std::string>>();
      if (names_from_data) {
        if (names.size() != raw.variable_names.size())
          throw DataError("schema error: sidecar lists " + std::to_string(names.size()) + " variables, data has " +
                          std::to_string(raw.variable_names.size()));
      }
      raw.variable_names = std::move(names);
    }
    if (doc.contains("dt") && !doc.at("dt").is_null()) raw.dt = doc.at("dt").get<double>();
    if (doc.contains("seed") && !doc.at("seed").is_null()) raw.seed = doc.at("seed").get<std::uint64_t>();
    if (resolve_groups && doc.contains("groups")) {
      for (const auto& [gname, members] : doc.at("groups").items()) {
        std::vector<Index> idx;
        for (const auto& m : members) {
          const auto var = m.get<std::string>();
          auto it = std::find(raw.variable_names.begin(), raw.variable_names.end(), var);
          if (it == raw.variable_names.end())
            throw DataError("schema error: group '" + gname + "' references unknown variable '" + var + "'");
          idx.push_back(static_cast<Index>(it - raw.variable_names.begin()));
        }
        raw.groups[gname] = std::move(idx);
      }
    }
  } catch (const json::exception& e) {
    throw DataError("schema error in sidecar " + side.string() + ": " + e.what());
  }
}

void write_binary(const RawSeries& raw, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.write(kMagic, 4);
  const auto n = static_cast<std::uint64_t>(raw.realizations.size());
  const auto t = static_cast<std::uint64_t>(raw.realizations.front().rows());
  const auto d = static_cast<std::uint64_t>(raw.realizations.front().cols());
  put(out, n);
  put(out, t);
  put(out, d);
  for (const auto& r : raw.realizations)
    for (Index i = 0; i < r.rows(); ++i)
      for (Index j = 0; j < r.cols(); ++j) put(out, r(i, j));
  if (!out) throw DataError("write failed for " + path.string());
}

RawSeries read_binary(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw DataError("bad magic in " + path.string());
  const auto n = get<std::uint64_t>(in, path);
  const auto t = get<std::uint64_t>(in, path);
  const auto d = get<std::uint64_t>(in, path);
  if (n == 0 || t == 0 || d == 0 || n * t * d > (std::uint64_t{1} << 34)) throw DataError("implausible header in " + path.string());
  RawSeries raw;
  raw.realizations.assign(n, Eigen::MatrixXd(static_cast<Index>(t), static_cast<Index>(d)));
  for (auto& r : raw.realizations)
    for (Index i = 0; i < r.rows(); ++i)
      for (Index j = 0; j < r.cols(); ++j) r(i, j) = get<double>(in, path);
  char extra;
  if (in.read(&extra, 1)) throw DataError("trailing bytes in " + path.string());
  for (std::uint64_t j = 0; j < d; ++j) raw.variable_names.push_back("v" + std::to_string(j));
  read_sidecar(raw, path, true);
  return raw;
}

void write_csv(const RawSeries& raw, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << kCsvHeader << '\n';
  for (std::size_t n = 0; n < raw.realizations.size(); ++n) {
    const auto& r = raw.realizations[n];
    for (Index t = 0; t < r.rows(); ++t)
      for (Index v = 0; v < r.cols(); ++v)
        out << n << ',' << t << ',' << raw.variable_names[static_cast<std::size_t>(v)] << ',' << format_double(r(t, v))
            << '\n';
  }
}

struct CsvRecord {
  long long rid;
  long long t;
  std::size_t var;
  double value;
};

template <typename T>
T parse_number(std::string_view s, const fs::path& path, std::size_t line) {
  T v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw DataError("format error in " + path.string() + " line " + std::to_string(line) + ": bad number '" +
                    std::string(s) + "'");
  return v;
}

RawSeries read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  RawSeries raw;
  read_sidecar(raw, path, false, false);
  std::map<std::string, std::size_t> var_index;
  for (std::size_t i = 0; i < raw.variable_names.size(); ++i) var_index[raw.variable_names[i]] = i;
  const bool fixed_vars = !raw.variable_names.empty();

  std::string line;
  std::size_t line_no = 0;
  std::vector<CsvRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != kCsvHeader) throw DataError("format error: expected header '" + std::string(kCsvHeader) + "'");
      continue;
    }
    std::string_view sv(line);
    std::string_view fields[4];
    for (int f = 0; f < 4; ++f) {
      const auto pos = sv.find(',');
      if (f < 3 && pos == std::string_view::npos)
        throw DataError("format error in " + path.string() + " line " + std::to_string(line_no) + ": expected 4 fields");
      fields[f] = f < 3 ? sv.substr(0, pos) : sv;
      if (f < 3) sv.remove_prefix(pos + 1);
    }
    if (fields[3].find(',') != std::string_view::npos)
      throw DataError("format error in " + path.string() + " line " + std::to_string(line_no) + ": too many fields");
    CsvRecord rec{};
    rec.rid = parse_number<long long>(fields[0], path, line_no);
    rec.t = parse_number<long long>(fields[1], path, line_no);
    rec.value = parse_number<double>(fields[3], path, line_no);
    const std::string var(fields[2]);
    auto it = var_index.find(var);
    if (it == var_index.end()) {
      if (fixed_vars) throw DataError("schema error: variable '" + var + "' not listed in sidecar");
      it = var_index.emplace(var, raw.variable_names.size()).first;
      raw.variable_names.push_back(var);
    }
    rec.var = it->second;
    if (rec.rid < 0 || rec.t < 0) throw DataError("format error: negative realization or time index");
    if (!std::isfinite(rec.value)) throw DataError("format error: non-finite value at line " + std::to_string(line_no));
    records.push_back(rec);
  }
  if (records.empty()) throw DataError("format error: no data rows in " + path.string());

  std::map<long long, long long> length;  // realization id -> max time + 1
  for (const auto& r : records) length[r.rid] = std::max(length[r.rid], r.t + 1);
  const long long t_len = length.begin()->second;
  for (const auto& [rid, len] : length)
    if (len != t_len) throw DataError("format error: ragged realizations (realization " + std::to_string(rid) + ")");
  std::map<long long, std::size_t> slot;
  for (const auto& [rid, len] : length) slot.emplace(rid, slot.size());

  const auto d = static_cast<Index>(raw.variable_names.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  raw.realizations.assign(slot.size(), Eigen::MatrixXd::Constant(t_len, d, nan));
  for (const auto& r : records) {
    double& cell = raw.realizations[slot[r.rid]](r.t, static_cast<Index>(r.var));
    if (!std::isnan(cell))
      throw DataError("format error: duplicate cell (realization " + std::to_string(r.rid) + ", time " +
                      std::to_string(r.t) + ", variable " + raw.variable_names[r.var] + ")");
    cell = r.value;
  }
  for (const auto& [rid, s] : slot) {
    const auto& m = raw.realizations[s];
    for (Index t = 0; t < m.rows(); ++t)
      for (Index v = 0; v < m.cols(); ++v)
        if (std::isnan(m(t, v)))
          throw DataError("format error: missing cell (realization " + std::to_string(rid) + ", time " +
                          std::to_string(t) + ", variable " + raw.variable_names[static_cast<std::size_t>(v)] + ")");
  }
  read_sidecar(raw, path, true, true);
  return raw;
}

}  // namespace

fs::path sidecar_path(const fs::path& path) { return fs::path(path.string() + ".groups.json"); }

EnsembleFormat format_from_path(const fs::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".csv") return EnsembleFormat::csv_long;
  if (ext == ".rkc" || ext == ".bin") return EnsembleFormat::binary;
  throw ConfigError("cannot infer ensemble format from extension '" + ext + "' (use .csv or .rkc)");
}

RawSeries read_raw(const fs::path& path, EnsembleFormat format) {
  return format == EnsembleFormat::binary ? read_binary(path) : read_csv(path);
}

void write_raw(const RawSeries& raw, const fs::path& path, EnsembleFormat format) {
  if (raw.realizations.empty()) throw DataError("nothing to write");
  if (!raw.variable_names.empty() && static_cast<Index>(raw.variable_names.size()) != raw.realizations.front().cols())
    throw DataError("variable name count does not match D");
  if (format == EnsembleFormat::binary) write_binary(raw, path);
  else write_csv(raw, path);
  write_sidecar(raw, path);
}

TrajectoryEnsemble read_ensemble(const fs::path& path, EnsembleFormat format) {
  RawSeries raw = read_raw(path, format);
  return TrajectoryEnsemble(std::move(raw.realizations), std::move(raw.groups), raw.dt, raw.seed,
                            std::move(raw.variable_names));
}

void write_ensemble(const TrajectoryEnsemble& ensemble, const fs::path& path, EnsembleFormat format) {
  RawSeries raw;
  for (Index n = 0; n < ensemble.realizations(); ++n) raw.realizations.push_back(ensemble.realization(n));
  raw.groups = ensemble.groups();
  raw.variable_names = ensemble.variable_names();
  raw.dt = ensemble.dt();
  raw.seed = ensemble.seed();
  write_raw(raw, path, format);
}

}  // namespace rankcause
