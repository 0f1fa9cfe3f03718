#include "mrsav/experiments/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>

#include "mrsav/error.hpp"

namespace mrsav::experiments {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::string& section, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(section, "expected an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, _] : j.items())
    if (!allowed.count(k)) throw ConfigError(section.empty() ? k : section + "." + k, "unknown key");
}

template <class T>
void read(const json& j, const char* key, const std::string& section, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(section + "." + key, std::string("wrong type (") + e.what() + ")");
  }
}

void read_step(const json& j, const char* key, const std::string& section, double& out) {
  if (j.contains(key)) out = parse_step(j.at(key), section + "." + key);
}

void read_optional(const json& j, const char* key, const std::string& section,
                   std::optional<double>& out) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    out.reset();
    return;
  }
  if (!j.at(key).is_number()) throw ConfigError(section + "." + key, "expected a number or null");
  out = j.at(key).get<double>();
}

json step_json(double dt) {
  // Exact powers of two are written symbolically for readability.
  int e = 0;
  const double m = std::frexp(dt, &e);
  if (m == 0.5) return "2^" + std::to_string(e - 1);
  return dt;
}

bool is_ratio2_ladder(const std::vector<double>& v) {
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    const double r = v[i + 1] / v[i];
    if (std::fabs(r - 2.0) > 1e-9 && std::fabs(r - 0.5) > 1e-9) return false;
    if (i > 0 && std::fabs(r - v[i] / v[i - 1]) > 1e-9) return false;
  }
  return true;
}

}  // namespace

double parse_step(const json& v, const std::string& field) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s.rfind("2^", 0) == 0) {
      char* end = nullptr;
      const long e = std::strtol(s.c_str() + 2, &end, 10);
      if (end && *end == '\0' && end != s.c_str() + 2) return std::ldexp(1.0, static_cast<int>(e));
    }
    throw ConfigError(field, "cannot parse step '" + s + "' (use a number or 2^-k)");
  }
  throw ConfigError(field, "expected a number or a string like 2^-10");
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

void ExperimentConfig::validate() const {
  if (model.sites < 4) throw ConfigError("model.J", "must be >= 4");
  if (!std::isfinite(model.forcing)) throw ConfigError("model.F", "must be finite");
  if (model.fault != "none" && model.fault != "nonlinear-sign-flip")
    throw ConfigError("model.fault", "expected none or nonlinear-sign-flip");
  if (!(scheme.dt > 0.0) || !std::isfinite(scheme.dt)) throw ConfigError("scheme.dt", "must be positive");
  if (!(scheme.gamma > 0.0)) throw ConfigError("scheme.gamma", "must be positive");
  if (!(run.T > 0.0)) throw ConfigError("run.T", "must be positive");
  if (!(run.init_range > 0.0)) throw ConfigError("run.init_range", "must be positive");
  if (!(run.perturbation_pct >= 0.0)) throw ConfigError("run.perturbation_pct", "must be >= 0");
  if (!(run.burn_in >= 0.0)) throw ConfigError("run.burn_in", "must be >= 0");
  if (histogram.bins == 0) throw ConfigError("histogram.bins", "must be positive");
  if (!(histogram.lo < histogram.hi)) throw ConfigError("histogram.lo", "must be below histogram.hi");
  if (histogram.coordinate_index < 1 || histogram.coordinate_index > model.sites)
    throw ConfigError("histogram.coordinate_index", "must lie in [1, J]");
  if (!(histogram.max_tail_fraction >= 0.0))
    throw ConfigError("histogram.max_tail_fraction", "must be >= 0");
  if (!(reference.T > 0.0)) throw ConfigError("reference.T", "must be positive");
  if (!(reference.dt > 0.0)) throw ConfigError("reference.dt", "must be positive");
  if (reference.bins == 0) throw ConfigError("reference.bins", "must be positive");
  for (double t : tables.T_ladder)
    if (!(t > 0.0)) throw ConfigError("tables.T_ladder", "entries must be positive");
  if (!is_ratio2_ladder(tables.T_ladder)) throw ConfigError("tables.T_ladder", "must be geometric with ratio 2");
  for (double d : tables.dt_ladder)
    if (!(d > 0.0)) throw ConfigError("tables.dt_ladder", "entries must be positive");
  if (!is_ratio2_ladder(tables.dt_ladder)) throw ConfigError("tables.dt_ladder", "must be geometric with ratio 2");
  for (auto n : tables.bin_ladder)
    if (n == 0) throw ConfigError("tables.bin_ladder", "entries must be positive");
  if (!(tables.dt_reference >= 0.0)) throw ConfigError("tables.dt_reference", "must be >= 0");
  if (!(tables.dt_T > 0.0)) throw ConfigError("tables.dt_T", "must be positive");
  if (tables.moving_average_window == 0 || tables.moving_average_window % 2 == 0)
    throw ConfigError("tables.moving_average_window", "must be odd and positive");
  if (!(tables.threshold > 0.0)) throw ConfigError("tables.threshold", "must be positive");
  if (!(tables.compare_T > 0.0)) throw ConfigError("tables.compare_T", "must be positive");
  for (const auto& f : output.formats)
    if (f != "csv" && f != "json" && f != "bin")
      throw ConfigError("output.formats", "unknown format '" + f + "' (csv, json, bin)");
}

json ExperimentConfig::to_json() const {
  json j;
  j["model"] = {{"J", model.sites}, {"F", model.forcing}, {"fault", model.fault}};
  j["scheme"] = {{"order", to_string(scheme.order)},
                 {"dt", step_json(scheme.dt)},
                 {"gamma", scheme.gamma},
                 {"init_mode", to_string(scheme.init_mode)}};
  j["run"] = {{"T", run.T},
              {"seed", run.seed},
              {"init_range", run.init_range},
              {"perturbation_pct", run.perturbation_pct},
              {"burn_in", run.burn_in}};
  j["histogram"] = {{"bins", histogram.bins},
                    {"lo", histogram.lo},
                    {"hi", histogram.hi},
                    {"coordinate_index", histogram.coordinate_index},
                    {"include_tails", histogram.include_tails},
                    {"max_tail_fraction", histogram.max_tail_fraction}};
  j["reference"] = {{"path", reference.path},
                    {"T", reference.T},
                    {"dt", step_json(reference.dt)},
                    {"bins", reference.bins},
                    {"mean", reference.mean ? json(*reference.mean) : json(nullptr)},
                    {"variance", reference.variance ? json(*reference.variance) : json(nullptr)}};
  json dts = json::array();
  for (double d : tables.dt_ladder) dts.push_back(step_json(d));
  j["tables"] = {{"T_ladder", tables.T_ladder},
                 {"bin_ladder", tables.bin_ladder},
                 {"dt_ladder", dts},
                 {"dt_reference", step_json(tables.dt_reference)},
                 {"dt_T", tables.dt_T},
                 {"moving_average_window", tables.moving_average_window},
                 {"threshold", tables.threshold},
                 {"compare_T", tables.compare_T}};
  j["output"] = {{"directory", output.directory}, {"formats", output.formats}};
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  reject_unknown(j, "", {"model", "scheme", "run", "histogram", "reference", "tables", "output"});
  if (j.contains("model")) {
    const auto& m = j["model"];
    reject_unknown(m, "model", {"J", "F", "fault"});
    read(m, "J", "model", c.model.sites);
    read(m, "F", "model", c.model.forcing);
    read(m, "fault", "model", c.model.fault);
  }
  if (j.contains("scheme")) {
    const auto& s = j["scheme"];
    reject_unknown(s, "scheme", {"order", "dt", "gamma", "init_mode"});
    try {
      if (s.contains("order")) c.scheme.order = parse_scheme_order(s["order"].get<std::string>());
      if (s.contains("init_mode")) c.scheme.init_mode = parse_init_mode(s["init_mode"].get<std::string>());
    } catch (const InvalidArgument& e) {
      throw ConfigError("scheme", e.what());
    } catch (const json::exception& e) {
      throw ConfigError("scheme", std::string("wrong type (") + e.what() + ")");
    }
    read_step(s, "dt", "scheme", c.scheme.dt);
    read(s, "gamma", "scheme", c.scheme.gamma);
  }
  if (j.contains("run")) {
    const auto& r = j["run"];
    reject_unknown(r, "run", {"T", "seed", "init_range", "perturbation_pct", "burn_in"});
    read(r, "T", "run", c.run.T);
    read(r, "seed", "run", c.run.seed);
    read(r, "init_range", "run", c.run.init_range);
    read(r, "perturbation_pct", "run", c.run.perturbation_pct);
    read(r, "burn_in", "run", c.run.burn_in);
  }
  if (j.contains("histogram")) {
    const auto& h = j["histogram"];
    reject_unknown(h, "histogram",
                   {"bins", "lo", "hi", "coordinate_index", "include_tails", "max_tail_fraction"});
    read(h, "bins", "histogram", c.histogram.bins);
    read(h, "lo", "histogram", c.histogram.lo);
    read(h, "hi", "histogram", c.histogram.hi);
    read(h, "coordinate_index", "histogram", c.histogram.coordinate_index);
    read(h, "include_tails", "histogram", c.histogram.include_tails);
    read(h, "max_tail_fraction", "histogram", c.histogram.max_tail_fraction);
  }
  if (j.contains("reference")) {
    const auto& r = j["reference"];
    reject_unknown(r, "reference", {"path", "T", "dt", "bins", "mean", "variance"});
    read(r, "path", "reference", c.reference.path);
    read(r, "T", "reference", c.reference.T);
    read_step(r, "dt", "reference", c.reference.dt);
    read(r, "bins", "reference", c.reference.bins);
    read_optional(r, "mean", "reference", c.reference.mean);
    read_optional(r, "variance", "reference", c.reference.variance);
  }
  if (j.contains("tables")) {
    const auto& t = j["tables"];
    reject_unknown(t, "tables",
                   {"T_ladder", "bin_ladder", "dt_ladder", "dt_reference", "dt_T",
                    "moving_average_window", "threshold", "compare_T"});
    read(t, "T_ladder", "tables", c.tables.T_ladder);
    read(t, "bin_ladder", "tables", c.tables.bin_ladder);
    if (t.contains("dt_ladder")) {
      if (!t["dt_ladder"].is_array()) throw ConfigError("tables.dt_ladder", "expected an array");
      c.tables.dt_ladder.clear();
      for (const auto& v : t["dt_ladder"]) c.tables.dt_ladder.push_back(parse_step(v, "tables.dt_ladder"));
    }
    read_step(t, "dt_reference", "tables", c.tables.dt_reference);
    read(t, "dt_T", "tables", c.tables.dt_T);
    read(t, "moving_average_window", "tables", c.tables.moving_average_window);
    read(t, "threshold", "tables", c.tables.threshold);
    read(t, "compare_T", "tables", c.tables.compare_T);
  }
  if (j.contains("output")) {
    const auto& o = j["output"];
    reject_unknown(o, "output", {"directory", "formats"});
    read(o, "directory", "output", c.output.directory);
    read(o, "formats", "output", c.output.formats);
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("--config", "cannot open " + path.string());
  json j;
  try {
    j = json::parse(is, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
  }
  return from_json(j);
}

void ExperimentConfig::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw ConfigError("--set", "expected section.key=value, got '" + assignment + "'");
  const std::string section = assignment.substr(0, dot);
  const std::string key = assignment.substr(dot + 1, eq - dot - 1);
  const std::string value = assignment.substr(eq + 1);
  json v;
  try {
    v = json::parse(value);
  } catch (const json::parse_error&) {
    v = value;
  }
  json j = to_json();
  if (!j.contains(section)) throw ConfigError(section, "unknown section");
  j[section][key] = v;
  *this = from_json(j);
}

std::uint64_t ExperimentConfig::hash() const {
  json j = to_json();
  j.erase("output");
  return fnv1a64(j.dump());
}

SchemeParams ExperimentConfig::scheme_params() const {
  SchemeParams p;
  p.dt = scheme.dt;
  p.gamma = scheme.gamma;
  p.order = scheme.order;
  return p;
}

DampedDrivenModel ExperimentConfig::build_model() const {
  if (model.fault == "nonlinear-sign-flip") return lorenz96_faulty_model(model.sites, model.forcing);
  return lorenz96_model(model.sites, model.forcing);
}

bool ExperimentConfig::wants_format(const std::string& f) const {
  for (const auto& x : output.formats)
    if (x == f) return true;
  return false;
}

std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (!cfg.output.directory.empty()) return cfg.output.directory;
  if (const char* env = std::getenv("MRSAV_OUTPUT_ROOT"); env && *env) return env;
  return "mrsav-out";
}

}  // namespace mrsav::experiments
