#include "ecsk/config.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <sstream>

#include "ecsk/artifact_io.hpp"

namespace ecsk {

using nlohmann::json;

SolverConfig PipelineConfig::solver() const {
  SolverConfig s;
  s.cfl_factor = cfl_factor;
  s.snapshot_dt = snapshot_dt;
  s.max_steps = max_steps;
  s.dissipation = dissipation;
  return s;
}

namespace {

const json& field(const json& obj, const std::string& parent, const std::string& key) {
  const std::string name = parent.empty() ? key : parent + "." + key;
  if (!obj.is_object() || !obj.contains(key)) throw ConfigError(name, "missing required field");
  return obj.at(key);
}

double number(const json& obj, const std::string& parent, const std::string& key) {
  const json& v = field(obj, parent, key);
  const std::string name = parent.empty() ? key : parent + "." + key;
  if (!v.is_number()) throw ConfigError(name, "must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(name, "must be finite");
  return x;
}

SystemConfig system_config(const json& root, const std::string& key) {
  const json& s = field(root, "", key);
  SystemConfig out;
  const json& model = field(s, key, "model");
  if (!model.is_string()) throw ConfigError(key + ".model", "must be a string");
  out.model = model.get<std::string>();
  if (out.model != "dubins" && out.model != "integrator1d" && out.model != "integrator2d") {
    throw ConfigError(key + ".model", "unknown model '" + out.model + "' (dubins, integrator1d, integrator2d)");
  }
  const json& b = field(s, key, "control_bounds");
  const std::size_t want = out.model == "integrator1d" ? 1 : 2;
  if (!b.is_array() || b.size() != want) {
    throw ConfigError(key + ".control_bounds", "needs " + std::to_string(want) + " [low, high] pairs");
  }
  std::vector<double> lo, hi;
  for (std::size_t j = 0; j < b.size(); ++j) {
    const std::string name = key + ".control_bounds[" + std::to_string(j) + "]";
    if (!b[j].is_array() || b[j].size() != 2 || !b[j][0].is_number() || !b[j][1].is_number()) {
      throw ConfigError(name, "must be a [low, high] pair of numbers");
    }
    lo.push_back(b[j][0].get<double>());
    hi.push_back(b[j][1].get<double>());
    if (!(std::isfinite(lo.back()) && std::isfinite(hi.back()) && lo.back() <= hi.back())) {
      throw ConfigError(name, "needs finite low <= high");
    }
  }
  out.bounds = ControlBox(lo, hi);
  return out;
}

template <class T>
std::vector<T> array_of(const json& obj, const std::string& key, std::size_t n) {
  const std::string name = "grid." + key;
  const json& a = field(obj, "grid", key);
  if (!a.is_array() || a.size() != n) throw ConfigError(name, "needs " + std::to_string(n) + " entries");
  std::vector<T> out;
  for (const auto& e : a) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!e.is_boolean()) throw ConfigError(name, "entries must be booleans");
    } else if constexpr (std::is_integral_v<T>) {
      if (!e.is_number_integer()) throw ConfigError(name, "entries must be integers");
    } else {
      if (!e.is_number()) throw ConfigError(name, "entries must be numbers");
    }
    out.push_back(e.get<T>());
  }
  return out;
}

}  // namespace

PipelineConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<document>", std::string("malformed JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("<document>", "top level must be an object");

  PipelineConfig cfg;
  cfg.external = system_config(root, "external");
  cfg.internal = system_config(root, "internal");
  if (cfg.external.model != cfg.internal.model) {
    throw ConfigError("internal.model", "must match external.model (relative-frame reduction)");
  }
  const auto sys = make_system(cfg.internal.model, cfg.internal.bounds);
  const std::size_t n = sys->state_dim();

  const json& g = field(root, "", "grid");
  const auto mins = array_of<double>(g, "mins", n);
  const auto maxs = array_of<double>(g, "maxs", n);
  const auto counts = array_of<int>(g, "counts", n);
  const auto periodic = array_of<bool>(g, "periodic", n);
  const auto angles = sys->angle_dims();
  for (std::size_t d = 0; d < n; ++d) {
    const std::string at = "[" + std::to_string(d) + "]";
    if (!std::isfinite(mins[d]) || !std::isfinite(maxs[d]) || !(maxs[d] > mins[d])) {
      throw ConfigError("grid.maxs" + at, "must exceed grid.mins" + at);
    }
    if (counts[d] < 3) throw ConfigError("grid.counts" + at, "must be at least 3");
    const bool is_angle = std::find(angles.begin(), angles.end(), static_cast<int>(d)) != angles.end();
    if (is_angle && (!periodic[d] || std::abs(maxs[d] - mins[d] - 2.0 * std::numbers::pi) > 1e-9)) {
      throw ConfigError("grid.periodic" + at, "heading axis must be periodic and span 2*pi");
    }
    if (!is_angle && periodic[d]) throw ConfigError("grid.periodic" + at, "position axes cannot be periodic");
    cfg.grid.push_back(Axis{mins[d], maxs[d], counts[d], periodic[d]});
  }

  const json& t = field(root, "", "time");
  cfg.t0 = number(t, "time", "t0");
  cfg.tf = number(t, "time", "tf");
  cfg.snapshot_dt = number(t, "time", "snapshot_dt");
  if (!(cfg.tf > cfg.t0)) throw ConfigError("time.tf", "must be greater than time.t0");
  if (!(cfg.snapshot_dt > 0.0)) throw ConfigError("time.snapshot_dt", "must be positive");
  {
    const double ratio = (cfg.tf - cfg.t0) / cfg.snapshot_dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
      throw ConfigError("time.snapshot_dt", "must divide tf - t0 into whole intervals");
    }
  }

  cfg.r0 = number(root, "", "r0");
  if (!(cfg.r0 >= 0.0)) throw ConfigError("r0", "must be non-negative");
  cfg.collision_radius = number(root, "", "collision_radius");
  if (!(cfg.collision_radius > 0.0)) throw ConfigError("collision_radius", "must be positive");
  for (int d : sys->position_dims()) {
    const Axis& a = cfg.grid[static_cast<std::size_t>(d)];
    if (a.min > -cfg.r0 || a.max < cfg.r0) {
      throw ConfigError("grid.mins", "grid must contain the origin with margin r0");
    }
  }
  if (root.contains("r_sense") && !root.at("r_sense").is_null()) {
    cfg.r_sense = number(root, "", "r_sense");
    if (!(*cfg.r_sense > 0.0)) throw ConfigError("r_sense", "must be positive");
    for (int d : sys->position_dims()) {
      const Axis& a = cfg.grid[static_cast<std::size_t>(d)];
      if (a.min > -*cfg.r_sense || a.max < *cfg.r_sense) {
        throw ConfigError("r_sense", "sensing disk does not fit inside the grid");
      }
    }
  }

  const json& s = field(root, "", "solver");
  cfg.cfl_factor = number(s, "solver", "cfl_factor");
  if (!(cfg.cfl_factor > 0.0 && cfg.cfl_factor <= 1.0)) throw ConfigError("solver.cfl_factor", "must lie in (0, 1]");
  const json& ms = field(s, "solver", "max_steps");
  if (!ms.is_number_integer() || ms.get<long long>() < 1) {
    throw ConfigError("solver.max_steps", "must be a positive integer");
  }
  cfg.max_steps = ms.get<std::size_t>();
  if (s.contains("dissipation")) {
    const json& d = s["dissipation"];
    if (d == "upwind") {
      cfg.dissipation = Dissipation::Upwind;
    } else if (d == "global") {
      cfg.dissipation = Dissipation::Global;
    } else {
      throw ConfigError("solver.dissipation", "must be \"upwind\" or \"global\"");
    }
  }

  cfg.switch_tolerance = number(root, "", "switch_tolerance");
  if (!(cfg.switch_tolerance > 0.0)) throw ConfigError("switch_tolerance", "must be positive");
  const json& seed = field(root, "", "rng_seed");
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
    throw ConfigError("rng_seed", "must be a non-negative integer");
  }
  cfg.rng_seed = seed.get<std::uint64_t>();
  const json& out = field(root, "", "output_dir");
  if (!out.is_string() || out.get<std::string>().empty()) throw ConfigError("output_dir", "must be a non-empty string");
  cfg.output_dir = out.get<std::string>();
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (path.empty() || !in) throw IoError("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string config_to_json(const PipelineConfig& cfg) {
  auto sys = [](const SystemConfig& s) {
    json j;
    j["model"] = s.model;
    for (std::size_t k = 0; k < s.bounds.dim(); ++k) j["control_bounds"].push_back({s.bounds.lows[k], s.bounds.highs[k]});
    return j;
  };
  json j;
  j["external"] = sys(cfg.external);
  j["internal"] = sys(cfg.internal);
  for (const Axis& a : cfg.grid) {
    j["grid"]["mins"].push_back(a.min);
    j["grid"]["maxs"].push_back(a.max);
    j["grid"]["counts"].push_back(a.count);
    j["grid"]["periodic"].push_back(a.periodic);
  }
  j["time"] = {{"t0", cfg.t0}, {"tf", cfg.tf}, {"snapshot_dt", cfg.snapshot_dt}};
  j["r0"] = cfg.r0;
  j["collision_radius"] = cfg.collision_radius;
  if (cfg.r_sense) j["r_sense"] = *cfg.r_sense;
  j["solver"] = {{"cfl_factor", cfg.cfl_factor},
                 {"max_steps", cfg.max_steps},
                 {"dissipation", cfg.dissipation == Dissipation::Upwind ? "upwind" : "global"}};
  j["switch_tolerance"] = cfg.switch_tolerance;
  j["rng_seed"] = cfg.rng_seed;
  j["output_dir"] = cfg.output_dir;
  return j.dump(2) + "\n";
}

}  // namespace ecsk
