#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecsk/dynamics.hpp"
#include "ecsk/grid.hpp"
#include "ecsk/hj_solver.hpp"

namespace ecsk {

/// Invalid or incomplete configuration. field() names the offending entry.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct SystemConfig {
  std::string model;
  ControlBox bounds;
};

/// Pipeline inputs. Every field is required except r_sense. Units: meters,
/// seconds, radians.
struct PipelineConfig {
  SystemConfig external;
  SystemConfig internal;
  /// One grid serves both the observed system's reach set and the relative
  /// state space of the controlled system.
  std::vector<Axis> grid;
  double t0 = 0.0;
  double tf = 0.0;
  double snapshot_dt = 0.0;
  double r0 = 0.0;
  double collision_radius = 0.0;
  std::optional<double> r_sense;
  double cfl_factor = 0.5;
  std::size_t max_steps = 0;
  /// solver.dissipation, optional: "upwind" (default) or "global".
  Dissipation dissipation = Dissipation::Upwind;
  double switch_tolerance = 0.0;
  std::uint64_t rng_seed = 0;
  std::string output_dir;

  GridSpec grid_spec() const { return GridSpec(grid); }
  SolverConfig solver() const;
};

PipelineConfig parse_config(const std::string& json_text);
/// Throws IoError when the file cannot be read.
PipelineConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const PipelineConfig& cfg);

}  // namespace ecsk
