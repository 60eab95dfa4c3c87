#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ecsk/kernel_runtime.hpp"

namespace ecsk {

/// Times at which the controlled system cannot see the other one, as a
/// union of half-open intervals (lo, hi].
class ObservationSchedule {
 public:
  ObservationSchedule() = default;
  explicit ObservationSchedule(std::vector<std::pair<double, double>> lost_intervals);

  static ObservationSchedule never_lost() { return {}; }
  static ObservationSchedule full_loss(double t0, double tf) { return ObservationSchedule({{t0, tf}}); }

  bool lost(double t) const;
  const std::vector<std::pair<double, double>>& intervals() const { return intervals_; }

 private:
  std::vector<std::pair<double, double>> intervals_;
};

struct ExternalPolicy {
  enum class Kind { Stationary, Adversarial };
  Kind kind = Kind::Stationary;
  int samples = 1;
  std::uint64_t seed = 0;
};

ExternalPolicy stationary_policy();
/// Greedy pursuer: each step tries `samples` uniform random admissible
/// controls and keeps the one whose next position is closest to the
/// controlled system. samples = 1 is a uniformly random policy.
ExternalPolicy adversarial_policy(int samples, std::uint64_t seed);

struct NominalPolicy {
  enum class Kind { Hold, Waypoint };
  Kind kind = Kind::Hold;
  std::vector<double> waypoint;
};

NominalPolicy hold_policy();
NominalPolicy waypoint_policy(std::vector<double> target);

/// The admissible control closest to zero.
std::vector<double> resting_control(const DynamicalSystem& system);
std::vector<double> nominal_control(const NominalPolicy& policy, const DynamicalSystem& system,
                                    std::span<const double> x);

struct SimTrace {
  std::vector<double> times;
  std::vector<std::vector<double>> x_int;
  std::vector<std::vector<double>> x_ext;
  std::vector<std::vector<double>> controls_int;
  std::vector<std::vector<double>> controls_ext;
  std::vector<FilterMode> mode;
  std::vector<bool> observed;
  /// Collision margin |p_int - p_ext|^2 - collision_radius^2 per sample.
  std::vector<double> d;
  double min_d = 0.0;
  bool aborted = false;
  std::string abort_reason;
};

/// |p_int - p_ext|^2 - collision_radius^2 over the positional dims.
double collision_margin(const SafetyKernel& kernel, std::span<const double> x_int, std::span<const double> x_ext);

/// Closed-loop episode. While observed, the controller re-anchors on the true
/// external state; while lost it only sees the last anchor and the elapsed
/// time. Controls in row k act over [t_k, t_k+1).
SimTrace run_episode(const SafetyKernel& kernel, std::span<const double> x_int0, std::span<const double> x_ext0,
                     const ObservationSchedule& schedule, const ExternalPolicy& external_policy,
                     const NominalPolicy& nominal_policy, double horizon, double dt, std::uint64_t rng_seed);

struct BatchOptions {
  int adversary_samples = 50;
  double dt = 0.02;
  NominalPolicy nominal = hold_policy();
  bool keep_traces = false;
};

struct BatchTrial {
  std::vector<double> x_int0;
  double start_value = 0.0;
  double min_d = 0.0;
  bool aborted = false;
};

struct BatchReport {
  int trials = 0;
  int collisions = 0;
  int aborted = 0;
  /// Smallest min_d over all trials; +inf when there are no trials.
  double worst_min_d = 0.0;
  std::vector<BatchTrial> runs;
  /// Filled only when BatchOptions::keep_traces is set.
  std::vector<SimTrace> traces;

  bool passed() const { return collisions == 0 && aborted == 0; }
};

/// Samples start states with kernel value >= margin (observed system at the
/// origin, heading 0) and runs full-loss episodes against the adversary.
BatchReport batch_verify(const SafetyKernel& kernel, int trials, double margin, std::uint64_t rng_seed,
                         const BatchOptions& options = {});

/// Header: t, x1.., u1.., mode, observed, d.
void write_trace_csv(const SimTrace& trace, std::ostream& out);

}  // namespace ecsk
