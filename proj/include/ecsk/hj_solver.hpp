#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>

#include "ecsk/dynamics.hpp"
#include "ecsk/grid.hpp"

namespace ecsk {

/// Thrown when a requested step exceeds the stability limit.
class CflError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct StepProgress {
  std::size_t step = 0;
  double time = 0.0;
  double dt = 0.0;
  /// dt * sum_d(alpha_d / h_d); never above the configured cfl_factor.
  double cfl_number = 0.0;
  double min_value = 0.0;
  double max_value = 0.0;
};

/// Global: one alpha_d per dimension from the system's dissipation bounds,
/// added after the optimization. Upwind: the term |g_d(x, u)| (p+ - p-) / 2 is
/// optimized together with p . g, which is the upwind difference for every
/// frozen control and so stays monotone under the same CFL limit. Global
/// smears the kink of a reach value wherever the system can stand still,
/// which pushes the start point out of its own reachable set. Upwind falls
/// back to Global for systems whose state rows mix control channels.
enum class Dissipation { Global, Upwind };

struct SolverConfig {
  double cfl_factor = 0.5;
  Dissipation dissipation = Dissipation::Upwind;
  double snapshot_dt = 0.1;
  std::size_t max_steps = 1'000'000;
  std::function<void(const StepProgress&)> progress;

  void validate() const;
};

/// What one explicit step computes. The update is the linearized dynamic
/// programming step  v(x) <- opt_u v(x + dt * g(x, u))  with g = -f when
/// reverse_dynamics is set and g = +f otherwise, opt chosen by `optimizer`.
/// backward_in_time only decides whether the output time is t - dt or t + dt.
struct StepMode {
  bool reverse_dynamics = false;
  bool backward_in_time = false;
  Optimizer optimizer = Optimizer::Minimize;
  Dissipation dissipation = Dissipation::Global;
};

/// Forward reachable set propagation: value runs forward in time over -f,
/// minimized over the control box.
inline constexpr StepMode kReachStep{true, false, Optimizer::Minimize, Dissipation::Global};
/// Avoid propagation: value runs backward in time over +f, maximized over
/// the control box (the controlled system steers away from the obstacle).
inline constexpr StepMode kAvoidStep{false, true, Optimizer::Maximize, Dissipation::Global};

/// Largest stable dt: cfl_factor / sum_d(alpha_d / h_d).
double cfl_limit(const DynamicalSystem& system, const GridSpec& spec, double cfl_factor);

/// One Lax-Friedrichs step. Global dissipation:
///   v <- v + dt * (H(x, (p- + p+)/2) + sum_d alpha_d (p+_d - p-_d) / 2)
/// with H(x, p) = opt_u p . g(x, u). Upwind dissipation:
///   v <- v + dt * opt_u sum_d (g_d pavg_d + |g_d| (p+_d - p-_d) / 2).
/// Throws CflError when dt exceeds cfl_limit.
ScalarField lf_step(const ScalarField& field, const DynamicalSystem& system, double dt, StepMode mode,
                    double cfl_factor = 0.5);

/// Forward evolution of a reach value function from v0 (at t0) to tf.
/// Snapshots every snapshot_dt, the last one exactly at tf. tf - t0 must be a
/// whole number of snapshot intervals.
TimeSampledField integrate_reach(const ScalarField& v0, const DynamicalSystem& system, double t0, double tf,
                                 const SolverConfig& cfg);

/// Backward evolution from the obstacle's final snapshot to its first, with
/// the cap v <- min(v, obstacle) after every sub-step. The obstacle is
/// interpolated linearly in time between its snapshots, and the output
/// shares its time grid.
TimeSampledField integrate_avoid(const ScalarField& terminal, const TimeSampledField& obstacle,
                                 const DynamicalSystem& system, const SolverConfig& cfg);

}  // namespace ecsk
