#pragma once

#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "ecsk/dynamics.hpp"
#include "ecsk/grid.hpp"
#include "ecsk/hj_solver.hpp"

namespace ecsk {

/// Reach set grown from one observed state.
struct PointOrigin {
  std::vector<double> state;
};

/// Reach set grown from everything beyond a sensing radius around the origin.
struct SensingOrigin {
  double r_sense = 0.0;
};

/// Forward reachable tube of a system. A state x belongs to the set at time
/// t exactly when the tube value at (x, t) is <= 0.
struct ReachSolution {
  TimeSampledField tube;
  std::variant<PointOrigin, SensingOrigin> origin;
  double r0 = 0.0;
  std::shared_ptr<const DynamicalSystem> system;
};

/// 1.5 cell diagonals: the smallest initial ball with a resolved interior.
double default_initial_radius(const GridSpec& spec);

/// Distance from x to x0 with angle dims on the wrapped metric.
double state_distance(const DynamicalSystem& system, std::span<const double> x, std::span<const double> x0);

/// Seeds v0(x) = |x - x_ext0| - r0 and evolves it to tf.
ReachSolution frs_from_point(std::shared_ptr<const DynamicalSystem> system, std::span<const double> x_ext0, double r0,
                             double t0, double tf, const GridSpec& spec, const SolverConfig& cfg);

/// Seeds v0(x) = r_sense - |p| (members are outside the sensing disk,
/// any heading) and evolves it to tf.
ReachSolution frs_from_sensing_complement(std::shared_ptr<const DynamicalSystem> system, double r_sense, double t0,
                                          double tf, const GridSpec& spec, const SolverConfig& cfg);

bool membership(const ReachSolution& sol, std::span<const double> x, double t);

}  // namespace ecsk
