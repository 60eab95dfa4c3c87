#pragma once

#include <memory>

#include "ecsk/dynamics.hpp"
#include "ecsk/hj_solver.hpp"
#include "ecsk/setops.hpp"

namespace ecsk {

/// Avoid value of the controlled system against an unsafe tube. Its
/// super-zero level set at elapsed time t is the safety kernel.
struct AvoidSolution {
  TimeSampledField tube;
  /// Null after loading from disk.
  std::shared_ptr<const UnsafeTube> unsafe;
  double t0 = 0.0;
  double tf = 0.0;
};

/// Backward solve from d_tilde(tf) with the running-min cap against d_tilde.
AvoidSolution solve_avoid(std::shared_ptr<const UnsafeTube> unsafe, const DynamicalSystem& system,
                          const SolverConfig& cfg);

/// Value field at time t, interpolated between snapshots.
ScalarField kernel_slice(const AvoidSolution& sol, double t);

/// L-infinity difference between the two earliest snapshots.
double convergence_gap(const AvoidSolution& sol);
/// L-infinity difference at t0 between two solves that differ only in tf.
/// A small value means a longer horizon no longer changes the kernel.
double convergence_gap(const AvoidSolution& shorter, const AvoidSolution& longer);

}  // namespace ecsk
