#pragma once

#include <memory>
#include <span>
#include <vector>

#include "ecsk/grid.hpp"
#include "ecsk/reach.hpp"

namespace ecsk {

/// Time-varying unsafe set of the controlled system in relative
/// coordinates, stored as a signed distance (negative inside).
struct UnsafeTube {
  TimeSampledField d_tilde;
  /// Center-to-center collision distance (twice the per-vehicle radius).
  double collision_radius = 1.0;
  /// The reach solution this tube was built from; null after loading from disk.
  std::shared_ptr<const ReachSolution> source;
};

/// Min over the dropped dimensions. keep_dims order defines the output axes.
ScalarField project_min(const ScalarField& field, std::span<const int> keep_dims);
TimeSampledField project_min(const TimeSampledField& tube, std::span<const int> keep_dims);

/// Signed distance to the Minkowski sum of {field <= 0} with the closed ball
/// of the given radius. An empty set yields the +sentinel field.
ScalarField inflate(const ScalarField& field, double radius);

/// Appends `heading` as a new last axis and copies the field into every slice.
ScalarField extrude(const ScalarField& field, const Axis& heading);

/// Projects the reach tube onto position, inflates by collision_radius and,
/// when internal_spec carries a trailing heading axis, extrudes along it.
/// The reach set must be expressed with the observed system at the origin
/// (heading 0), so its positional axes are the relative positions.
UnsafeTube build_unsafe_tube(std::shared_ptr<const ReachSolution> reach, double collision_radius,
                             const GridSpec& internal_spec);

/// Brute-force min over reachable grid nodes x_ext of
/// |p_int - p_ext|^2 - collision_radius^2. Only the positional part of x_int
/// is used. Returns +distance_sentinel when nothing is reachable.
double pessimistic_safety_oracle(const ReachSolution& reach, std::span<const double> x_int, double t,
                                 double collision_radius);

}  // namespace ecsk
