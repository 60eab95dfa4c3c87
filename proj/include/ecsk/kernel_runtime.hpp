#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "ecsk/avoid.hpp"
#include "ecsk/dynamics.hpp"

namespace ecsk {

/// Which extremum of grad(V) . f_int the evasion control takes. ValueAscent
/// (argmax) steers up the value and is the safe choice; LiteralArgmin is
/// kept for comparison.
enum class ControlConvention { ValueAscent, LiteralArgmin };

enum class FilterMode { Nominal, Safety };

struct KernelParams {
  double r0 = 0.0;
  double collision_radius = 1.0;
  /// Unset means 2 x the largest grid spacing.
  std::optional<double> switch_tolerance;
  /// Half-width of the central-difference stencil, in cells.
  int gradient_step = 1;
  ControlConvention convention = ControlConvention::ValueAscent;
};

/// Controlled-system state expressed in the frame of the last observation
/// of the other system.
struct RelativeState {
  std::vector<double> p_rel;
  double theta_rel = 0.0;
  bool has_heading = false;

  /// Coordinates in kernel grid order: positions, then heading if any.
  std::vector<double> point() const;
};

/// Planar rigid-motion frame change for (x, y, heading) states.
RelativeState to_relative(std::span<const double> x_int, std::span<const double> x_ext0);

struct FilterDecision {
  std::vector<double> control;
  FilterMode mode = FilterMode::Nominal;
  double value = 0.0;
};

/// Deployable safety kernel. Immutable; all queries are safe to call
/// concurrently. Times are elapsed seconds since the last observation.
class SafetyKernel {
 public:
  SafetyKernel(std::shared_ptr<const AvoidSolution> avoid, std::shared_ptr<const DynamicalSystem> internal,
               std::shared_ptr<const DynamicalSystem> external, KernelParams params);

  const AvoidSolution& avoid() const { return *avoid_; }
  std::shared_ptr<const AvoidSolution> avoid_ptr() const { return avoid_; }
  const DynamicalSystem& internal() const { return *internal_; }
  const DynamicalSystem& external() const { return *external_; }
  std::shared_ptr<const DynamicalSystem> internal_ptr() const { return internal_; }
  std::shared_ptr<const DynamicalSystem> external_ptr() const { return external_; }
  const KernelParams& params() const { return params_; }
  double switch_tolerance() const { return switch_tolerance_; }
  FrameKind frame() const { return frame_; }
  const GridSpec& spec() const { return avoid_->tube.spec(); }
  double horizon() const { return avoid_->tf - avoid_->t0; }

  /// Distance beyond which the observed system cannot have reached collision
  /// range within the horizon: v_ext_max * horizon + r0 + collision_radius.
  double envelope_radius() const;

  RelativeState relative(std::span<const double> x_int, std::span<const double> x_ext0) const;
  bool in_grid(const RelativeState& rel) const;

  double value_relative(std::span<const double> rel_point, double elapsed) const;
  /// Central-difference gradient in the relative frame.
  std::vector<double> gradient_relative(std::span<const double> rel_point, double elapsed) const;

  double value(std::span<const double> x_int, std::span<const double> x_ext0, double elapsed) const;
  std::vector<double> optimal_control(std::span<const double> x_int, std::span<const double> x_ext0,
                                      double elapsed) const;
  /// Passes `nominal` through while the value exceeds switch_tolerance,
  /// otherwise substitutes the evasion control.
  FilterDecision filter_step(std::span<const double> x_int, std::span<const double> x_ext0, double elapsed,
                             std::span<const double> nominal) const;

 private:
  double tube_time(double elapsed) const;

  std::shared_ptr<const AvoidSolution> avoid_;
  std::shared_ptr<const DynamicalSystem> internal_;
  std::shared_ptr<const DynamicalSystem> external_;
  KernelParams params_;
  double switch_tolerance_ = 0.0;
  FrameKind frame_ = FrameKind::Translation;
};

inline double value(const SafetyKernel& k, std::span<const double> x_int, std::span<const double> x_ext0, double t) {
  return k.value(x_int, x_ext0, t);
}
inline std::vector<double> optimal_control(const SafetyKernel& k, std::span<const double> x_int,
                                           std::span<const double> x_ext0, double t) {
  return k.optimal_control(x_int, x_ext0, t);
}
inline FilterDecision filter_step(const SafetyKernel& k, std::span<const double> x_int, std::span<const double> x_ext0,
                                  double t, std::span<const double> nominal) {
  return k.filter_step(x_int, x_ext0, t, nominal);
}

}  // namespace ecsk
