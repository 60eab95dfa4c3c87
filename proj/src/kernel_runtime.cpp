#include "ecsk/kernel_runtime.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ecsk {

std::vector<double> RelativeState::point() const {
  std::vector<double> x = p_rel;
  if (has_heading) x.push_back(theta_rel);
  return x;
}

RelativeState to_relative(std::span<const double> x_int, std::span<const double> x_ext0) {
  if (x_int.size() != 3 || x_ext0.size() != 3) throw std::invalid_argument("to_relative: expects (x, y, heading) states");
  const double dx = x_int[0] - x_ext0[0];
  const double dy = x_int[1] - x_ext0[1];
  const double c = std::cos(x_ext0[2]);
  const double s = std::sin(x_ext0[2]);
  RelativeState rel;
  rel.p_rel = {c * dx + s * dy, -s * dx + c * dy};
  rel.theta_rel = wrap_angle(x_int[2] - x_ext0[2]);
  rel.has_heading = true;
  return rel;
}

SafetyKernel::SafetyKernel(std::shared_ptr<const AvoidSolution> avoid, std::shared_ptr<const DynamicalSystem> internal,
                           std::shared_ptr<const DynamicalSystem> external, KernelParams params)
    : avoid_(std::move(avoid)), internal_(std::move(internal)), external_(std::move(external)), params_(params) {
  if (!avoid_ || !internal_ || !external_) throw std::invalid_argument("SafetyKernel: missing component");
  if (internal_->model() != external_->model()) {
    throw std::invalid_argument("SafetyKernel: both systems must use the same model");
  }
  frame_ = internal_->frame();
  if (spec().dims() != internal_->state_dim()) throw std::invalid_argument("SafetyKernel: grid and internal system differ");
  if (frame_ == FrameKind::PlanarRigid) {
    const Axis& h = spec().axis(2);
    if (!h.periodic || std::abs(h.period() - 2.0 * std::numbers::pi) > 1e-9) {
      throw std::invalid_argument("SafetyKernel: heading axis must be periodic with period 2*pi");
    }
  }
  switch_tolerance_ = params_.switch_tolerance.value_or(2.0 * spec().max_spacing());
  if (!(switch_tolerance_ > 0.0)) throw std::invalid_argument("SafetyKernel: switch_tolerance must be positive");
  if (params_.gradient_step < 1) throw std::invalid_argument("SafetyKernel: gradient_step must be at least 1");
  if (!(params_.collision_radius >= 0.0) || !(params_.r0 >= 0.0)) {
    throw std::invalid_argument("SafetyKernel: r0 and collision_radius must be non-negative");
  }
}

double SafetyKernel::envelope_radius() const {
  return external_->max_speed() * horizon() + params_.r0 + params_.collision_radius;
}

RelativeState SafetyKernel::relative(std::span<const double> x_int, std::span<const double> x_ext0) const {
  if (frame_ == FrameKind::PlanarRigid) return to_relative(x_int, x_ext0);
  if (x_int.size() != x_ext0.size() || x_int.size() != internal_->state_dim()) {
    throw std::invalid_argument("SafetyKernel: state dimension mismatch");
  }
  RelativeState rel;
  rel.p_rel.resize(x_int.size());
  for (std::size_t d = 0; d < x_int.size(); ++d) rel.p_rel[d] = x_int[d] - x_ext0[d];
  return rel;
}

bool SafetyKernel::in_grid(const RelativeState& rel) const {
  const auto x = rel.point();
  for (std::size_t d = 0; d < x.size(); ++d) {
    const Axis& a = spec().axis(d);
    if (!a.periodic && (x[d] < a.min || x[d] > a.max)) return false;
  }
  return true;
}

double SafetyKernel::tube_time(double elapsed) const {
  if (!(elapsed >= -1e-9 && elapsed <= horizon() + 1e-9)) {
    throw DomainError("elapsed time " + std::to_string(elapsed) + " outside the kernel horizon");
  }
  return std::clamp(avoid_->t0 + elapsed, avoid_->t0, avoid_->tf);
}

double SafetyKernel::value_relative(std::span<const double> rel_point, double elapsed) const {
  return avoid_->tube.value(rel_point, tube_time(elapsed));
}

std::vector<double> SafetyKernel::gradient_relative(std::span<const double> rel_point, double elapsed) const {
  const double t = tube_time(elapsed);
  const GridSpec& g = spec();
  std::vector<double> x(rel_point.begin(), rel_point.end());
  std::vector<double> grad(x.size(), 0.0);
  // Fail loudly on out-of-grid queries before probing neighbours.
  (void)avoid_->tube.value(x, t);
  for (std::size_t d = 0; d < x.size(); ++d) {
    const Axis& a = g.axis(d);
    const double delta = params_.gradient_step * a.spacing();
    double hi = x[d] + delta;
    double lo = x[d] - delta;
    if (!a.periodic) {
      hi = std::min(hi, a.max);
      lo = std::max(lo, a.min);
    }
    if (!(hi > lo)) continue;
    std::vector<double> probe = x;
    probe[d] = hi;
    const double vh = avoid_->tube.value(probe, t);
    probe[d] = lo;
    const double vl = avoid_->tube.value(probe, t);
    grad[d] = (vh - vl) / (hi - lo);
  }
  return grad;
}

double SafetyKernel::value(std::span<const double> x_int, std::span<const double> x_ext0, double elapsed) const {
  return value_relative(relative(x_int, x_ext0).point(), elapsed);
}

std::vector<double> SafetyKernel::optimal_control(std::span<const double> x_int, std::span<const double> x_ext0,
                                                  double elapsed) const {
  const RelativeState rel = relative(x_int, x_ext0);
  std::vector<double> grad = gradient_relative(rel.point(), elapsed);
  if (frame_ == FrameKind::PlanarRigid) {
    // Positional gradient back to the world frame: rotate by +heading.
    const double c = std::cos(x_ext0[2]);
    const double s = std::sin(x_ext0[2]);
    const double gx = grad[0];
    const double gy = grad[1];
    grad[0] = c * gx - s * gy;
    grad[1] = s * gx + c * gy;
  }
  std::vector<double> u(internal_->control_box().dim());
  const Optimizer opt =
      params_.convention == ControlConvention::ValueAscent ? Optimizer::Maximize : Optimizer::Minimize;
  extremize_hamiltonian(*internal_, x_int, grad, false, opt, u);
  return u;
}

FilterDecision SafetyKernel::filter_step(std::span<const double> x_int, std::span<const double> x_ext0, double elapsed,
                                         std::span<const double> nominal) const {
  if (!internal_->control_box().contains(nominal, 1e-12)) {
    throw std::invalid_argument("filter_step: nominal control outside the admissible box");
  }
  FilterDecision out;
  out.value = value(x_int, x_ext0, elapsed);
  if (out.value > switch_tolerance_) {
    out.control.assign(nominal.begin(), nominal.end());
    out.mode = FilterMode::Nominal;
  } else {
    out.control = optimal_control(x_int, x_ext0, elapsed);
    out.mode = FilterMode::Safety;
  }
  return out;
}

}  // namespace ecsk
