#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecsk/grid.hpp"

namespace ecsk {

inline constexpr std::size_t kMaxStateDim = 6;
inline constexpr std::size_t kMaxControlDim = 4;

/// Compact box of admissible controls, one [low, high] interval per channel.
struct ControlBox {
  std::vector<double> lows;
  std::vector<double> highs;

  ControlBox() = default;
  ControlBox(std::vector<double> lo, std::vector<double> hi);

  std::size_t dim() const { return lows.size(); }
  bool contains(std::span<const double> u, double tol = 0.0) const;
  /// Largest |u_j| over the box.
  double magnitude(std::size_t j) const;
};

enum class Optimizer { Minimize, Maximize };

/// How the relative-coordinate frame between two copies of a system is
/// formed: plain translation, or planar rigid motion (x, y, heading).
enum class FrameKind { Translation, PlanarRigid };

/// Control-affine dynamics  xdot = drift(x) + G(x) u  with box-bounded u.
class DynamicalSystem {
 public:
  DynamicalSystem(std::size_t state_dim, ControlBox box);
  virtual ~DynamicalSystem() = default;

  virtual std::string_view model() const = 0;

  std::size_t state_dim() const { return state_dim_; }
  const ControlBox& control_box() const { return box_; }

  /// drift has state_dim entries; gain is state_dim x control_dim, row-major.
  virtual void affine_terms(std::span<const double> x, std::span<double> drift, std::span<double> gain) const = 0;

  /// Per-dimension bound on |flow_d(x, u)| over the grid domain and the box.
  virtual std::vector<double> dissipation_bounds(const GridSpec& spec) const = 0;

  /// State dimensions holding angles, wrapped into [-pi, pi).
  virtual std::vector<int> angle_dims() const { return {}; }
  /// State dimensions holding planar position.
  virtual std::vector<int> position_dims() const = 0;
  virtual FrameKind frame() const { return FrameKind::Translation; }
  /// Largest positional speed the system can reach.
  virtual double max_speed() const = 0;

  void flow(std::span<const double> x, std::span<const double> u, std::span<double> dx) const;
  std::vector<double> flow(std::span<const double> x, std::span<const double> u) const;

  /// The all-lower-bound control, used as the deterministic tie-break.
  std::vector<double> lower_control() const { return box_.lows; }

 private:
  std::size_t state_dim_;
  ControlBox box_;
};

/// Planar unicycle: (x, y, theta), controls (speed, turn rate).
class DubinsCar final : public DynamicalSystem {
 public:
  DubinsCar(double speed_low, double speed_high, double turn_low, double turn_high);

  std::string_view model() const override { return "dubins"; }
  void affine_terms(std::span<const double> x, std::span<double> drift, std::span<double> gain) const override;
  std::vector<double> dissipation_bounds(const GridSpec& spec) const override;
  std::vector<int> angle_dims() const override { return {2}; }
  std::vector<int> position_dims() const override { return {0, 1}; }
  FrameKind frame() const override { return FrameKind::PlanarRigid; }
  double max_speed() const override { return control_box().magnitude(0); }
};

/// Single integrator xdot = u in n dimensions.
class Integrator final : public DynamicalSystem {
 public:
  Integrator(std::vector<double> lows, std::vector<double> highs);

  std::string_view model() const override;
  void affine_terms(std::span<const double> x, std::span<double> drift, std::span<double> gain) const override;
  std::vector<double> dissipation_bounds(const GridSpec& spec) const override;
  std::vector<int> position_dims() const override;
  double max_speed() const override;
};

/// Builds "dubins", "integrator1d" or "integrator2d" from per-channel
/// [low, high] control bounds.
std::shared_ptr<const DynamicalSystem> make_system(std::string_view model, const ControlBox& bounds);

struct HamiltonianExtremum {
  double value = 0.0;
  std::vector<double> control;
};

/// min over the control box of p . (+-flow(x, u)); the minus sign applies
/// when `reverse` is set. Bang-bang per channel; a zero coefficient selects
/// the channel's lower bound.
HamiltonianExtremum hamiltonian_min(const DynamicalSystem& system, std::span<const double> x,
                                    std::span<const double> p, bool reverse);

/// max over the control box of p . (+-flow(x, u)), same tie-break.
HamiltonianExtremum hamiltonian_max(const DynamicalSystem& system, std::span<const double> x,
                                    std::span<const double> p, bool reverse);

/// Allocation-free core of the two functions above. `control` may be empty.
double extremize_hamiltonian(const DynamicalSystem& system, std::span<const double> x, std::span<const double> p,
                             bool reverse, Optimizer optimizer, std::span<double> control);

std::vector<double> dissipation_bounds(const DynamicalSystem& system, const GridSpec& spec);

/// Piecewise-constant control signal: values[k] holds on [starts[k], starts[k+1]).
struct PiecewiseConstantSignal {
  std::vector<double> starts;
  std::vector<std::vector<double>> values;

  static PiecewiseConstantSignal constant(std::vector<double> u);
  const std::vector<double>& at(double t) const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
};

/// One classical RK4 step with the control held fixed. Angle dims are wrapped.
std::vector<double> rk4_step(const DynamicalSystem& system, std::span<const double> x, std::span<const double> u, double dt);

/// Fixed-step RK4 from t_span.first to t_span.second. The control of each
/// step is the signal value at the step's start time.
Trajectory simulate(const DynamicalSystem& system, std::span<const double> x0, const PiecewiseConstantSignal& controls,
                    std::pair<double, double> t_span, double dt);

}  // namespace ecsk
