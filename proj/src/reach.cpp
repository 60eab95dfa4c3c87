#include "ecsk/reach.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ecsk {

double default_initial_radius(const GridSpec& spec) { return 1.5 * spec.cell_diagonal(); }

double state_distance(const DynamicalSystem& system, std::span<const double> x, std::span<const double> x0) {
  const auto angles = system.angle_dims();
  double s = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    double diff = x[d] - x0[d];
    if (std::find(angles.begin(), angles.end(), static_cast<int>(d)) != angles.end()) diff = wrap_angle(diff);
    s += diff * diff;
  }
  return std::sqrt(s);
}

namespace {

void check_grid(const DynamicalSystem& system, const GridSpec& spec) {
  if (spec.dims() != system.state_dim()) throw std::invalid_argument("reach: grid and system dimensions differ");
  for (int d : system.angle_dims()) {
    const Axis& a = spec.axis(static_cast<std::size_t>(d));
    if (!a.periodic || std::abs(a.period() - 2.0 * std::numbers::pi) > 1e-9) {
      throw std::invalid_argument("reach: angle axis " + std::to_string(d) + " must be periodic with period 2*pi");
    }
  }
}

std::vector<double> node_field(const GridSpec& spec, const auto& fn) {
  std::vector<double> v(spec.node_count());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(coord_of(spec, spec.unravel(i)));
  return v;
}

}  // namespace

ReachSolution frs_from_point(std::shared_ptr<const DynamicalSystem> system, std::span<const double> x_ext0, double r0,
                             double t0, double tf, const GridSpec& spec, const SolverConfig& cfg) {
  check_grid(*system, spec);
  if (!(r0 >= 0.0) || !std::isfinite(r0)) throw std::invalid_argument("reach: r0 must be finite and non-negative");
  if (x_ext0.size() != spec.dims()) throw std::invalid_argument("reach: origin state has wrong dimension");
  for (std::size_t d = 0; d < spec.dims(); ++d) {
    const Axis& a = spec.axis(d);
    if (!std::isfinite(x_ext0[d])) throw DomainError("reach: origin state is not finite");
    if (a.periodic) continue;
    if (x_ext0[d] - r0 < a.min || x_ext0[d] + r0 > a.max) {
      throw DomainError("reach: origin state lies outside the grid (with margin r0) on axis " + std::to_string(d));
    }
  }
  std::vector<double> x0(x_ext0.begin(), x_ext0.end());
  auto v0 = node_field(spec, [&](const std::vector<double>& x) { return state_distance(*system, x, x0) - r0; });
  ScalarField init(spec, std::move(v0), t0);
  ReachSolution sol;
  sol.tube = integrate_reach(init, *system, t0, tf, cfg);
  sol.origin = PointOrigin{std::move(x0)};
  sol.r0 = r0;
  sol.system = std::move(system);
  return sol;
}

ReachSolution frs_from_sensing_complement(std::shared_ptr<const DynamicalSystem> system, double r_sense, double t0,
                                          double tf, const GridSpec& spec, const SolverConfig& cfg) {
  check_grid(*system, spec);
  if (!(r_sense > 0.0) || !std::isfinite(r_sense)) throw std::invalid_argument("reach: r_sense must be positive");
  const auto pos = system->position_dims();
  for (int d : pos) {
    const Axis& a = spec.axis(static_cast<std::size_t>(d));
    if (a.min > -r_sense || a.max < r_sense) {
      throw std::invalid_argument("reach: grid too small for the sensing disk on axis " + std::to_string(d));
    }
  }
  auto v0 = node_field(spec, [&](const std::vector<double>& x) {
    double s = 0.0;
    for (int d : pos) s += x[static_cast<std::size_t>(d)] * x[static_cast<std::size_t>(d)];
    return r_sense - std::sqrt(s);
  });
  ScalarField init(spec, std::move(v0), t0);
  ReachSolution sol;
  sol.tube = integrate_reach(init, *system, t0, tf, cfg);
  sol.origin = SensingOrigin{r_sense};
  sol.r0 = 0.0;
  sol.system = std::move(system);
  return sol;
}

bool membership(const ReachSolution& sol, std::span<const double> x, double t) { return sol.tube.value(x, t) <= 0.0; }

}  // namespace ecsk
