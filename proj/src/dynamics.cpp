#include "ecsk/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace ecsk {

ControlBox::ControlBox(std::vector<double> lo, std::vector<double> hi) : lows(std::move(lo)), highs(std::move(hi)) {
  if (lows.size() != highs.size()) throw std::invalid_argument("control box: lows and highs differ in length");
  if (lows.empty() || lows.size() > kMaxControlDim) throw std::invalid_argument("control box: bad channel count");
  for (std::size_t j = 0; j < lows.size(); ++j) {
    if (!std::isfinite(lows[j]) || !std::isfinite(highs[j]) || lows[j] > highs[j]) {
      throw std::invalid_argument("control box: channel " + std::to_string(j) + " needs finite low <= high");
    }
  }
}

bool ControlBox::contains(std::span<const double> u, double tol) const {
  if (u.size() != dim()) return false;
  for (std::size_t j = 0; j < dim(); ++j) {
    if (!(u[j] >= lows[j] - tol && u[j] <= highs[j] + tol)) return false;
  }
  return true;
}

double ControlBox::magnitude(std::size_t j) const { return std::max(std::abs(lows[j]), std::abs(highs[j])); }

DynamicalSystem::DynamicalSystem(std::size_t state_dim, ControlBox box) : state_dim_(state_dim), box_(std::move(box)) {
  if (state_dim_ == 0 || state_dim_ > kMaxStateDim) throw std::invalid_argument("bad state dimension");
}

void DynamicalSystem::flow(std::span<const double> x, std::span<const double> u, std::span<double> dx) const {
  const std::size_t n = state_dim_;
  const std::size_t m = box_.dim();
  std::array<double, kMaxStateDim * kMaxControlDim> gain{};
  affine_terms(x, dx, std::span(gain).first(n * m));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) dx[i] += gain[i * m + j] * u[j];
  }
}

std::vector<double> DynamicalSystem::flow(std::span<const double> x, std::span<const double> u) const {
  std::vector<double> dx(state_dim_);
  flow(x, u, dx);
  return dx;
}

DubinsCar::DubinsCar(double speed_low, double speed_high, double turn_low, double turn_high)
    : DynamicalSystem(3, ControlBox({speed_low, turn_low}, {speed_high, turn_high})) {}

void DubinsCar::affine_terms(std::span<const double> x, std::span<double> drift, std::span<double> gain) const {
  const double c = std::cos(x[2]);
  const double s = std::sin(x[2]);
  drift[0] = drift[1] = drift[2] = 0.0;
  gain[0] = c;
  gain[1] = 0.0;
  gain[2] = s;
  gain[3] = 0.0;
  gain[4] = 0.0;
  gain[5] = 1.0;
}

std::vector<double> DubinsCar::dissipation_bounds(const GridSpec&) const {
  const double v = control_box().magnitude(0);
  return {v, v, control_box().magnitude(1)};
}

Integrator::Integrator(std::vector<double> lows, std::vector<double> highs)
    : DynamicalSystem(lows.size(), ControlBox(lows, highs)) {}

std::string_view Integrator::model() const {
  switch (state_dim()) {
    case 1: return "integrator1d";
    case 2: return "integrator2d";
    default: return "integrator";
  }
}

void Integrator::affine_terms(std::span<const double>, std::span<double> drift, std::span<double> gain) const {
  const std::size_t n = state_dim();
  for (std::size_t i = 0; i < n; ++i) {
    drift[i] = 0.0;
    for (std::size_t j = 0; j < n; ++j) gain[i * n + j] = (i == j) ? 1.0 : 0.0;
  }
}

std::vector<double> Integrator::dissipation_bounds(const GridSpec&) const {
  std::vector<double> alpha(state_dim());
  for (std::size_t d = 0; d < alpha.size(); ++d) alpha[d] = control_box().magnitude(d);
  return alpha;
}

std::vector<int> Integrator::position_dims() const {
  std::vector<int> dims(state_dim());
  for (std::size_t d = 0; d < dims.size(); ++d) dims[d] = static_cast<int>(d);
  return dims;
}

double Integrator::max_speed() const {
  double s = 0.0;
  for (std::size_t d = 0; d < state_dim(); ++d) s += control_box().magnitude(d) * control_box().magnitude(d);
  return std::sqrt(s);
}

std::shared_ptr<const DynamicalSystem> make_system(std::string_view model, const ControlBox& bounds) {
  if (model == "dubins") {
    if (bounds.dim() != 2) throw std::invalid_argument("dubins needs 2 control channels (speed, turn rate)");
    return std::make_shared<DubinsCar>(bounds.lows[0], bounds.highs[0], bounds.lows[1], bounds.highs[1]);
  }
  if (model == "integrator1d" || model == "integrator2d") {
    const std::size_t n = model == "integrator1d" ? 1 : 2;
    if (bounds.dim() != n) throw std::invalid_argument(std::string(model) + " needs " + std::to_string(n) + " control channels");
    return std::make_shared<Integrator>(bounds.lows, bounds.highs);
  }
  throw std::invalid_argument("unknown system model '" + std::string(model) + "'");
}

double extremize_hamiltonian(const DynamicalSystem& system, std::span<const double> x, std::span<const double> p,
                             bool reverse, Optimizer optimizer, std::span<double> control) {
  const std::size_t n = system.state_dim();
  const std::size_t m = system.control_box().dim();
  std::array<double, kMaxStateDim> drift{};
  std::array<double, kMaxStateDim * kMaxControlDim> gain{};
  system.affine_terms(x, std::span(drift).first(n), std::span(gain).first(n * m));

  const double sign = reverse ? -1.0 : 1.0;
  double value = 0.0;
  for (std::size_t i = 0; i < n; ++i) value += sign * p[i] * drift[i];
  const ControlBox& box = system.control_box();
  for (std::size_t j = 0; j < m; ++j) {
    double coef = 0.0;
    for (std::size_t i = 0; i < n; ++i) coef += p[i] * gain[i * m + j];
    coef *= sign;
    const bool pick_high = optimizer == Optimizer::Minimize ? coef < 0.0 : coef > 0.0;
    const double u = pick_high ? box.highs[j] : box.lows[j];
    value += coef * u;
    if (!control.empty()) control[j] = u;
  }
  return value;
}

HamiltonianExtremum hamiltonian_min(const DynamicalSystem& system, std::span<const double> x,
                                    std::span<const double> p, bool reverse) {
  HamiltonianExtremum out;
  out.control.resize(system.control_box().dim());
  out.value = extremize_hamiltonian(system, x, p, reverse, Optimizer::Minimize, out.control);
  return out;
}

HamiltonianExtremum hamiltonian_max(const DynamicalSystem& system, std::span<const double> x,
                                    std::span<const double> p, bool reverse) {
  HamiltonianExtremum out;
  out.control.resize(system.control_box().dim());
  out.value = extremize_hamiltonian(system, x, p, reverse, Optimizer::Maximize, out.control);
  return out;
}

std::vector<double> dissipation_bounds(const DynamicalSystem& system, const GridSpec& spec) {
  return system.dissipation_bounds(spec);
}

PiecewiseConstantSignal PiecewiseConstantSignal::constant(std::vector<double> u) {
  PiecewiseConstantSignal s;
  s.starts = {-std::numeric_limits<double>::infinity()};
  s.values = {std::move(u)};
  return s;
}

const std::vector<double>& PiecewiseConstantSignal::at(double t) const {
  if (values.empty() || starts.size() != values.size()) throw std::invalid_argument("malformed control signal");
  const auto it = std::upper_bound(starts.begin(), starts.end(), t);
  const std::size_t k = it == starts.begin() ? 0 : static_cast<std::size_t>(it - starts.begin()) - 1;
  return values[k];
}

namespace {

void wrap_angles(const DynamicalSystem& system, std::span<double> x) {
  for (int d : system.angle_dims()) x[static_cast<std::size_t>(d)] = wrap_angle(x[static_cast<std::size_t>(d)]);
}

}  // namespace

std::vector<double> rk4_step(const DynamicalSystem& system, std::span<const double> x, std::span<const double> u, double dt) {
  const std::size_t n = system.state_dim();
  std::array<double, kMaxStateDim> k1{}, k2{}, k3{}, k4{}, tmp{};
  auto stage = [&](std::span<const double> base, std::span<const double> k, double scale, std::span<double> out) {
    for (std::size_t i = 0; i < n; ++i) tmp[i] = base[i] + scale * k[i];
    system.flow(std::span<const double>(tmp.data(), n), u, out);
  };
  system.flow(x, u, std::span(k1).first(n));
  stage(x, std::span(k1).first(n), 0.5 * dt, std::span(k2).first(n));
  stage(x, std::span(k2).first(n), 0.5 * dt, std::span(k3).first(n));
  stage(x, std::span(k3).first(n), dt, std::span(k4).first(n));
  std::vector<double> next(n);
  for (std::size_t i = 0; i < n; ++i) next[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  wrap_angles(system, next);
  return next;
}

Trajectory simulate(const DynamicalSystem& system, std::span<const double> x0, const PiecewiseConstantSignal& controls,
                    std::pair<double, double> t_span, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("simulate: dt must be positive");
  if (x0.size() != system.state_dim()) throw std::invalid_argument("simulate: initial state has wrong dimension");
  const auto [t0, t1] = t_span;
  if (!(t1 >= t0)) throw std::invalid_argument("simulate: t_span must be ordered");
  for (const auto& u : controls.values) {
    if (!system.control_box().contains(u)) throw std::invalid_argument("simulate: control outside the admissible box");
  }

  Trajectory traj;
  std::vector<double> x(x0.begin(), x0.end());
  wrap_angles(system, x);
  traj.times.push_back(t0);
  traj.states.push_back(x);
  const auto steps = static_cast<std::size_t>(std::floor((t1 - t0) / dt + 1e-9));
  double t = t0;
  for (std::size_t k = 0; k < steps; ++k) {
    x = rk4_step(system, x, controls.at(t), dt);
    t = t0 + static_cast<double>(k + 1) * dt;
    traj.times.push_back(t);
    traj.states.push_back(x);
  }
  const double rest = t1 - t;
  if (rest > 1e-12 * std::max(1.0, std::abs(t1))) {
    x = rk4_step(system, x, controls.at(t), rest);
    traj.times.push_back(t1);
    traj.states.push_back(x);
  }
  return traj;
}

}  // namespace ecsk
