#include "ecsk/hj_solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "ecsk/detail/stencil.hpp"
#include "ecsk/parallel.hpp"

namespace ecsk {

void SolverConfig::validate() const {
  if (!(cfl_factor > 0.0 && cfl_factor <= 1.0)) throw std::invalid_argument("cfl_factor must lie in (0, 1]");
  if (!(snapshot_dt > 0.0) || !std::isfinite(snapshot_dt)) throw std::invalid_argument("snapshot_dt must be positive");
  if (max_steps == 0) throw std::invalid_argument("max_steps must be positive");
}

double cfl_limit(const DynamicalSystem& system, const GridSpec& spec, double cfl_factor) {
  const auto alpha = system.dissipation_bounds(spec);
  double rate = 0.0;
  for (std::size_t d = 0; d < spec.dims(); ++d) rate += alpha[d] / spec.spacing(d);
  if (rate <= 0.0) return std::numeric_limits<double>::infinity();
  return cfl_factor / rate;
}

namespace {

// opt over u of  sum_d g_d(u) pavg_d + |g_d(u)| w_d,  the upwind update for
// every frozen control. Each state row must depend on at most one channel;
// the objective then splits per channel and is piecewise linear in u_j, so
// the bounds and the interior kinks are the only candidates. Returns false
// when some row couples channels.
bool upwind_hamiltonian(const DynamicalSystem& system, std::span<const double> x, std::span<const double> pavg,
                        std::span<const double> w, StepMode mode, double& out) {
  const std::size_t n = system.state_dim();
  const ControlBox& box = system.control_box();
  const std::size_t m = box.dim();
  std::array<double, kMaxStateDim> drift{};
  std::array<double, kMaxStateDim * kMaxControlDim> gain{};
  system.affine_terms(x, std::span(drift).first(n), std::span(gain).first(n * m));
  const double sign = mode.reverse_dynamics ? -1.0 : 1.0;
  const bool maximize = mode.optimizer == Optimizer::Maximize;

  std::array<int, kMaxStateDim> owner{};
  double total = 0.0;
  for (std::size_t d = 0; d < n; ++d) {
    owner[d] = -1;
    for (std::size_t j = 0; j < m; ++j) {
      if (gain[d * m + j] == 0.0) continue;
      if (owner[d] >= 0) return false;
      owner[d] = static_cast<int>(j);
    }
    if (owner[d] < 0) {
      const double a = sign * drift[d];
      total += a * pavg[d] + std::abs(a) * w[d];
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    auto phi = [&](double u) {
      double acc = 0.0;
      for (std::size_t d = 0; d < n; ++d) {
        if (owner[d] != static_cast<int>(j)) continue;
        const double g = sign * (drift[d] + gain[d * m + j] * u);
        acc += g * pavg[d] + std::abs(g) * w[d];
      }
      return acc;
    };
    double best = phi(box.lows[j]);
    auto consider = [&](double u) {
      const double val = phi(u);
      if (maximize ? val > best : val < best) best = val;
    };
    consider(box.highs[j]);
    for (std::size_t d = 0; d < n; ++d) {
      if (owner[d] != static_cast<int>(j)) continue;
      const double kink = -drift[d] / gain[d * m + j];
      if (kink > box.lows[j] && kink < box.highs[j]) consider(kink);
    }
    total += best;
  }
  out = total;
  return true;
}

}  // namespace

ScalarField lf_step(const ScalarField& field, const DynamicalSystem& system, double dt, StepMode mode,
                    double cfl_factor) {
  const GridSpec& spec = field.spec();
  const std::size_t dims = spec.dims();
  if (dims != system.state_dim()) throw std::invalid_argument("lf_step: grid and system dimensions differ");
  if (!(dt >= 0.0) || !std::isfinite(dt)) throw std::invalid_argument("lf_step: dt must be finite and non-negative");
  const double limit = cfl_limit(system, spec, cfl_factor);
  if (dt > limit * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "lf_step: dt " << dt << " exceeds the CFL limit " << limit;
    throw CflError(msg.str());
  }

  const auto alpha = system.dissipation_bounds(spec);
  const bool upwind = mode.dissipation == Dissipation::Upwind;
  std::array<detail::AxisStencil, kMaxGridDims> st{};
  for (std::size_t d = 0; d < dims; ++d) st[d] = detail::axis_stencil(spec, d);

  const auto v = field.values();
  std::vector<double> out(v.size());
  parallel_for(v.size(), [&](std::size_t begin, std::size_t end) {
    std::array<int, kMaxGridDims> idx{};
    std::array<double, kMaxGridDims> x{};
    std::array<double, kMaxGridDims> p{};
    std::array<double, kMaxGridDims> w{};
    const auto start = spec.unravel(begin);
    for (std::size_t d = 0; d < dims; ++d) {
      idx[d] = start[d];
      x[d] = spec.axis(d).coord(idx[d]);
    }
    const std::span<const double> xs(x.data(), dims);
    const std::span<const double> ps(p.data(), dims);
    const std::span<const double> ws(w.data(), dims);
    for (std::size_t flat = begin; flat < end; ++flat) {
      for (std::size_t d = 0; d < dims; ++d) {
        const auto [dm, dp] = detail::one_sided(v, flat, idx[d], st[d]);
        p[d] = 0.5 * (dm + dp);
        w[d] = 0.5 * (dp - dm);
      }
      double h = 0.0;
      if (!upwind || !upwind_hamiltonian(system, xs, ps, ws, mode, h)) {
        h = extremize_hamiltonian(system, xs, ps, mode.reverse_dynamics, mode.optimizer, {});
        for (std::size_t d = 0; d < dims; ++d) h += alpha[d] * w[d];
      }
      out[flat] = v[flat] + dt * h;

      for (std::size_t d = dims; d-- > 0;) {
        if (++idx[d] < spec.count(d)) {
          x[d] = spec.axis(d).coord(idx[d]);
          break;
        }
        idx[d] = 0;
        x[d] = spec.axis(d).min;
      }
    }
  });
  const double t = mode.backward_in_time ? field.time() - dt : field.time() + dt;
  return ScalarField(spec, std::move(out), t);
}

namespace {

std::size_t interval_count(double t0, double tf, double snapshot_dt) {
  const double span = tf - t0;
  const double ratio = span / snapshot_dt;
  const double n = std::round(ratio);
  if (std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio)) {
    std::ostringstream msg;
    msg << "horizon " << span << " is not a whole number of snapshot intervals of " << snapshot_dt;
    throw std::invalid_argument(msg.str());
  }
  return static_cast<std::size_t>(n);
}

// Equal sub-steps covering one snapshot interval, each within the limit.
std::size_t substeps_for(double length, double limit) {
  if (!std::isfinite(limit)) return 1;
  auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(length / limit - 1e-9)));
  while (length / static_cast<double>(n) > limit) ++n;
  return n;
}

class StepCounter {
 public:
  StepCounter(const SolverConfig& cfg, double rate) : cfg_(cfg), rate_(rate) {}

  void tick(const ScalarField& v, double dt) {
    if (++steps_ > cfg_.max_steps) {
      std::ostringstream msg;
      msg << "solver exceeded max_steps = " << cfg_.max_steps << " at t = " << v.time();
      throw std::runtime_error(msg.str());
    }
    if (!cfg_.progress) return;
    const auto [lo, hi] = std::minmax_element(v.values().begin(), v.values().end());
    cfg_.progress(StepProgress{steps_, v.time(), dt, dt * rate_, *lo, *hi});
  }

 private:
  const SolverConfig& cfg_;
  double rate_;
  std::size_t steps_ = 0;
};

StepMode with_dissipation(StepMode mode, const SolverConfig& cfg) {
  mode.dissipation = cfg.dissipation;
  return mode;
}

double rate_of(const DynamicalSystem& system, const GridSpec& spec) {
  const auto alpha = system.dissipation_bounds(spec);
  double rate = 0.0;
  for (std::size_t d = 0; d < spec.dims(); ++d) rate += alpha[d] / spec.spacing(d);
  return rate;
}

}  // namespace

TimeSampledField integrate_reach(const ScalarField& v0, const DynamicalSystem& system, double t0, double tf,
                                 const SolverConfig& cfg) {
  cfg.validate();
  if (std::abs(v0.time() - t0) > 1e-12 * std::max(1.0, std::abs(t0))) {
    throw std::invalid_argument("integrate_reach: initial field time differs from t0");
  }
  if (!(tf >= t0)) throw std::invalid_argument("integrate_reach: tf must not precede t0");
  const GridSpec& spec = v0.spec();
  std::vector<ScalarField> snaps;
  std::vector<double> first(v0.values().begin(), v0.values().end());
  snaps.emplace_back(spec, std::move(first), t0);
  if (tf == t0) return TimeSampledField(std::move(snaps));

  const std::size_t intervals = interval_count(t0, tf, cfg.snapshot_dt);
  const double length = (tf - t0) / static_cast<double>(intervals);
  const double limit = cfl_limit(system, spec, cfg.cfl_factor);
  const std::size_t sub = substeps_for(length, limit);
  const double dt = length / static_cast<double>(sub);
  StepCounter counter(cfg, rate_of(system, spec));

  ScalarField v = snaps.front();
  for (std::size_t k = 1; k <= intervals; ++k) {
    for (std::size_t j = 0; j < sub; ++j) {
      v = lf_step(v, system, dt, with_dissipation(kReachStep, cfg), cfg.cfl_factor);
      counter.tick(v, dt);
    }
    const double tk = k == intervals ? tf : t0 + static_cast<double>(k) * length;
    v = ScalarField(spec, std::move(v).take_values(), tk);
    snaps.push_back(v);
  }
  return TimeSampledField(std::move(snaps));
}

TimeSampledField integrate_avoid(const ScalarField& terminal, const TimeSampledField& obstacle,
                                 const DynamicalSystem& system, const SolverConfig& cfg) {
  cfg.validate();
  if (obstacle.size() == 0) throw std::invalid_argument("integrate_avoid: empty obstacle");
  const GridSpec& spec = obstacle.spec();
  if (!(terminal.spec() == spec)) throw std::invalid_argument("integrate_avoid: terminal and obstacle grids differ");
  if (terminal.time() != obstacle.tf()) throw std::invalid_argument("integrate_avoid: terminal time differs from obstacle tf");
  {
    const auto a = terminal.values();
    const auto b = obstacle.back().values();
    if (!std::equal(a.begin(), a.end(), b.begin())) {
      throw std::invalid_argument("integrate_avoid: terminal field must equal the obstacle at tf");
    }
  }

  const std::size_t n = obstacle.size();
  std::vector<ScalarField> snaps(n);
  snaps[n - 1] = terminal;
  if (n == 1) return TimeSampledField(std::move(snaps));

  const double limit = cfl_limit(system, spec, cfg.cfl_factor);
  StepCounter counter(cfg, rate_of(system, spec));
  ScalarField v = terminal;
  for (std::size_t k = n - 1; k-- > 0;) {
    const double lo_t = obstacle.times()[k];
    const double hi_t = obstacle.times()[k + 1];
    const double length = hi_t - lo_t;
    const std::size_t sub = substeps_for(length, limit);
    const double dt = length / static_cast<double>(sub);
    const auto lo = obstacle[k].values();
    const auto hi = obstacle[k + 1].values();
    for (std::size_t j = 1; j <= sub; ++j) {
      v = lf_step(v, system, dt, with_dissipation(kAvoidStep, cfg), cfg.cfl_factor);
      // Weight of the later snapshot at the landing time; exactly 0 on the
      // last sub-step so the cap there is the stored snapshot itself.
      const double w = static_cast<double>(sub - j) / static_cast<double>(sub);
      const double s = j == sub ? lo_t : hi_t - static_cast<double>(j) * dt;
      std::vector<double> vals = std::move(v).take_values();
      parallel_for(vals.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
          const double cap = w == 0.0 ? lo[i] : (1.0 - w) * lo[i] + w * hi[i];
          vals[i] = std::min(vals[i], cap);
        }
      });
      v = ScalarField(spec, std::move(vals), s);
      counter.tick(v, dt);
    }
    snaps[k] = v;
  }
  return TimeSampledField(std::move(snaps));
}

}  // namespace ecsk
