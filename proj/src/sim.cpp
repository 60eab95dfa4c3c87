#include "ecsk/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>

namespace ecsk {

ObservationSchedule::ObservationSchedule(std::vector<std::pair<double, double>> lost_intervals)
    : intervals_(std::move(lost_intervals)) {
  for (std::size_t i = 0; i < intervals_.size(); ++i) {
    const auto [lo, hi] = intervals_[i];
    if (!(lo < hi)) throw std::invalid_argument("observation schedule: interval needs lo < hi");
    if (i > 0 && lo < intervals_[i - 1].second) {
      throw std::invalid_argument("observation schedule: intervals must be sorted and disjoint");
    }
  }
}

bool ObservationSchedule::lost(double t) const {
  return std::any_of(intervals_.begin(), intervals_.end(), [t](const auto& iv) { return iv.first < t && t <= iv.second; });
}

ExternalPolicy stationary_policy() { return {}; }

ExternalPolicy adversarial_policy(int samples, std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("adversarial_policy: samples must be at least 1");
  return {ExternalPolicy::Kind::Adversarial, samples, seed};
}

NominalPolicy hold_policy() { return {}; }

NominalPolicy waypoint_policy(std::vector<double> target) {
  return {NominalPolicy::Kind::Waypoint, std::move(target)};
}

std::vector<double> resting_control(const DynamicalSystem& system) {
  const ControlBox& box = system.control_box();
  std::vector<double> u(box.dim());
  for (std::size_t j = 0; j < u.size(); ++j) u[j] = std::clamp(0.0, box.lows[j], box.highs[j]);
  return u;
}

std::vector<double> nominal_control(const NominalPolicy& policy, const DynamicalSystem& system,
                                    std::span<const double> x) {
  if (policy.kind == NominalPolicy::Kind::Hold) return resting_control(system);
  const ControlBox& box = system.control_box();
  const auto pos = system.position_dims();
  if (policy.waypoint.size() < pos.size()) throw std::invalid_argument("waypoint policy: target too short");
  std::vector<double> u(box.dim());
  if (system.frame() == FrameKind::PlanarRigid) {
    const double dx = policy.waypoint[0] - x[0];
    const double dy = policy.waypoint[1] - x[1];
    const double dist = std::hypot(dx, dy);
    const double err = wrap_angle(std::atan2(dy, dx) - x[2]);
    u[0] = std::clamp(dist, box.lows[0], box.highs[0]);
    u[1] = std::clamp(2.0 * err, box.lows[1], box.highs[1]);
    return u;
  }
  for (std::size_t j = 0; j < u.size(); ++j) {
    const auto d = static_cast<std::size_t>(pos[j]);
    u[j] = std::clamp(policy.waypoint[j] - x[d], box.lows[j], box.highs[j]);
  }
  return u;
}

double collision_margin(const SafetyKernel& kernel, std::span<const double> x_int, std::span<const double> x_ext) {
  const auto pi = kernel.internal().position_dims();
  const auto pe = kernel.external().position_dims();
  double s = 0.0;
  for (std::size_t k = 0; k < pi.size(); ++k) {
    const double diff = x_int[static_cast<std::size_t>(pi[k])] - x_ext[static_cast<std::size_t>(pe[k])];
    s += diff * diff;
  }
  const double r = kernel.params().collision_radius;
  return s - r * r;
}

namespace {

std::mt19937_64 make_rng(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), static_cast<std::uint32_t>(b),
                    static_cast<std::uint32_t>(b >> 32), static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
  return std::mt19937_64(seq);
}

double planar_distance(const DynamicalSystem& sys, std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (int d : sys.position_dims()) {
    const double diff = a[static_cast<std::size_t>(d)] - b[static_cast<std::size_t>(d)];
    s += diff * diff;
  }
  return std::sqrt(s);
}

std::vector<double> external_control(const ExternalPolicy& policy, const DynamicalSystem& ext,
                                     std::span<const double> x_ext, std::span<const double> x_int, double dt,
                                     std::mt19937_64& rng) {
  if (policy.kind == ExternalPolicy::Kind::Stationary) return resting_control(ext);
  const ControlBox& box = ext.control_box();
  std::vector<double> best;
  double best_dist = std::numeric_limits<double>::infinity();
  std::vector<double> u(box.dim());
  for (int s = 0; s < policy.samples; ++s) {
    for (std::size_t j = 0; j < u.size(); ++j) {
      u[j] = std::uniform_real_distribution<double>(box.lows[j], box.highs[j])(rng);
    }
    const auto next = rk4_step(ext, x_ext, u, dt);
    const double dist = planar_distance(ext, next, x_int);
    if (dist < best_dist) {
      best_dist = dist;
      best = u;
    }
  }
  return best;
}

}  // namespace

SimTrace run_episode(const SafetyKernel& kernel, std::span<const double> x_int0, std::span<const double> x_ext0,
                     const ObservationSchedule& schedule, const ExternalPolicy& external_policy,
                     const NominalPolicy& nominal_policy, double horizon, double dt, std::uint64_t rng_seed) {
  if (!(dt > 0.0 && dt <= 0.05)) throw std::invalid_argument("run_episode: dt must lie in (0, 0.05]");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("run_episode: bad horizon");
  const DynamicalSystem& sys_int = kernel.internal();
  const DynamicalSystem& sys_ext = kernel.external();
  if (x_int0.size() != sys_int.state_dim() || x_ext0.size() != sys_ext.state_dim()) {
    throw std::invalid_argument("run_episode: state dimension mismatch");
  }
  for (double v : x_int0) if (!std::isfinite(v)) throw std::invalid_argument("run_episode: internal state not finite");
  for (double v : x_ext0) if (!std::isfinite(v)) throw std::invalid_argument("run_episode: external state not finite");

  auto rng = make_rng(rng_seed, external_policy.seed);
  const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
  std::vector<double> x_int(x_int0.begin(), x_int0.end());
  std::vector<double> x_ext(x_ext0.begin(), x_ext0.end());
  std::vector<double> anchor = x_ext;
  double anchor_t = 0.0;

  SimTrace tr;
  for (std::size_t k = 0;; ++k) {
    const double t = std::min(static_cast<double>(k) * dt, horizon);
    const bool observed = !schedule.lost(t);
    if (observed) {
      anchor = x_ext;
      anchor_t = t;
    }
    const double elapsed = t - anchor_t;
    tr.times.push_back(t);
    tr.x_int.push_back(x_int);
    tr.x_ext.push_back(x_ext);
    tr.observed.push_back(observed);
    tr.d.push_back(collision_margin(kernel, x_int, x_ext));

    const auto nominal = nominal_control(nominal_policy, sys_int, x_int);
    std::vector<double> u_int;
    FilterMode mode = FilterMode::Nominal;
    const RelativeState rel = kernel.relative(x_int, anchor);
    double reach = 0.0;
    for (double c : rel.p_rel) reach += c * c;
    if (elapsed > kernel.horizon() + 1e-9) {
      tr.aborted = true;
      tr.abort_reason = "observation lost longer than the kernel horizon";
    } else if (!kernel.in_grid(rel)) {
      if (std::sqrt(reach) > kernel.envelope_radius()) {
        u_int = nominal;
      } else {
        tr.aborted = true;
        tr.abort_reason = "relative state left the kernel grid inside the interaction envelope";
      }
    } else {
      auto decision = kernel.filter_step(x_int, anchor, elapsed, nominal);
      u_int = std::move(decision.control);
      mode = decision.mode;
    }
    if (tr.aborted) {
      tr.controls_int.push_back(std::vector<double>(sys_int.control_box().dim(), std::nan("")));
      tr.controls_ext.push_back(std::vector<double>(sys_ext.control_box().dim(), std::nan("")));
      tr.mode.push_back(FilterMode::Safety);
      break;
    }
    const double step = k < steps ? std::min(static_cast<double>(k + 1) * dt, horizon) - t : dt;
    auto u_ext = external_control(external_policy, sys_ext, x_ext, x_int, step, rng);
    tr.controls_int.push_back(u_int);
    tr.controls_ext.push_back(u_ext);
    tr.mode.push_back(mode);
    if (k == steps) break;
    x_int = rk4_step(sys_int, x_int, u_int, step);
    x_ext = rk4_step(sys_ext, x_ext, u_ext, step);
  }
  tr.min_d = *std::min_element(tr.d.begin(), tr.d.end());
  return tr;
}

BatchReport batch_verify(const SafetyKernel& kernel, int trials, double margin, std::uint64_t rng_seed,
                         const BatchOptions& options) {
  if (trials < 0) throw std::invalid_argument("batch_verify: trials must be non-negative");
  if (!(margin > 0.0) || !std::isfinite(margin)) throw std::invalid_argument("batch_verify: margin must be positive");
  constexpr int kMaxDraws = 1'000'000;

  const GridSpec& spec = kernel.spec();
  const double envelope = kernel.envelope_radius();
  const auto npos = kernel.internal().position_dims().size();
  const std::vector<double> x_ext0(kernel.external().state_dim(), 0.0);
  const auto schedule = ObservationSchedule::full_loss(0.0, kernel.horizon());

  BatchReport report;
  report.trials = trials;
  report.worst_min_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < trials; ++i) {
    auto rng = make_rng(rng_seed, 0x5eedULL, static_cast<std::uint64_t>(i));
    std::vector<double> x(spec.dims());
    double v = 0.0;
    int draws = 0;
    for (;; ++draws) {
      if (draws >= kMaxDraws) {
        throw std::runtime_error("batch_verify: no start state with value >= margin after 1e6 draws");
      }
      double r2 = 0.0;
      for (std::size_t d = 0; d < spec.dims(); ++d) {
        const Axis& a = spec.axis(d);
        double lo = a.min;
        double top = a.max;
        if (d < npos) {
          lo = std::max(lo, -envelope);
          top = std::min(top, envelope);
        }
        x[d] = std::uniform_real_distribution<double>(lo, top)(rng);
        if (a.periodic && x[d] >= a.max) x[d] = a.min;
        if (d < npos) r2 += x[d] * x[d];
      }
      if (std::sqrt(r2) > envelope) continue;
      v = kernel.value_relative(x, 0.0);
      if (v >= margin) break;
    }
    const std::uint64_t episode_seed = rng();
    const auto trace = run_episode(kernel, x, x_ext0, schedule,
                                   adversarial_policy(options.adversary_samples, episode_seed), options.nominal,
                                   kernel.horizon(), options.dt, episode_seed);
    BatchTrial run{x, v, trace.min_d, trace.aborted};
    if (trace.aborted) ++report.aborted;
    if (trace.min_d < 0.0) ++report.collisions;
    report.worst_min_d = std::min(report.worst_min_d, trace.min_d);
    report.runs.push_back(std::move(run));
    if (options.keep_traces) report.traces.push_back(trace);
  }
  return report;
}

void write_trace_csv(const SimTrace& trace, std::ostream& out) {
  if (trace.times.empty()) return;
  const std::size_t ni = trace.x_int.front().size();
  const std::size_t ne = trace.x_ext.front().size();
  const std::size_t mi = trace.controls_int.front().size();
  const std::size_t me = trace.controls_ext.front().size();
  out << "t";
  for (std::size_t i = 1; i <= ni + ne; ++i) out << ",x" << i;
  for (std::size_t i = 1; i <= mi + me; ++i) out << ",u" << i;
  out << ",mode,observed,d\n";
  char buf[32];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  for (std::size_t k = 0; k < trace.times.size(); ++k) {
    num(trace.times[k]);
    for (double v : trace.x_int[k]) { out << ','; num(v); }
    for (double v : trace.x_ext[k]) { out << ','; num(v); }
    for (double v : trace.controls_int[k]) { out << ','; num(v); }
    for (double v : trace.controls_ext[k]) { out << ','; num(v); }
    out << ',' << (trace.mode[k] == FilterMode::Nominal ? "NOMINAL" : "SAFETY") << ',' << (trace.observed[k] ? 1 : 0)
        << ',';
    num(trace.d[k]);
    out << '\n';
  }
}

}  // namespace ecsk
