#include "ecsk/setops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

namespace ecsk {

ScalarField project_min(const ScalarField& field, std::span<const int> keep_dims) {
  const GridSpec& spec = field.spec();
  if (keep_dims.empty()) throw std::invalid_argument("project_min: keep_dims is empty");
  std::set<int> seen;
  for (int d : keep_dims) {
    if (d < 0 || static_cast<std::size_t>(d) >= spec.dims() || !seen.insert(d).second) {
      throw std::invalid_argument("project_min: bad keep dimension " + std::to_string(d));
    }
  }
  const GridSpec sub = spec.subgrid(keep_dims);
  std::array<std::size_t, kMaxGridDims> sub_stride{};  // per source dim, 0 when dropped
  for (std::size_t k = 0; k < keep_dims.size(); ++k) sub_stride[static_cast<std::size_t>(keep_dims[k])] = sub.stride(k);

  std::vector<double> out(sub.node_count(), std::numeric_limits<double>::infinity());
  std::array<int, kMaxGridDims> idx{};
  const auto v = field.values();
  const std::size_t dims = spec.dims();
  std::size_t target = 0;
  for (std::size_t flat = 0; flat < v.size(); ++flat) {
    out[target] = std::min(out[target], v[flat]);
    for (std::size_t d = dims; d-- > 0;) {
      target += sub_stride[d];
      if (++idx[d] < spec.count(d)) break;
      target -= sub_stride[d] * static_cast<std::size_t>(idx[d]);
      idx[d] = 0;
    }
  }
  return ScalarField(sub, std::move(out), field.time());
}

TimeSampledField project_min(const TimeSampledField& tube, std::span<const int> keep_dims) {
  std::vector<ScalarField> snaps;
  snaps.reserve(tube.size());
  for (const auto& s : tube.snapshots()) snaps.push_back(project_min(s, keep_dims));
  return TimeSampledField(std::move(snaps));
}

ScalarField inflate(const ScalarField& field, double radius) {
  if (!(radius >= 0.0) || !std::isfinite(radius)) throw std::invalid_argument("inflate: radius must be non-negative");
  const GridSpec& spec = field.spec();
  const NodeMask mask = sublevel_mask(field);
  if (std::none_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; })) {
    return ScalarField(spec, std::vector<double>(spec.node_count(), distance_sentinel(spec)), field.time());
  }
  const auto sq = squared_distance_transform(spec, mask);
  const double reach = radius * (1.0 + 1e-12);
  NodeMask grown(sq.size());
  for (std::size_t i = 0; i < sq.size(); ++i) grown[i] = sq[i] <= reach * reach ? 1 : 0;
  return signed_distance(spec, grown, field.time());
}

ScalarField extrude(const ScalarField& field, const Axis& heading) {
  std::vector<Axis> axes = field.spec().axes();
  axes.push_back(heading);
  GridSpec spec(std::move(axes));
  const auto v = field.values();
  const auto n = static_cast<std::size_t>(heading.count);
  std::vector<double> out(v.size() * n);
  for (std::size_t i = 0; i < v.size(); ++i) std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(i * n), n, v[i]);
  return ScalarField(std::move(spec), std::move(out), field.time());
}

UnsafeTube build_unsafe_tube(std::shared_ptr<const ReachSolution> reach, double collision_radius,
                             const GridSpec& internal_spec) {
  if (!reach || !reach->system) throw std::invalid_argument("build_unsafe_tube: missing reach solution");
  if (!(collision_radius >= 0.0) || !std::isfinite(collision_radius)) {
    throw std::invalid_argument("build_unsafe_tube: collision_radius must be non-negative");
  }
  const auto pos = reach->system->position_dims();
  const GridSpec planar = reach->tube.spec().subgrid(pos);
  const std::size_t npos = pos.size();
  const bool with_heading = internal_spec.dims() == npos + 1;
  if (!with_heading && internal_spec.dims() != npos) {
    throw std::invalid_argument("build_unsafe_tube: internal grid must be the positional grid, optionally plus heading");
  }
  for (std::size_t d = 0; d < npos; ++d) {
    if (!(internal_spec.axis(d) == planar.axis(d))) {
      throw std::invalid_argument("build_unsafe_tube: internal positional axis " + std::to_string(d) +
                                  " differs from the reach grid");
    }
  }
  if (with_heading) {
    const Axis& h = internal_spec.axis(npos);
    if (!h.periodic || std::abs(h.period() - 2.0 * std::numbers::pi) > 1e-9) {
      throw std::invalid_argument("build_unsafe_tube: heading axis must be periodic with period 2*pi");
    }
  }

  std::vector<ScalarField> snaps;
  snaps.reserve(reach->tube.size());
  for (const auto& s : reach->tube.snapshots()) {
    ScalarField grown = inflate(project_min(s, pos), collision_radius);
    // The nearest node of opposite membership always lies in the same
    // heading slice, so extruding the planar signed distance gives the
    // signed distance of the extruded set exactly.
    snaps.push_back(with_heading ? extrude(grown, internal_spec.axis(npos)) : std::move(grown));
  }
  UnsafeTube tube;
  tube.d_tilde = TimeSampledField(std::move(snaps));
  tube.collision_radius = collision_radius;
  tube.source = std::move(reach);
  return tube;
}

double pessimistic_safety_oracle(const ReachSolution& reach, std::span<const double> x_int, double t,
                                 double collision_radius) {
  const auto pos = reach.system->position_dims();
  if (x_int.size() < pos.size()) throw std::invalid_argument("pessimistic_safety_oracle: state too short");
  const ScalarField at = reach.tube.at_time(t);
  const GridSpec& spec = at.spec();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < spec.node_count(); ++i) {
    if (at[i] > 0.0) continue;
    const auto idx = spec.unravel(i);
    double s = 0.0;
    for (std::size_t k = 0; k < pos.size(); ++k) {
      const std::size_t d = static_cast<std::size_t>(pos[k]);
      const double diff = x_int[k] - spec.axis(d).coord(idx[d]);
      s += diff * diff;
    }
    best = std::min(best, s - collision_radius * collision_radius);
  }
  return std::isfinite(best) ? best : distance_sentinel(spec);
}

}  // namespace ecsk
