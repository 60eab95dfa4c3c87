#pragma once

#include <cstddef>
#include <span>
#include <utility>

#include "ecsk/grid.hpp"

namespace ecsk::detail {

struct AxisStencil {
  std::size_t stride = 1;
  int count = 3;
  bool periodic = false;
  double inv_h = 1.0;
};

inline AxisStencil axis_stencil(const GridSpec& spec, std::size_t d) {
  return {spec.stride(d), spec.count(d), spec.periodic(d), 1.0 / spec.spacing(d)};
}

// (D-, D+) at node `flat`, whose index along the axis is i. Both neighbours
// use the same expression, so D+ at i equals D- at i+1 bit for bit.
inline std::pair<double, double> one_sided(std::span<const double> v, std::size_t flat, int i, const AxisStencil& a) {
  const double c = v[flat];
  const std::size_t wrap = static_cast<std::size_t>(a.count - 1) * a.stride;
  double dm = 0.0;
  double dp = 0.0;
  const bool has_left = i > 0;
  const bool has_right = i < a.count - 1;
  if (has_right) {
    dp = (v[flat + a.stride] - c) * a.inv_h;
  } else if (a.periodic) {
    dp = (v[flat - wrap] - c) * a.inv_h;
  }
  if (has_left) {
    dm = (c - v[flat - a.stride]) * a.inv_h;
  } else if (a.periodic) {
    dm = (c - v[flat + wrap]) * a.inv_h;
  }
  // Linear-extrapolation ghost node: the outermost difference repeats.
  if (!a.periodic) {
    if (!has_left) dm = dp;
    if (!has_right) dp = dm;
  }
  return {dm, dp};
}

}  // namespace ecsk::detail
