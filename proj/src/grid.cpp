#include "ecsk/grid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "ecsk/detail/stencil.hpp"
#include "ecsk/parallel.hpp"

namespace ecsk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Slack for coordinates that land a hair outside a non-periodic axis through
// rounding, in units of the spacing.
constexpr double kEdgeSlack = 1e-9;

}  // namespace

GridSpec::GridSpec(std::vector<Axis> axes) : axes_(std::move(axes)) {
  if (axes_.empty()) throw std::invalid_argument("grid needs at least one dimension");
  if (axes_.size() > kMaxGridDims) throw std::invalid_argument("grid has too many dimensions");
  for (std::size_t d = 0; d < axes_.size(); ++d) {
    const Axis& a = axes_[d];
    if (!std::isfinite(a.min) || !std::isfinite(a.max) || !(a.max > a.min)) {
      throw std::invalid_argument("grid axis " + std::to_string(d) + ": max must exceed min");
    }
    if (a.count < 3) throw std::invalid_argument("grid axis " + std::to_string(d) + ": count must be >= 3");
  }
  strides_.assign(axes_.size(), 1);
  for (std::size_t d = axes_.size() - 1; d > 0; --d) {
    strides_[d - 1] = strides_[d] * static_cast<std::size_t>(axes_[d].count);
  }
  node_count_ = strides_[0] * static_cast<std::size_t>(axes_[0].count);
}

double GridSpec::max_spacing() const {
  double h = 0.0;
  for (const Axis& a : axes_) h = std::max(h, a.spacing());
  return h;
}

double GridSpec::cell_diagonal() const {
  double s = 0.0;
  for (const Axis& a : axes_) s += a.spacing() * a.spacing();
  return std::sqrt(s);
}

double GridSpec::domain_diagonal() const {
  double s = 0.0;
  for (const Axis& a : axes_) s += (a.max - a.min) * (a.max - a.min);
  return std::sqrt(s);
}

std::size_t GridSpec::flat_index(std::span<const int> index) const {
  if (index.size() != dims()) throw BoundsError("index has wrong dimension count");
  std::size_t flat = 0;
  for (std::size_t d = 0; d < dims(); ++d) {
    if (index[d] < 0 || index[d] >= axes_[d].count) {
      throw BoundsError("index " + std::to_string(index[d]) + " out of range on axis " + std::to_string(d));
    }
    flat += static_cast<std::size_t>(index[d]) * strides_[d];
  }
  return flat;
}

std::vector<int> GridSpec::unravel(std::size_t flat) const {
  if (flat >= node_count_) throw BoundsError("flat index out of range");
  std::vector<int> index(dims());
  for (std::size_t d = 0; d < dims(); ++d) {
    index[d] = static_cast<int>(flat / strides_[d]);
    flat %= strides_[d];
  }
  return index;
}

GridSpec GridSpec::subgrid(std::span<const int> keep_dims) const {
  if (keep_dims.empty()) throw std::invalid_argument("subgrid needs at least one dimension");
  std::vector<Axis> kept;
  for (int d : keep_dims) {
    if (d < 0 || static_cast<std::size_t>(d) >= dims()) throw std::invalid_argument("subgrid dimension out of range");
    kept.push_back(axes_[static_cast<std::size_t>(d)]);
  }
  return GridSpec(std::move(kept));
}

ScalarField::ScalarField(GridSpec spec, std::vector<double> values, double time)
    : spec_(std::move(spec)), values_(std::move(values)), time_(time) {
  if (values_.size() != spec_.node_count()) {
    throw std::invalid_argument("field has " + std::to_string(values_.size()) + " values, grid has " +
                                std::to_string(spec_.node_count()) + " nodes");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw std::invalid_argument("field contains a non-finite value");
  }
}

TimeSampledField::TimeSampledField(std::vector<ScalarField> snapshots) : snapshots_(std::move(snapshots)) {
  if (snapshots_.empty()) throw std::invalid_argument("time-sampled field needs at least one snapshot");
  times_.reserve(snapshots_.size());
  for (const ScalarField& s : snapshots_) {
    if (!(s.spec() == snapshots_.front().spec())) throw std::invalid_argument("snapshots must share one grid");
    if (!times_.empty() && !(s.time() > times_.back())) {
      throw std::invalid_argument("snapshot times must be strictly increasing");
    }
    times_.push_back(s.time());
  }
  if (times_.size() > 2) {
    const double step = (times_.back() - times_.front()) / static_cast<double>(times_.size() - 1);
    for (std::size_t k = 1; k < times_.size(); ++k) {
      if (std::abs((times_[k] - times_[k - 1]) - step) > 1e-9 * step) {
        throw std::invalid_argument("snapshot times must be uniformly spaced");
      }
    }
  }
}

TimeSampledField::Bracket TimeSampledField::bracket(double t) const {
  const double slack = 1e-9 * std::max(1.0, std::abs(tf() - t0()));
  if (t < t0() - slack || t > tf() + slack) {
    std::ostringstream msg;
    msg << "time " << t << " outside [" << t0() << ", " << tf() << "]";
    throw DomainError(msg.str());
  }
  if (size() == 1) return {0, 0, 0.0};
  const double step = (tf() - t0()) / static_cast<double>(size() - 1);
  const double u = std::clamp((t - t0()) / step, 0.0, static_cast<double>(size() - 1));
  std::size_t lo = std::min(static_cast<std::size_t>(std::floor(u)), size() - 2);
  double w = u - static_cast<double>(lo);
  // Snap to stored snapshots so queries at snapshot times are exact.
  if (std::abs(t - times_[lo]) <= slack) return {lo, lo, 0.0};
  if (std::abs(t - times_[lo + 1]) <= slack) return {lo + 1, lo + 1, 0.0};
  return {lo, lo + 1, w};
}

ScalarField TimeSampledField::at_time(double t) const {
  const Bracket b = bracket(t);
  if (b.lo == b.hi) return ScalarField(spec(), std::vector<double>(snapshots_[b.lo].values().begin(), snapshots_[b.lo].values().end()), t);
  const auto a = snapshots_[b.lo].values();
  const auto c = snapshots_[b.hi].values();
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (1.0 - b.weight) * a[i] + b.weight * c[i];
  return ScalarField(spec(), std::move(out), t);
}

double TimeSampledField::value(std::span<const double> x, double t) const {
  const Bracket b = bracket(t);
  const double lo = interpolate(snapshots_[b.lo], x);
  if (b.lo == b.hi) return lo;
  const double hi = interpolate(snapshots_[b.hi], x);
  return (1.0 - b.weight) * lo + b.weight * hi;
}

std::vector<double> coord_of(const GridSpec& spec, std::span<const int> index) {
  if (index.size() != spec.dims()) throw BoundsError("index has wrong dimension count");
  std::vector<double> x(spec.dims());
  for (std::size_t d = 0; d < spec.dims(); ++d) {
    if (index[d] < 0 || index[d] >= spec.count(d)) {
      throw BoundsError("index " + std::to_string(index[d]) + " out of range on axis " + std::to_string(d));
    }
    x[d] = spec.axis(d).coord(index[d]);
  }
  return x;
}

std::vector<int> index_of(const GridSpec& spec, std::span<const double> x) {
  if (x.size() != spec.dims()) throw DomainError("point has wrong dimension count");
  std::vector<int> index(spec.dims());
  for (std::size_t d = 0; d < spec.dims(); ++d) {
    const Axis& a = spec.axis(d);
    double u = (x[d] - a.min) / a.spacing();
    if (a.periodic) {
      long i = std::lround(u) % a.count;
      if (i < 0) i += a.count;
      index[d] = static_cast<int>(i);
    } else {
      if (u < -0.5 - kEdgeSlack || u > a.count - 0.5 + kEdgeSlack) throw DomainError("point outside grid on axis " + std::to_string(d));
      index[d] = static_cast<int>(std::clamp<long>(std::lround(u), 0, a.count - 1));
    }
  }
  return index;
}

double interpolate(const GridSpec& spec, std::span<const double> values, std::span<const double> x) {
  const std::size_t dims = spec.dims();
  if (x.size() != dims) throw DomainError("point has wrong dimension count");
  std::array<std::ptrdiff_t, kMaxGridDims> delta{};
  std::array<double, kMaxGridDims> frac{};
  std::size_t base = 0;
  for (std::size_t d = 0; d < dims; ++d) {
    const Axis& a = spec.axis(d);
    const double h = a.spacing();
    double u = (x[d] - a.min) / h;
    int i0 = 0;
    int i1 = 0;
    if (a.periodic) {
      u -= std::floor(u / a.count) * a.count;
      i0 = static_cast<int>(std::floor(u));
      if (i0 >= a.count) {
        i0 = 0;
        u = 0.0;
      }
      i1 = (i0 + 1) % a.count;
    } else {
      if (!(u >= -kEdgeSlack && u <= a.count - 1 + kEdgeSlack)) {
        std::ostringstream msg;
        msg << "coordinate " << x[d] << " outside [" << a.min << ", " << a.max << "] on axis " << d;
        throw DomainError(msg.str());
      }
      u = std::clamp(u, 0.0, static_cast<double>(a.count - 1));
      i0 = std::min(static_cast<int>(std::floor(u)), a.count - 2);
      i1 = i0 + 1;
    }
    frac[d] = u - i0;
    base += static_cast<std::size_t>(i0) * spec.stride(d);
    delta[d] = (static_cast<std::ptrdiff_t>(i1) - i0) * static_cast<std::ptrdiff_t>(spec.stride(d));
  }

  double sum = 0.0;
  const std::size_t corners = std::size_t{1} << dims;
  for (std::size_t c = 0; c < corners; ++c) {
    double w = 1.0;
    std::ptrdiff_t offset = 0;
    for (std::size_t d = 0; d < dims; ++d) {
      if (c & (std::size_t{1} << d)) {
        w *= frac[d];
        offset += delta[d];
      } else {
        w *= 1.0 - frac[d];
      }
    }
    if (w == 0.0) continue;
    sum += w * values[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(base) + offset)];
  }
  return sum;
}

double interpolate(const ScalarField& field, std::span<const double> x) {
  return interpolate(field.spec(), field.values(), x);
}

std::pair<ScalarField, ScalarField> upwind_diffs(const ScalarField& field, std::size_t dim) {
  const GridSpec& spec = field.spec();
  if (dim >= spec.dims()) throw std::invalid_argument("upwind_diffs: dimension out of range");
  const detail::AxisStencil a = detail::axis_stencil(spec, dim);
  const auto v = field.values();
  std::vector<double> left(v.size());
  std::vector<double> right(v.size());
  parallel_for(v.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t flat = begin; flat < end; ++flat) {
      const int i = static_cast<int>((flat / a.stride) % static_cast<std::size_t>(a.count));
      const auto [dm, dp] = detail::one_sided(v, flat, i, a);
      left[flat] = dm;
      right[flat] = dp;
    }
  });
  return {ScalarField(spec, std::move(left), field.time()), ScalarField(spec, std::move(right), field.time())};
}

NodeMask sublevel_mask(const ScalarField& field, double level) {
  NodeMask mask(field.values().size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = field[i] <= level ? 1 : 0;
  return mask;
}

namespace {

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher) along one grid
// line. Periodic lines are unrolled into three copies so the envelope sees
// every wrapped image.
class LineTransform {
 public:
  void run(std::span<const double> f, std::span<double> out, double h, bool periodic) {
    const std::size_t n = f.size();
    const std::size_t m = periodic ? 3 * n : n;
    const double shift = periodic ? static_cast<double>(n) : 0.0;
    z_.resize(m);
    g_.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
      z_[k] = (static_cast<double>(k) - shift) * h;
      g_[k] = f[k % n];
    }
    v_.resize(m);
    zb_.resize(m + 1);
    int k = -1;
    for (std::size_t q = 0; q < m; ++q) {
      if (!std::isfinite(g_[q])) continue;
      double s = -kInf;
      while (k >= 0) {
        const std::size_t p = v_[static_cast<std::size_t>(k)];
        s = ((g_[q] + z_[q] * z_[q]) - (g_[p] + z_[p] * z_[p])) / (2.0 * (z_[q] - z_[p]));
        if (s <= zb_[static_cast<std::size_t>(k)]) {
          --k;
        } else {
          break;
        }
      }
      ++k;
      v_[static_cast<std::size_t>(k)] = q;
      zb_[static_cast<std::size_t>(k)] = (k == 0) ? -kInf : s;
      zb_[static_cast<std::size_t>(k) + 1] = kInf;
    }
    if (k < 0) {
      std::fill(out.begin(), out.end(), kInf);
      return;
    }
    std::size_t j = 0;
    for (std::size_t p = 0; p < n; ++p) {
      const double xp = static_cast<double>(p) * h;
      while (zb_[j + 1] < xp) ++j;
      const double dz = xp - z_[v_[j]];
      out[p] = dz * dz + g_[v_[j]];
    }
  }

 private:
  std::vector<double> z_, g_, zb_;
  std::vector<std::size_t> v_;
};

}  // namespace

std::vector<double> squared_distance_transform(const GridSpec& spec, std::span<const std::uint8_t> mask) {
  if (mask.size() != spec.node_count()) throw std::invalid_argument("mask size does not match grid");
  std::vector<double> dist(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) dist[i] = mask[i] ? 0.0 : kInf;

  for (std::size_t d = 0; d < spec.dims(); ++d) {
    const std::size_t n = static_cast<std::size_t>(spec.count(d));
    const std::size_t stride = spec.stride(d);
    const std::size_t block = n * stride;
    const std::size_t lines = spec.node_count() / n;
    const double h = spec.spacing(d);
    const bool periodic = spec.periodic(d);
    parallel_for(lines, [&](std::size_t begin, std::size_t end) {
      LineTransform transform;
      std::vector<double> line(n);
      std::vector<double> out(n);
      for (std::size_t l = begin; l < end; ++l) {
        const std::size_t base = (l / stride) * block + (l % stride);
        for (std::size_t k = 0; k < n; ++k) line[k] = dist[base + k * stride];
        transform.run(line, out, h, periodic);
        for (std::size_t k = 0; k < n; ++k) dist[base + k * stride] = out[k];
      }
    });
  }
  return dist;
}

double distance_sentinel(const GridSpec& spec) { return 2.0 * spec.domain_diagonal(); }

ScalarField signed_distance(const GridSpec& spec, std::span<const std::uint8_t> mask, double time) {
  if (mask.size() != spec.node_count()) throw std::invalid_argument("mask size does not match grid");
  const std::size_t inside = static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; }));
  if (inside == 0 || inside == mask.size()) {
    const double sentinel = distance_sentinel(spec);
    return ScalarField(spec, std::vector<double>(mask.size(), inside == 0 ? sentinel : -sentinel), time);
  }
  NodeMask complement(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) complement[i] = mask[i] ? 0 : 1;
  const std::vector<double> to_set = squared_distance_transform(spec, mask);
  const std::vector<double> to_free = squared_distance_transform(spec, complement);
  std::vector<double> out(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    out[i] = mask[i] ? -std::sqrt(to_free[i]) : std::sqrt(to_set[i]);
  }
  return ScalarField(spec, std::move(out), time);
}

double wrap_angle(double a) {
  constexpr double pi = std::numbers::pi;
  double w = std::fmod(a + pi, 2.0 * pi);
  if (w < 0.0) w += 2.0 * pi;
  w -= pi;
  if (w >= pi) w -= 2.0 * pi;
  return w;
}

}  // namespace ecsk
