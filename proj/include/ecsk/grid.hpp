#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ecsk {

class BoundsError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline constexpr std::size_t kMaxGridDims = 8;

/// One axis of a rectangular grid. Periodic axes exclude the max edge from
/// storage, so coordinate `max` aliases node 0.
struct Axis {
  double min = 0.0;
  double max = 1.0;
  int count = 3;
  bool periodic = false;

  double spacing() const {
    return periodic ? (max - min) / count : (max - min) / (count - 1);
  }
  double coord(int i) const { return min + i * spacing(); }
  double period() const { return max - min; }

  friend bool operator==(const Axis&, const Axis&) = default;
};

/// Rectangular multi-dimensional grid. Storage is row-major with the last
/// dimension fastest.
class GridSpec {
 public:
  GridSpec() = default;
  explicit GridSpec(std::vector<Axis> axes);

  std::size_t dims() const { return axes_.size(); }
  const Axis& axis(std::size_t d) const { return axes_[d]; }
  const std::vector<Axis>& axes() const { return axes_; }
  int count(std::size_t d) const { return axes_[d].count; }
  double spacing(std::size_t d) const { return axes_[d].spacing(); }
  bool periodic(std::size_t d) const { return axes_[d].periodic; }
  std::size_t stride(std::size_t d) const { return strides_[d]; }
  std::size_t node_count() const { return node_count_; }

  double max_spacing() const;
  /// Length of the diagonal of one grid cell.
  double cell_diagonal() const;
  /// Length of the diagonal of the whole domain.
  double domain_diagonal() const;

  std::size_t flat_index(std::span<const int> index) const;
  std::vector<int> unravel(std::size_t flat) const;

  /// Grid over a subset of the axes, in the order given.
  GridSpec subgrid(std::span<const int> keep_dims) const;

  friend bool operator==(const GridSpec& a, const GridSpec& b) { return a.axes_ == b.axes_; }

 private:
  std::vector<Axis> axes_;
  std::vector<std::size_t> strides_;
  std::size_t node_count_ = 0;
};

/// Value function sampled on a grid at one instant.
class ScalarField {
 public:
  ScalarField() = default;
  ScalarField(GridSpec spec, std::vector<double> values, double time = 0.0);

  const GridSpec& spec() const { return spec_; }
  std::span<const double> values() const { return values_; }
  double time() const { return time_; }
  double operator[](std::size_t flat) const { return values_[flat]; }
  double at(std::span<const int> index) const { return values_[spec_.flat_index(index)]; }

  /// Releases the storage; the field is left empty.
  std::vector<double> take_values() && { return std::move(values_); }

 private:
  GridSpec spec_;
  std::vector<double> values_;
  double time_ = 0.0;
};

/// Ordered stack of snapshots on one grid with uniformly spaced times.
class TimeSampledField {
 public:
  TimeSampledField() = default;
  explicit TimeSampledField(std::vector<ScalarField> snapshots);

  const GridSpec& spec() const { return snapshots_.front().spec(); }
  std::size_t size() const { return snapshots_.size(); }
  const ScalarField& operator[](std::size_t k) const { return snapshots_[k]; }
  const ScalarField& front() const { return snapshots_.front(); }
  const ScalarField& back() const { return snapshots_.back(); }
  const std::vector<ScalarField>& snapshots() const { return snapshots_; }
  const std::vector<double>& times() const { return times_; }
  double t0() const { return times_.front(); }
  double tf() const { return times_.back(); }

  /// Bracketing snapshot pair and weight of the later one for time t.
  struct Bracket {
    std::size_t lo = 0;
    std::size_t hi = 0;
    double weight = 0.0;
  };
  Bracket bracket(double t) const;

  /// Field linearly interpolated in time.
  ScalarField at_time(double t) const;
  /// Value interpolated in space and time.
  double value(std::span<const double> x, double t) const;

 private:
  std::vector<ScalarField> snapshots_;
  std::vector<double> times_;
};

std::vector<double> coord_of(const GridSpec& spec, std::span<const int> index);
/// Nearest node to x (periodic axes wrapped). Throws DomainError outside the grid.
std::vector<int> index_of(const GridSpec& spec, std::span<const double> x);

/// Multilinear interpolation. Periodic axes wrap; a coordinate outside a
/// non-periodic axis throws DomainError.
double interpolate(const ScalarField& field, std::span<const double> x);
double interpolate(const GridSpec& spec, std::span<const double> values, std::span<const double> x);

/// First-order one-sided differences along `dim`: left is D-, right is D+.
/// Non-periodic boundaries extrapolate the outermost difference.
std::pair<ScalarField, ScalarField> upwind_diffs(const ScalarField& field, std::size_t dim);

/// One entry per node, nonzero meaning "in the set".
using NodeMask = std::vector<std::uint8_t>;

NodeMask sublevel_mask(const ScalarField& field, double level = 0.0);

/// Squared Euclidean distance from every node to the nearest masked node
/// (zero on masked nodes, +inf when the mask is empty). Periodic axes use the
/// wrapped metric.
std::vector<double> squared_distance_transform(const GridSpec& spec, std::span<const std::uint8_t> mask);

/// Value used by signed_distance for a uniform mask: 2 x domain diagonal,
/// positive for an empty mask and negative for a full one.
double distance_sentinel(const GridSpec& spec);

/// Exact node-to-node signed distance: positive outside the mask, negative
/// inside, magnitude the distance to the nearest node of opposite membership.
ScalarField signed_distance(const GridSpec& spec, std::span<const std::uint8_t> mask, double time = 0.0);

double wrap_angle(double a);

}  // namespace ecsk
