#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "ecsk/avoid.hpp"
#include "ecsk/kernel_runtime.hpp"
#include "ecsk/reach.hpp"
#include "ecsk/setops.hpp"

namespace ecsk {

/// Unreadable, unwritable or malformed artifact files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Artifacts are a JSON header (grid, times, layout, metadata) next to a raw
/// file of little-endian float64 values: row-major, last dimension fastest,
/// snapshots concatenated in time order. `header` is the .json path; the
/// data file takes the same stem with extension .f64.
inline constexpr int kArtifactFormatVersion = 1;

void save_reach(const ReachSolution& sol, const std::filesystem::path& header);
ReachSolution load_reach(const std::filesystem::path& header);

void save_unsafe(const UnsafeTube& tube, const std::filesystem::path& header);
UnsafeTube load_unsafe(const std::filesystem::path& header);

void save_avoid(const AvoidSolution& sol, const std::filesystem::path& header);
AvoidSolution load_avoid(const std::filesystem::path& header);

/// The kernel file carries the avoid tube plus everything the runtime needs:
/// both systems, r0, collision radius, switch tolerance, gradient step and
/// control convention.
void save_kernel(const SafetyKernel& kernel, const std::filesystem::path& header);
SafetyKernel load_kernel(const std::filesystem::path& header);

struct LoadedFieldStack {
  std::string kind;
  TimeSampledField field;
};

/// Reads the value stack of any artifact kind.
LoadedFieldStack load_field_stack(const std::filesystem::path& header);

}  // namespace ecsk
