#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace ecsk {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;  // unexpected compute failure
inline constexpr int kUsage = 2;    // bad config or arguments
inline constexpr int kIo = 3;       // unreadable or unwritable files
inline constexpr int kVerification = 4;
}  // namespace exit_code

struct CommandOptions {
  std::optional<std::uint64_t> seed;
  /// Overrides the configured output directory (ECSK_OUTPUT_DIR).
  std::optional<std::string> output_dir;
  bool progress = false;
};

/// Point reach set of the observed system from the origin. Writes
/// reach.json/.f64, reach_summary.json and config.json.
int cmd_reach(const std::filesystem::path& config, const CommandOptions& opts, std::ostream& log);

/// reach -> unsafe tube -> avoid -> kernel. Also writes convergence.json and,
/// when r_sense is configured, reach_sensing.json.
int cmd_pipeline(const std::filesystem::path& config, const CommandOptions& opts, std::ostream& log);

struct VerifyArgs {
  std::filesystem::path kernel;
  int trials = 100;
  double margin = 0.5;
  std::uint64_t seed = 0;
  int adversary_samples = 50;
  bool write_traces = false;
};

/// Batch closed-loop verification. Writes verify_report.json (and traces on
/// request) to the output directory, default the kernel's directory.
int cmd_verify(const VerifyArgs& args, const CommandOptions& opts, std::ostream& log);

struct ExportArgs {
  std::filesystem::path artifact;
  std::string format;  // "vtk" or "csv-slice"
  /// csv-slice only: fixed dimension and coordinate.
  std::optional<int> slice_dim;
  std::optional<double> slice_coord;
  /// Snapshot time for csv-slice; default is the first snapshot.
  std::optional<double> time;
  std::filesystem::path output_dir;
};

int cmd_export(const ExportArgs& args, std::ostream& log);

}  // namespace ecsk
