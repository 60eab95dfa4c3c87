// ecsk: build and verify eyes-closed safety kernels from a JSON config.
#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "ecsk/commands.hpp"
#include "ecsk/parallel.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Eyes-closed safety kernel solver"};
  app.require_subcommand(1);

  unsigned threads = 0;
  std::uint64_t seed = 0;
  bool quiet = false;
  app.add_option("--threads", threads, "worker threads (default: all cores)");
  auto* seed_opt = app.add_option("--seed", seed, "override the random seed");
  app.add_flag("--quiet", quiet, "suppress progress output");

  std::string config;
  auto* reach = app.add_subcommand("reach", "forward reachable set of the observed system");
  reach->add_option("config", config, "config JSON")->required();
  auto* pipeline = app.add_subcommand("pipeline", "reach, unsafe tube, avoid solve and kernel");
  pipeline->add_option("config", config, "config JSON")->required();

  ecsk::VerifyArgs verify_args;
  std::string verify_out;
  auto* verify = app.add_subcommand("verify", "closed-loop batch verification of a kernel");
  verify->add_option("kernel", verify_args.kernel, "kernel artifact (.json)")->required();
  verify->add_option("--trials", verify_args.trials, "episodes to run")->capture_default_str();
  verify->add_option("--margin", verify_args.margin, "minimum start value, meters")->capture_default_str();
  verify->add_option("--samples", verify_args.adversary_samples, "adversary samples per step")->capture_default_str();
  verify->add_option("--output-dir", verify_out, "report directory (default: next to the kernel)");
  verify->add_flag("--traces", verify_args.write_traces, "write one CSV trace per episode");

  ecsk::ExportArgs export_args;
  std::string slice;
  double time = 0.0;
  auto* exp = app.add_subcommand("export", "export an artifact for external viewers");
  exp->add_option("artifact", export_args.artifact, "artifact header (.json)")->required();
  exp->add_option("--format", export_args.format, "vtk or csv-slice")->required();
  exp->add_option("--slice", slice, "fixed axis for csv-slice as DIM=COORD, DIM counted from 0");
  auto* time_opt = exp->add_option("--time", time, "snapshot time for csv-slice (default: first)");
  exp->add_option("--output-dir", export_args.output_dir, "destination directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ecsk::exit_code::kUsage;
  }

  if (threads > 0) ecsk::set_thread_count(threads);
  ecsk::CommandOptions opts;
  if (*seed_opt) opts.seed = seed;
  if (const char* env = std::getenv("ECSK_OUTPUT_DIR"); env && *env) opts.output_dir = env;
  opts.progress = !quiet;

  if (*reach) return ecsk::cmd_reach(config, opts, std::cerr);
  if (*pipeline) return ecsk::cmd_pipeline(config, opts, std::cerr);
  if (*verify) {
    if (!verify_out.empty()) opts.output_dir = verify_out;
    return ecsk::cmd_verify(verify_args, opts, std::cerr);
  }
  if (!slice.empty()) {
    const auto eq = slice.find('=');
    try {
      if (eq == std::string::npos) throw std::invalid_argument(slice);
      export_args.slice_dim = std::stoi(slice.substr(0, eq));
      export_args.slice_coord = std::stod(slice.substr(eq + 1));
    } catch (const std::exception&) {
      std::cerr << "error: --slice expects DIM=COORD\n";
      return ecsk::exit_code::kUsage;
    }
  }
  if (*time_opt) export_args.time = time;
  return ecsk::cmd_export(export_args, std::cerr);
}
