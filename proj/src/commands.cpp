#include "ecsk/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <ostream>

#include "ecsk/artifact_io.hpp"
#include "ecsk/avoid.hpp"
#include "ecsk/config.hpp"
#include "ecsk/kernel_runtime.hpp"
#include "ecsk/reach.hpp"
#include "ecsk/setops.hpp"
#include "ecsk/sim.hpp"

namespace ecsk {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

template <class F>
int guarded(std::ostream& log, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    log << "error: config " << e.what() << '\n';
    return exit_code::kUsage;
  } catch (const IoError& e) {
    log << "error: " << e.what() << '\n';
    return exit_code::kIo;
  } catch (const std::invalid_argument& e) {
    log << "error: " << e.what() << '\n';
    return exit_code::kUsage;
  } catch (const DomainError& e) {
    log << "error: " << e.what() << '\n';
    return exit_code::kUsage;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return exit_code::kFailure;
  }
}

template <class F>
auto stage(std::ostream& log, const char* name, F&& body) {
  log << "[" << name << "]\n";
  try {
    return body();
  } catch (...) {
    log << "stage '" << name << "' failed\n";
    throw;
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

fs::path prepare_output(PipelineConfig& cfg, const CommandOptions& opts) {
  if (opts.seed) cfg.rng_seed = *opts.seed;
  if (opts.output_dir) cfg.output_dir = *opts.output_dir;
  fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
  write_text(dir / "config.json", config_to_json(cfg));
  return dir;
}

SolverConfig solver_for(const PipelineConfig& cfg, const CommandOptions& opts, std::ostream& log) {
  SolverConfig s = cfg.solver();
  if (opts.progress) {
    s.progress = [&log](const StepProgress& p) {
      if (p.step % 50 != 0) return;
      char buf[160];
      std::snprintf(buf, sizeof buf, "  step %zu  t=%.4f  cfl=%.3f  v in [%.4g, %.4g]\n", p.step, p.time, p.cfl_number,
                    p.min_value, p.max_value);
      log << buf;
    };
  }
  return s;
}

json summary_of(const TimeSampledField& f) {
  json j;
  for (const Axis& a : f.spec().axes()) {
    j["grid"]["mins"].push_back(a.min);
    j["grid"]["maxs"].push_back(a.max);
    j["grid"]["counts"].push_back(a.count);
    j["grid"]["periodic"].push_back(a.periodic);
  }
  j["times"] = f.times();
  for (const auto& s : f.snapshots()) {
    const auto [lo, hi] = std::minmax_element(s.values().begin(), s.values().end());
    j["min"].push_back(*lo);
    j["max"].push_back(*hi);
  }
  return j;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

int cmd_reach(const fs::path& config, const CommandOptions& opts, std::ostream& log) {
  return guarded(log, [&] {
    PipelineConfig cfg = load_config(config);
    const fs::path dir = prepare_output(cfg, opts);
    const auto ext = make_system(cfg.external.model, cfg.external.bounds);
    const std::vector<double> x0(ext->state_dim(), 0.0);
    const ReachSolution reach = stage(log, "reach", [&] {
      return frs_from_point(ext, x0, cfg.r0, cfg.t0, cfg.tf, cfg.grid_spec(), solver_for(cfg, opts, log));
    });
    save_reach(reach, dir / "reach.json");
    write_text(dir / "reach_summary.json", summary_of(reach.tube).dump(2) + "\n");
    log << "wrote " << (dir / "reach.json").string() << '\n';
    return exit_code::kOk;
  });
}

int cmd_pipeline(const fs::path& config, const CommandOptions& opts, std::ostream& log) {
  return guarded(log, [&] {
    PipelineConfig cfg = load_config(config);
    const fs::path dir = prepare_output(cfg, opts);
    const auto ext = make_system(cfg.external.model, cfg.external.bounds);
    const auto internal = make_system(cfg.internal.model, cfg.internal.bounds);
    const GridSpec spec = cfg.grid_spec();
    const SolverConfig solver = solver_for(cfg, opts, log);
    const std::vector<double> x0(ext->state_dim(), 0.0);

    auto reach = stage(log, "reach", [&] {
      return std::make_shared<const ReachSolution>(frs_from_point(ext, x0, cfg.r0, cfg.t0, cfg.tf, spec, solver));
    });
    save_reach(*reach, dir / "reach.json");
    write_text(dir / "reach_summary.json", summary_of(reach->tube).dump(2) + "\n");

    auto unsafe = stage(log, "unsafe_tube", [&] {
      return std::make_shared<const UnsafeTube>(build_unsafe_tube(reach, cfg.collision_radius, spec));
    });
    save_unsafe(*unsafe, dir / "unsafe_tube.json");

    auto avoid = stage(log, "avoid", [&] {
      return std::make_shared<const AvoidSolution>(solve_avoid(unsafe, *internal, solver));
    });
    save_avoid(*avoid, dir / "avoid.json");

    KernelParams params;
    params.r0 = cfg.r0;
    params.collision_radius = cfg.collision_radius;
    params.switch_tolerance = cfg.switch_tolerance;
    const SafetyKernel kernel = stage(log, "kernel", [&] { return SafetyKernel(avoid, internal, ext, params); });
    save_kernel(kernel, dir / "kernel.json");

    json conv;
    conv["convergence_gap"] = convergence_gap(*avoid);
    conv["t0"] = avoid->t0;
    conv["tf"] = avoid->tf;
    conv["compared_times"] = {avoid->tube.times()[0], avoid->tube.times()[1]};
    write_text(dir / "convergence.json", conv.dump(2) + "\n");

    if (cfg.r_sense) {
      const ReachSolution sensing = stage(log, "reach_sensing", [&] {
        return frs_from_sensing_complement(ext, *cfg.r_sense, cfg.t0, cfg.tf, spec, solver);
      });
      save_reach(sensing, dir / "reach_sensing.json");
    }
    log << "convergence gap " << conv["convergence_gap"].get<double>() << '\n';
    log << "wrote " << (dir / "kernel.json").string() << '\n';
    return exit_code::kOk;
  });
}

int cmd_verify(const VerifyArgs& args, const CommandOptions& opts, std::ostream& log) {
  return guarded(log, [&] {
    if (args.trials < 0) throw std::invalid_argument("--trials must be non-negative");
    if (!(args.margin > 0.0)) throw std::invalid_argument("--margin must be positive");
    const SafetyKernel kernel = load_kernel(args.kernel);
    fs::path dir = opts.output_dir ? fs::path(*opts.output_dir) : args.kernel.parent_path();
    if (dir.empty()) dir = ".";
    std::error_code ec;
    fs::create_directories(dir, ec);

    BatchOptions bo;
    bo.adversary_samples = args.adversary_samples;
    bo.keep_traces = args.write_traces;
    const std::uint64_t seed = opts.seed.value_or(args.seed);
    const BatchReport rep = batch_verify(kernel, args.trials, args.margin, seed, bo);

    json j;
    j["trials"] = rep.trials;
    j["collisions"] = rep.collisions;
    j["aborted"] = rep.aborted;
    j["worst_min_d"] = finite_or_null(rep.worst_min_d);
    j["margin"] = args.margin;
    j["seed"] = seed;
    j["adversary_samples"] = args.adversary_samples;
    j["passed"] = rep.passed();
    j["runs"] = json::array();
    for (const auto& r : rep.runs) {
      j["runs"].push_back({{"x_int0", r.x_int0}, {"start_value", r.start_value}, {"min_d", r.min_d}, {"aborted", r.aborted}});
    }
    write_text(dir / "verify_report.json", j.dump(2) + "\n");
    for (std::size_t i = 0; i < rep.traces.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "trace_%04zu.csv", i);
      std::ofstream out(dir / name, std::ios::trunc);
      if (!out) throw IoError("cannot write " + (dir / name).string());
      write_trace_csv(rep.traces[i], out);
    }
    log << "trials " << rep.trials << ", collisions " << rep.collisions << ", aborted " << rep.aborted << '\n';
    return rep.passed() ? exit_code::kOk : exit_code::kVerification;
  });
}

namespace {

void write_vtk(const ScalarField& f, const std::string& kind, const fs::path& path) {
  const GridSpec& g = f.spec();
  if (g.dims() > 3) throw std::invalid_argument("vtk export supports at most 3 dimensions");
  int n[3] = {1, 1, 1};
  double origin[3] = {0, 0, 0};
  double spacing[3] = {1, 1, 1};
  for (std::size_t d = 0; d < g.dims(); ++d) {
    n[d] = g.count(d);
    origin[d] = g.axis(d).min;
    spacing[d] = g.spacing(d);
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  char buf[64];
  out << "# vtk DataFile Version 3.0\n";
  std::snprintf(buf, sizeof buf, "%.17g", f.time());
  out << "ecsk " << kind << " t=" << buf << "\n";
  out << "ASCII\nDATASET STRUCTURED_POINTS\n";
  out << "DIMENSIONS " << n[0] << ' ' << n[1] << ' ' << n[2] << '\n';
  auto triple = [&](const char* tag, const double* v) {
    out << tag;
    for (int k = 0; k < 3; ++k) {
      std::snprintf(buf, sizeof buf, " %.17g", v[k]);
      out << buf;
    }
    out << '\n';
  };
  triple("ORIGIN", origin);
  triple("SPACING", spacing);
  out << "POINT_DATA " << g.node_count() << '\n';
  out << "SCALARS value double 1\nLOOKUP_TABLE default\n";
  // VTK orders points with the first axis fastest.
  int idx[3];
  for (idx[2] = 0; idx[2] < n[2]; ++idx[2]) {
    for (idx[1] = 0; idx[1] < n[1]; ++idx[1]) {
      for (idx[0] = 0; idx[0] < n[0]; ++idx[0]) {
        const std::size_t flat = g.flat_index(std::span<const int>(idx, g.dims()));
        std::snprintf(buf, sizeof buf, "%.17g\n", f[flat]);
        out << buf;
      }
    }
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void write_csv_slice(const ScalarField& f, std::optional<int> slice_dim, std::optional<double> slice_coord,
                     const fs::path& path) {
  const GridSpec& g = f.spec();
  std::vector<int> free;
  for (std::size_t d = 0; d < g.dims(); ++d) {
    if (!slice_dim || static_cast<std::size_t>(*slice_dim) != d) free.push_back(static_cast<int>(d));
  }
  if (g.dims() == 3 && (!slice_dim || !slice_coord)) throw std::invalid_argument("csv-slice of a 3D field needs --slice");
  if (slice_dim && (*slice_dim < 0 || static_cast<std::size_t>(*slice_dim) >= g.dims())) {
    throw std::invalid_argument("slice dimension out of range");
  }
  if (slice_dim && slice_coord) {
    const Axis& a = g.axis(static_cast<std::size_t>(*slice_dim));
    if (!a.periodic && (*slice_coord < a.min || *slice_coord > a.max)) {
      throw std::invalid_argument("slice coordinate outside the grid");
    }
  }
  if (free.size() > 2 || free.empty()) throw std::invalid_argument("csv-slice needs a 1D or 2D result");
  const int row_dim = free[0];
  const int col_dim = free.size() == 2 ? free[1] : -1;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  char buf[40];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  std::vector<double> x(g.dims(), 0.0);
  if (slice_dim) x[static_cast<std::size_t>(*slice_dim)] = *slice_coord;
  const Axis& ra = g.axis(static_cast<std::size_t>(row_dim));
  out << "x" << row_dim + 1;
  if (col_dim >= 0) {
    const Axis& ca = g.axis(static_cast<std::size_t>(col_dim));
    out << "\\x" << col_dim + 1;
    for (int j = 0; j < ca.count; ++j) {
      out << ',';
      num(ca.coord(j));
    }
  } else {
    out << ",value";
  }
  out << '\n';
  for (int i = 0; i < ra.count; ++i) {
    x[static_cast<std::size_t>(row_dim)] = ra.coord(i);
    num(ra.coord(i));
    const int cols = col_dim >= 0 ? g.count(static_cast<std::size_t>(col_dim)) : 1;
    for (int j = 0; j < cols; ++j) {
      if (col_dim >= 0) x[static_cast<std::size_t>(col_dim)] = g.axis(static_cast<std::size_t>(col_dim)).coord(j);
      out << ',';
      num(interpolate(f, x));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

int cmd_export(const ExportArgs& args, std::ostream& log) {
  return guarded(log, [&] {
    if (args.artifact.empty()) throw IoError("artifact path is empty");
    if (args.format != "vtk" && args.format != "csv-slice") {
      throw std::invalid_argument("--format must be vtk or csv-slice");
    }
    const LoadedFieldStack stack = load_field_stack(args.artifact);
    fs::path dir = args.output_dir.empty() ? args.artifact.parent_path() : args.output_dir;
    if (dir.empty()) dir = ".";
    std::error_code ec;
    fs::create_directories(dir, ec);
    const std::string stem = args.artifact.stem().string();
    if (args.format == "vtk") {
      for (std::size_t k = 0; k < stack.field.size(); ++k) {
        char name[64];
        std::snprintf(name, sizeof name, "_%04zu.vtk", k);
        write_vtk(stack.field[k], stack.kind, dir / (stem + name));
      }
      log << "wrote " << stack.field.size() << " vtk files to " << dir.string() << '\n';
    } else {
      const ScalarField f = stack.field.at_time(args.time.value_or(stack.field.t0()));
      const fs::path path = dir / (stem + "_slice.csv");
      write_csv_slice(f, args.slice_dim, args.slice_coord, path);
      log << "wrote " << path.string() << '\n';
    }
    return exit_code::kOk;
  });
}

}  // namespace ecsk
