#include "ecsk/artifact_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <json.hpp>

namespace ecsk {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json grid_json(const GridSpec& spec) {
  json g;
  for (const Axis& a : spec.axes()) {
    g["mins"].push_back(a.min);
    g["maxs"].push_back(a.max);
    g["counts"].push_back(a.count);
    g["periodic"].push_back(a.periodic);
  }
  return g;
}

GridSpec grid_from_json(const json& g) {
  const auto& mins = g.at("mins");
  std::vector<Axis> axes(mins.size());
  for (std::size_t d = 0; d < axes.size(); ++d) {
    axes[d].min = mins.at(d).get<double>();
    axes[d].max = g.at("maxs").at(d).get<double>();
    axes[d].count = g.at("counts").at(d).get<int>();
    axes[d].periodic = g.at("periodic").at(d).get<bool>();
  }
  return GridSpec(std::move(axes));
}

json system_json(const DynamicalSystem& sys) {
  json s;
  s["model"] = std::string(sys.model());
  const ControlBox& box = sys.control_box();
  for (std::size_t j = 0; j < box.dim(); ++j) s["control_bounds"].push_back({box.lows[j], box.highs[j]});
  return s;
}

std::shared_ptr<const DynamicalSystem> system_from_json(const json& s) {
  ControlBox box;
  for (const auto& b : s.at("control_bounds")) {
    box.lows.push_back(b.at(0).get<double>());
    box.highs.push_back(b.at(1).get<double>());
  }
  return make_system(s.at("model").get<std::string>(), ControlBox(box.lows, box.highs));
}

void write_le(std::ofstream& out, std::span<const double> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (double v : values) {
      auto bits = std::bit_cast<std::uint64_t>(v);
      unsigned char bytes[8];
      for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
      out.write(reinterpret_cast<const char*>(bytes), 8);
    }
  }
}

void read_le(std::ifstream& in, std::span<double> values) {
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (double& v : values) {
      unsigned char bytes[8];
      in.read(reinterpret_cast<char*>(bytes), 8);
      std::uint64_t bits = 0;
      for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
      v = std::bit_cast<double>(bits);
    }
  }
}

void save_stack(const TimeSampledField& field, const fs::path& header, const std::string& kind, json metadata) {
  if (header.empty()) throw IoError("artifact path is empty");
  fs::path data = header;
  data.replace_extension(".f64");
  json h;
  h["format_version"] = kArtifactFormatVersion;
  h["kind"] = kind;
  h["grid"] = grid_json(field.spec());
  h["times"] = field.times();
  h["layout"] = {{"dtype", "float64"},
                 {"byte_order", "little"},
                 {"order", "row-major, last dimension fastest"},
                 {"snapshots", "concatenated in time order"},
                 {"snapshot_count", field.size()},
                 {"values_per_snapshot", field.spec().node_count()}};
  h["data_file"] = data.filename().string();
  h["metadata"] = std::move(metadata);

  if (header.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(header.parent_path(), ec);
  }
  std::ofstream hout(header, std::ios::binary | std::ios::trunc);
  if (!hout) throw IoError("cannot write " + header.string());
  hout << h.dump(2) << '\n';
  std::ofstream dout(data, std::ios::binary | std::ios::trunc);
  if (!dout) throw IoError("cannot write " + data.string());
  for (const auto& s : field.snapshots()) write_le(dout, s.values());
  if (!hout || !dout) throw IoError("write failed for " + header.string());
}

struct RawArtifact {
  json header;
  TimeSampledField field;
};

RawArtifact load_stack(const fs::path& header, const std::string& expect_kind) {
  if (header.empty()) throw IoError("artifact path is empty");
  std::ifstream hin(header, std::ios::binary);
  if (!hin) throw IoError("cannot read " + header.string());
  RawArtifact raw;
  try {
    raw.header = json::parse(hin);
    if (raw.header.at("format_version").get<int>() != kArtifactFormatVersion) {
      throw IoError("unsupported artifact format_version in " + header.string());
    }
    const std::string kind = raw.header.at("kind").get<std::string>();
    if (!expect_kind.empty() && kind != expect_kind) {
      throw IoError(header.string() + " holds a '" + kind + "' artifact, expected '" + expect_kind + "'");
    }
    const GridSpec spec = grid_from_json(raw.header.at("grid"));
    const auto times = raw.header.at("times").get<std::vector<double>>();
    const fs::path data = header.parent_path() / raw.header.at("data_file").get<std::string>();
    std::ifstream din(data, std::ios::binary);
    if (!din) throw IoError("cannot read " + data.string());
    std::vector<ScalarField> snaps;
    for (double t : times) {
      std::vector<double> v(spec.node_count());
      read_le(din, v);
      if (!din) throw IoError("truncated data file " + data.string());
      snaps.emplace_back(spec, std::move(v), t);
    }
    if (din.peek() != std::char_traits<char>::eof()) throw IoError("trailing bytes in " + data.string());
    raw.field = TimeSampledField(std::move(snaps));
  } catch (const json::exception& e) {
    throw IoError("malformed artifact header " + header.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw IoError("invalid artifact " + header.string() + ": " + e.what());
  }
  return raw;
}

const char* convention_name(ControlConvention c) {
  return c == ControlConvention::ValueAscent ? "value_ascent" : "literal_argmin";
}

}  // namespace

void save_reach(const ReachSolution& sol, const fs::path& header) {
  json m;
  m["system"] = system_json(*sol.system);
  m["r0"] = sol.r0;
  if (const auto* p = std::get_if<PointOrigin>(&sol.origin)) {
    m["origin"] = {{"type", "point"}, {"state", p->state}};
  } else {
    m["origin"] = {{"type", "sensing_complement"}, {"r_sense", std::get<SensingOrigin>(sol.origin).r_sense}};
  }
  save_stack(sol.tube, header, "reach", std::move(m));
}

ReachSolution load_reach(const fs::path& header) {
  auto raw = load_stack(header, "reach");
  try {
    const json& m = raw.header.at("metadata");
    ReachSolution sol;
    sol.tube = std::move(raw.field);
    sol.r0 = m.at("r0").get<double>();
    sol.system = system_from_json(m.at("system"));
    const json& o = m.at("origin");
    if (o.at("type").get<std::string>() == "point") {
      sol.origin = PointOrigin{o.at("state").get<std::vector<double>>()};
    } else {
      sol.origin = SensingOrigin{o.at("r_sense").get<double>()};
    }
    return sol;
  } catch (const json::exception& e) {
    throw IoError("malformed reach metadata in " + header.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw IoError("invalid reach metadata in " + header.string() + ": " + e.what());
  }
}

void save_unsafe(const UnsafeTube& tube, const fs::path& header) {
  save_stack(tube.d_tilde, header, "unsafe_tube", json{{"collision_radius", tube.collision_radius}});
}

UnsafeTube load_unsafe(const fs::path& header) {
  auto raw = load_stack(header, "unsafe_tube");
  try {
    UnsafeTube tube;
    tube.d_tilde = std::move(raw.field);
    tube.collision_radius = raw.header.at("metadata").at("collision_radius").get<double>();
    return tube;
  } catch (const json::exception& e) {
    throw IoError("malformed unsafe-tube metadata in " + header.string() + ": " + e.what());
  }
}

void save_avoid(const AvoidSolution& sol, const fs::path& header) {
  save_stack(sol.tube, header, "avoid", json{{"t0", sol.t0}, {"tf", sol.tf}});
}

AvoidSolution load_avoid(const fs::path& header) {
  auto raw = load_stack(header, "avoid");
  try {
    AvoidSolution sol;
    sol.tube = std::move(raw.field);
    sol.t0 = raw.header.at("metadata").at("t0").get<double>();
    sol.tf = raw.header.at("metadata").at("tf").get<double>();
    return sol;
  } catch (const json::exception& e) {
    throw IoError("malformed avoid metadata in " + header.string() + ": " + e.what());
  }
}

void save_kernel(const SafetyKernel& kernel, const fs::path& header) {
  const KernelParams& p = kernel.params();
  json m;
  m["internal"] = system_json(kernel.internal());
  m["external"] = system_json(kernel.external());
  m["frame"] = kernel.frame() == FrameKind::PlanarRigid ? "planar_rigid" : "translation";
  m["r0"] = p.r0;
  m["collision_radius"] = p.collision_radius;
  m["switch_tolerance"] = kernel.switch_tolerance();
  m["gradient_step"] = p.gradient_step;
  m["control_convention"] = convention_name(p.convention);
  m["t0"] = kernel.avoid().t0;
  m["tf"] = kernel.avoid().tf;
  save_stack(kernel.avoid().tube, header, "kernel", std::move(m));
}

SafetyKernel load_kernel(const fs::path& header) {
  auto raw = load_stack(header, "kernel");
  try {
    const json& m = raw.header.at("metadata");
    auto avoid = std::make_shared<AvoidSolution>();
    avoid->tube = std::move(raw.field);
    avoid->t0 = m.at("t0").get<double>();
    avoid->tf = m.at("tf").get<double>();
    KernelParams p;
    p.r0 = m.at("r0").get<double>();
    p.collision_radius = m.at("collision_radius").get<double>();
    p.switch_tolerance = m.at("switch_tolerance").get<double>();
    p.gradient_step = m.at("gradient_step").get<int>();
    const auto conv = m.at("control_convention").get<std::string>();
    if (conv == "value_ascent") {
      p.convention = ControlConvention::ValueAscent;
    } else if (conv == "literal_argmin") {
      p.convention = ControlConvention::LiteralArgmin;
    } else {
      throw IoError("unknown control_convention '" + conv + "' in " + header.string());
    }
    return SafetyKernel(std::move(avoid), system_from_json(m.at("internal")), system_from_json(m.at("external")), p);
  } catch (const json::exception& e) {
    throw IoError("malformed kernel metadata in " + header.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw IoError("invalid kernel metadata in " + header.string() + ": " + e.what());
  }
}

LoadedFieldStack load_field_stack(const fs::path& header) {
  auto raw = load_stack(header, "");
  return {raw.header.at("kind").get<std::string>(), std::move(raw.field)};
}

}  // namespace ecsk
