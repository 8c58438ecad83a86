#include "ambipose/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "ambipose/error.hpp"
#include "text_util.hpp"

namespace ambipose {

std::vector<double> SweepSpec::values() const {
  const auto n = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> out;
  // Snap to 1e-9 so grid points print as typed.
  for (int i = 0; i < n; ++i) out.push_back(std::round((lo + i * step) * 1e9) / 1e9);
  return out;
}

SweepSpec parse_sweep(std::string_view value) {
  const auto parts = text::split(value, ':');
  if (parts.size() != 3) {
    throw ConfigError(fmt::format("sweep must be LO:HI:STEP, got '{}'", value));
  }
  SweepSpec s;
  const auto lo = text::to_double(parts[0]);
  const auto hi = text::to_double(parts[1]);
  const auto step = text::to_double(parts[2]);
  if (!lo || !hi || !step || !(*step > 0.0) || *lo < 0.0 || *hi < *lo) {
    throw ConfigError(fmt::format("invalid sweep '{}'", value));
  }
  s.lo = *lo;
  s.hi = *hi;
  s.step = *step;
  return s;
}

void RunConfig::validate() const {
  if (!(sigma_o > 0.0)) throw ConfigError("sigma_o must be positive");
  if (!(sigma_icp > 0.0)) throw ConfigError("sigma_icp must be positive");
  if ((camera_covariance.array() <= 0.0).any()) throw ConfigError("camera covariance must be positive");
  if (!(graph.base_prior_variance > 0.0)) throw ConfigError("base prior variance must be positive");
  if (!(graph.axis_offset > 0.0)) throw ConfigError("axis offset must be positive");
  if (!(min_factor_sigma > 0.0)) throw ConfigError("min_sigma must be positive");
  if (solver.max_iterations < 1) throw ConfigError("solver max_iterations must be at least 1");
  if (!(auc_max_threshold > 0.0)) throw ConfigError("auc_max_threshold must be positive");
  if (scenario.orbit.n_views < 1) throw ConfigError("n_views must be at least 1");
  try {
    scenario.intrinsics.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

sim::PlacedObject parse_placed_object(std::string_view line) {
  sim::PlacedObject placed;
  std::string rest;
  bool have_pose = false;
  for (auto token : text::split_ws(line)) {
    if (token.starts_with("pose=")) {
      const auto v = text::to_doubles(token.substr(5));
      if (!v) throw InvalidArgument(fmt::format("bad pose '{}'", token));
      placed.world_pose = parse_pose(*v);
      have_pose = true;
    } else {
      rest += std::string(token) + ' ';
    }
  }
  if (!have_pose) throw InvalidArgument("placed object needs pose=qw,qx,qy,qz,tx,ty,tz");
  placed.definition = parse_object_definition(rest);
  return placed;
}

void apply_config_text(std::string_view text_in, const std::string& source, RunConfig& config) {
  int number = 0;
  std::string section;
  bool objects_reset = false;
  const auto error = [&](const std::string& msg) {
    return ConfigError(fmt::format("{}:{}: {}", source, number, msg));
  };
  const auto as_double = [&](std::string_view v) {
    auto d = text::to_double(v);
    if (!d) throw error(fmt::format("expected a number, got '{}'", v));
    return *d;
  };
  const auto as_int = [&](std::string_view v) {
    auto i = text::to_int(v);
    if (!i) throw error(fmt::format("expected an integer, got '{}'", v));
    return static_cast<int>(*i);
  };
  const auto as_bool = [&](std::string_view v) {
    auto b = text::to_bool(v);
    if (!b) throw error(fmt::format("expected a boolean, got '{}'", v));
    return *b;
  };
  const auto add_object = [&](sim::PlacedObject obj) {
    if (!objects_reset) {
      config.scenario.objects.clear();
      objects_reset = true;
    }
    config.scenario.objects.push_back(std::move(obj));
  };

  auto& sc = config.scenario;
  const std::map<std::string, std::function<void(std::string_view)>> setters = {
      {"scenario.seed", [&](auto v) { sc.seed = static_cast<std::uint64_t>(as_int(v)); }},
      {"scenario.preset",
       [&](auto v) {
         if (v != "demo") throw error(fmt::format("unknown preset '{}'", v));
         const auto seed = sc.seed;
         sc = sim::demo_scenario(seed);
       }},
      {"scenario.n_views", [&](auto v) { sc.orbit.n_views = as_int(v); }},
      {"scenario.orbit_radius", [&](auto v) { sc.orbit.radius = as_double(v); }},
      {"scenario.orbit_height", [&](auto v) { sc.orbit.height = as_double(v); }},
      {"scenario.depth_points", [&](auto v) { sc.depth_points = as_int(v); }},
      {"scenario.discretization", [&](auto v) { sc.continuous_discretization = as_int(v); }},
      {"scenario.object",
       [&](auto v) {
         try {
           add_object(parse_placed_object(v));
         } catch (const InvalidArgument& e) {
           throw error(e.what());
         }
       }},
      {"scenario.objects_file",
       [&](auto v) {
         std::ifstream in{std::string(v)};
         if (!in) throw IoError(fmt::format("cannot open objects file {}", v));
         std::string line;
         int inner = 0;
         while (std::getline(in, line)) {
           ++inner;
           auto body = text::trim(line);
           if (body.empty() || body.front() == '#') continue;
           if (body.starts_with("object ")) body = text::trim(body.substr(7));
           try {
             add_object(parse_placed_object(body));
           } catch (const InvalidArgument& e) {
             throw ConfigError(fmt::format("{}:{}: {}", v, inner, e.what()));
           }
         }
       }},
      {"noise.keypoint_px", [&](auto v) { sc.noise.keypoint_px = as_double(v); }},
      {"noise.fk_translation", [&](auto v) { sc.noise.fk_translation = as_double(v); }},
      {"noise.fk_rotation", [&](auto v) { sc.noise.fk_rotation = as_double(v); }},
      {"noise.depth", [&](auto v) { sc.noise.depth = as_double(v); }},
      {"noise.occlusion_min", [&](auto v) { sc.noise.occlusion_min = as_double(v); }},
      {"noise.occlusion_max", [&](auto v) { sc.noise.occlusion_max = as_double(v); }},
      {"noise.sigma_noise", [&](auto v) { sc.uncertainty.noise = as_double(v); }},
      {"uncertainty.floor", [&](auto v) { sc.uncertainty.floor = as_double(v); }},
      {"uncertainty.slope", [&](auto v) { sc.uncertainty.slope = as_double(v); }},
      {"uncertainty.margin", [&](auto v) { sc.uncertainty.margin = as_double(v); }},
      {"uncertainty.sigma_o", [&](auto v) { sc.uncertainty.sigma_o = as_double(v); }},
      {"camera.fx", [&](auto v) { sc.intrinsics.fx = as_double(v); }},
      {"camera.fy", [&](auto v) { sc.intrinsics.fy = as_double(v); }},
      {"camera.cx", [&](auto v) { sc.intrinsics.cx = as_double(v); }},
      {"camera.cy", [&](auto v) { sc.intrinsics.cy = as_double(v); }},
      {"camera.width", [&](auto v) { sc.intrinsics.width = as_int(v); }},
      {"camera.height", [&](auto v) { sc.intrinsics.height = as_int(v); }},
      {"ambiguity.sigma_o", [&](auto v) { config.sigma_o = as_double(v); }},
      {"pose_init.sigma_icp", [&](auto v) { config.sigma_icp = as_double(v); }},
      {"pose_init.icp", [&](auto v) { config.icp = as_bool(v); }},
      {"pose_init.pnp_max_iterations", [&](auto v) { config.pnp.max_iterations = as_int(v); }},
      {"pose_init.icp_max_iterations", [&](auto v) { config.icp_options.max_iterations = as_int(v); }},
      {"graph.max_iterations", [&](auto v) { config.solver.max_iterations = as_int(v); }},
      {"graph.relative_tolerance", [&](auto v) { config.solver.relative_tolerance = as_double(v); }},
      {"graph.gradient_tolerance", [&](auto v) { config.solver.gradient_tolerance = as_double(v); }},
      {"graph.camera_translation_var",
       [&](auto v) { config.camera_covariance.head<3>().setConstant(as_double(v)); }},
      {"graph.camera_rotation_var", [&](auto v) { config.camera_covariance.tail<3>().setConstant(as_double(v)); }},
      {"graph.base_prior_var", [&](auto v) { config.graph.base_prior_variance = as_double(v); }},
      {"graph.axis_offset", [&](auto v) { config.graph.axis_offset = as_double(v); }},
      {"graph.min_sigma", [&](auto v) { config.min_factor_sigma = as_double(v); }},
      {"graph.huber_delta", [&](auto v) { config.graph.huber_delta = as_double(v); }},
      {"metrics.auc_max_threshold", [&](auto v) { config.auc_max_threshold = as_double(v); }},
      {"output.dir", [&](auto v) { config.output_dir = std::string(v); }},
      {"output.dump_graph", [&](auto v) { config.dump_graph = as_bool(v); }},
      {"output.sweep_sigma_o",
       [&](auto v) {
         try {
           config.sweep = parse_sweep(v);
         } catch (const ConfigError& e) {
           throw error(e.what());
         }
       }},
  };

  for (auto raw : text::split(text_in, '\n')) {
    ++number;
    const auto line = text::trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw error("unterminated section header");
      section = std::string(text::trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw error(fmt::format("expected key = value, got '{}'", line));
    const std::string key = section + "." + std::string(text::trim(line.substr(0, eq)));
    const auto value = text::trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw error(fmt::format("unknown key '{}'", key));
    it->second(value);
  }
}

void apply_config_file(const std::filesystem::path& path, RunConfig& config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError(fmt::format("cannot open config file {}", path.string()));
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  apply_config_text(buffer.str(), path.string(), config);
}

}  // namespace ambipose
