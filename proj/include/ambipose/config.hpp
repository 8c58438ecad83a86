#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ambipose/graph.hpp"
#include "ambipose/pose_init.hpp"
#include "ambipose/sim.hpp"

namespace ambipose {

struct SweepSpec {
  double lo = 0.0;
  double hi = 0.6;
  double step = 0.05;

  /// Inclusive grid lo, lo + step, ..., hi.
  std::vector<double> values() const;
};

/// Parses "LO:HI:STEP". Throws ConfigError.
SweepSpec parse_sweep(std::string_view text);

struct RunConfig {
  sim::ScenarioConfig scenario = sim::demo_scenario();
  std::optional<std::filesystem::path> replay_path;

  double sigma_o = kDefaultSigmaO;
  double sigma_icp = kDefaultSigmaIcp;
  bool icp = true;

  GraphOptions graph;
  SolverOptions solver;
  Vector6 camera_covariance = Vector6::Constant(1e-6);
  // Object factor sigma_norm is clamped from below; under ~0.2 sigma no longer
  // ranks PnP position error, so larger weight spreads only amplify noise.
  double min_factor_sigma = 0.2;
  PnpOptions pnp;
  IcpOptions icp_options;

  double auc_max_threshold = 0.1;  // m

  std::filesystem::path output_dir = "ambipose_out";
  bool dump_graph = false;
  std::optional<SweepSpec> sweep;

  /// Throws ConfigError for out-of-range values.
  void validate() const;
};

/// Flat key=value text with [section] headers:
///
///   [scenario]  seed, preset (demo), n_views, orbit_radius, orbit_height,
///               depth_points, discretization, objects_file, object (repeatable)
///   [noise]     keypoint_px, fk_translation, fk_rotation, depth,
///               occlusion_min, occlusion_max, sigma_noise
///   [uncertainty] floor, slope, margin, sigma_o
///   [camera]    fx, fy, cx, cy, width, height
///   [ambiguity] sigma_o
///   [pose_init] sigma_icp, icp, pnp_max_iterations, icp_max_iterations
///   [graph]     max_iterations, relative_tolerance, gradient_tolerance,
///               camera_translation_var, camera_rotation_var,
///               base_prior_var, axis_offset, huber_delta, min_sigma
///   [metrics]   auc_max_threshold
///   [output]    dir, dump_graph, sweep_sigma_o
///
/// Values are applied on top of `config`. Throws ConfigError with the line
/// number, or IoError when the file cannot be read.
void apply_config_text(std::string_view text, const std::string& source, RunConfig& config);
void apply_config_file(const std::filesystem::path& path, RunConfig& config);

/// `<object definition> pose=qw,qx,qy,qz,tx,ty,tz`
sim::PlacedObject parse_placed_object(std::string_view line);

}  // namespace ambipose
