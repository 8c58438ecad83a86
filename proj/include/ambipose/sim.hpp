#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "ambipose/ambiguity.hpp"
#include "ambipose/camera.hpp"
#include "ambipose/liegroups.hpp"
#include "ambipose/object_model.hpp"

namespace ambipose::sim {

using Rng = std::mt19937_64;

struct PlacedObject {
  ObjectDefinition definition;
  Pose world_pose;
};

/// Camera circling `target` at the given radius and height, looking at it.
struct OrbitTrajectory {
  double radius = 0.6;
  double height = 0.45;
  int n_views = 20;
  Vector3 target = Vector3::Zero();
  double arc = 2.0 * 3.14159265358979323846;  // swept angle, rad
};

struct NoiseConfig {
  double keypoint_px = 1.0;      // pixel noise at zero occlusion
  double fk_translation = 5e-5;  // m
  double fk_rotation = 5e-5;     // rad
  double depth = 2e-3;           // m
  double occlusion_min = 0.0;
  double occlusion_max = 0.8;

  static NoiseConfig none();
};

/// sigma = floor + slope * occlusion + N(0, noise), clamped at zero; symmetric
/// non-dominant axes are raised to at least sigma_o + margin.
struct UncertaintyModel {
  double floor = 0.01;
  double slope = 0.6;
  double noise = 0.02;
  double sigma_o = kDefaultSigmaO;
  double margin = 0.1;
};

double uncertainty_model(double occlusion, bool symmetric_nondominant, Rng& rng,
                         const UncertaintyModel& model = {});

struct ScenarioConfig {
  std::uint64_t seed = 1;
  std::vector<PlacedObject> objects;
  Pose base;  // world to base, ground truth
  OrbitTrajectory orbit;
  /// World camera poses; overrides the orbit when non-empty.
  std::vector<Pose> camera_poses;
  NoiseConfig noise;
  UncertaintyModel uncertainty;
  /// Optional fixed occlusion per [frame][object index]; otherwise drawn
  /// uniformly in [occlusion_min, occlusion_max].
  std::vector<std::vector<double>> occlusion;
  CameraIntrinsics intrinsics;
  int depth_points = 300;
  int continuous_discretization = 360;
};

/// Four objects (box, cylinder, 4-fold prism, L-block), 20 orbit views.
ScenarioConfig demo_scenario(std::uint64_t seed = 1);

struct ObjectObservation {
  int object_id = 0;
  AxisPredictions axes{};
  std::vector<Vector3> depth_points;  // camera frame
  Pose gt_relative;                   // camera to object, ground truth
  /// Symmetry transform the simulated front end locked onto; keypoints are
  /// rendered through gt_relative * perceived_symmetry.
  Rotation perceived_symmetry;
  double occlusion = 0.0;
};

struct FrameMeasurement {
  int t = 0;
  Pose fk_measurement;  // base to camera, noisy
  Pose gt_camera;       // world to camera
  std::vector<ObjectObservation> objects;
  std::vector<int> out_of_view;
};

/// Everything a pipeline run needs, plus ground truth.
struct Scenario {
  CameraIntrinsics intrinsics;
  int continuous_discretization = 360;
  Pose base;
  std::vector<ObjectModel> models;
  std::map<int, Pose> gt_objects;  // world to object
  std::vector<FrameMeasurement> frames;
  /// Non-fatal findings such as objects that are never visible.
  std::vector<std::string> warnings;

  const ObjectModel& model(int id) const;
};

std::vector<Pose> orbit_poses(const OrbitTrajectory& orbit);
Pose look_at(const Vector3& position, const Vector3& target);

/// Deterministic in config.seed.
Scenario generate(const ScenarioConfig& config);

/// Realized mean keypoint error of one axis against the noiseless rendering
/// through gt_relative * perceived_symmetry.
double realized_keypoint_error(const Scenario& scenario, const ObjectObservation& obs, Axis axis);

/// Line-oriented measurement file; numbers use the shortest round-trip form,
/// so write then read reproduces every value exactly.
void write_measurements(const Scenario& scenario, std::ostream& out);
void save_measurements(const Scenario& scenario, const std::filesystem::path& path);
/// Throws ParseError with the offending line number.
Scenario read_measurements(std::istream& in, const std::string& source = "measurements");
Scenario load_measurements(const std::filesystem::path& path);

}  // namespace ambipose::sim
