#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ambipose/liegroups.hpp"

namespace ambipose {

enum class Axis { X = 0, Y = 1, Z = 2 };

inline constexpr std::array<Axis, 3> kAxes = {Axis::X, Axis::Y, Axis::Z};
inline constexpr int kWhiteKeypoints = 9;
inline constexpr int kColoredKeypoints = 5;
inline constexpr int kAxisKeypoints = kWhiteKeypoints + kColoredKeypoints;

char axis_name(Axis axis);
Axis parse_axis(std::string_view name);

/// 3D keypoints of the rotation-axis primitive, in the object frame.
///
/// white[0] is the object center; white[1..8] are the corners of the cube
/// of half-width `scale`. colored[i] holds the center and the four corners of
/// the cube face at +scale along axis i. The per-axis keypoint order (white
/// first, then colored) is the order in which axis predictions are emitted.
struct PrimitiveLayout {
  std::array<Vector3, kWhiteKeypoints> white;
  std::array<std::array<Vector3, kColoredKeypoints>, 3> colored;

  std::array<Vector3, kAxisKeypoints> axis_keypoints(Axis axis) const;
};

/// Throws NonPositiveScale for scale <= 0.
PrimitiveLayout make_primitive_layout(double scale);

enum class SymmetryKind { Asymmetric, Discrete, Continuous };

struct SymmetrySpec {
  SymmetryKind kind = SymmetryKind::Asymmetric;
  int order = 1;  // n for Discrete
  Vector3 axis = Vector3::UnitZ();
};

/// Asymmetric: {identity}. Discrete(n): the n-element cyclic group about the
/// axis. Continuous: `continuous_discretization` equally spaced rotations.
std::vector<Rotation> symmetry_transforms(const SymmetrySpec& spec,
                                          int continuous_discretization = 360);

enum class ShapeKind { Box, Cylinder, LBlock };

/// Box: {size_x, size_y, size_z}. Cylinder: {radius, height} about z.
/// LBlock: {width_x, height_y, depth_z, arm_thickness}, an L profile in x-y
/// extruded along z.
struct ShapeSpec {
  ShapeKind kind = ShapeKind::Box;
  std::vector<double> dims;
};

/// The record an object definition file holds per object.
struct ObjectDefinition {
  int id = 0;
  ShapeSpec shape;
  SymmetrySpec symmetry;
  double keypoint_scale = 0.0;  // <= 0 selects half the diameter
  int surface_points = 600;
};

struct ObjectModel {
  int id = 0;
  PrimitiveLayout layout;
  SymmetrySpec symmetry;
  Vector3 dominant_axis = Vector3::UnitZ();
  std::vector<Vector3> surface_points;
  double diameter = 0.0;
  ObjectDefinition definition;

  bool symmetric() const { return symmetry.kind != SymmetryKind::Asymmetric; }
};

/// Deterministic uniform-area sampling of the shape surface, centered on the
/// shape's bounding-box center.
std::vector<Vector3> sample_surface(const ShapeSpec& shape, int count, std::uint64_t seed);

double max_pairwise_distance(const std::vector<Vector3>& points);

/// Builds the model from its definition. Sampling is seeded from the id, so
/// the same definition always yields the same surface points. Symmetric
/// objects must have their symmetry axis on object-frame z.
ObjectModel build_object_model(const ObjectDefinition& definition);

/// One-line form: `id=1 shape=box dims=0.1,0.06,0.04 symmetry=discrete
/// order=4 axis=0,0,1 keypoint_scale=0.05 surface_points=600`.
std::string format_object_definition(const ObjectDefinition& definition);
ObjectDefinition parse_object_definition(std::string_view line);

/// One definition per non-empty, non-comment line. Throws ParseError with
/// the offending line number.
std::vector<ObjectDefinition> read_object_file(const std::filesystem::path& path);

}  // namespace ambipose
