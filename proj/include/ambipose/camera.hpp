#pragma once

#include "ambipose/liegroups.hpp"

namespace ambipose {

/// Pinhole intrinsics in pixels.
struct CameraIntrinsics {
  double fx = 600.0;
  double fy = 600.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;

  /// Throws InvalidArgument unless fx, fy > 0 and the principal point lies
  /// strictly inside the image.
  void validate() const;
  bool contains(const Vector2& pixel) const;
};

/// Depth below which a point counts as behind the camera.
inline constexpr double kMinDepth = 1e-6;

/// Pixel of a camera-frame point. Throws BehindCamera when z <= kMinDepth.
Vector2 project(const CameraIntrinsics& k, const Vector3& camera_point);
/// Pixel of object-frame point p seen through camera-to-object pose T.
Vector2 project(const CameraIntrinsics& k, const Pose& camera_to_object, const Vector3& p);

}  // namespace ambipose
