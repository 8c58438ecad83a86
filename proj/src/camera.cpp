#include "ambipose/camera.hpp"

#include <fmt/format.h>

#include "ambipose/error.hpp"

namespace ambipose {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw InvalidArgument("focal lengths must be positive");
  }
  if (!(cx > 0.0 && cx < width) || !(cy > 0.0 && cy < height)) {
    throw InvalidArgument(fmt::format("principal point ({}, {}) outside the {}x{} image", cx, cy, width, height));
  }
}

bool CameraIntrinsics::contains(const Vector2& pixel) const {
  return pixel.x() >= 0.0 && pixel.y() >= 0.0 && pixel.x() < width && pixel.y() < height;
}

Vector2 project(const CameraIntrinsics& k, const Vector3& camera_point) {
  const double z = camera_point.z();
  if (z <= kMinDepth) {
    throw BehindCamera(fmt::format("point at depth {} is behind the camera", z));
  }
  return {k.fx * camera_point.x() / z + k.cx, k.fy * camera_point.y() / z + k.cy};
}

Vector2 project(const CameraIntrinsics& k, const Pose& camera_to_object, const Vector3& p) {
  return project(k, act(camera_to_object, p));
}

}  // namespace ambipose
