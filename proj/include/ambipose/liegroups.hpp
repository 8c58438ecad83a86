#pragma once

#include <span>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace ambipose {

using Vector2 = Eigen::Vector2d;
using Vector3 = Eigen::Vector3d;
using Vector6 = Eigen::Matrix<double, 6, 1>;
using Matrix3 = Eigen::Matrix3d;
using Matrix4 = Eigen::Matrix4d;
using Matrix6 = Eigen::Matrix<double, 6, 6>;

/// Angle below which exp/log switch to their Taylor expansions.
inline constexpr double kSmallAngle = 1e-8;
/// log is refused for rotation angles at or beyond pi - kNearPiMargin.
inline constexpr double kNearPiMargin = 1e-6;

Matrix3 skew(const Vector3& v);

/// Element of SO(3) stored as a unit quaternion. Construction and
/// composition renormalize whenever the norm has drifted, so long chains stay
/// on the manifold while exact unit inputs are kept bit for bit.
class Rotation {
 public:
  Rotation() : q_(Eigen::Quaterniond::Identity()) {}
  explicit Rotation(const Eigen::Quaterniond& q);
  Rotation(double w, double x, double y, double z);

  static Rotation identity() { return {}; }
  /// Nearest rotation to an approximately orthonormal matrix.
  static Rotation from_matrix(const Matrix3& m);
  static Rotation about_axis(const Vector3& axis, double angle);
  /// SO(3) exponential of a rotation vector.
  static Rotation exp(const Vector3& phi);

  /// Rotation vector with angle in [0, pi). Throws NearPiRotation when the
  /// angle is within kNearPiMargin of pi.
  Vector3 log() const;
  /// Rotation angle in [0, pi].
  double angle() const;

  Rotation inverse() const { return Rotation(q_.conjugate()); }
  Rotation operator*(const Rotation& other) const { return Rotation(q_ * other.q_); }
  Vector3 operator*(const Vector3& v) const { return q_ * v; }

  Matrix3 matrix() const { return q_.toRotationMatrix(); }
  const Eigen::Quaterniond& quaternion() const { return q_; }
  double w() const { return q_.w(); }
  double x() const { return q_.x(); }
  double y() const { return q_.y(); }
  double z() const { return q_.z(); }

 private:
  Eigen::Quaterniond q_;
};

/// Tangent vector of SE(3): rotational part phi (rad), translational part rho (m).
struct Twist {
  Vector3 phi = Vector3::Zero();
  Vector3 rho = Vector3::Zero();
};

/// Rigid transform. act(T, p) = R p + t maps points from the child frame
/// into the parent frame.
class Pose {
 public:
  Pose() : translation_(Vector3::Zero()) {}
  Pose(const Rotation& rotation, const Vector3& translation)
      : rotation_(rotation), translation_(translation) {}

  static Pose identity() { return {}; }
  static Pose from_matrix(const Matrix4& m);

  const Rotation& rotation() const { return rotation_; }
  const Vector3& translation() const { return translation_; }
  Matrix4 matrix() const;

 private:
  Rotation rotation_;
  Vector3 translation_;
};

Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& t);
Vector3 act(const Pose& t, const Vector3& p);

Pose exp_map(const Twist& xi);
/// Inverse of exp_map. Throws NearPiRotation when the rotation angle is
/// within kNearPiMargin of pi.
Twist log_map(const Pose& t);

/// Right-perturbation retraction T * Exp(delta). delta is laid out as
/// [rho; phi] (translation first) to match the residual ordering.
Pose retract(const Pose& t, const Vector6& delta);

/// Inverse right Jacobian of SO(3) evaluated at a rotation vector.
Matrix3 so3_right_jacobian_inverse(const Vector3& phi);

/// Serialization as "qw qx qy qz tx ty tz" using the shortest decimal form
/// that reads back to identical doubles.
std::string format_pose(const Pose& t);
/// Accepts 7 numbers (qw qx qy qz tx ty tz) or 12 numbers (row-major 3x4).
Pose parse_pose(std::span<const double> values);

}  // namespace ambipose
