#include "ambipose/liegroups.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/SVD>
#include <fmt/format.h>

#include "ambipose/error.hpp"

namespace ambipose {

Matrix3 skew(const Vector3& v) {
  Matrix3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

// Quaternions already unit to within rounding are kept bit-for-bit so that
// text round trips reproduce identical values.
Rotation::Rotation(const Eigen::Quaterniond& q) : q_(q) {
  if (std::abs(q_.squaredNorm() - 1.0) > 1e-15) {
    q_.normalize();
  }
}

Rotation::Rotation(double w, double x, double y, double z)
    : Rotation(Eigen::Quaterniond(w, x, y, z)) {}

Rotation Rotation::from_matrix(const Matrix3& m) {
  Eigen::JacobiSVD<Matrix3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3 d = Matrix3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Matrix3 r = svd.matrixU() * d * svd.matrixV().transpose();
  return Rotation(Eigen::Quaterniond(r));
}

Rotation Rotation::about_axis(const Vector3& axis, double angle) {
  return exp(axis.normalized() * angle);
}

Rotation Rotation::exp(const Vector3& phi) {
  const double theta = phi.norm();
  if (theta < kSmallAngle) {
    const Vector3 v = 0.5 * phi;
    return Rotation(1.0, v.x(), v.y(), v.z());
  }
  const double half = 0.5 * theta;
  const Vector3 v = (std::sin(half) / theta) * phi;
  return Rotation(std::cos(half), v.x(), v.y(), v.z());
}

double Rotation::angle() const {
  const double w = std::abs(q_.w());
  return 2.0 * std::atan2(q_.vec().norm(), w);
}

Vector3 Rotation::log() const {
  // Canonical hemisphere w >= 0 keeps the angle in [0, pi].
  const double sign = q_.w() < 0.0 ? -1.0 : 1.0;
  const double w = sign * q_.w();
  const Vector3 v = sign * q_.vec();
  const double vn = v.norm();
  const double theta = 2.0 * std::atan2(vn, w);
  if (theta >= std::numbers::pi - kNearPiMargin) {
    throw NearPiRotation(theta);
  }
  if (theta < kSmallAngle) {
    // atan2(vn, w) ~ vn / w for tiny vn.
    return (2.0 / w) * v;
  }
  return (theta / vn) * v;
}

Pose Pose::from_matrix(const Matrix4& m) {
  return Pose(Rotation::from_matrix(m.topLeftCorner<3, 3>()), m.topRightCorner<3, 1>());
}

Matrix4 Pose::matrix() const {
  Matrix4 m = Matrix4::Identity();
  m.topLeftCorner<3, 3>() = rotation_.matrix();
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

Pose compose(const Pose& a, const Pose& b) {
  return Pose(a.rotation() * b.rotation(), a.rotation() * b.translation() + a.translation());
}

Pose inverse(const Pose& t) {
  const Rotation r_inv = t.rotation().inverse();
  return Pose(r_inv, -(r_inv * t.translation()));
}

Vector3 act(const Pose& t, const Vector3& p) {
  return t.rotation() * p + t.translation();
}

namespace {

// V(phi) = I + a [phi]x + b [phi]x^2, the left Jacobian of SO(3).
Matrix3 so3_left_jacobian(const Vector3& phi) {
  const double theta = phi.norm();
  const Matrix3 k = skew(phi);
  if (theta < kSmallAngle) {
    return Matrix3::Identity() + 0.5 * k + (1.0 / 6.0) * k * k;
  }
  const double s = std::sin(0.5 * theta);
  const double a = 2.0 * s * s / (theta * theta);
  const double b = (theta - std::sin(theta)) / (theta * theta * theta);
  return Matrix3::Identity() + a * k + b * k * k;
}

Matrix3 so3_left_jacobian_inverse(const Vector3& phi) {
  const double theta = phi.norm();
  const Matrix3 k = skew(phi);
  if (theta < kSmallAngle) {
    return Matrix3::Identity() - 0.5 * k + (1.0 / 12.0) * k * k;
  }
  const double half = 0.5 * theta;
  const double c = (1.0 - half * std::cos(half) / std::sin(half)) / (theta * theta);
  return Matrix3::Identity() - 0.5 * k + c * k * k;
}

}  // namespace

Matrix3 so3_right_jacobian_inverse(const Vector3& phi) {
  // J_r^{-1}(phi) = J_l^{-1}(-phi)
  return so3_left_jacobian_inverse(-phi);
}

Pose exp_map(const Twist& xi) {
  return Pose(Rotation::exp(xi.phi), so3_left_jacobian(xi.phi) * xi.rho);
}

Twist log_map(const Pose& t) {
  Twist xi;
  xi.phi = t.rotation().log();
  xi.rho = so3_left_jacobian_inverse(xi.phi) * t.translation();
  return xi;
}

Pose retract(const Pose& t, const Vector6& delta) {
  return compose(t, exp_map(Twist{delta.tail<3>(), delta.head<3>()}));
}

std::string format_pose(const Pose& t) {
  const auto& q = t.rotation().quaternion();
  const Vector3& p = t.translation();
  return fmt::format("{} {} {} {} {} {} {}", q.w(), q.x(), q.y(), q.z(), p.x(), p.y(), p.z());
}

Pose parse_pose(std::span<const double> values) {
  if (values.size() == 7) {
    const Eigen::Quaterniond q(values[0], values[1], values[2], values[3]);
    if (q.norm() < 1e-12) {
      throw InvalidArgument("pose quaternion has zero norm");
    }
    return Pose(Rotation(q), Vector3(values[4], values[5], values[6]));
  }
  if (values.size() == 12) {
    Matrix4 m = Matrix4::Identity();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) {
        m(r, c) = values[static_cast<std::size_t>(4 * r + c)];
      }
    }
    return Pose::from_matrix(m);
  }
  throw InvalidArgument(fmt::format("a pose needs 7 or 12 numbers, got {}", values.size()));
}

}  // namespace ambipose
