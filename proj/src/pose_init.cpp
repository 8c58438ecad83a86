#include "ambipose/pose_init.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <fmt/format.h>

#include "ambipose/error.hpp"
#include "ambipose/nearest_neighbor.hpp"

namespace ambipose {

namespace {

using Matrix26 = Eigen::Matrix<double, 2, 6>;

// Direct linear transform on normalized image coordinates.
Pose dlt_pose(const CameraIntrinsics& k, std::span<const Vector2> pixels,
              std::span<const Vector3> object_points) {
  const std::size_t n = pixels.size();
  Vector3 centroid = Vector3::Zero();
  for (const auto& p : object_points) centroid += p;
  centroid /= static_cast<double>(n);
  double mean_dist = 0.0;
  for (const auto& p : object_points) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(n);
  if (!(mean_dist > 0.0)) {
    throw DegenerateConfiguration("all PnP object points coincide");
  }
  const double scale = std::sqrt(3.0) / mean_dist;

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(2 * n), 12);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector4d x((scale * (object_points[i] - centroid)).homogeneous());
    const double u = (pixels[i].x() - k.cx) / k.fx;
    const double v = (pixels[i].y() - k.cy) / k.fy;
    const auto r = static_cast<Eigen::Index>(2 * i);
    a.block<1, 4>(r, 0) = x.transpose();
    a.block<1, 4>(r, 8) = -u * x.transpose();
    a.block<1, 4>(r + 1, 4) = x.transpose();
    a.block<1, 4>(r + 1, 8) = -v * x.transpose();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  // A proper solution leaves a one-dimensional null space: the 11th
  // singular value must be well away from zero.
  if (sv.size() < 11 || sv(10) <= 1e-9 * sv(0)) {
    throw DegenerateConfiguration("PnP DLT system is rank deficient (too few or coplanar points)");
  }
  const Eigen::Matrix<double, 12, 1> sol = svd.matrixV().col(11);
  Eigen::Matrix<double, 3, 4> p;
  p << sol.segment<4>(0).transpose(), sol.segment<4>(4).transpose(), sol.segment<4>(8).transpose();

  Eigen::Matrix4d denorm = Eigen::Matrix4d::Identity();
  denorm.topLeftCorner<3, 3>() *= scale;
  denorm.topRightCorner<3, 1>() = -scale * centroid;
  p = p * denorm;

  if (p.row(2).dot(centroid.homogeneous()) < 0.0) {
    p = -p;
  }
  const Matrix3 m = p.leftCols<3>();
  Eigen::JacobiSVD<Matrix3> msvd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3 d = Matrix3::Identity();
  d(2, 2) = (msvd.matrixU() * msvd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Matrix3 r = msvd.matrixU() * d * msvd.matrixV().transpose();
  const double lambda = msvd.singularValues().mean();
  const Vector3 t = p.col(3) / lambda;
  return Pose(Rotation::from_matrix(r), t);
}

// Sum of squared reprojection errors, or +inf if any point is behind.
double reprojection_cost(const CameraIntrinsics& k, const Pose& pose, std::span<const Vector2> pixels,
                         std::span<const Vector3> object_points) {
  double cost = 0.0;
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const Vector3 pc = act(pose, object_points[i]);
    if (pc.z() <= kMinDepth) return std::numeric_limits<double>::infinity();
    cost += (project(k, pc) - pixels[i]).squaredNorm();
  }
  return cost;
}

}  // namespace

PoseProposal solve_pnp(const CameraIntrinsics& k, std::span<const Vector2> pixels,
                       std::span<const Vector3> object_points, const PnpOptions& options) {
  if (pixels.size() != object_points.size()) {
    throw InvalidArgument("PnP needs one object point per pixel");
  }
  if (pixels.size() < 6) {
    throw DegenerateConfiguration(fmt::format("PnP needs at least 6 correspondences, got {}", pixels.size()));
  }
  Pose pose = dlt_pose(k, pixels, object_points);
  double cost = reprojection_cost(k, pose, pixels, object_points);
  if (!std::isfinite(cost)) {
    throw DegenerateConfiguration("PnP DLT solution places points behind the camera");
  }

  double lambda = options.initial_damping;
  bool converged = false;
  for (int iter = 0; iter < options.max_iterations && !converged; ++iter) {
    Matrix6 h = Matrix6::Zero();
    Vector6 g = Vector6::Zero();
    const Matrix3 r = pose.rotation().matrix();
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      const Vector3 pc = act(pose, object_points[i]);
      const double iz = 1.0 / pc.z();
      Eigen::Matrix<double, 2, 3> dproj;
      dproj << k.fx * iz, 0.0, -k.fx * pc.x() * iz * iz,
               0.0, k.fy * iz, -k.fy * pc.y() * iz * iz;
      Matrix26 j;
      j.leftCols<3>() = dproj * r;
      j.rightCols<3>() = -dproj * r * skew(object_points[i]);
      const Vector2 res = project(k, pc) - pixels[i];
      h += j.transpose() * j;
      g += j.transpose() * res;
    }
    if (g.lpNorm<Eigen::Infinity>() < 1e-14) {
      converged = true;
      break;
    }
    // Inner loop: raise damping until a step lowers the cost.
    bool accepted = false;
    while (!accepted && lambda < 1e16) {
      Matrix6 damped = h;
      damped.diagonal() += lambda * h.diagonal().cwiseMax(1e-12);
      const Vector6 delta = damped.ldlt().solve(-g);
      const Pose candidate = retract(pose, delta);
      const double new_cost = reprojection_cost(k, candidate, pixels, object_points);
      if (new_cost < cost) {
        const double decrease = cost - new_cost;
        pose = candidate;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        if (decrease <= 1e-14 * cost || delta.norm() < 1e-14 || new_cost < 1e-28) {
          converged = true;
        }
        cost = new_cost;
      } else {
        lambda *= 10.0;
      }
    }
    if (!accepted) {
      // No step reduces the cost: numerically at the minimum.
      converged = true;
    }
  }

  PoseProposal out;
  out.pose = pose;
  out.reprojection_rmse = std::sqrt(cost / static_cast<double>(pixels.size()));
  out.converged = converged;
  return out;
}

PoseProposal solve_pnp(const CameraIntrinsics& k, const MergedKeypoints& merged, const PnpOptions& options) {
  PoseProposal out = solve_pnp(k, merged.points, merged.correspondences, options);
  out.sigma_norm = merged.sigma_norm;
  return out;
}

IcpTrace align_icp(const Pose& initial, std::span<const Vector3> observed_points, const ObjectModel& model,
                   const IcpOptions& options) {
  if (observed_points.size() < options.min_points) {
    throw InsufficientPoints(fmt::format("ICP needs at least {} points, got {}", options.min_points,
                                         observed_points.size()));
  }
  if (model.surface_points.empty()) {
    throw EmptyModel(fmt::format("object {} has no surface points", model.id));
  }
  const NearestNeighborIndex index(model.surface_points);
  const auto n = static_cast<Eigen::Index>(observed_points.size());
  Eigen::Matrix3Xd dst(3, n);
  for (Eigen::Index i = 0; i < n; ++i) dst.col(i) = observed_points[static_cast<std::size_t>(i)];
  Eigen::Matrix3Xd src(3, n);

  // Fills src with the model points matched to each observation and
  // returns the RMS match distance.
  const auto match = [&](const Pose& pose) {
    const Pose to_object = inverse(pose);
    double sq = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto hit = index.nearest(act(to_object, dst.col(i)));
      src.col(i) = model.surface_points[hit.index];
      sq += hit.distance * hit.distance;
    }
    return std::sqrt(sq / static_cast<double>(n));
  };

  IcpTrace trace;
  trace.pose = initial;
  double residual = match(trace.pose);
  trace.residuals.push_back(residual);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const Matrix4 t = Eigen::umeyama(src, dst, false);
    const Pose candidate = Pose::from_matrix(t);
    const double next = match(candidate);
    ++trace.iterations;
    trace.pose = candidate;
    trace.residuals.push_back(next);
    if (std::abs(residual - next) < options.tolerance) {
      break;
    }
    residual = next;
  }
  return trace;
}

PoseProposal refine_icp(const PoseProposal& proposal, std::span<const Vector3> observed_points,
                        const ObjectModel& model, double sigma_icp, const IcpOptions& options) {
  if (!(proposal.sigma_norm < sigma_icp)) {
    return proposal;
  }
  PoseProposal out = proposal;
  out.pose = align_icp(proposal.pose, observed_points, model, options).pose;
  out.refined_by_icp = true;
  return out;
}

}  // namespace ambipose
