#pragma once

#include <span>
#include <vector>

#include "ambipose/ambiguity.hpp"
#include "ambipose/camera.hpp"
#include "ambipose/liegroups.hpp"
#include "ambipose/object_model.hpp"

namespace ambipose {

inline constexpr double kDefaultSigmaIcp = 0.4;

/// Single-view pose of an object in the camera frame (camera-to-object).
struct PoseProposal {
  Pose pose;
  double sigma_norm = 0.0;
  double reprojection_rmse = 0.0;  // pixels
  bool refined_by_icp = false;
  bool converged = true;  // false when the LM refinement ran out of iterations
};

struct PnpOptions {
  int max_iterations = 100;
  double initial_damping = 1e-3;
};

/// DLT initialization followed by Levenberg-Marquardt on the manifold.
/// Throws DegenerateConfiguration when the DLT system is rank deficient
/// (fewer than 6 points, or coplanar points).
PoseProposal solve_pnp(const CameraIntrinsics& k, std::span<const Vector2> pixels,
                       std::span<const Vector3> object_points, const PnpOptions& options = {});
PoseProposal solve_pnp(const CameraIntrinsics& k, const MergedKeypoints& merged,
                       const PnpOptions& options = {});

struct IcpOptions {
  int max_iterations = 50;
  double tolerance = 1e-6;  // meters, change of the residual between iterations
  std::size_t min_points = 50;
};

struct IcpTrace {
  Pose pose;
  /// RMS nearest-neighbor distance before the first alignment and after
  /// every alignment.
  std::vector<double> residuals;
  int iterations = 0;
};

/// Point-to-point ICP of the model surface onto camera-frame points,
/// starting at `initial` (camera-to-object). Throws InsufficientPoints.
IcpTrace align_icp(const Pose& initial, std::span<const Vector3> observed_points,
                   const ObjectModel& model, const IcpOptions& options = {});

/// Gated refinement: runs ICP only when proposal.sigma_norm < sigma_icp and
/// otherwise returns the proposal untouched.
PoseProposal refine_icp(const PoseProposal& proposal, std::span<const Vector3> observed_points,
                        const ObjectModel& model, double sigma_icp = kDefaultSigmaIcp,
                        const IcpOptions& options = {});

}  // namespace ambipose
