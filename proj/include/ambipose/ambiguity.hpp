#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "ambipose/liegroups.hpp"
#include "ambipose/object_model.hpp"

namespace ambipose {

/// Threshold above which an axis primitive is considered ambiguous.
inline constexpr double kDefaultSigmaO = 0.4;

/// Keypoints and uncertainty for one rotation-axis primitive.
/// keypoints[0..8] are the white region (keypoints[0] is the object center),
/// keypoints[9..13] the colored region, in full-image pixel coordinates.
struct AxisPrediction {
  Axis axis = Axis::X;
  std::array<Vector2, kAxisKeypoints> keypoints{};
  double sigma = 0.0;
};

/// Predictions for the x, y and z primitives, indexed by Axis.
using AxisPredictions = std::array<AxisPrediction, 3>;

struct MergedKeypoints {
  std::vector<Vector2> points;
  std::vector<Vector3> correspondences;  // object frame, parallel to points
  std::vector<Axis> valid_axes;
  double sigma_norm = 0.0;
};

struct NllScore {
  double value = 0.0;
  double gradient = 0.0;  // d value / d xi
  std::vector<double> per_keypoint_errors;
};

/// Negative log-likelihood of 2-D keypoint errors under N(0, exp(xi) I2):
/// sum_i 2 xi + exp(-xi) |e_i|^2.
NllScore nll_loss(std::span<const Vector2> errors, double xi);

/// Closed-form minimizer of nll_loss: log(mean |e_i|^2 / 2).
/// Throws EmptyList for no errors and AllZeroErrors when every error is zero.
double optimal_xi(std::span<const Vector2> errors);

/// Uncertainty-gated merge of the three axis predictions. Axes with
/// sigma > sigma_o are dropped, the white keypoints are averaged over the
/// remaining axes and each remaining axis contributes its colored keypoints.
/// Output order: the 9 averaged white points, then 5 colored points per valid
/// axis in x, y, z order. Returns nullopt when no axis survives.
std::optional<MergedKeypoints> select_and_merge(const AxisPredictions& predictions,
                                                const PrimitiveLayout& layout,
                                                double sigma_o = kDefaultSigmaO);

/// Euclidean norm of the valid axis sigmas. Throws EmptyList.
double combined_sigma(std::span<const double> valid_sigmas);

}  // namespace ambipose
