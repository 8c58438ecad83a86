#include "ambipose/ambiguity.hpp"

#include <cmath>

#include <fmt/format.h>

#include "ambipose/error.hpp"

namespace ambipose {

NllScore nll_loss(std::span<const Vector2> errors, double xi) {
  NllScore score;
  score.per_keypoint_errors.reserve(errors.size());
  const double inv_var = std::exp(-xi);
  for (const auto& e : errors) {
    const double sq = e.squaredNorm();
    // tr(log Sigma) = 2 xi for Sigma = exp(xi) I2.
    score.value += 2.0 * xi + inv_var * sq;
    score.gradient += 2.0 - inv_var * sq;
    score.per_keypoint_errors.push_back(std::sqrt(sq));
  }
  return score;
}

double optimal_xi(std::span<const Vector2> errors) {
  if (errors.empty()) {
    throw EmptyList("optimal_xi needs at least one keypoint error");
  }
  double mean_sq = 0.0;
  for (const auto& e : errors) {
    mean_sq += e.squaredNorm();
  }
  mean_sq /= static_cast<double>(errors.size());
  if (mean_sq == 0.0) {
    throw AllZeroErrors("all keypoint errors are zero; the variance minimizer diverges");
  }
  return std::log(0.5 * mean_sq);
}

std::optional<MergedKeypoints> select_and_merge(const AxisPredictions& predictions,
                                                const PrimitiveLayout& layout, double sigma_o) {
  if (!(sigma_o > 0.0)) {
    throw InvalidArgument(fmt::format("sigma_o must be positive, got {}", sigma_o));
  }
  std::array<Vector2, kWhiteKeypoints> white;
  white.fill(Vector2::Zero());
  MergedKeypoints merged;
  std::vector<Vector2> colored;
  std::vector<Vector3> colored_3d;
  std::vector<double> sigmas;
  int n = 0;
  for (Axis axis : kAxes) {
    const auto& pred = predictions[static_cast<std::size_t>(axis)];
    if (pred.sigma > sigma_o) {
      continue;
    }
    ++n;
    const double keep = static_cast<double>(n - 1) / n;
    const double add = 1.0 / n;
    for (int j = 0; j < kWhiteKeypoints; ++j) {
      white[static_cast<std::size_t>(j)] = keep * white[static_cast<std::size_t>(j)] + add * pred.keypoints[static_cast<std::size_t>(j)];
    }
    for (int j = kWhiteKeypoints; j < kAxisKeypoints; ++j) {
      colored.push_back(pred.keypoints[static_cast<std::size_t>(j)]);
    }
    const auto& face = layout.colored[static_cast<std::size_t>(axis)];
    colored_3d.insert(colored_3d.end(), face.begin(), face.end());
    merged.valid_axes.push_back(axis);
    sigmas.push_back(pred.sigma);
  }
  if (n == 0) {
    return std::nullopt;
  }
  merged.points.assign(white.begin(), white.end());
  merged.points.insert(merged.points.end(), colored.begin(), colored.end());
  merged.correspondences.assign(layout.white.begin(), layout.white.end());
  merged.correspondences.insert(merged.correspondences.end(), colored_3d.begin(), colored_3d.end());
  merged.sigma_norm = combined_sigma(sigmas);
  return merged;
}

double combined_sigma(std::span<const double> valid_sigmas) {
  if (valid_sigmas.empty()) {
    throw EmptyList("combined_sigma needs at least one sigma");
  }
  double sq = 0.0;
  for (double s : valid_sigmas) {
    sq += s * s;
  }
  return std::sqrt(sq);
}

}  // namespace ambipose
