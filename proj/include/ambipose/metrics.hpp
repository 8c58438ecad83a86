#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ambipose/camera.hpp"
#include "ambipose/liegroups.hpp"
#include "ambipose/object_model.hpp"

namespace ambipose {

struct PoseError {
  double add = 0.0;    // m
  double add_s = 0.0;  // m
  double mssd = 0.0;   // m
  double mspd = 0.0;   // px
};

/// Mean distance between matched model points under est and gt.
double add_error(const Pose& est, const Pose& gt, const ObjectModel& model);
/// Mean distance from each est-posed point to the closest gt-posed point.
double adds_error(const Pose& est, const Pose& gt, const ObjectModel& model);
/// ADD for asymmetric models, ADD-S for symmetric ones.
double add_or_adds_error(const Pose& est, const Pose& gt, const ObjectModel& model);

/// Normalized area under the accuracy-vs-threshold curve on [0, max_threshold].
/// The empirical accuracy curve is a step function, so its integral is exact:
/// mean_i max(0, max_threshold - e_i) / max_threshold.
double auc(std::span<const double> errors, double max_threshold);

/// Maximum surface distance minimized over the model's symmetry transforms.
double mssd(const Pose& est, const Pose& gt, const ObjectModel& model, int continuous_discretization = 360);
/// Maximum image-plane distance minimized over the symmetry transforms.
/// Poses are camera-to-object. Throws BehindCamera.
double mspd(const Pose& est, const Pose& gt, const ObjectModel& model, const CameraIntrinsics& k,
            int continuous_discretization = 360);

PoseError pose_error(const Pose& est, const Pose& gt, const ObjectModel& model, const CameraIntrinsics& k,
                     int continuous_discretization = 360);

/// Per-sample inputs for average recall. Infinite errors count as misses.
struct RecallSample {
  double mssd = 0.0;
  double mspd = 0.0;
  std::optional<double> vsd;  // already normalized to [0, 1] by the caller
  double diameter = 1.0;
};

struct RecallThresholds {
  std::vector<double> mssd_fractions;  // times object diameter
  std::vector<double> mspd_pixels;
  std::vector<double> vsd;

  /// MSSD {0.05..0.50} x diameter, MSPD {5..50} x (image_width / 640) px,
  /// VSD {0.05..0.50}.
  static RecallThresholds bop(int image_width);
};

struct AverageRecall {
  double mssd = 0.0;
  double mspd = 0.0;
  std::optional<double> vsd;
  /// (AR_vsd + AR_mssd + AR_mspd) / 3, only when every sample carries vsd.
  std::optional<double> combined;
  /// Mean of AR_mssd and AR_mspd.
  double mssd_mspd() const { return 0.5 * (mssd + mspd); }
};

/// Recall is the fraction of samples with error strictly below a threshold,
/// averaged over the threshold grid. Throws EmptyList for no samples.
AverageRecall average_recall(std::span<const RecallSample> samples, const RecallThresholds& thresholds);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace ambipose
