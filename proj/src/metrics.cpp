#include "ambipose/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "ambipose/error.hpp"
#include "ambipose/nearest_neighbor.hpp"

namespace ambipose {

namespace {

void require_points(const ObjectModel& model) {
  if (model.surface_points.empty()) {
    throw EmptyModel(fmt::format("object {} has no surface points", model.id));
  }
}

std::vector<Vector3> transformed(const Pose& pose, const std::vector<Vector3>& points) {
  std::vector<Vector3> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(act(pose, p));
  return out;
}

}  // namespace

double add_error(const Pose& est, const Pose& gt, const ObjectModel& model) {
  require_points(model);
  double sum = 0.0;
  for (const auto& p : model.surface_points) {
    sum += (act(est, p) - act(gt, p)).norm();
  }
  return sum / static_cast<double>(model.surface_points.size());
}

double adds_error(const Pose& est, const Pose& gt, const ObjectModel& model) {
  require_points(model);
  const auto gt_points = transformed(gt, model.surface_points);
  const NearestNeighborIndex index(gt_points);
  double sum = 0.0;
  for (const auto& p : model.surface_points) {
    sum += index.nearest(act(est, p)).distance;
  }
  return sum / static_cast<double>(model.surface_points.size());
}

double add_or_adds_error(const Pose& est, const Pose& gt, const ObjectModel& model) {
  return model.symmetric() ? adds_error(est, gt, model) : add_error(est, gt, model);
}

double auc(std::span<const double> errors, double max_threshold) {
  if (!(max_threshold > 0.0)) {
    throw InvalidArgument("auc threshold must be positive");
  }
  if (errors.empty()) return 0.0;
  double area = 0.0;
  for (double e : errors) {
    if (e < max_threshold) area += max_threshold - std::max(e, 0.0);
  }
  return area / (max_threshold * static_cast<double>(errors.size()));
}

double mssd(const Pose& est, const Pose& gt, const ObjectModel& model, int continuous_discretization) {
  require_points(model);
  const auto est_points = transformed(est, model.surface_points);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : symmetry_transforms(model.symmetry, continuous_discretization)) {
    const Pose gt_s = compose(gt, Pose(s, Vector3::Zero()));
    double worst = 0.0;
    for (std::size_t i = 0; i < est_points.size() && worst < best; ++i) {
      worst = std::max(worst, (est_points[i] - act(gt_s, model.surface_points[i])).norm());
    }
    best = std::min(best, worst);
  }
  return best;
}

double mspd(const Pose& est, const Pose& gt, const ObjectModel& model, const CameraIntrinsics& k,
            int continuous_discretization) {
  require_points(model);
  std::vector<Vector2> est_px;
  est_px.reserve(model.surface_points.size());
  for (const auto& p : model.surface_points) est_px.push_back(project(k, est, p));
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : symmetry_transforms(model.symmetry, continuous_discretization)) {
    const Pose gt_s = compose(gt, Pose(s, Vector3::Zero()));
    double worst = 0.0;
    for (std::size_t i = 0; i < est_px.size(); ++i) {
      worst = std::max(worst, (est_px[i] - project(k, gt_s, model.surface_points[i])).norm());
    }
    best = std::min(best, worst);
  }
  return best;
}

PoseError pose_error(const Pose& est, const Pose& gt, const ObjectModel& model, const CameraIntrinsics& k,
                     int continuous_discretization) {
  PoseError e;
  e.add = add_error(est, gt, model);
  e.add_s = adds_error(est, gt, model);
  e.mssd = mssd(est, gt, model, continuous_discretization);
  e.mspd = mspd(est, gt, model, k, continuous_discretization);
  return e;
}

RecallThresholds RecallThresholds::bop(int image_width) {
  RecallThresholds t;
  const double px_scale = static_cast<double>(image_width) / 640.0;
  for (int i = 1; i <= 10; ++i) {
    t.mssd_fractions.push_back(i / 20.0);
    t.mspd_pixels.push_back(5.0 * i * px_scale);
    t.vsd.push_back(i / 20.0);
  }
  return t;
}

AverageRecall average_recall(std::span<const RecallSample> samples, const RecallThresholds& thresholds) {
  if (samples.empty()) {
    throw EmptyList("average_recall needs at least one sample");
  }
  const auto n = static_cast<double>(samples.size());
  const auto recall = [&](const std::vector<double>& grid, auto&& hit) {
    if (grid.empty()) return 0.0;
    double total = 0.0;
    for (double th : grid) {
      const auto count = std::count_if(samples.begin(), samples.end(), [&](const auto& s) { return hit(s, th); });
      total += static_cast<double>(count) / n;
    }
    return total / static_cast<double>(grid.size());
  };
  AverageRecall ar;
  ar.mssd = recall(thresholds.mssd_fractions, [](const RecallSample& s, double th) { return s.mssd < th * s.diameter; });
  ar.mspd = recall(thresholds.mspd_pixels, [](const RecallSample& s, double th) { return s.mspd < th; });
  const bool all_vsd = std::all_of(samples.begin(), samples.end(), [](const auto& s) { return s.vsd.has_value(); });
  if (all_vsd) {
    ar.vsd = recall(thresholds.vsd, [](const RecallSample& s, double th) { return *s.vsd < th; });
    ar.combined = (*ar.vsd + ar.mssd + ar.mspd) / 3.0;
  }
  return ar;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw InvalidArgument("spearman needs two equally sized samples of at least 2");
  }
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace ambipose
