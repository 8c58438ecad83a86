#include <gtest/gtest.h>

#include <limits>
#include <numbers>

#include "ambipose/error.hpp"
#include "ambipose/metrics.hpp"
#include "test_util.hpp"

using namespace ambipose;
using namespace ambipose::testing;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ObjectModel make_model(ShapeSpec shape, SymmetrySpec sym, int points = 600) {
  ObjectDefinition d;
  d.id = 5;
  d.shape = std::move(shape);
  d.symmetry = sym;
  d.surface_points = points;
  return build_object_model(d);
}

ObjectModel box() { return make_model({ShapeKind::Box, {0.1, 0.07, 0.05}}, {}); }
ObjectModel prism() {
  return make_model({ShapeKind::Box, {0.06, 0.06, 0.1}}, {SymmetryKind::Discrete, 4, Vector3::UnitZ()});
}
ObjectModel cylinder() {
  return make_model({ShapeKind::Cylinder, {0.035, 0.12}}, {SymmetryKind::Continuous, 1, Vector3::UnitZ()});
}

Pose view(Rng& rng) { return Pose(random_rotation(rng), Vector3(uniform(rng, -0.1, 0.1), uniform(rng, -0.1, 0.1), 0.7)); }

double brute_adds(const Pose& est, const Pose& gt, const std::vector<Vector3>& pts) {
  double sum = 0.0;
  for (const auto& p : pts) {
    double best = kInf;
    for (const auto& q : pts) best = std::min(best, (act(est, p) - act(gt, q)).norm());
    sum += best;
  }
  return sum / static_cast<double>(pts.size());
}

double brute_mssd(const Pose& est, const Pose& gt, const ObjectModel& m) {
  double best = kInf;
  for (const auto& s : symmetry_transforms(m.symmetry, 360)) {
    const Pose gs = compose(gt, Pose(s, Vector3::Zero()));
    double worst = 0.0;
    for (const auto& p : m.surface_points) worst = std::max(worst, (act(est, p) - act(gs, p)).norm());
    best = std::min(best, worst);
  }
  return best;
}

double brute_mspd(const Pose& est, const Pose& gt, const ObjectModel& m, const CameraIntrinsics& k) {
  double best = kInf;
  for (const auto& s : symmetry_transforms(m.symmetry, 360)) {
    const Pose gs = compose(gt, Pose(s, Vector3::Zero()));
    double worst = 0.0;
    for (const auto& p : m.surface_points) {
      worst = std::max(worst, (project(k, est, p) - project(k, gs, p)).norm());
    }
    best = std::min(best, worst);
  }
  return best;
}

}  // namespace

TEST(AddError, ZeroAndPureTranslation) {
  const ObjectModel m = box();
  const Pose gt(Rotation::about_axis(Vector3::UnitX(), 0.3), Vector3(0, 0, 0.5));
  EXPECT_EQ(add_error(gt, gt, m), 0.0);
  const Pose shifted(gt.rotation(), gt.translation() + Vector3(0.01, 0, 0));
  EXPECT_NEAR(add_error(shifted, gt, m), 0.01, 1e-15);
}

TEST(AddError, MatchesPerPointLoop) {
  Rng rng(1);
  const ObjectModel m = box();
  for (int i = 0; i < 20; ++i) {
    const Pose a = view(rng), b = view(rng);
    double sum = 0.0;
    for (const auto& p : m.surface_points) sum += (act(a, p) - act(b, p)).norm();
    EXPECT_NEAR(add_error(a, b, m), sum / static_cast<double>(m.surface_points.size()), 1e-12);
  }
}

TEST(AddsError, ZeroAndCylinderSpin) {
  const ObjectModel m = cylinder();
  const Pose gt(Rotation::about_axis(Vector3(1, 0, 1).normalized(), 0.5), Vector3(0, 0, 0.6));
  EXPECT_EQ(adds_error(gt, gt, m), 0.0);
  const Pose spun = compose(gt, Pose(Rotation::about_axis(Vector3::UnitZ(), 1.0), Vector3::Zero()));
  const double spacing = std::sqrt(2 * std::numbers::pi * 0.035 * 0.12 / 600.0);
  EXPECT_LT(adds_error(spun, gt, m), spacing);
  EXPECT_GT(add_error(spun, gt, m), 5 * adds_error(spun, gt, m));
  EXPECT_LE(adds_error(spun, gt, m), add_error(spun, gt, m) + 1e-12);
}

TEST(AddsError, MatchesBruteForceAtTwoHundredPoints) {
  Rng rng(2);
  ObjectModel m = box();
  m.surface_points.resize(200);
  for (int i = 0; i < 100; ++i) {
    const Pose a = view(rng), b = view(rng);
    EXPECT_EQ(adds_error(a, b, m), brute_adds(a, b, m.surface_points));
  }
}

TEST(Metrics, EmptyModel) {
  ObjectModel m = box();
  m.surface_points.clear();
  EXPECT_THROW(add_error(Pose(), Pose(), m), EmptyModel);
  EXPECT_THROW(adds_error(Pose(), Pose(), m), EmptyModel);
  EXPECT_THROW(mssd(Pose(), Pose(), m), EmptyModel);
}

TEST(Auc, Extremes) {
  EXPECT_NEAR(auc(std::vector<double>(10, 0.0), 0.1), 1.0, 1e-15);
  EXPECT_EQ(auc(std::vector<double>(10, 0.2), 0.1), 0.0);
  EXPECT_EQ(auc(std::vector<double>{kInf, 0.0}, 0.1), 0.5);
}

TEST(Auc, UniformErrorsGiveOneHalf) {
  Rng rng(3);
  std::vector<double> e;
  for (int i = 0; i < 1000; ++i) e.push_back(uniform(rng, 0.0, 0.1));
  EXPECT_NEAR(auc(e, 0.1), 0.5, 0.02);
}

TEST(Auc, MatchesNumericalIntegration) {
  const std::vector<double> e{0.01, 0.03, 0.03, 0.08, 0.2};
  const int n = 200000;
  double area = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = (i + 0.5) * 0.1 / n;
    int hit = 0;
    for (double x : e) hit += x <= t ? 1 : 0;
    area += static_cast<double>(hit) / static_cast<double>(e.size());
  }
  EXPECT_NEAR(auc(e, 0.1), area / n, 1e-5);
}

TEST(Mssd, SymmetryQuotient) {
  const ObjectModel m = prism();
  const Pose gt(Rotation::about_axis(Vector3(0, 1, 1).normalized(), 0.4), Vector3(0, 0, 0.6));
  for (const auto& s : symmetry_transforms(m.symmetry)) {
    EXPECT_LT(mssd(compose(gt, Pose(s, Vector3::Zero())), gt, m), 1e-12);
  }
  const ObjectModel a = box();
  const Pose shifted(gt.rotation(), gt.translation() + Vector3(0, 0.01, 0));
  EXPECT_NEAR(mssd(shifted, gt, a), 0.01, 1e-15);
}

TEST(Mssd, NinetyThreeDegreesEqualsThree) {
  const ObjectModel m = prism();
  const Pose gt(Rotation::about_axis(Vector3(1, 0, 0), 0.2), Vector3(0, 0, 0.6));
  const auto spin = [&](double deg) {
    return compose(gt, Pose(Rotation::about_axis(Vector3::UnitZ(), deg * std::numbers::pi / 180), Vector3::Zero()));
  };
  EXPECT_NEAR(mssd(spin(93), gt, m), mssd(spin(3), gt, m), 1e-12);
  EXPECT_EQ(mssd(spin(93), gt, m), brute_mssd(spin(93), gt, m));
}

TEST(Mssd, MatchesExhaustiveSearch) {
  Rng rng(4);
  ObjectModel m = prism();
  m.surface_points.resize(200);
  ObjectModel c = cylinder();
  c.surface_points.resize(200);
  for (int i = 0; i < 20; ++i) {
    const Pose a = view(rng), b = view(rng);
    EXPECT_EQ(mssd(a, b, m), brute_mssd(a, b, m));
    EXPECT_EQ(mssd(a, b, c), brute_mssd(a, b, c));
  }
}

TEST(Mssd, AsymmetricIsSingleTransformMax) {
  Rng rng(5);
  const ObjectModel m = box();
  for (int i = 0; i < 20; ++i) {
    const Pose a = view(rng), b = view(rng);
    double worst = 0.0;
    for (const auto& p : m.surface_points) worst = std::max(worst, (act(a, p) - act(b, p)).norm());
    EXPECT_EQ(mssd(a, b, m), worst);
  }
}

TEST(Mssd, LeftInvariance) {
  Rng rng(6);
  const ObjectModel m = prism();
  for (int i = 0; i < 20; ++i) {
    const Pose a = view(rng), b = view(rng), g = random_pose(rng, 2.0);
    EXPECT_NEAR(mssd(compose(g, a), compose(g, b), m), mssd(a, b, m), 1e-12);
    EXPECT_NEAR(add_error(compose(g, a), compose(g, b), m), add_error(a, b, m), 1e-12);
    EXPECT_NEAR(adds_error(compose(g, a), compose(g, b), m), adds_error(a, b, m), 1e-12);
  }
}

TEST(Mspd, ZeroAndSymmetricSpin) {
  const ObjectModel m = cylinder();
  CameraIntrinsics k;
  const Pose gt(Rotation::about_axis(Vector3(1, 0, 0), 0.4), Vector3(0, 0, 0.6));
  EXPECT_EQ(mspd(gt, gt, m, k), 0.0);
  const Pose spun = compose(gt, Pose(Rotation::about_axis(Vector3::UnitZ(), 0.7), Vector3::Zero()));
  // 0.7 rad is 40.1 steps of one degree; the residual step is below half a degree.
  const double tol = 0.035 * std::sin(0.5 * std::numbers::pi / 180) * k.fx / 0.5;
  EXPECT_LT(mspd(spun, gt, m, k), tol);
}

TEST(Mspd, MatchesBruteForce) {
  Rng rng(7);
  ObjectModel m = prism();
  m.surface_points.resize(200);
  CameraIntrinsics k;
  for (int i = 0; i < 20; ++i) {
    const Pose a = view(rng), b = view(rng);
    EXPECT_EQ(mspd(a, b, m, k), brute_mspd(a, b, m, k));
  }
  const Pose behind(Rotation(), Vector3(0, 0, -0.5));
  EXPECT_THROW(mspd(behind, view(rng), m, k), BehindCamera);
}

TEST(AverageRecall, Extremes) {
  const auto th = RecallThresholds::bop(640);
  std::vector<RecallSample> zero(3, RecallSample{0.0, 0.0, std::nullopt, 0.1});
  const AverageRecall a = average_recall(zero, th);
  EXPECT_EQ(a.mssd, 1.0);
  EXPECT_EQ(a.mspd, 1.0);
  EXPECT_EQ(a.mssd_mspd(), 1.0);
  EXPECT_FALSE(a.combined);
  std::vector<RecallSample> inf(3, RecallSample{kInf, kInf, std::nullopt, 0.1});
  EXPECT_EQ(average_recall(inf, th).mssd_mspd(), 0.0);
  EXPECT_THROW(average_recall({}, th), EmptyList);
}

TEST(AverageRecall, HandBuiltFourSamples) {
  const auto th = RecallThresholds::bop(640);
  ASSERT_EQ(th.mssd_fractions.size(), 10u);
  ASSERT_EQ(th.mspd_pixels.size(), 10u);
  // diameter 1: mssd thresholds 0.05..0.50. A sample at 0.12 is below 8 of
  // them, 0.30 below 4 (0.35..0.50), 0.5 below none (strict), 0.01 below all.
  // mspd thresholds 5..50 px: 7 px below 9, 26 px below 5, 50 px none, 0 all.
  std::vector<RecallSample> s{{0.12, 7.0, 0.2, 1.0}, {0.30, 26.0, 0.2, 1.0}, {0.5, 50.0, 0.6, 1.0}, {0.01, 0.0, 0.0, 1.0}};
  const AverageRecall ar = average_recall(s, th);
  EXPECT_NEAR(ar.mssd, (8 + 4 + 0 + 10) / 40.0, 1e-15);
  EXPECT_NEAR(ar.mspd, (9 + 5 + 0 + 10) / 40.0, 1e-15);
  ASSERT_TRUE(ar.vsd);
  // vsd thresholds 0.05..0.50: 0.2 below 6, 0.6 below none, 0 below all.
  EXPECT_NEAR(*ar.vsd, (6 + 6 + 0 + 10) / 40.0, 1e-15);
  ASSERT_TRUE(ar.combined);
  EXPECT_NEAR(*ar.combined, (ar.mssd + ar.mspd + *ar.vsd) / 3.0, 1e-15);
}

TEST(AverageRecall, MspdGridScalesWithWidth) {
  const auto th = RecallThresholds::bop(1280);
  EXPECT_EQ(th.mspd_pixels.front(), 10.0);
  EXPECT_EQ(th.mspd_pixels.back(), 100.0);
}

TEST(Spearman, KnownValues) {
  const std::vector<double> a{1, 2, 3, 4, 5};
  const std::vector<double> b{2, 4, 6, 8, 100};
  const std::vector<double> c{5, 4, 3, 2, 1};
  EXPECT_NEAR(spearman(a, b), 1.0, 1e-15);
  EXPECT_NEAR(spearman(a, c), -1.0, 1e-15);
  // Ties use average ranks: x ranks (1, 2.5, 2.5, 4), y ranks (1, 2, 3, 4).
  const std::vector<double> x{1, 2, 2, 3};
  const std::vector<double> y{1, 2, 3, 4};
  EXPECT_NEAR(spearman(x, y), 4.5 / std::sqrt(4.5 * 5.0), 1e-12);
}
