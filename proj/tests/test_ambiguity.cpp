#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ambipose/ambiguity.hpp"
#include "ambipose/error.hpp"
#include "test_util.hpp"

using namespace ambipose;
using namespace ambipose::testing;

namespace {

AxisPredictions random_predictions(Rng& rng, const std::array<double, 3>& sigmas) {
  AxisPredictions p;
  for (int a = 0; a < 3; ++a) {
    p[a].axis = kAxes[a];
    p[a].sigma = sigmas[a];
    for (auto& k : p[a].keypoints) k = Vector2(uniform(rng, 0, 640), uniform(rng, 0, 480));
  }
  return p;
}

double grid_minimizer(std::span<const Vector2> errors) {
  double best_xi = -5.0, best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 100000; ++i) {
    const double xi = -5.0 + 1e-4 * i;
    const double v = nll_loss(errors, xi).value;
    if (v < best) {
      best = v;
      best_xi = xi;
    }
  }
  return best_xi;
}

}  // namespace

TEST(NllLoss, ZeroErrorUnitVariance) {
  const std::vector<Vector2> e{Vector2(0, 0)};
  EXPECT_EQ(nll_loss(e, 0.0).value, 0.0);
}

TEST(NllLoss, UnitErrorUnitVariance) {
  const std::vector<Vector2> e{Vector2(1, 0)};
  EXPECT_EQ(nll_loss(e, 0.0).value, 1.0);
}

TEST(NllLoss, MatchesMatrixForm) {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Vector2> e;
    for (int i = 0; i < 14; ++i) e.emplace_back(uniform(rng, -3, 3), uniform(rng, -3, 3));
    const double xi = uniform(rng, -3, 3);
    const Eigen::Matrix2d sigma = Eigen::Matrix2d::Identity() * std::exp(xi);
    double expected = 0.0;
    for (const auto& ei : e) {
      expected += sigma.diagonal().array().log().sum() + ei.dot(sigma.inverse() * ei);
    }
    const NllScore s = nll_loss(e, xi);
    EXPECT_NEAR(s.value, expected, 1e-10 * std::max(1.0, std::abs(expected)));
    ASSERT_EQ(s.per_keypoint_errors.size(), e.size());
    for (std::size_t i = 0; i < e.size(); ++i) EXPECT_DOUBLE_EQ(s.per_keypoint_errors[i], e[i].norm());
  }
}

TEST(NllLoss, GradientMatchesCentralDifference) {
  const std::vector<Vector2> e{Vector2(2, 1)};
  const double h = 1e-6;
  const double fd = (nll_loss(e, 0.5 + h).value - nll_loss(e, 0.5 - h).value) / (2 * h);
  EXPECT_NEAR(nll_loss(e, 0.5).gradient, fd, 1e-6);
}

TEST(NllLoss, ConvexInXi) {
  Rng rng(2);
  std::vector<Vector2> e;
  for (int i = 0; i < 20; ++i) e.emplace_back(uniform(rng, -2, 2), uniform(rng, -2, 2));
  const double h = 0.01;
  for (double xi = -4; xi < 4; xi += h) {
    const double d2 = nll_loss(e, xi - h).value - 2 * nll_loss(e, xi).value + nll_loss(e, xi + h).value;
    EXPECT_GE(d2, -1e-9);
  }
}

TEST(OptimalXi, ClosedFormCases) {
  const std::vector<Vector2> a{Vector2(std::sqrt(2.0), 0)};
  EXPECT_NEAR(optimal_xi(a), 0.0, 1e-15);
  const std::vector<Vector2> b{Vector2(2, 0), Vector2(0, 2)};
  EXPECT_NEAR(optimal_xi(b), std::log(2.0), 1e-15);
  EXPECT_NEAR(grid_minimizer(b), std::log(2.0), 2e-4);
}

TEST(OptimalXi, IsAStrictMinimum) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vector2> e;
    for (int i = 0; i < 10; ++i) e.emplace_back(uniform(rng, -2, 2), uniform(rng, -2, 2));
    const double xi = optimal_xi(e);
    EXPECT_GT(nll_loss(e, xi + 0.01).value, nll_loss(e, xi).value);
    EXPECT_GT(nll_loss(e, xi - 0.01).value, nll_loss(e, xi).value);
  }
}

TEST(OptimalXi, Errors) {
  const std::vector<Vector2> zeros{Vector2::Zero(), Vector2::Zero()};
  EXPECT_THROW(optimal_xi(zeros), AllZeroErrors);
  EXPECT_THROW(optimal_xi({}), EmptyList);
}

TEST(SelectAndMerge, AllAxesValid) {
  Rng rng(4);
  const PrimitiveLayout layout = make_primitive_layout(0.05);
  const AxisPredictions p = random_predictions(rng, {0.1, 0.2, 0.3});
  const auto m = select_and_merge(p, layout, 0.4);
  ASSERT_TRUE(m);
  EXPECT_EQ(m->valid_axes.size(), 3u);
  EXPECT_EQ(m->points.size(), 24u);
  EXPECT_EQ(m->correspondences.size(), 24u);
  for (int j = 0; j < 9; ++j) {
    const Vector2 mean = (p[0].keypoints[j] + p[1].keypoints[j] + p[2].keypoints[j]) / 3.0;
    EXPECT_LT((m->points[j] - mean).norm(), 1e-12);
    EXPECT_EQ(m->correspondences[j], layout.white[j]);
  }
  for (int a = 0; a < 3; ++a)
    for (int k = 0; k < 5; ++k) {
      EXPECT_EQ(m->points[9 + 5 * a + k], p[a].keypoints[9 + k]);
      EXPECT_EQ(m->correspondences[9 + 5 * a + k], layout.colored[a][k]);
    }
  EXPECT_NEAR(m->sigma_norm, std::sqrt(0.01 + 0.04 + 0.09), 1e-15);
}

TEST(SelectAndMerge, AllRejected) {
  Rng rng(5);
  const auto p = random_predictions(rng, {0.5, 0.5, 0.5});
  EXPECT_FALSE(select_and_merge(p, make_primitive_layout(0.05), 0.4));
}

TEST(SelectAndMerge, SingleAxis) {
  Rng rng(6);
  const auto p = random_predictions(rng, {0.1, 0.9, 0.9});
  const auto m = select_and_merge(p, make_primitive_layout(0.05), 0.4);
  ASSERT_TRUE(m);
  EXPECT_EQ(m->points.size(), 14u);
  for (int j = 0; j < 14; ++j) EXPECT_EQ(m->points[j], p[0].keypoints[j]);
  EXPECT_EQ(m->sigma_norm, 0.1);
  ASSERT_EQ(m->valid_axes.size(), 1u);
  EXPECT_EQ(m->valid_axes[0], Axis::X);
}

TEST(SelectAndMerge, ThresholdIsInclusive) {
  Rng rng(7);
  const auto p = random_predictions(rng, {0.4, 0.41, 0.2});
  const auto m = select_and_merge(p, make_primitive_layout(0.05), 0.4);
  ASSERT_TRUE(m);
  EXPECT_EQ(m->valid_axes, (std::vector<Axis>{Axis::X, Axis::Z}));
  EXPECT_THROW(select_and_merge(p, make_primitive_layout(0.05), 0.0), InvalidArgument);
}

TEST(SelectAndMerge, LoweringThresholdNeverAddsAxes) {
  Rng rng(8);
  const PrimitiveLayout layout = make_primitive_layout(0.05);
  for (int trial = 0; trial < 500; ++trial) {
    const auto p = random_predictions(rng, {uniform(rng, 0, 1), uniform(rng, 0, 1), uniform(rng, 0, 1)});
    const double hi = uniform(rng, 0.01, 1.0), lo = uniform(rng, 0.001, hi);
    const auto a = select_and_merge(p, layout, lo);
    const auto b = select_and_merge(p, layout, hi);
    if (!a) continue;
    ASSERT_TRUE(b);
    for (Axis ax : a->valid_axes) {
      EXPECT_NE(std::find(b->valid_axes.begin(), b->valid_axes.end(), ax), b->valid_axes.end());
    }
  }
}

TEST(SelectAndMerge, OrderIndependentWhiteMean) {
  Rng rng(9);
  const PrimitiveLayout layout = make_primitive_layout(0.05);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = random_predictions(rng, {uniform(rng, 0, 0.4), uniform(rng, 0, 0.4), uniform(rng, 0, 0.4)});
    const auto m = select_and_merge(p, layout, 0.4);
    ASSERT_TRUE(m);
    for (int j = 0; j < 9; ++j) {
      const Vector2 reversed = ((p[2].keypoints[j] + p[1].keypoints[j]) + p[0].keypoints[j]) / 3.0;
      EXPECT_LT((m->points[j] - reversed).norm(), 1e-12);
    }
  }
}

TEST(CombinedSigma, Norm) {
  EXPECT_EQ(combined_sigma(std::vector<double>{0.4}), 0.4);
  EXPECT_EQ(combined_sigma(std::vector<double>{3, 4}), 5.0);
  EXPECT_THROW(combined_sigma({}), EmptyList);
}

TEST(CombinedSigma, MatchesMerge) {
  Rng rng(10);
  const PrimitiveLayout layout = make_primitive_layout(0.05);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto p = random_predictions(rng, {uniform(rng, 0, 0.8), uniform(rng, 0, 0.8), uniform(rng, 0, 0.8)});
    const auto m = select_and_merge(p, layout, 0.4);
    if (!m) continue;
    std::vector<double> s;
    for (Axis a : m->valid_axes) s.push_back(p[static_cast<int>(a)].sigma);
    EXPECT_NEAR(m->sigma_norm, combined_sigma(s), 1e-12);
  }
}
