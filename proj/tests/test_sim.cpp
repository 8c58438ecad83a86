#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "ambipose/error.hpp"
#include "ambipose/sim.hpp"
#include "test_util.hpp"

using namespace ambipose;
using namespace ambipose::sim;

namespace {

ScenarioConfig quiet_scenario() {
  ScenarioConfig c = demo_scenario(3);
  c.noise = NoiseConfig::none();
  c.uncertainty.noise = 0.0;
  return c;
}

std::string dump(const Scenario& s) {
  std::ostringstream out;
  write_measurements(s, out);
  return out.str();
}

double pose_gap(const Pose& a, const Pose& b) {
  return ambipose::testing::translation_distance(a, b) + ambipose::testing::rotation_distance(a.rotation(), b.rotation());
}

}  // namespace

TEST(Sim, NoiselessKeypointsAreExactProjections) {
  const Scenario s = generate(quiet_scenario());
  int checked = 0;
  for (const auto& f : s.frames) {
    for (const auto& o : f.objects) {
      const auto& model = s.model(o.object_id);
      for (Axis axis : kAxes) {
        const auto& pred = o.axes[static_cast<std::size_t>(axis)];
        if (model.symmetric() && axis != Axis::Z) continue;
        EXPECT_EQ(pred.sigma, 0.01);
        EXPECT_LT(realized_keypoint_error(s, o, axis), 1e-9);
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(Sim, SymmetricNonDominantAxesAreUncertain) {
  const Scenario s = generate(quiet_scenario());
  for (const auto& f : s.frames) {
    for (const auto& o : f.objects) {
      if (!s.model(o.object_id).symmetric()) continue;
      EXPECT_GT(o.axes[0].sigma, kDefaultSigmaO);
      EXPECT_GT(o.axes[1].sigma, kDefaultSigmaO);
      EXPECT_LE(o.axes[2].sigma, kDefaultSigmaO);
    }
  }
}

TEST(Sim, FullOcclusionScalesPixelNoiseFiveTimes) {
  const auto realized = [](double occ) {
    ScenarioConfig c = demo_scenario(4);
    c.objects.resize(1);  // asymmetric box
    c.orbit.n_views = 200;
    c.orbit.arc = 0.5;
    c.noise.keypoint_px = 1.0;
    c.uncertainty.noise = 0.0;
    c.occlusion.assign(200, {occ});
    const Scenario s = generate(c);
    double sum = 0.0;
    int n = 0;
    for (const auto& f : s.frames) {
      for (const auto& o : f.objects) {
        sum += realized_keypoint_error(s, o, Axis::X);
        ++n;
        EXPECT_NEAR(o.axes[0].sigma, 0.01 + 0.6 * occ, 1e-15);
      }
    }
    return sum / n;
  };
  const double clear = realized(0.0);
  const double occluded = realized(1.0);
  EXPECT_NEAR(occluded / clear, 5.0, 0.25);
  EXPECT_GT(0.01 + 0.6 * 1.0, kDefaultSigmaO);
}

TEST(Sim, GroundTruthIsConsistent) {
  ScenarioConfig c = quiet_scenario();
  c.base = Pose(Rotation::about_axis(Vector3::UnitZ(), 0.3), Vector3(0.1, -0.2, 0.05));
  const Scenario s = generate(c);
  for (const auto& f : s.frames) {
    EXPECT_LT(pose_gap(compose(s.base, f.fk_measurement), f.gt_camera), 1e-12);
    for (const auto& o : f.objects) {
      EXPECT_LT(pose_gap(compose(f.gt_camera, o.gt_relative), s.gt_objects.at(o.object_id)), 1e-12);
    }
  }
}

TEST(Sim, DeterministicInSeed) {
  const ScenarioConfig c = demo_scenario(9);
  EXPECT_EQ(dump(generate(c)), dump(generate(c)));
  EXPECT_NE(dump(generate(c)), dump(generate(demo_scenario(10))));
}

TEST(Sim, UncertaintyModelClampsAtZero) {
  Rng rng(1);
  UncertaintyModel m;
  m.noise = 0.0;
  m.floor = -0.5;
  EXPECT_EQ(uncertainty_model(0.2, false, rng, m), 0.0);
  EXPECT_EQ(uncertainty_model(0.2, true, rng, m), m.sigma_o + m.margin);
}

TEST(Sim, InvalidOcclusionTable) {
  ScenarioConfig c = demo_scenario(1);
  c.occlusion = {{0.2, 1.5}};
  EXPECT_THROW(generate(c), InvalidArgument);
}

TEST(Measurements, RoundTripIsBitExact) {
  const Scenario s = generate(demo_scenario(5));
  const std::string text = dump(s);
  std::istringstream in(text);
  const Scenario back = read_measurements(in);
  EXPECT_EQ(dump(back), text);
  ASSERT_EQ(back.frames.size(), s.frames.size());
  for (std::size_t t = 0; t < s.frames.size(); ++t) {
    const auto& a = s.frames[t];
    const auto& b = back.frames[t];
    EXPECT_EQ(a.fk_measurement.translation(), b.fk_measurement.translation());
    EXPECT_EQ(a.fk_measurement.rotation().w(), b.fk_measurement.rotation().w());
    EXPECT_EQ(a.fk_measurement.rotation().x(), b.fk_measurement.rotation().x());
    ASSERT_EQ(a.objects.size(), b.objects.size());
    for (std::size_t j = 0; j < a.objects.size(); ++j) {
      for (std::size_t ax = 0; ax < 3; ++ax) {
        EXPECT_EQ(a.objects[j].axes[ax].sigma, b.objects[j].axes[ax].sigma);
        for (std::size_t i = 0; i < a.objects[j].axes[ax].keypoints.size(); ++i) {
          EXPECT_EQ(a.objects[j].axes[ax].keypoints[i], b.objects[j].axes[ax].keypoints[i]);
        }
      }
      EXPECT_EQ(a.objects[j].depth_points, b.objects[j].depth_points);
    }
  }
}

TEST(Measurements, TruncatedFileReportsLine) {
  const std::string text = dump(generate(demo_scenario(5)));
  // Cut inside the first keypoint record.
  const auto pos = text.find("OBJ ");
  const std::string cut = text.substr(0, pos + 20);
  const int line = static_cast<int>(std::count(cut.begin(), cut.end(), '\n')) + 1;
  std::istringstream in(cut);
  try {
    read_measurements(in, "cut.txt");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), line);
    EXPECT_NE(std::string(e.what()).find("cut.txt"), std::string::npos);
  }
}

TEST(Measurements, MissingEndIsParseError) {
  std::string text = dump(generate(demo_scenario(5)));
  text.erase(text.rfind("END"));
  std::istringstream in(text);
  EXPECT_THROW(read_measurements(in), ParseError);
}

TEST(Measurements, MissingFileIsIoError) {
  EXPECT_THROW(load_measurements("/nonexistent/measurements.txt"), IoError);
}

TEST(Measurements, SaveAndLoad) {
  const auto path = std::filesystem::temp_directory_path() / "ambipose_test_sim_measurements.txt";
  const Scenario s = generate(demo_scenario(6));
  save_measurements(s, path);
  EXPECT_EQ(dump(load_measurements(path)), dump(s));
  std::filesystem::remove(path);
}
