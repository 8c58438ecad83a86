#include "ambipose/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "ambipose/error.hpp"
#include "text_util.hpp"

namespace ambipose::sim {

NoiseConfig NoiseConfig::none() {
  NoiseConfig n;
  n.keypoint_px = 0.0;
  n.fk_translation = 0.0;
  n.fk_rotation = 0.0;
  n.depth = 0.0;
  n.occlusion_min = 0.0;
  n.occlusion_max = 0.0;
  return n;
}

namespace {

double gaussian(Rng& rng, double stddev) {
  if (stddev <= 0.0) return 0.0;
  std::normal_distribution<double> n(0.0, stddev);
  return n(rng);
}

double uniform(Rng& rng, double lo, double hi) {
  if (hi <= lo) return lo;
  std::uniform_real_distribution<double> u(lo, hi);
  return u(rng);
}

}  // namespace

double uncertainty_model(double occlusion, bool symmetric_nondominant, Rng& rng, const UncertaintyModel& model) {
  double sigma = model.floor + model.slope * occlusion + gaussian(rng, model.noise);
  sigma = std::max(sigma, 0.0);
  if (symmetric_nondominant) {
    sigma = std::max(sigma, model.sigma_o + model.margin);
  }
  return sigma;
}

ScenarioConfig demo_scenario(std::uint64_t seed) {
  ScenarioConfig config;
  config.seed = seed;
  const auto placed = [](int id, ShapeKind shape, std::vector<double> dims, SymmetryKind sym, int order,
                         const Vector3& position, const Vector3& rotation_vector) {
    PlacedObject obj;
    obj.definition.id = id;
    obj.definition.shape = {shape, std::move(dims)};
    obj.definition.symmetry.kind = sym;
    obj.definition.symmetry.order = order;
    obj.world_pose = Pose(Rotation::exp(rotation_vector), position);
    return obj;
  };
  config.objects = {
      placed(1, ShapeKind::Box, {0.10, 0.07, 0.05}, SymmetryKind::Asymmetric, 1, {0.10, 0.08, 0.025},
             {0.0, 0.0, 0.4}),
      placed(2, ShapeKind::Cylinder, {0.035, 0.12}, SymmetryKind::Continuous, 1, {-0.09, 0.10, 0.06},
             {0.05, -0.03, 0.0}),
      placed(3, ShapeKind::Box, {0.06, 0.06, 0.10}, SymmetryKind::Discrete, 4, {-0.10, -0.09, 0.05},
             {0.0, 0.0, 0.3}),
      placed(4, ShapeKind::LBlock, {0.10, 0.08, 0.05, 0.03}, SymmetryKind::Asymmetric, 1, {0.09, -0.10, 0.025},
             {0.0, 0.0, -0.7}),
  };
  config.orbit = OrbitTrajectory{};
  return config;
}

const ObjectModel& Scenario::model(int id) const {
  for (const auto& m : models) {
    if (m.id == id) return m;
  }
  throw InvalidArgument(fmt::format("unknown object id {}", id));
}

Pose look_at(const Vector3& position, const Vector3& target) {
  const Vector3 z = (target - position).normalized();
  Vector3 x = Vector3(0.0, 0.0, -1.0).cross(z);
  if (x.norm() < 1e-9) {
    x = Vector3::UnitX();
  }
  x.normalize();
  const Vector3 y = z.cross(x);
  Matrix3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return Pose(Rotation::from_matrix(r), position);
}

std::vector<Pose> orbit_poses(const OrbitTrajectory& orbit) {
  if (orbit.n_views < 1) {
    throw InvalidArgument("orbit needs at least one view");
  }
  std::vector<Pose> out;
  for (int i = 0; i < orbit.n_views; ++i) {
    const double angle = orbit.arc * i / orbit.n_views;
    const Vector3 position =
        orbit.target + Vector3(orbit.radius * std::cos(angle), orbit.radius * std::sin(angle), orbit.height);
    out.push_back(look_at(position, orbit.target));
  }
  return out;
}

namespace {

Pose noisy(const Pose& pose, double translation_sigma, double rotation_sigma, Rng& rng) {
  Twist xi;
  for (int i = 0; i < 3; ++i) xi.rho[i] = gaussian(rng, translation_sigma);
  for (int i = 0; i < 3; ++i) xi.phi[i] = gaussian(rng, rotation_sigma);
  return compose(pose, exp_map(xi));
}

void collect_warnings(Scenario& scenario) {
  std::set<int> seen;
  for (const auto& f : scenario.frames) {
    for (const auto& o : f.objects) seen.insert(o.object_id);
  }
  for (const auto& m : scenario.models) {
    if (!seen.contains(m.id)) {
      scenario.warnings.push_back(fmt::format("object {} is never visible", m.id));
    }
  }
}

}  // namespace

Scenario generate(const ScenarioConfig& config) {
  config.intrinsics.validate();
  if (config.objects.empty()) {
    throw InvalidArgument("scenario has no objects");
  }
  Scenario scenario;
  scenario.intrinsics = config.intrinsics;
  scenario.continuous_discretization = config.continuous_discretization;
  scenario.base = config.base;
  for (const auto& obj : config.objects) {
    if (scenario.gt_objects.contains(obj.definition.id)) {
      throw InvalidArgument(fmt::format("duplicate object id {}", obj.definition.id));
    }
    scenario.models.push_back(build_object_model(obj.definition));
    scenario.gt_objects[obj.definition.id] = obj.world_pose;
  }
  const std::vector<Pose> cameras = config.camera_poses.empty() ? orbit_poses(config.orbit) : config.camera_poses;
  for (const auto& row : config.occlusion) {
    for (double o : row) {
      if (o < 0.0 || o > 1.0) throw InvalidArgument("occlusion values must lie in [0, 1]");
    }
  }

  Rng rng(config.seed);
  const CameraIntrinsics& k = config.intrinsics;
  const Pose base_inv = inverse(config.base);

  for (std::size_t t = 0; t < cameras.size(); ++t) {
    FrameMeasurement frame;
    frame.t = static_cast<int>(t);
    frame.gt_camera = cameras[t];
    frame.fk_measurement =
        noisy(compose(base_inv, cameras[t]), config.noise.fk_translation, config.noise.fk_rotation, rng);
    const Pose camera_inv = inverse(cameras[t]);

    for (std::size_t j = 0; j < config.objects.size(); ++j) {
      const ObjectModel& model = scenario.models[j];
      ObjectObservation obs;
      obs.object_id = model.id;
      obs.gt_relative = compose(camera_inv, config.objects[j].world_pose);
      if (t < config.occlusion.size() && j < config.occlusion[t].size()) {
        obs.occlusion = config.occlusion[t][j];
      } else {
        obs.occlusion = uniform(rng, config.noise.occlusion_min, config.noise.occlusion_max);
      }

      if (model.symmetric()) {
        const auto transforms = symmetry_transforms(model.symmetry, config.continuous_discretization);
        std::uniform_int_distribution<std::size_t> pick(0, transforms.size() - 1);
        obs.perceived_symmetry = transforms[pick(rng)];
      }
      const Pose perceived = compose(obs.gt_relative, Pose(obs.perceived_symmetry, Vector3::Zero()));
      const double pixel_sigma = config.noise.keypoint_px * (1.0 + 4.0 * obs.occlusion);

      bool in_view = true;
      for (Axis axis : kAxes) {
        const bool scrambled = model.symmetric() && axis != Axis::Z;
        AxisPrediction& pred = obs.axes[static_cast<std::size_t>(axis)];
        pred.axis = axis;
        pred.sigma = uncertainty_model(obs.occlusion, scrambled, rng, config.uncertainty);
        Pose render = perceived;
        if (scrambled) {
          const double angle = uniform(rng, 0.0, 2.0 * std::numbers::pi);
          render = compose(perceived, Pose(Rotation::about_axis(Vector3::UnitZ(), angle), Vector3::Zero()));
        }
        const auto points = model.layout.axis_keypoints(axis);
        for (std::size_t i = 0; i < points.size(); ++i) {
          const Vector3 pc = act(render, points[i]);
          if (pc.z() <= kMinDepth) {
            in_view = false;
            pred.keypoints[i] = Vector2::Zero();
            continue;
          }
          const double nu = gaussian(rng, pixel_sigma);
          const double nv = gaussian(rng, pixel_sigma);
          pred.keypoints[i] = project(k, pc) + Vector2(nu, nv);
          if (!k.contains(pred.keypoints[i])) in_view = false;
        }
      }

      const int keep_target = static_cast<int>(
          std::lround((1.0 - obs.occlusion) * std::min<double>(config.depth_points, model.surface_points.size())));
      std::vector<std::size_t> order(model.surface_points.size());
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      for (int i = 0; i < keep_target; ++i) {
        Vector3 p = act(perceived, model.surface_points[order[static_cast<std::size_t>(i)]]);
        p.z() += gaussian(rng, config.noise.depth);
        obs.depth_points.push_back(p);
      }

      if (in_view) {
        frame.objects.push_back(std::move(obs));
      } else {
        frame.out_of_view.push_back(model.id);
      }
    }
    scenario.frames.push_back(std::move(frame));
  }
  collect_warnings(scenario);
  return scenario;
}

double realized_keypoint_error(const Scenario& scenario, const ObjectObservation& obs, Axis axis) {
  const ObjectModel& model = scenario.model(obs.object_id);
  const Pose perceived = compose(obs.gt_relative, Pose(obs.perceived_symmetry, Vector3::Zero()));
  const auto points = model.layout.axis_keypoints(axis);
  const auto& pred = obs.axes[static_cast<std::size_t>(axis)];
  double sum = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    sum += (pred.keypoints[i] - project(scenario.intrinsics, perceived, points[i])).norm();
  }
  return sum / static_cast<double>(points.size());
}

void write_measurements(const Scenario& scenario, std::ostream& out) {
  const auto& k = scenario.intrinsics;
  out << "# ambipose measurements v1\n";
  out << fmt::format("INTRINSICS {} {} {} {} {} {}\n", k.fx, k.fy, k.cx, k.cy, k.width, k.height);
  out << fmt::format("DISCRETIZATION {}\n", scenario.continuous_discretization);
  out << fmt::format("BASE {}\n", format_pose(scenario.base));
  for (const auto& m : scenario.models) {
    out << "MODEL " << format_object_definition(m.definition) << '\n';
  }
  for (const auto& [id, pose] : scenario.gt_objects) {
    out << fmt::format("GT_OBJECT {} {}\n", id, format_pose(pose));
  }
  for (const auto& f : scenario.frames) {
    out << fmt::format("FRAME {}\n", f.t);
    out << fmt::format("GT_CAMERA {}\n", format_pose(f.gt_camera));
    out << fmt::format("FK {}\n", format_pose(f.fk_measurement));
    for (int id : f.out_of_view) out << fmt::format("OUT {}\n", id);
    for (const auto& o : f.objects) {
      const auto& s = o.perceived_symmetry;
      out << fmt::format("GT {} {} {} {} {} {} {}\n", o.object_id, format_pose(o.gt_relative), s.w(), s.x(), s.y(),
                         s.z(), o.occlusion);
      for (const auto& pred : o.axes) {
        out << fmt::format("OBJ {} AXIS {} SIGMA {}", o.object_id, axis_name(pred.axis), pred.sigma);
        for (const auto& kp : pred.keypoints) out << fmt::format(" {} {}", kp.x(), kp.y());
        out << '\n';
      }
      out << fmt::format("DEPTH {} {}", o.object_id, o.depth_points.size());
      for (const auto& p : o.depth_points) out << fmt::format(" {} {} {}", p.x(), p.y(), p.z());
      out << '\n';
    }
  }
  out << "END\n";
}

void save_measurements(const Scenario& scenario, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError(fmt::format("cannot write measurement file {}", path.string()));
  }
  write_measurements(scenario, out);
}

namespace {

class LineReader {
 public:
  LineReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  bool next() {
    while (std::getline(in_, line_)) {
      ++number_;
      const auto body = text::trim(line_);
      if (body.empty() || body.front() == '#') continue;
      tokens_ = text::split_ws(body);
      return true;
    }
    tokens_.clear();
    return false;
  }

  const std::vector<std::string_view>& tokens() const { return tokens_; }
  int number() const { return number_; }

  ParseError error(const std::string& message) const { return ParseError(source_, number_, message); }

  double number_at(std::size_t i) const {
    if (i >= tokens_.size()) throw error("record is truncated");
    auto v = text::to_double(tokens_[i]);
    if (!v) throw error(fmt::format("bad number '{}'", tokens_[i]));
    return *v;
  }
  int int_at(std::size_t i) const {
    if (i >= tokens_.size()) throw error("record is truncated");
    auto v = text::to_int(tokens_[i]);
    if (!v) throw error(fmt::format("bad integer '{}'", tokens_[i]));
    return static_cast<int>(*v);
  }
  Pose pose_at(std::size_t i) const {
    std::vector<double> v;
    for (std::size_t k = 0; k < 7; ++k) v.push_back(number_at(i + k));
    try {
      return parse_pose(v);
    } catch (const InvalidArgument& e) {
      throw error(e.what());
    }
  }
  void expect_size(std::size_t n) const {
    if (tokens_.size() < n) throw error("record is truncated");
    if (tokens_.size() > n) throw error("record has trailing fields");
  }

 private:
  std::istream& in_;
  std::string source_;
  std::string line_;
  std::vector<std::string_view> tokens_;
  int number_ = 0;
};

}  // namespace

Scenario read_measurements(std::istream& in, const std::string& source) {
  Scenario scenario;
  LineReader r(in, source);
  bool ended = false;
  FrameMeasurement* frame = nullptr;
  ObjectObservation* obs = nullptr;
  std::array<bool, 3> axes_seen{};
  bool depth_seen = false;

  const auto finish_object = [&] {
    if (obs == nullptr) return;
    if (!std::all_of(axes_seen.begin(), axes_seen.end(), [](bool b) { return b; }) || !depth_seen) {
      throw r.error(fmt::format("object {} record is incomplete", obs->object_id));
    }
    obs = nullptr;
  };

  while (r.next()) {
    const auto& tok = r.tokens();
    const auto& kind = tok[0];
    if (ended) throw r.error("data after END");
    if (kind == "INTRINSICS") {
      r.expect_size(7);
      scenario.intrinsics = {r.number_at(1), r.number_at(2), r.number_at(3), r.number_at(4), r.int_at(5), r.int_at(6)};
      try {
        scenario.intrinsics.validate();
      } catch (const InvalidArgument& e) {
        throw r.error(e.what());
      }
    } else if (kind == "DISCRETIZATION") {
      r.expect_size(2);
      scenario.continuous_discretization = r.int_at(1);
    } else if (kind == "BASE") {
      r.expect_size(8);
      scenario.base = r.pose_at(1);
    } else if (kind == "MODEL") {
      std::string rest;
      for (std::size_t i = 1; i < tok.size(); ++i) {
        rest += std::string(tok[i]) + ' ';
      }
      try {
        scenario.models.push_back(build_object_model(parse_object_definition(rest)));
      } catch (const InvalidArgument& e) {
        throw r.error(e.what());
      }
    } else if (kind == "GT_OBJECT") {
      r.expect_size(9);
      scenario.gt_objects[r.int_at(1)] = r.pose_at(2);
    } else if (kind == "FRAME") {
      finish_object();
      r.expect_size(2);
      const int t = r.int_at(1);
      if (t != static_cast<int>(scenario.frames.size())) throw r.error("frames must be numbered from 0 in order");
      scenario.frames.emplace_back();
      frame = &scenario.frames.back();
      frame->t = t;
    } else if (kind == "END") {
      finish_object();
      ended = true;
    } else {
      if (frame == nullptr) throw r.error(fmt::format("'{}' outside a frame", kind));
      if (kind == "GT_CAMERA") {
        r.expect_size(8);
        frame->gt_camera = r.pose_at(1);
      } else if (kind == "FK") {
        r.expect_size(8);
        frame->fk_measurement = r.pose_at(1);
      } else if (kind == "OUT") {
        r.expect_size(2);
        frame->out_of_view.push_back(r.int_at(1));
      } else if (kind == "GT") {
        finish_object();
        r.expect_size(14);
        frame->objects.emplace_back();
        obs = &frame->objects.back();
        obs->object_id = r.int_at(1);
        obs->gt_relative = r.pose_at(2);
        obs->perceived_symmetry = Rotation(r.number_at(9), r.number_at(10), r.number_at(11), r.number_at(12));
        obs->occlusion = r.number_at(13);
        axes_seen.fill(false);
        depth_seen = false;
      } else if (kind == "OBJ") {
        r.expect_size(6 + 2 * kAxisKeypoints);
        if (obs == nullptr || r.int_at(1) != obs->object_id || tok[2] != "AXIS" || tok[4] != "SIGMA") {
          throw r.error("OBJ record does not follow its GT record");
        }
        Axis axis{};
        try {
          axis = parse_axis(tok[3]);
        } catch (const InvalidArgument& e) {
          throw r.error(e.what());
        }
        auto& pred = obs->axes[static_cast<std::size_t>(axis)];
        pred.axis = axis;
        pred.sigma = r.number_at(5);
        if (pred.sigma < 0.0) throw r.error("sigma must be non-negative");
        for (int i = 0; i < kAxisKeypoints; ++i) {
          pred.keypoints[static_cast<std::size_t>(i)] =
              Vector2(r.number_at(static_cast<std::size_t>(6 + 2 * i)), r.number_at(static_cast<std::size_t>(7 + 2 * i)));
        }
        axes_seen[static_cast<std::size_t>(axis)] = true;
      } else if (kind == "DEPTH") {
        if (obs == nullptr || r.int_at(1) != obs->object_id) throw r.error("DEPTH record does not follow its object");
        const int n = r.int_at(2);
        if (n < 0) throw r.error("negative depth point count");
        r.expect_size(3 + 3 * static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
          const auto base = static_cast<std::size_t>(3 + 3 * i);
          obs->depth_points.emplace_back(r.number_at(base), r.number_at(base + 1), r.number_at(base + 2));
        }
        depth_seen = true;
      } else {
        throw r.error(fmt::format("unknown record '{}'", kind));
      }
    }
  }
  if (!ended) {
    throw ParseError(source, r.number() + 1, "unexpected end of file (missing END)");
  }
  for (const auto& m : scenario.models) {
    if (!scenario.gt_objects.contains(m.id)) {
      throw ParseError(source, 0, fmt::format("model {} has no GT_OBJECT record", m.id));
    }
  }
  for (const auto& f : scenario.frames) {
    for (const auto& o : f.objects) {
      if (!scenario.gt_objects.contains(o.object_id)) {
        throw ParseError(source, 0, fmt::format("frame {} references unknown object {}", f.t, o.object_id));
      }
    }
  }
  collect_warnings(scenario);
  return scenario;
}

Scenario load_measurements(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError(fmt::format("cannot open measurement file {}", path.string()));
  }
  return read_measurements(in, path.string());
}

}  // namespace ambipose::sim
