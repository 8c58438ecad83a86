#include "ambipose/object_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "ambipose/error.hpp"
#include "text_util.hpp"

namespace ambipose {

char axis_name(Axis axis) {
  switch (axis) {
    case Axis::X: return 'x';
    case Axis::Y: return 'y';
    case Axis::Z: return 'z';
  }
  return '?';
}

Axis parse_axis(std::string_view name) {
  if (name == "x") return Axis::X;
  if (name == "y") return Axis::Y;
  if (name == "z") return Axis::Z;
  throw InvalidArgument(fmt::format("unknown axis '{}'", name));
}

std::array<Vector3, kAxisKeypoints> PrimitiveLayout::axis_keypoints(Axis axis) const {
  std::array<Vector3, kAxisKeypoints> out;
  std::copy(white.begin(), white.end(), out.begin());
  const auto& c = colored[static_cast<std::size_t>(axis)];
  std::copy(c.begin(), c.end(), out.begin() + kWhiteKeypoints);
  return out;
}

PrimitiveLayout make_primitive_layout(double scale) {
  if (!(scale > 0.0)) {
    throw NonPositiveScale(fmt::format("primitive scale must be positive, got {}", scale));
  }
  PrimitiveLayout layout;
  layout.white[0] = Vector3::Zero();
  for (int bits = 0; bits < 8; ++bits) {
    layout.white[static_cast<std::size_t>(bits + 1)] =
        scale * Vector3((bits & 1) ? 1.0 : -1.0, (bits & 2) ? 1.0 : -1.0, (bits & 4) ? 1.0 : -1.0);
  }
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3;
    const int k = (i + 2) % 3;
    auto& face = layout.colored[static_cast<std::size_t>(i)];
    face[0] = scale * Vector3::Unit(i);
    for (int bits = 0; bits < 4; ++bits) {
      Vector3 p = scale * Vector3::Unit(i);
      p[j] = (bits & 1) ? scale : -scale;
      p[k] = (bits & 2) ? scale : -scale;
      face[static_cast<std::size_t>(bits + 1)] = p;
    }
  }
  return layout;
}

std::vector<Rotation> symmetry_transforms(const SymmetrySpec& spec, int continuous_discretization) {
  if (continuous_discretization < 1) {
    throw InvalidArgument("continuous symmetry discretization must be at least 1");
  }
  int count = 1;
  switch (spec.kind) {
    case SymmetryKind::Asymmetric: count = 1; break;
    case SymmetryKind::Discrete: count = spec.order; break;
    case SymmetryKind::Continuous: count = continuous_discretization; break;
  }
  if (count < 1) {
    throw InvalidArgument(fmt::format("symmetry order must be at least 1, got {}", count));
  }
  std::vector<Rotation> out;
  out.reserve(static_cast<std::size_t>(count));
  out.push_back(Rotation::identity());
  for (int k = 1; k < count; ++k) {
    out.push_back(Rotation::about_axis(spec.axis, 2.0 * std::numbers::pi * k / count));
  }
  return out;
}

namespace {

struct AxisBox {
  Vector3 lo;
  Vector3 hi;

  double face_area(int axis) const {
    const Vector3 e = hi - lo;
    return e[(axis + 1) % 3] * e[(axis + 2) % 3];
  }
  double area() const { return 2.0 * (face_area(0) + face_area(1) + face_area(2)); }
  bool strictly_contains(const Vector3& p, double eps) const {
    return (p.array() > lo.array() + eps).all() && (p.array() < hi.array() - eps).all();
  }
  bool contains(const Vector3& p, double eps) const {
    return (p.array() >= lo.array() - eps).all() && (p.array() <= hi.array() + eps).all();
  }

  template <typename Rng>
  Vector3 sample(Rng& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double pick = u(rng) * 0.5 * area();
    int axis = 0;
    double acc = face_area(0);
    while (axis < 2 && pick > acc) {
      ++axis;
      acc += face_area(axis);
    }
    Vector3 p;
    for (int d = 0; d < 3; ++d) {
      p[d] = lo[d] + u(rng) * (hi[d] - lo[d]);
    }
    p[axis] = u(rng) < 0.5 ? lo[axis] : hi[axis];
    return p;
  }
};

void require_dims(const ShapeSpec& shape, std::size_t n, const char* name) {
  if (shape.dims.size() != n) {
    throw InvalidArgument(fmt::format("{} needs {} dimensions, got {}", name, n, shape.dims.size()));
  }
  for (double d : shape.dims) {
    if (!(d > 0.0)) {
      throw InvalidArgument(fmt::format("{} dimensions must be positive", name));
    }
  }
}

}  // namespace

std::vector<Vector3> sample_surface(const ShapeSpec& shape, int count, std::uint64_t seed) {
  if (count < 1) {
    throw InvalidArgument("surface sample count must be positive");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vector3> out;
  out.reserve(static_cast<std::size_t>(count));

  switch (shape.kind) {
    case ShapeKind::Box: {
      require_dims(shape, 3, "box");
      const Vector3 half = 0.5 * Vector3(shape.dims[0], shape.dims[1], shape.dims[2]);
      const AxisBox box{-half, half};
      while (static_cast<int>(out.size()) < count) out.push_back(box.sample(rng));
      break;
    }
    case ShapeKind::Cylinder: {
      require_dims(shape, 2, "cylinder");
      const double r = shape.dims[0];
      const double h = shape.dims[1];
      const double side = 2.0 * std::numbers::pi * r * h;
      const double cap = std::numbers::pi * r * r;
      while (static_cast<int>(out.size()) < count) {
        const double pick = u(rng) * (side + 2.0 * cap);
        const double phi = 2.0 * std::numbers::pi * u(rng);
        if (pick < side) {
          out.emplace_back(r * std::cos(phi), r * std::sin(phi), h * (u(rng) - 0.5));
        } else {
          const double rr = r * std::sqrt(u(rng));
          const double z = pick < side + cap ? -0.5 * h : 0.5 * h;
          out.emplace_back(rr * std::cos(phi), rr * std::sin(phi), z);
        }
      }
      break;
    }
    case ShapeKind::LBlock: {
      require_dims(shape, 4, "lblock");
      const double w = shape.dims[0];
      const double h = shape.dims[1];
      const double d = shape.dims[2];
      const double t = shape.dims[3];
      if (t >= w || t >= h) {
        throw InvalidArgument("lblock arm thickness must be below width and height");
      }
      const AxisBox foot{Vector3::Zero(), Vector3(w, t, d)};
      const AxisBox upright{Vector3::Zero(), Vector3(t, h, d)};
      const Vector3 center(0.5 * w, 0.5 * h, 0.5 * d);
      const double eps = 1e-12;
      const double total = foot.area() + upright.area();
      while (static_cast<int>(out.size()) < count) {
        if (u(rng) * total < foot.area()) {
          const Vector3 p = foot.sample(rng);
          if (upright.strictly_contains(p, eps)) continue;
          out.push_back(p - center);
        } else {
          // The overlap square is covered by the foot's samples.
          const Vector3 p = upright.sample(rng);
          if (foot.contains(p, eps)) continue;
          out.push_back(p - center);
        }
      }
      break;
    }
  }
  return out;
}

double max_pairwise_distance(const std::vector<Vector3>& points) {
  double best = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      best = std::max(best, (points[i] - points[j]).squaredNorm());
    }
  }
  return std::sqrt(best);
}

ObjectModel build_object_model(const ObjectDefinition& definition) {
  if (definition.surface_points < 500) {
    throw InvalidArgument(fmt::format("object {} needs at least 500 surface points", definition.id));
  }
  ObjectModel model;
  model.id = definition.id;
  model.definition = definition;
  model.symmetry = definition.symmetry;
  if (model.symmetric()) {
    const Vector3 axis = definition.symmetry.axis.normalized();
    if ((axis - Vector3::UnitZ()).norm() > 1e-9) {
      throw InvalidArgument(fmt::format(
          "object {}: symmetry axis must be object-frame z; pre-rotate the model frame", definition.id));
    }
    if (definition.symmetry.kind == SymmetryKind::Discrete && definition.symmetry.order < 2) {
      throw InvalidArgument(fmt::format("object {}: discrete symmetry order must be >= 2", definition.id));
    }
  }
  model.symmetry.axis = Vector3::UnitZ();
  model.dominant_axis = Vector3::UnitZ();
  const std::uint64_t seed = 0x9E3779B97F4A7C15ULL ^ static_cast<std::uint64_t>(definition.id);
  model.surface_points = sample_surface(definition.shape, definition.surface_points, seed);
  model.diameter = max_pairwise_distance(model.surface_points);
  const double scale = definition.keypoint_scale > 0.0 ? definition.keypoint_scale : 0.5 * model.diameter;
  model.layout = make_primitive_layout(scale);
  return model;
}

namespace {

const char* shape_name(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::Box: return "box";
    case ShapeKind::Cylinder: return "cylinder";
    case ShapeKind::LBlock: return "lblock";
  }
  return "?";
}

const char* symmetry_name(SymmetryKind kind) {
  switch (kind) {
    case SymmetryKind::Asymmetric: return "asymmetric";
    case SymmetryKind::Discrete: return "discrete";
    case SymmetryKind::Continuous: return "continuous";
  }
  return "?";
}

}  // namespace

std::string format_object_definition(const ObjectDefinition& def) {
  return fmt::format("id={} shape={} dims={} symmetry={} order={} axis={},{},{} keypoint_scale={} surface_points={}",
                     def.id, shape_name(def.shape.kind), fmt::join(def.shape.dims, ","),
                     symmetry_name(def.symmetry.kind), def.symmetry.order, def.symmetry.axis.x(),
                     def.symmetry.axis.y(), def.symmetry.axis.z(), def.keypoint_scale, def.surface_points);
}

ObjectDefinition parse_object_definition(std::string_view line) {
  ObjectDefinition def;
  bool have_id = false;
  bool have_shape = false;
  for (auto token : text::split_ws(line)) {
    const auto eq = token.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidArgument(fmt::format("expected key=value, got '{}'", token));
    }
    const auto key = token.substr(0, eq);
    const auto value = token.substr(eq + 1);
    const auto bad = [&] { return InvalidArgument(fmt::format("bad value for {}: '{}'", key, value)); };
    if (key == "id") {
      auto v = text::to_int(value);
      if (!v) throw bad();
      def.id = static_cast<int>(*v);
      have_id = true;
    } else if (key == "shape") {
      if (value == "box") def.shape.kind = ShapeKind::Box;
      else if (value == "cylinder") def.shape.kind = ShapeKind::Cylinder;
      else if (value == "lblock") def.shape.kind = ShapeKind::LBlock;
      else throw bad();
      have_shape = true;
    } else if (key == "dims") {
      auto v = text::to_doubles(value);
      if (!v) throw bad();
      def.shape.dims = *v;
    } else if (key == "symmetry") {
      if (value == "asymmetric") def.symmetry.kind = SymmetryKind::Asymmetric;
      else if (value == "discrete") def.symmetry.kind = SymmetryKind::Discrete;
      else if (value == "continuous") def.symmetry.kind = SymmetryKind::Continuous;
      else throw bad();
    } else if (key == "order") {
      auto v = text::to_int(value);
      if (!v) throw bad();
      def.symmetry.order = static_cast<int>(*v);
    } else if (key == "axis") {
      auto v = text::to_doubles(value);
      if (!v || v->size() != 3) throw bad();
      def.symmetry.axis = Vector3((*v)[0], (*v)[1], (*v)[2]);
    } else if (key == "keypoint_scale") {
      auto v = text::to_double(value);
      if (!v) throw bad();
      def.keypoint_scale = *v;
    } else if (key == "surface_points") {
      auto v = text::to_int(value);
      if (!v) throw bad();
      def.surface_points = static_cast<int>(*v);
    } else {
      throw InvalidArgument(fmt::format("unknown object key '{}'", key));
    }
  }
  if (!have_id || !have_shape) {
    throw InvalidArgument("object definition needs at least id and shape");
  }
  return def;
}

std::vector<ObjectDefinition> read_object_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError(fmt::format("cannot open object definition file {}", path.string()));
  }
  std::vector<ObjectDefinition> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    if (body.starts_with("object ")) body = text::trim(body.substr(7));
    try {
      out.push_back(parse_object_definition(body));
    } catch (const InvalidArgument& e) {
      throw ParseError(path.string(), number, e.what());
    }
  }
  return out;
}

}  // namespace ambipose
