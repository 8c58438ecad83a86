#include "ambipose/graph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <fmt/format.h>

#include "ambipose/error.hpp"
#include "text_util.hpp"

namespace ambipose {

namespace {

using Matrix36 = Eigen::Matrix<double, 3, 6>;

// Between-style residual of B relative to A, shared by camera, object and
// prior factors.
ResidualBlock relative_residual(const Pose& a, const Pose& b, const Pose& measurement) {
  const Matrix3 ra_t = a.rotation().inverse().matrix();
  const Matrix3 rab = ra_t * b.rotation().matrix();
  const Vector3 u = ra_t * (b.translation() - a.translation());
  const Rotation err = measurement.rotation().inverse() * a.rotation().inverse() * b.rotation();
  const Vector3 dphi = err.log();
  const Matrix3 jr_inv = so3_right_jacobian_inverse(dphi);

  ResidualBlock block;
  block.value.resize(6);
  block.value << u - measurement.translation(), dphi;

  Eigen::MatrixXd ja = Eigen::MatrixXd::Zero(6, 6);
  ja.block<3, 3>(0, 0) = -Matrix3::Identity();
  ja.block<3, 3>(0, 3) = skew(u);
  ja.block<3, 3>(3, 3) = -jr_inv * rab.transpose();

  Eigen::MatrixXd jb = Eigen::MatrixXd::Zero(6, 6);
  jb.block<3, 3>(0, 0) = rab;
  jb.block<3, 3>(3, 3) = jr_inv;

  block.jacobians = {std::move(ja), std::move(jb)};
  block.weight = Eigen::VectorXd::Ones(6);
  return block;
}

}  // namespace

ResidualBlock camera_residual(const Pose& base, const Pose& camera, const Pose& measurement) {
  return relative_residual(base, camera, measurement);
}

ResidualBlock asymmetric_object_residual(const Pose& camera, const Pose& object, const Pose& measurement,
                                         double sigma_norm) {
  if (!(sigma_norm > 0.0)) {
    throw InvalidArgument(fmt::format("object factor sigma must be positive, got {}", sigma_norm));
  }
  ResidualBlock block = relative_residual(camera, object, measurement);
  block.weight.setConstant(1.0 / (sigma_norm * sigma_norm));
  return block;
}

ResidualBlock symmetric_object_residual(const Pose& camera, const Pose& object, const Pose& measurement,
                                        double sigma_norm, double axis_offset) {
  if (!(sigma_norm > 0.0)) {
    throw InvalidArgument(fmt::format("object factor sigma must be positive, got {}", sigma_norm));
  }
  const Vector3 ez = Vector3::UnitZ();
  const Matrix3 rc_t = camera.rotation().inverse().matrix();
  const Matrix3 rp = rc_t * object.rotation().matrix();
  const Vector3 center = rc_t * (object.translation() - camera.translation());
  const Vector3 axis_point = center + axis_offset * (rp * ez);
  const Vector3 meas_center = measurement.translation();
  const Vector3 meas_axis_point = meas_center + axis_offset * (measurement.rotation() * ez);

  ResidualBlock block;
  block.value.resize(6);
  block.value << center - meas_center, axis_point - meas_axis_point;

  Eigen::MatrixXd jc = Eigen::MatrixXd::Zero(6, 6);
  jc.block<3, 3>(0, 0) = -Matrix3::Identity();
  jc.block<3, 3>(0, 3) = skew(center);
  jc.block<3, 3>(3, 0) = -Matrix3::Identity();
  jc.block<3, 3>(3, 3) = skew(axis_point);

  Eigen::MatrixXd jo = Eigen::MatrixXd::Zero(6, 6);
  jo.block<3, 3>(0, 0) = rp;
  jo.block<3, 3>(3, 0) = rp;
  jo.block<3, 3>(3, 3) = -axis_offset * rp * skew(ez);

  block.jacobians = {std::move(jc), std::move(jo)};
  block.weight = Eigen::VectorXd::Constant(6, 1.0 / (sigma_norm * sigma_norm));
  return block;
}

ResidualBlock prior_residual(const Pose& state, const Pose& prior) {
  ResidualBlock block = relative_residual(Pose::identity(), state, prior);
  block.jacobians.erase(block.jacobians.begin());
  return block;
}

FactorGraph::FactorGraph(const Pose& base_estimate, GraphOptions options)
    : options_(options), base_prior_(base_estimate) {
  state_.base = base_estimate;
}

void FactorGraph::add_measurement(int t, const CameraPoseFactor& camera,
                                  std::span<const ObjectPoseFactor> objects) {
  const int next = static_cast<int>(state_.cameras.size());
  if (t < next) {
    throw DuplicateTime(fmt::format("time step {} already exists", t));
  }
  if (t != next) {
    throw InvalidArgument(fmt::format("time step {} skips ahead; expected {}", t, next));
  }
  if ((camera.covariance.array() <= 0.0).any()) {
    throw InvalidArgument("camera factor covariance entries must be positive");
  }
  for (const auto& obj : objects) {
    if (!(obj.sigma_norm > 0.0)) {
      throw InvalidArgument(fmt::format("object {} factor sigma must be positive", obj.object_id));
    }
    const auto it = object_symmetric_.find(obj.object_id);
    if (it != object_symmetric_.end() && it->second != obj.symmetric) {
      throw InvalidArgument(fmt::format("object {} changed symmetry class between factors", obj.object_id));
    }
  }

  const Pose camera_estimate = compose(state_.base, camera.measurement);
  state_.cameras.push_back(camera_estimate);
  CameraPoseFactor cf = camera;
  cf.t = t;
  camera_factors_.push_back(cf);
  for (const auto& obj : objects) {
    ObjectPoseFactor of = obj;
    of.t = t;
    if (!state_.objects.contains(obj.object_id)) {
      state_.objects.emplace(obj.object_id, compose(camera_estimate, obj.measurement));
      object_symmetric_[obj.object_id] = obj.symmetric;
    }
    object_factors_.push_back(of);
  }
}

struct FactorGraph::Linearized {
  struct Entry {
    ResidualBlock block;
    std::vector<int> states;  // state slot per jacobian
  };
  std::vector<Entry> entries;
  std::vector<std::string> state_names;
  std::vector<bool> symmetric_object;  // per slot
  double cost = 0.0;
};

FactorGraph::Linearized FactorGraph::linearize(const StateVector& state, bool with_jacobians) const {
  Linearized lin;
  const int n_cam = static_cast<int>(state.cameras.size());
  lin.state_names.push_back("base");
  lin.symmetric_object.push_back(false);
  for (int i = 0; i < n_cam; ++i) {
    lin.state_names.push_back(fmt::format("camera:{}", i));
    lin.symmetric_object.push_back(false);
  }
  std::map<int, int> object_slot;
  for (const auto& [id, pose] : state.objects) {
    object_slot[id] = static_cast<int>(lin.state_names.size());
    lin.state_names.push_back(fmt::format("object:{}", id));
    const auto sym = object_symmetric_.find(id);
    lin.symmetric_object.push_back(sym != object_symmetric_.end() && sym->second);
  }

  const auto push = [&](ResidualBlock block, std::vector<int> slots) {
    if (options_.huber_delta > 0.0) {
      const double norm = std::sqrt(block.cost());
      if (norm > options_.huber_delta) {
        // IRLS weight; the scaled quadratic equals the Huber cost 2 d |r| - d^2
        // at the linearization point.
        const double scale = (2.0 * options_.huber_delta * norm - options_.huber_delta * options_.huber_delta) /
                             (norm * norm);
        block.weight *= scale;
      }
    }
    lin.cost += block.cost();
    if (!with_jacobians) block.jacobians.clear();
    lin.entries.push_back({std::move(block), std::move(slots)});
  };

  if (options_.anchor_base) {
    ResidualBlock prior = prior_residual(state.base, base_prior_);
    prior.weight.setConstant(1.0 / options_.base_prior_variance);
    push(std::move(prior), {0});
  }
  for (const auto& f : camera_factors_) {
    ResidualBlock block = camera_residual(state.base, state.cameras[static_cast<std::size_t>(f.t)], f.measurement);
    block.weight = f.covariance.cwiseInverse();
    push(std::move(block), {0, 1 + f.t});
  }
  for (const auto& f : object_factors_) {
    const Pose& cam = state.cameras[static_cast<std::size_t>(f.t)];
    const Pose& obj = state.objects.at(f.object_id);
    ResidualBlock block = f.symmetric
                              ? symmetric_object_residual(cam, obj, f.measurement, f.sigma_norm, options_.axis_offset)
                              : asymmetric_object_residual(cam, obj, f.measurement, f.sigma_norm);
    push(std::move(block), {1 + f.t, object_slot.at(f.object_id)});
  }
  return lin;
}

double FactorGraph::total_cost() const { return linearize(state_, false).cost; }

void FactorGraph::check_rank(const Linearized& lin) const {
  std::vector<std::string> offending;
  if (!options_.anchor_base) {
    offending.push_back("base");
  }
  const std::size_t n = lin.state_names.size();
  std::vector<Matrix6> blocks(n, Matrix6::Zero());
  for (const auto& e : lin.entries) {
    for (std::size_t k = 0; k < e.states.size(); ++k) {
      const auto& j = e.block.jacobians[k];
      blocks[static_cast<std::size_t>(e.states[k])] += j.transpose() * e.block.weight.asDiagonal() * j;
    }
  }
  for (std::size_t s = 0; s < n; ++s) {
    const Eigen::SelfAdjointEigenSolver<Matrix6> eig(blocks[s]);
    const auto& ev = eig.eigenvalues();
    const double top = ev.maxCoeff();
    int null_dims = 0;
    for (int i = 0; i < 6; ++i) {
      if (!(top > 0.0) || ev(i) <= 1e-12 * top) ++null_dims;
    }
    // Rotation about the dominant axis of a symmetric object is unobservable.
    const int allowed = lin.symmetric_object[s] ? 1 : 0;
    if (null_dims > allowed) {
      offending.push_back(lin.state_names[s]);
    }
  }
  if (!offending.empty()) {
    throw RankDeficient(fmt::format("graph is rank deficient at: {}", fmt::join(offending, ", ")),
                        std::move(offending));
  }
}

OptimizationReport FactorGraph::optimize(const SolverOptions& options) {
  if (camera_factors_.empty()) {
    throw InvalidArgument("optimize needs at least one camera factor");
  }
  OptimizationReport report;
  Linearized lin = linearize(state_, true);
  check_rank(lin);

  const auto dim = static_cast<Eigen::Index>(6 * lin.state_names.size());
  double cost = lin.cost;
  report.cost_trace.push_back(cost);
  double lambda = options.initial_damping;
  report.termination = "max_iterations";

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    report.iterations = iter + 1;
    std::vector<Eigen::Triplet<double>> triplets;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
    for (const auto& e : lin.entries) {
      const auto w = e.block.weight.asDiagonal();
      for (std::size_t a = 0; a < e.states.size(); ++a) {
        const Eigen::Index ia = 6 * e.states[a];
        g.segment<6>(ia) += e.block.jacobians[a].transpose() * (w * e.block.value);
        for (std::size_t b = 0; b < e.states.size(); ++b) {
          const Eigen::Index ib = 6 * e.states[b];
          const Eigen::MatrixXd hab = e.block.jacobians[a].transpose() * w * e.block.jacobians[b];
          for (int r = 0; r < 6; ++r) {
            for (int c = 0; c < 6; ++c) {
              if (hab(r, c) != 0.0) triplets.emplace_back(ia + r, ib + c, hab(r, c));
            }
          }
        }
      }
    }
    if (g.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) {
      report.termination = "gradient";
      break;
    }
    Eigen::SparseMatrix<double> h(dim, dim);
    h.setFromTriplets(triplets.begin(), triplets.end());
    const Eigen::VectorXd diag = h.diagonal().cwiseMax(1e-6);

    bool accepted = false;
    bool done = false;
    while (!accepted) {
      if (lambda > 1e20) {
        report.termination = "no_progress";
        done = true;
        break;
      }
      Eigen::SparseMatrix<double> damped = h;
      for (Eigen::Index i = 0; i < dim; ++i) damped.coeffRef(i, i) += lambda * diag(i);
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(damped);
      if (solver.info() != Eigen::Success) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd delta = solver.solve(-g);
      StateVector candidate = state_;
      candidate.base = retract(candidate.base, delta.segment<6>(0));
      for (std::size_t i = 0; i < candidate.cameras.size(); ++i) {
        candidate.cameras[i] = retract(candidate.cameras[i], delta.segment<6>(static_cast<Eigen::Index>(6 * (1 + i))));
      }
      Eigen::Index slot = static_cast<Eigen::Index>(1 + candidate.cameras.size());
      for (auto& [id, pose] : candidate.objects) {
        pose = retract(pose, delta.segment<6>(6 * slot));
        ++slot;
      }
      double new_cost = 0.0;
      try {
        new_cost = linearize(candidate, false).cost;
      } catch (const NearPiRotation&) {
        lambda *= 10.0;
        continue;
      }
      if (new_cost < cost) {
        const double relative = (cost - new_cost) / std::max(cost, 1e-300);
        state_ = std::move(candidate);
        cost = new_cost;
        report.cost_trace.push_back(cost);
        lambda = std::max(lambda / 10.0, 1e-15);
        accepted = true;
        if (relative < options.relative_tolerance) {
          report.termination = "relative_tolerance";
          done = true;
        }
      } else {
        lambda *= 10.0;
      }
    }
    if (done) break;
    lin = linearize(state_, true);
  }
  return report;
}

std::string FactorGraph::dump() const {
  std::string out = "# ambipose graph v1\n";
  out += fmt::format("OPTIONS {} {} {} {}\n", options_.base_prior_variance, options_.axis_offset,
                     options_.huber_delta, options_.anchor_base ? 1 : 0);
  out += fmt::format("PRIOR {}\n", format_pose(base_prior_));
  out += fmt::format("STATE BASE 0 {}\n", format_pose(state_.base));
  for (std::size_t i = 0; i < state_.cameras.size(); ++i) {
    out += fmt::format("STATE CAMERA {} {}\n", i, format_pose(state_.cameras[i]));
  }
  for (const auto& [id, pose] : state_.objects) {
    out += fmt::format("STATE OBJECT {} {}\n", id, format_pose(pose));
  }
  for (const auto& f : camera_factors_) {
    out += fmt::format("FACTOR CAMERA {} {} {}\n", f.t, format_pose(f.measurement),
                       fmt::join(f.covariance.data(), f.covariance.data() + 6, " "));
  }
  for (const auto& f : object_factors_) {
    out += fmt::format("FACTOR OBJECT {} {} {} {} {}\n", f.t, f.object_id, f.symmetric ? "SYM" : "ASYM",
                       format_pose(f.measurement), f.sigma_norm);
  }
  return out;
}

FactorGraph FactorGraph::load(std::string_view text_in) {
  GraphOptions options;
  Pose prior;
  StateVector state;
  std::vector<CameraPoseFactor> cameras;
  std::vector<ObjectPoseFactor> objects;
  std::map<int, Pose> camera_states;

  int number = 0;
  for (auto raw : text::split(text_in, '\n')) {
    ++number;
    const auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto tok = text::split_ws(line);
    const auto fail = [&](const std::string& msg) { return ParseError("graph dump", number, msg); };
    const auto num = [&](std::size_t i) {
      if (i >= tok.size()) throw fail("missing field");
      auto v = text::to_double(tok[i]);
      if (!v) throw fail(fmt::format("bad number '{}'", tok[i]));
      return *v;
    };
    const auto integer = [&](std::size_t i) {
      if (i >= tok.size()) throw fail("missing field");
      auto v = text::to_int(tok[i]);
      if (!v) throw fail(fmt::format("bad integer '{}'", tok[i]));
      return static_cast<int>(*v);
    };
    const auto pose_at = [&](std::size_t i) {
      std::vector<double> v;
      for (std::size_t k = 0; k < 7; ++k) v.push_back(num(i + k));
      return parse_pose(v);
    };
    if (tok[0] == "OPTIONS" && tok.size() == 5) {
      options.base_prior_variance = num(1);
      options.axis_offset = num(2);
      options.huber_delta = num(3);
      options.anchor_base = integer(4) != 0;
    } else if (tok[0] == "PRIOR" && tok.size() == 8) {
      prior = pose_at(1);
    } else if (tok[0] == "STATE" && tok.size() == 10) {
      const int id = integer(2);
      const Pose p = pose_at(3);
      if (tok[1] == "BASE") state.base = p;
      else if (tok[1] == "CAMERA") camera_states[id] = p;
      else if (tok[1] == "OBJECT") state.objects[id] = p;
      else throw fail(fmt::format("unknown state kind '{}'", tok[1]));
    } else if (tok[0] == "FACTOR" && tok.size() == 16 && tok[1] == "CAMERA") {
      CameraPoseFactor f;
      f.t = integer(2);
      f.measurement = pose_at(3);
      for (int k = 0; k < 6; ++k) f.covariance(k) = num(static_cast<std::size_t>(10 + k));
      cameras.push_back(f);
    } else if (tok[0] == "FACTOR" && tok.size() == 13 && tok[1] == "OBJECT") {
      ObjectPoseFactor f;
      f.t = integer(2);
      f.object_id = integer(3);
      if (tok[4] != "SYM" && tok[4] != "ASYM") throw fail("object factor kind must be SYM or ASYM");
      f.symmetric = tok[4] == "SYM";
      f.measurement = pose_at(5);
      f.sigma_norm = num(12);
      objects.push_back(f);
    } else {
      throw fail(fmt::format("unrecognized record '{}'", tok[0]));
    }
  }

  FactorGraph graph(prior, options);
  int t = 0;
  for (const auto& [id, pose] : camera_states) {
    if (id != t++) throw ParseError("graph dump", 0, "camera states are not contiguous from 0");
    state.cameras.push_back(pose);
  }
  if (cameras.size() != state.cameras.size()) {
    throw ParseError("graph dump", 0, "camera factor count does not match camera states");
  }
  for (const auto& f : objects) {
    if (f.t < 0 || f.t >= static_cast<int>(state.cameras.size()) || !state.objects.contains(f.object_id)) {
      throw ParseError("graph dump", 0, fmt::format("object factor at t={} references a missing state", f.t));
    }
    graph.object_symmetric_[f.object_id] = f.symmetric;
  }
  graph.state_ = std::move(state);
  graph.camera_factors_ = std::move(cameras);
  graph.object_factors_ = std::move(objects);
  return graph;
}

}  // namespace ambipose
