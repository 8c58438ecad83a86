#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "ambipose/liegroups.hpp"

namespace ambipose {

/// One residual term linearized at the current states.
///
/// value stacks translation errors before rotation errors. jacobians holds
/// one (value.size() x 6) block per involved state, differentiated with
/// respect to the right perturbation T * Exp([rho; phi]). weight is the
/// diagonal of the information matrix.
struct ResidualBlock {
  Eigen::VectorXd value;
  std::vector<Eigen::MatrixXd> jacobians;
  Eigen::VectorXd weight;

  double cost() const { return value.dot(weight.cwiseProduct(value)); }
};

/// Forward-kinematics factor between the base B and camera C_t:
/// dt = R_B^T (t_C - t_B) - t_meas, dphi = Log(R_meas^T R_B^T R_C).
/// Unit weight; the caller applies the factor covariance.
ResidualBlock camera_residual(const Pose& base, const Pose& camera, const Pose& measurement);

/// Full 6-DoF object factor, same algebra as camera_residual with weight
/// sigma_norm^-2 on every entry.
ResidualBlock asymmetric_object_residual(const Pose& camera, const Pose& object, const Pose& measurement,
                                         double sigma_norm = 1.0);

/// Dominant-axis factor for symmetric objects. Compares the object center
/// and a point `axis_offset` along object z, both expressed in the camera
/// frame, between the predicted relative pose C^-1 O and the measurement.
/// Six entries (center then axis point); rotation about object z is free.
ResidualBlock symmetric_object_residual(const Pose& camera, const Pose& object, const Pose& measurement,
                                        double sigma_norm = 1.0, double axis_offset = 1.0);

/// Absolute prior on one pose: dt = t - t_prior, dphi = Log(R_prior^T R).
ResidualBlock prior_residual(const Pose& state, const Pose& prior);

struct CameraPoseFactor {
  int t = 0;
  Pose measurement;  // base to camera
  /// Variances of (dt_x, dt_y, dt_z, dphi_x, dphi_y, dphi_z), m^2 and rad^2.
  Vector6 covariance = Vector6::Constant(1e-6);
};

struct ObjectPoseFactor {
  int t = 0;
  int object_id = 0;
  Pose measurement;  // camera to object
  double sigma_norm = 1.0;
  bool symmetric = false;
};

/// Base, time-indexed cameras and id-indexed objects, all in the world frame.
struct StateVector {
  Pose base;
  std::vector<Pose> cameras;
  std::map<int, Pose> objects;
};

struct GraphOptions {
  double base_prior_variance = 1e-12;
  double axis_offset = 1.0;  // meters, symmetric-factor constraint point
  double huber_delta = 0.0;  // whitened residual norm; <= 0 disables
  bool anchor_base = true;
};

struct SolverOptions {
  int max_iterations = 200;
  double relative_tolerance = 1e-9;
  double gradient_tolerance = 1e-10;
  double initial_damping = 1e-3;
};

struct OptimizationReport {
  std::vector<double> cost_trace;  // initial cost, then every accepted step
  int iterations = 0;
  std::string termination;
};

/// Object-level pose graph: one base, one camera per time step, one state
/// per object. Single writer; not safe for concurrent mutation.
class FactorGraph {
 public:
  explicit FactorGraph(const Pose& base_estimate = Pose::identity(), GraphOptions options = {});

  /// Appends time step t (must equal the number of cameras). New cameras
  /// start at base * F.meas, new objects at camera * P.meas.
  /// Throws DuplicateTime for a time step that already exists.
  void add_measurement(int t, const CameraPoseFactor& camera, std::span<const ObjectPoseFactor> objects);

  /// Levenberg-Marquardt on the manifold. Throws RankDeficient when the
  /// gauge is free or a state is not fully constrained.
  OptimizationReport optimize(const SolverOptions& options = {});

  /// Sum over factors of r^T W r at the current states (base prior included).
  double total_cost() const;

  const StateVector& state() const { return state_; }
  StateVector& mutable_state() { return state_; }
  const GraphOptions& options() const { return options_; }
  const Pose& base_prior() const { return base_prior_; }
  const std::vector<CameraPoseFactor>& camera_factors() const { return camera_factors_; }
  const std::vector<ObjectPoseFactor>& object_factors() const { return object_factors_; }

  std::size_t num_states() const { return 1 + state_.cameras.size() + state_.objects.size(); }
  /// Camera and object factors; the base prior is not counted.
  std::size_t num_factors() const { return camera_factors_.size() + object_factors_.size(); }

  /// Line-oriented text form of states and factors. load(dump()) reproduces
  /// the graph exactly.
  std::string dump() const;
  static FactorGraph load(std::string_view text);

 private:
  struct Linearized;
  Linearized linearize(const StateVector& state, bool with_jacobians) const;
  void check_rank(const Linearized& lin) const;

  GraphOptions options_;
  Pose base_prior_;
  StateVector state_;
  std::vector<CameraPoseFactor> camera_factors_;
  std::vector<ObjectPoseFactor> object_factors_;
  std::map<int, bool> object_symmetric_;
};

}  // namespace ambipose
