#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ambipose/config.hpp"
#include "ambipose/graph.hpp"
#include "ambipose/metrics.hpp"
#include "ambipose/pose_init.hpp"
#include "ambipose/sim.hpp"

namespace ambipose {

/// Single-view result for one object in one frame.
struct FrameProposal {
  int t = 0;
  int object_id = 0;
  int valid_axes = 0;
  std::optional<PoseProposal> proposal;  // empty when every axis was rejected
};

struct MetricRow {
  std::string stage;  // "raw" or "optimized"
  int t = 0;
  int object_id = 0;
  PoseError error;  // infinite when the stage has no estimate
};

struct ObjectSummary {
  std::string stage;
  int object_id = 0;
  double auc_add = 0.0;  // AUC of ADD(-S)
  AverageRecall recall;
};

struct SweepRow {
  double sigma_o = 0.0;
  int valid_axes = 0;
  int accepted = 0;
  double ar_raw = 0.0;
  std::optional<double> ar_optimized;
};

struct ScenarioResult {
  std::vector<FrameProposal> proposals;
  std::optional<StateVector> optimized;
  OptimizationReport report;
  std::vector<MetricRow> rows;
  std::vector<ObjectSummary> summaries;
  std::vector<SweepRow> sweep;
  std::string graph_dump;
  int valid_axes = 0;
  int total_axes = 0;
  std::vector<std::string> warnings;
  /// Set when optimization failed; rows then hold raw metrics only.
  std::optional<std::string> solver_error;
};

/// Runs selection, PnP and gated ICP on every observation.
std::vector<FrameProposal> front_end(const sim::Scenario& scenario, const RunConfig& config);

/// Builds the factor graph from accepted proposals.
FactorGraph build_graph(const sim::Scenario& scenario, const std::vector<FrameProposal>& proposals,
                        const RunConfig& config);

/// Front end, graph optimization, metrics and (when configured) the sigma_o
/// sweep. Solver failures are captured in solver_error.
ScenarioResult process(const sim::Scenario& scenario, const RunConfig& config);

/// Generates the configured scenario, or loads config.replay_path, then
/// processes it.
ScenarioResult run_pipeline(const RunConfig& config, sim::Scenario* scenario_out = nullptr);

/// Ground-truth evaluation helpers shared by the summary and the tests.
namespace evaluation {

/// Estimated world pose mapped into the ground-truth world frame.
Pose to_gt_world(const sim::Scenario& scenario, const Pose& estimate_world);

/// RMS object position error of the optimized object states.
double optimized_position_rmse(const sim::Scenario& scenario, const ScenarioResult& result);

/// Smallest per-frame position RMSE of the raw proposals, over frames where
/// every object has a proposal; each proposal is placed in the world through
/// the forward-kinematics camera. nullopt if no frame qualifies.
std::optional<double> best_single_frame_rmse(const sim::Scenario& scenario, const ScenarioResult& result);

/// Frame-to-frame variation of the reprojected object center: standard
/// deviation of the change, between consecutive observed frames, of the
/// pixel offset between the estimated and the true center, pooled over
/// objects. Uses raw proposals or optimized states.
double center_jitter(const sim::Scenario& scenario, const ScenarioResult& result, bool optimized);

/// Mean of a metric over the finite rows of a stage.
double mean_mssd(const ScenarioResult& result, const std::string& stage);
/// ADD for asymmetric objects, ADD-S for symmetric ones.
double mean_add_s(const sim::Scenario& scenario, const ScenarioResult& result, const std::string& stage);

}  // namespace evaluation

/// Writes measurements.txt, proposals.csv, optimized.csv, metrics.csv,
/// cost_trace.csv, summary.txt and, when configured, sweep.csv and graph.txt.
/// Throws IoError.
void write_outputs(const sim::Scenario& scenario, const ScenarioResult& result, const RunConfig& config);

std::string format_metrics_csv(const ScenarioResult& result);
std::string format_sweep_csv(const ScenarioResult& result);

}  // namespace ambipose
