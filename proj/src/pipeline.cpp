#include "ambipose/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <set>

#include <fmt/format.h>

#include "ambipose/error.hpp"

namespace ambipose {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

PoseError missing_error() { return {kInf, kInf, kInf, kInf}; }

PoseError safe_pose_error(const sim::Scenario& scenario, const Pose& est, const Pose& gt, const ObjectModel& model) {
  PoseError e;
  e.add = add_error(est, gt, model);
  e.add_s = adds_error(est, gt, model);
  e.mssd = mssd(est, gt, model, scenario.continuous_discretization);
  try {
    e.mspd = mspd(est, gt, model, scenario.intrinsics, scenario.continuous_discretization);
  } catch (const BehindCamera&) {
    e.mspd = kInf;
  }
  return e;
}

std::vector<MetricRow> raw_rows(const sim::Scenario& scenario, const std::vector<FrameProposal>& proposals) {
  std::vector<MetricRow> rows;
  std::size_t k = 0;
  for (const auto& frame : scenario.frames) {
    for (const auto& obs : frame.objects) {
      const FrameProposal& p = proposals[k++];
      MetricRow row{"raw", frame.t, obs.object_id, missing_error()};
      if (p.proposal) {
        row.error = safe_pose_error(scenario, p.proposal->pose, obs.gt_relative, scenario.model(obs.object_id));
      }
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<MetricRow> optimized_rows(const sim::Scenario& scenario, const StateVector& state) {
  std::vector<MetricRow> rows;
  for (const auto& frame : scenario.frames) {
    for (const auto& obs : frame.objects) {
      MetricRow row{"optimized", frame.t, obs.object_id, missing_error()};
      const auto it = state.objects.find(obs.object_id);
      if (it != state.objects.end() && frame.t < static_cast<int>(state.cameras.size())) {
        const Pose est = compose(inverse(state.cameras[static_cast<std::size_t>(frame.t)]), it->second);
        row.error = safe_pose_error(scenario, est, obs.gt_relative, scenario.model(obs.object_id));
      }
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<RecallSample> recall_samples(const sim::Scenario& scenario, const std::vector<MetricRow>& rows,
                                         const std::string& stage, std::optional<int> object_id) {
  std::vector<RecallSample> out;
  for (const auto& r : rows) {
    if (r.stage != stage || (object_id && r.object_id != *object_id)) continue;
    out.push_back({r.error.mssd, r.error.mspd, std::nullopt, scenario.model(r.object_id).diameter});
  }
  return out;
}

std::vector<ObjectSummary> summarize(const sim::Scenario& scenario, const std::vector<MetricRow>& rows,
                                     double auc_threshold) {
  std::vector<ObjectSummary> out;
  const auto thresholds = RecallThresholds::bop(scenario.intrinsics.width);
  for (const std::string stage : {"raw", "optimized"}) {
    for (const auto& model : scenario.models) {
      std::vector<double> add;
      for (const auto& r : rows) {
        if (r.stage == stage && r.object_id == model.id) {
          add.push_back(model.symmetric() ? r.error.add_s : r.error.add);
        }
      }
      if (add.empty()) continue;
      ObjectSummary s;
      s.stage = stage;
      s.object_id = model.id;
      s.auc_add = auc(add, auc_threshold);
      s.recall = average_recall(recall_samples(scenario, rows, stage, model.id), thresholds);
      out.push_back(s);
    }
  }
  return out;
}

double pooled_recall(const sim::Scenario& scenario, const std::vector<MetricRow>& rows, const std::string& stage) {
  const auto samples = recall_samples(scenario, rows, stage, std::nullopt);
  if (samples.empty()) return 0.0;
  return average_recall(samples, RecallThresholds::bop(scenario.intrinsics.width)).mssd_mspd();
}

}  // namespace

std::vector<FrameProposal> front_end(const sim::Scenario& scenario, const RunConfig& config) {
  std::vector<FrameProposal> out;
  for (const auto& frame : scenario.frames) {
    for (const auto& obs : frame.objects) {
      const ObjectModel& model = scenario.model(obs.object_id);
      FrameProposal fp;
      fp.t = frame.t;
      fp.object_id = obs.object_id;
      // A sweep may start at zero, where no axis can pass.
      const auto merged = config.sigma_o > 0.0 ? select_and_merge(obs.axes, model.layout, config.sigma_o)
                                               : std::optional<MergedKeypoints>{};
      if (merged) {
        fp.valid_axes = static_cast<int>(merged->valid_axes.size());
        try {
          PoseProposal proposal = solve_pnp(scenario.intrinsics, *merged, config.pnp);
          if (config.icp && proposal.sigma_norm < config.sigma_icp &&
              obs.depth_points.size() >= config.icp_options.min_points) {
            proposal = refine_icp(proposal, obs.depth_points, model, config.sigma_icp, config.icp_options);
          }
          fp.proposal = proposal;
        } catch (const DegenerateConfiguration&) {
          // No usable pose from this frame.
        }
      }
      out.push_back(fp);
    }
  }
  return out;
}

FactorGraph build_graph(const sim::Scenario& scenario, const std::vector<FrameProposal>& proposals,
                        const RunConfig& config) {
  FactorGraph graph(Pose::identity(), config.graph);
  std::size_t k = 0;
  for (const auto& frame : scenario.frames) {
    CameraPoseFactor camera;
    camera.t = frame.t;
    camera.measurement = frame.fk_measurement;
    camera.covariance = config.camera_covariance;
    std::vector<ObjectPoseFactor> objects;
    for (std::size_t i = 0; i < frame.objects.size(); ++i) {
      const FrameProposal& p = proposals[k++];
      if (!p.proposal) continue;
      ObjectPoseFactor f;
      f.t = frame.t;
      f.object_id = p.object_id;
      f.measurement = p.proposal->pose;
      f.sigma_norm = std::max(p.proposal->sigma_norm, config.min_factor_sigma);
      f.symmetric = scenario.model(p.object_id).symmetric();
      objects.push_back(f);
    }
    graph.add_measurement(frame.t, camera, objects);
  }
  return graph;
}

ScenarioResult process(const sim::Scenario& scenario, const RunConfig& config) {
  config.validate();
  ScenarioResult result;
  result.warnings = scenario.warnings;
  result.proposals = front_end(scenario, config);
  for (const auto& p : result.proposals) {
    result.valid_axes += p.valid_axes;
    result.total_axes += 3;
  }
  result.rows = raw_rows(scenario, result.proposals);

  try {
    FactorGraph graph = build_graph(scenario, result.proposals, config);
    result.report = graph.optimize(config.solver);
    result.optimized = graph.state();
    if (config.dump_graph) result.graph_dump = graph.dump();
    const auto opt = optimized_rows(scenario, graph.state());
    result.rows.insert(result.rows.end(), opt.begin(), opt.end());
  } catch (const Error& e) {
    result.solver_error = e.what();
  }
  result.summaries = summarize(scenario, result.rows, config.auc_max_threshold);

  if (config.sweep) {
    for (double sigma_o : config.sweep->values()) {
      RunConfig c = config;
      c.sigma_o = sigma_o;
      c.sweep.reset();
      SweepRow row;
      row.sigma_o = sigma_o;
      const auto proposals = front_end(scenario, c);
      for (const auto& p : proposals) {
        row.valid_axes += p.valid_axes;
        row.accepted += p.proposal ? 1 : 0;
      }
      row.ar_raw = pooled_recall(scenario, raw_rows(scenario, proposals), "raw");
      try {
        FactorGraph graph = build_graph(scenario, proposals, c);
        graph.optimize(c.solver);
        row.ar_optimized = pooled_recall(scenario, optimized_rows(scenario, graph.state()), "optimized");
      } catch (const Error&) {
        row.ar_optimized.reset();
      }
      result.sweep.push_back(row);
    }
  }
  return result;
}

ScenarioResult run_pipeline(const RunConfig& config, sim::Scenario* scenario_out) {
  config.validate();
  sim::Scenario scenario =
      config.replay_path ? sim::load_measurements(*config.replay_path) : sim::generate(config.scenario);
  ScenarioResult result = process(scenario, config);
  if (scenario_out != nullptr) *scenario_out = std::move(scenario);
  return result;
}

namespace evaluation {

Pose to_gt_world(const sim::Scenario& scenario, const Pose& estimate_world) {
  return compose(scenario.base, estimate_world);
}

double optimized_position_rmse(const sim::Scenario& scenario, const ScenarioResult& result) {
  if (!result.optimized) return kInf;
  double sq = 0.0;
  int n = 0;
  for (const auto& [id, gt] : scenario.gt_objects) {
    const auto it = result.optimized->objects.find(id);
    if (it == result.optimized->objects.end()) return kInf;
    sq += (to_gt_world(scenario, it->second).translation() - gt.translation()).squaredNorm();
    ++n;
  }
  return std::sqrt(sq / n);
}

std::optional<double> best_single_frame_rmse(const sim::Scenario& scenario, const ScenarioResult& result) {
  std::optional<double> best;
  std::size_t k = 0;
  for (const auto& frame : scenario.frames) {
    double sq = 0.0;
    std::set<int> seen;
    for (std::size_t i = 0; i < frame.objects.size(); ++i) {
      const FrameProposal& p = result.proposals[k++];
      if (!p.proposal) continue;
      const Pose world = to_gt_world(scenario, compose(frame.fk_measurement, p.proposal->pose));
      sq += (world.translation() - scenario.gt_objects.at(p.object_id).translation()).squaredNorm();
      seen.insert(p.object_id);
    }
    if (seen.size() != scenario.gt_objects.size()) continue;
    const double rmse = std::sqrt(sq / static_cast<double>(seen.size()));
    if (!best || rmse < *best) best = rmse;
  }
  return best;
}

double center_jitter(const sim::Scenario& scenario, const ScenarioResult& result, bool optimized) {
  std::map<int, std::vector<Vector2>> offsets;
  std::size_t k = 0;
  for (const auto& frame : scenario.frames) {
    for (const auto& obs : frame.objects) {
      const FrameProposal& p = result.proposals[k++];
      std::optional<Pose> est;
      if (optimized) {
        if (result.optimized && result.optimized->objects.contains(obs.object_id)) {
          est = compose(inverse(result.optimized->cameras[static_cast<std::size_t>(frame.t)]),
                        result.optimized->objects.at(obs.object_id));
        }
      } else if (p.proposal) {
        est = p.proposal->pose;
      }
      if (!est || est->translation().z() <= kMinDepth) continue;
      offsets[obs.object_id].push_back(project(scenario.intrinsics, est->translation()) -
                                       project(scenario.intrinsics, obs.gt_relative.translation()));
    }
  }
  std::vector<double> changes;
  for (const auto& [id, seq] : offsets) {
    for (std::size_t i = 1; i < seq.size(); ++i) {
      const Vector2 d = seq[i] - seq[i - 1];
      changes.push_back(d.x());
      changes.push_back(d.y());
    }
  }
  if (changes.size() < 2) return 0.0;
  double mean = 0.0;
  for (double c : changes) mean += c;
  mean /= static_cast<double>(changes.size());
  double var = 0.0;
  for (double c : changes) var += (c - mean) * (c - mean);
  return std::sqrt(var / static_cast<double>(changes.size() - 1));
}

namespace {

template <typename Field>
double mean_field(const ScenarioResult& result, const std::string& stage, Field field) {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : result.rows) {
    const double v = field(r);
    if (r.stage != stage || !std::isfinite(v)) continue;
    sum += v;
    ++n;
  }
  return n > 0 ? sum / n : kInf;
}

}  // namespace

double mean_mssd(const ScenarioResult& result, const std::string& stage) {
  return mean_field(result, stage, [](const MetricRow& r) { return r.error.mssd; });
}

double mean_add_s(const sim::Scenario& scenario, const ScenarioResult& result, const std::string& stage) {
  return mean_field(result, stage, [&](const MetricRow& r) {
    return scenario.model(r.object_id).symmetric() ? r.error.add_s : r.error.add;
  });
}

}  // namespace evaluation

std::string format_metrics_csv(const ScenarioResult& result) {
  std::string out = "stage,kind,frame,object,add,add_s,mssd,mspd,auc_add,ar_mssd,ar_mspd,ar\n";
  for (const auto& r : result.rows) {
    out += fmt::format("{},sample,{},{},{},{},{},{},,,,\n", r.stage, r.t, r.object_id, r.error.add, r.error.add_s,
                       r.error.mssd, r.error.mspd);
  }
  for (const auto& s : result.summaries) {
    out += fmt::format("{},summary,,{},,,,,{},{},{},{}\n", s.stage, s.object_id, s.auc_add, s.recall.mssd,
                       s.recall.mspd, s.recall.mssd_mspd());
  }
  return out;
}

std::string format_sweep_csv(const ScenarioResult& result) {
  std::string out = "sigma_o,valid_axes,accepted,ar_raw,ar_optimized\n";
  for (const auto& r : result.sweep) {
    out += fmt::format("{},{},{},{},{}\n", r.sigma_o, r.valid_axes, r.accepted, r.ar_raw,
                       r.ar_optimized ? fmt::format("{}", *r.ar_optimized) : std::string("nan"));
  }
  return out;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  out << content;
  if (!out) throw IoError(fmt::format("failed writing {}", path.string()));
}

}  // namespace

void write_outputs(const sim::Scenario& scenario, const ScenarioResult& result, const RunConfig& config) {
  const auto& dir = config.output_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError(fmt::format("cannot create output directory {}", dir.string()));
  }
  sim::save_measurements(scenario, dir / "measurements.txt");

  std::string proposals = "frame,object,valid_axes,accepted,sigma_norm,reprojection_rmse,icp,converged,qw,qx,qy,qz,tx,ty,tz\n";
  for (const auto& p : result.proposals) {
    if (p.proposal) {
      const auto& q = *p.proposal;
      std::string pose = format_pose(q.pose);
      std::replace(pose.begin(), pose.end(), ' ', ',');
      proposals += fmt::format("{},{},{},1,{},{},{},{},{}\n", p.t, p.object_id, p.valid_axes, q.sigma_norm,
                               q.reprojection_rmse, q.refined_by_icp ? 1 : 0, q.converged ? 1 : 0, pose);
    } else {
      proposals += fmt::format("{},{},{},0,,,,,,,,,,,\n", p.t, p.object_id, p.valid_axes);
    }
  }
  write_file(dir / "proposals.csv", proposals);

  std::string optimized = "kind,id,qw,qx,qy,qz,tx,ty,tz\n";
  if (result.optimized) {
    const auto row = [](const char* kind, int id, const Pose& p) {
      std::string pose = format_pose(p);
      std::replace(pose.begin(), pose.end(), ' ', ',');
      return fmt::format("{},{},{}\n", kind, id, pose);
    };
    optimized += row("base", 0, result.optimized->base);
    for (std::size_t i = 0; i < result.optimized->cameras.size(); ++i) {
      optimized += row("camera", static_cast<int>(i), result.optimized->cameras[i]);
    }
    for (const auto& [id, pose] : result.optimized->objects) optimized += row("object", id, pose);
  }
  write_file(dir / "optimized.csv", optimized);
  write_file(dir / "metrics.csv", format_metrics_csv(result));

  std::string trace = "iteration,cost\n";
  for (std::size_t i = 0; i < result.report.cost_trace.size(); ++i) {
    trace += fmt::format("{},{}\n", i, result.report.cost_trace[i]);
  }
  write_file(dir / "cost_trace.csv", trace);
  if (config.sweep) write_file(dir / "sweep.csv", format_sweep_csv(result));
  if (config.dump_graph && !result.graph_dump.empty()) write_file(dir / "graph.txt", result.graph_dump);

  std::string summary;
  summary += fmt::format("valid_axes {} of {}\n", result.valid_axes, result.total_axes);
  int accepted = 0;
  for (const auto& p : result.proposals) accepted += p.proposal ? 1 : 0;
  summary += fmt::format("accepted_proposals {} of {}\n", accepted, result.proposals.size());
  summary += fmt::format("mean_add_s_raw {}\n", evaluation::mean_add_s(scenario, result, "raw"));
  summary += fmt::format("mean_mssd_raw {}\n", evaluation::mean_mssd(result, "raw"));
  if (result.optimized) {
    summary += fmt::format("mean_add_s_optimized {}\n", evaluation::mean_add_s(scenario, result, "optimized"));
    summary += fmt::format("mean_mssd_optimized {}\n", evaluation::mean_mssd(result, "optimized"));
    summary += fmt::format("solver_iterations {}\n", result.report.iterations);
    summary += fmt::format("solver_termination {}\n", result.report.termination);
    summary += fmt::format("center_jitter_raw_px {}\n", evaluation::center_jitter(scenario, result, false));
    summary += fmt::format("center_jitter_optimized_px {}\n", evaluation::center_jitter(scenario, result, true));
  }
  if (result.solver_error) summary += fmt::format("solver_error {}\n", *result.solver_error);
  for (const auto& w : result.warnings) summary += fmt::format("warning {}\n", w);
  write_file(dir / "summary.txt", summary);
}

}  // namespace ambipose
