#include "ambipose/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ambipose/error.hpp"
#include "ambipose/pipeline.hpp"

namespace ambipose {

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> sigma_o;
  std::optional<double> sigma_icp;
  bool no_icp = false;
  std::string sweep;
  std::string replay;
  bool dump_graph = false;
};

void add_flags(CLI::App& app, Flags& f) {
  app.add_option("--config", f.config, "Config file (key=value with [section] headers)");
  app.add_option("--out", f.out, "Output directory");
  app.add_option("--seed", f.seed, "Scenario seed");
  app.add_option("--sigma-o", f.sigma_o, "Axis uncertainty threshold");
  app.add_option("--sigma-icp", f.sigma_icp, "ICP gating threshold");
  app.add_flag("--no-icp", f.no_icp, "Disable ICP refinement");
  app.add_option("--sweep-sigma-o", f.sweep, "Sweep sigma_o over LO:HI:STEP");
  app.add_option("--replay", f.replay, "Replay a saved measurement file");
  app.add_flag("--dump-graph", f.dump_graph, "Write the factor graph to graph.txt");
}

RunConfig apply_flags(const Flags& f) {
  RunConfig config;
  if (!f.config.empty()) apply_config_file(f.config, config);
  if (!f.out.empty()) config.output_dir = f.out;
  if (f.seed) config.scenario.seed = *f.seed;
  if (f.sigma_o) config.sigma_o = *f.sigma_o;
  if (f.sigma_icp) config.sigma_icp = *f.sigma_icp;
  if (f.no_icp) config.icp = false;
  if (!f.sweep.empty()) config.sweep = parse_sweep(f.sweep);
  if (!f.replay.empty()) config.replay_path = f.replay;
  if (f.dump_graph) config.dump_graph = true;
  config.validate();
  return config;
}

std::vector<std::string> reversed(const std::vector<std::string>& args) {
  // CLI11 consumes a reversed argument vector.
  return {args.rbegin(), args.rend()};
}

}  // namespace

RunConfig resolve_config(const std::vector<std::string>& args) {
  CLI::App app{"ambipose"};
  Flags flags;
  add_flags(app, flags);
  try {
    auto rev = reversed(args);
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what());
  }
  return apply_flags(flags);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ambiguity-aware multi-view object pose estimation on simulated scenes", "ambipose"};
  Flags flags;
  add_flags(app, flags);
  try {
    auto rev = reversed(args);
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  RunConfig config;
  try {
    config = apply_flags(flags);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  sim::Scenario scenario;
  ScenarioResult result;
  try {
    result = run_pipeline(config, &scenario);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  err << fmt::format("valid axes: {} of {}\n", result.valid_axes, result.total_axes);
  for (const auto& w : result.warnings) err << "warning: " << w << "\n";

  try {
    write_outputs(scenario, result, config);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }

  if (result.solver_error) {
    err << "solver failure: " << *result.solver_error << "\n";
    return kExitSolver;
  }
  out << fmt::format("mean ADD(-S) raw {:.6f} optimized {:.6f}\n", evaluation::mean_add_s(scenario, result, "raw"),
                     evaluation::mean_add_s(scenario, result, "optimized"));
  out << "outputs written to " << config.output_dir.string() << "\n";
  return kExitOk;
}

}  // namespace ambipose
