#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "dynodom/config.hpp"
#include "dynodom/evaluation.hpp"
#include "dynodom/pipeline.hpp"
#include "dynodom/synth.hpp"

namespace fs = std::filesystem;
using namespace dynodom;

namespace {

int cmd_run(const fs::path& seq, const fs::path& config_path, const fs::path& out, bool quiet) {
  // Nothing is written before the config and the sequence index parsed.
  const RunConfig config = read_config(config_path);
  const SequenceReader reader(seq, config.intrinsics, config.max_time_diff);
  const RunResult result = run_pipeline(reader, config, [&](std::size_t i, std::size_t n) {
    if (!quiet && ((i + 1) % 50 == 0 || i + 1 == n)) {
      std::cerr << "frame " << i + 1 << "/" << n << '\n';
    }
  });
  write_run_outputs(result, config, out);
  write_summary(result, config, std::cout);
  return 0;
}

int cmd_eval(const fs::path& est_path, const fs::path& gt_path, std::size_t delta, bool per_second,
             double max_diff, fs::path errors_csv, const fs::path& report_csv) {
  const Trajectory est = read_trajectory(est_path);
  const Trajectory gt = read_trajectory(gt_path);
  EvaluationOptions options;
  options.delta = delta;
  options.per_second = per_second;
  options.max_diff = max_diff;
  const MetricReport report = evaluate(est, gt, options);
  write_report_text(report, std::cout);

  if (errors_csv.empty()) {
    errors_csv = est_path.parent_path() / (est_path.stem().string() + "_errors.csv");
  }
  std::ofstream out(errors_csv);
  if (!out) throw IoError("cannot write " + errors_csv.string());
  write_pose_errors_csv(ate(est, gt, max_diff), out);
  std::cout << "per-pose errors  " << errors_csv.string() << '\n';
  if (!report_csv.empty()) {
    std::ofstream rep(report_csv);
    if (!rep) throw IoError("cannot write " + report_csv.string());
    write_report_csv(report, rep);
  }
  return 0;
}

int cmd_synth(const fs::path& spec_path, const fs::path& out) {
  const synth::SceneSpec spec = synth::read_scene_spec(spec_path);
  const synth::Manifest manifest = synth::generate(spec, out);
  std::cout << manifest.path.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic-object-aware RGB-D odometry"};
  app.require_subcommand(1);

  fs::path seq, config_path, run_out;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "estimate a trajectory for a sequence");
  run->add_option("sequence", seq, "TUM-layout sequence directory")->required();
  run->add_option("--config", config_path, "run configuration file")->required();
  run->add_option("--out", run_out, "output directory")->required();
  run->add_flag("--quiet", quiet, "no progress output");

  fs::path est, gt, errors_csv, report_csv;
  std::size_t delta = 1;
  bool per_second = false;
  double max_diff = 0.02;
  auto* eval = app.add_subcommand("eval", "ATE and RPE of an estimate against ground truth");
  eval->add_option("estimate", est, "estimated trajectory")->required();
  eval->add_option("groundtruth", gt, "ground-truth trajectory")->required();
  eval->add_option("--delta", delta, "RPE offset in frames, or seconds with --per-second")
      ->check(CLI::PositiveNumber);
  eval->add_flag("--per-second", per_second, "RPE over a time offset");
  eval->add_option("--max-diff", max_diff, "timestamp association tolerance, seconds")
      ->check(CLI::PositiveNumber);
  eval->add_option("--errors", errors_csv, "per-pose error CSV (default <estimate>_errors.csv)");
  eval->add_option("--report", report_csv, "metric,value CSV");

  fs::path spec_path, synth_out;
  auto* syn = app.add_subcommand("synth", "generate a synthetic sequence from a scene spec");
  syn->add_option("spec", spec_path, "scene spec (JSON)")->required();
  syn->add_option("--out", synth_out, "output directory")->required();

  bool markdown = false;
  auto* defaults = app.add_subcommand("defaults", "print the default configuration");
  defaults->add_flag("--markdown", markdown, "reference table instead of a config file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(seq, config_path, run_out, quiet);
    if (*eval) return cmd_eval(est, gt, delta, per_second, max_diff, errors_csv, report_csv);
    if (*syn) return cmd_synth(spec_path, synth_out);
    if (*defaults) {
      if (markdown) {
        write_config_reference(std::cout);
      } else {
        write_config(RunConfig{}, std::cout);
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
