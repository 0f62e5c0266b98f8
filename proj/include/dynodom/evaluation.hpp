#pragma once

// Absolute trajectory error and relative pose error in the TUM benchmark
// conventions.

#include <filesystem>
#include <ostream>
#include <vector>

#include "dynodom/dataset_io.hpp"

namespace dynodom {

struct ErrorStats {
  double rmse = 0.0;
  double mean = 0.0;
  double sd = 0.0;  ///< population SD of the error magnitudes
  std::size_t count = 0;
};

/// RMSE / mean / population SD of non-negative error magnitudes.
ErrorStats error_stats(const std::vector<double>& errors);

struct MatchedPose {
  double timestamp = 0.0;
  Se3d estimate;
  Se3d ground_truth;
};

struct Alignment {
  Se3d transform;  ///< maps estimated positions onto ground truth
  std::vector<MatchedPose> pairs;
};

/// Associates by timestamp, then rigidly aligns estimated positions onto
/// ground-truth positions (least squares, no scale). Needs >= 3 pairs.
Alignment align_trajectories(const Trajectory& est, const Trajectory& gt, double max_diff = 0.02);

struct AteResult {
  ErrorStats stats;
  Alignment alignment;
  std::vector<double> errors;  ///< per matched pair, meters
};

AteResult ate(const Trajectory& est, const Trajectory& gt, double max_diff = 0.02);

struct RpeResult {
  ErrorStats translation;  ///< meters
  ErrorStats rotation;     ///< degrees
  std::vector<double> translation_errors;
  std::vector<double> rotation_errors;
};

/// Relative errors over a fixed frame offset `delta` on the matched pairs.
RpeResult rpe(const Trajectory& est, const Trajectory& gt, std::size_t delta = 1,
              double max_diff = 0.02);

/// Relative errors over a time offset: each pair i is compared with the
/// matched pair whose timestamp is closest to t_i + delta_seconds.
RpeResult rpe_per_second(const Trajectory& est, const Trajectory& gt, double delta_seconds = 1.0,
                         double max_diff = 0.02);

struct MetricReport {
  double ate_rmse = 0.0;
  double ate_sd = 0.0;
  double rpe_trans_rmse = 0.0;
  double rpe_trans_sd = 0.0;
  double rpe_rot_rmse = 0.0;
  double rpe_rot_sd = 0.0;
  std::size_t matched_pairs = 0;
};

struct EvaluationOptions {
  std::size_t delta = 1;
  bool per_second = false;
  double max_diff = 0.02;
};

MetricReport evaluate(const Trajectory& est, const Trajectory& gt,
                      const EvaluationOptions& options = {});

void write_report_csv(const MetricReport& report, std::ostream& out);
void write_report_text(const MetricReport& report, std::ostream& out);

/// Per-pose CSV "t,gt_x,gt_y,gt_z,est_x,est_y,est_z,err" with the estimate
/// expressed in the aligned (ground-truth) frame.
void write_pose_errors_csv(const AteResult& result, std::ostream& out);

}  // namespace dynodom
