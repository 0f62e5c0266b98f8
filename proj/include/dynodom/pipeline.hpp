#pragma once

// End-to-end odometry over a sequence: instance clouds, tracking, voting,
// deformation checks, masked features, frame-to-frame pose and pose graph.

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dynodom/config.hpp"
#include "dynodom/dataset_io.hpp"
#include "dynodom/evaluation.hpp"
#include "dynodom/pose_graph.hpp"

namespace dynodom {

struct VoteLogRow {
  std::size_t frame = 0;
  int track_id = 0;
  int votes = 0;
  bool dynamic = false;
};

struct ObjectReportRow {
  std::size_t frame = 0;
  double timestamp = 0.0;
  int track_id = 0;
  std::string class_name;
  Point3 centroid = Point3::Zero();  ///< camera frame
  std::size_t points = 0;
  bool voted_dynamic = false;
  std::optional<double> deformation;
  bool deformable = false;
  bool excluded = false;
};

struct RunSummary {
  std::size_t frames = 0;
  std::size_t tracks_created = 0;
  std::size_t closures_inserted = 0;
  std::vector<std::size_t> extrapolated_frames;  ///< frames without a pose estimate
  std::size_t indeterminate_vote_frames = 0;
  std::size_t rejected_instances = 0;
  double frame_rate = 0.0;
  bool low_frame_rate = false;
  std::optional<OptimizeResult> optimization;
  std::optional<MetricReport> metrics;  ///< when ground truth is available
  std::vector<std::string> stages;      ///< in execution order, "(off)" marks disabled ones
};

struct RunResult {
  Trajectory trajectory;
  PoseGraph graph;
  std::vector<VoteLogRow> votes;
  std::vector<ObjectReportRow> objects;
  RunSummary summary;
};

/// Called after every processed frame with (frame index, frame count).
using ProgressFn = std::function<void(std::size_t, std::size_t)>;

RunResult run_pipeline(const SequenceReader& reader, const RunConfig& config,
                       const ProgressFn& progress = {});

/// Writes trajectory.txt, votes.csv, objects.csv, summary.txt and, when the
/// pose graph was used, pose_graph.txt.
void write_run_outputs(const RunResult& result, const RunConfig& config,
                       const std::filesystem::path& out_dir);

void write_summary(const RunResult& result, const RunConfig& config, std::ostream& out);

}  // namespace dynodom
