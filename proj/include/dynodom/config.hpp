#pragma once

// Flat key = value run configuration with every pipeline parameter and the
// ablation switches.

#include <filesystem>
#include <ostream>
#include <set>
#include <string>

#include "dynodom/depth_geometry.hpp"
#include "dynodom/dynamic_voting.hpp"
#include "dynodom/instance_clouds.hpp"
#include "dynodom/intra_motion.hpp"
#include "dynodom/types.hpp"
#include "dynodom/visual_frontend.hpp"

namespace dynodom {

struct RunConfig {
  CameraIntrinsics intrinsics;
  double max_time_diff = 0.02;

  GaussianKernelParams kernel;
  VoxelParams voxel;
  DbscanParams dbscan;

  double track_gate = 0.5;
  int max_missed_frames = 5;
  VotingParams voting;  ///< frame_rate <= 0 means "measure from timestamps"
  ChamferParams chamfer;
  std::set<std::string> dynamic_classes{"person"};
  int min_instance_pixels = 50;

  FastBriefParams features;
  double match_ratio = 0.75;
  double match_max_pixels = 80.0;
  int mask_dilation = 5;
  RansacParams ransac;
  int epipolar_iterations = 300;
  double epipolar_threshold = 1.5;  ///< pixels

  double odometry_weight = 1.0;
  double closure_weight = 10.0;
  double loop_radius = 0.3;
  int loop_min_gap = 30;
  int loop_min_inliers = 40;
  int pgo_max_iterations = 50;
  double pgo_damping = 1e-4;

  std::size_t eval_delta = 1;

  bool enable_voting = true;
  bool enable_intra_motion = true;
  bool enable_outlier_rejection = true;
  bool enable_pgo = true;

  /// Delegates to the owning modules' parameter checks.
  void validate() const;
};

/// Applies one "key = value" assignment; unknown keys throw ParseError.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

/// Parses a configuration text on top of the defaults. '#' starts a comment.
RunConfig parse_config(const std::string& text);
RunConfig read_config(const std::filesystem::path& path);

/// Writes every key with its current value, one per line.
void write_config(const RunConfig& config, std::ostream& out);

/// Markdown reference of every key, its default and meaning.
void write_config_reference(std::ostream& out);

}  // namespace dynodom
