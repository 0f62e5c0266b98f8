#include "dynodom/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>

#include "dynodom/depth_geometry.hpp"
#include "dynodom/dynamic_voting.hpp"
#include "dynodom/instance_clouds.hpp"
#include "dynodom/intra_motion.hpp"
#include "dynodom/visual_frontend.hpp"

namespace fs = std::filesystem;

namespace dynodom {
namespace {

struct Instance {
  ObjectInstance object;
  std::size_t pixels = 0;
};

// Keypoints of one frame with their camera-frame 3D points, kept for
// validating loop closures.
struct FrameFeatures {
  std::vector<Keypoint> keypoints;
  std::vector<std::optional<Point3>> points;
};

std::vector<Instance> extract_instances(const FrameBundle& frame, const RunConfig& config,
                                        std::size_t& rejected) {
  std::vector<Instance> out;
  if (!frame.masks) return out;
  const auto& labels = frame.masks->label_map;
  std::map<std::uint16_t, std::size_t> counts;
  for (Eigen::Index v = 0; v < labels.rows(); ++v) {
    for (Eigen::Index u = 0; u < labels.cols(); ++u) {
      if (labels(v, u)) ++counts[labels(v, u)];
    }
  }
  for (const auto& entry : frame.masks->entries) {
    const auto it = counts.find(entry.id);
    if (it == counts.end() || it->second < static_cast<std::size_t>(config.min_instance_pixels)) {
      continue;
    }
    PointCloud cloud = mask_to_cloud(frame.depth, labels, entry.id, config.intrinsics, config.kernel);
    if (cloud.empty()) continue;
    if (config.enable_outlier_rejection) {
      try {
        cloud = reject_outliers(cloud, config.voxel, config.dbscan);
      } catch (const NumericalError&) {
        ++rejected;
        continue;
      }
    }
    Instance inst;
    inst.pixels = it->second;
    inst.object.mask_id = entry.id;
    inst.object.class_name = entry.class_name;
    inst.object.frame_timestamp = frame.timestamp;
    inst.object.centroid = centroid(cloud);
    inst.object.cloud = std::move(cloud);
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<std::optional<Point3>> lift_keypoints(const std::vector<Keypoint>& keypoints,
                                                  const DepthFrame& depth,
                                                  const RunConfig& config) {
  const GaussianKernel kernel(config.kernel);
  std::vector<std::optional<Point3>> out;
  out.reserve(keypoints.size());
  for (const auto& k : keypoints) {
    const int u = static_cast<int>(std::lround(k.u));
    const int v = static_cast<int>(std::lround(k.v));
    const auto z = depth.contains(u, v) ? denoise_depth_at(depth, u, v, kernel) : std::nullopt;
    out.push_back(z ? std::optional<Point3>(backproject<double>(k.u, k.v, *z, config.intrinsics))
                    : std::nullopt);
  }
  return out;
}

// Registration of the current frame against an earlier one; returns the
// pose mapping earlier-frame points onto current-frame points.
std::optional<PoseEstimate> register_frames(const FrameFeatures& earlier,
                                            const FrameFeatures& current,
                                            const RunConfig& config) {
  const IndexPairs matches =
      match_descriptors(earlier.keypoints, current.keypoints, config.match_ratio);
  std::vector<Correspondence3d> corrs;
  for (const auto& [a, b] : matches) {
    if (earlier.points[a] && current.points[b]) corrs.push_back({*earlier.points[a], *current.points[b]});
  }
  if (corrs.size() < static_cast<std::size_t>(config.loop_min_inliers)) return std::nullopt;
  RansacParams params = config.ransac;
  params.min_inliers = config.loop_min_inliers;
  try {
    return estimate_pose_ransac(corrs, params);
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::vector<std::string> stage_list(const RunConfig& c) {
  auto mark = [](const char* name, bool on) { return std::string(name) + (on ? "" : " (off)"); };
  return {"load",
          "denoise+backproject",
          mark("outlier_rejection", c.enable_outlier_rejection),
          "centroid",
          "tracking",
          mark("voting", c.enable_voting),
          mark("intra_motion", c.enable_intra_motion),
          "feature_masking",
          "pose",
          mark("pose_graph", c.enable_pgo)};
}

}  // namespace

RunResult run_pipeline(const SequenceReader& reader, const RunConfig& config,
                       const ProgressFn& progress) {
  config.validate();
  const std::size_t n = reader.size();
  if (n == 0) throw PreconditionError("run: sequence has no associated frames");

  RunResult result;
  RunSummary& summary = result.summary;
  summary.stages = stage_list(config);

  VotingParams voting = config.voting;
  if (voting.frame_rate <= 0) {
    const double span = n > 1 ? reader.timestamp(n - 1) - reader.timestamp(0) : 0.0;
    voting.frame_rate = span > 0 ? static_cast<double>(n - 1) / span : 30.0;
  }
  summary.frame_rate = voting.frame_rate;
  summary.low_frame_rate = !voting.frame_rate_supported();

  const FastBriefDetector detector(config.features);
  RansacParams epipolar_params = config.ransac;
  epipolar_params.iterations = config.epipolar_iterations;
  epipolar_params.inlier_threshold = config.epipolar_threshold;
  epipolar_params.min_inliers = 8;

  PoseGraph& graph = result.graph;
  graph = PoseGraph::with_origin();
  std::vector<FrameFeatures> stored;  // per node, only with the pose graph enabled

  std::map<int, ObjectTrack> tracks;
  std::vector<ObjectInstance> prev_objects;
  int next_track_id = 0;

  std::optional<FrameBundle> prev_frame;
  FrameFeatures prev_features;
  Se3d last_motion = Se3d::identity();  // previous-to-current point map of the last frame
  const bool any_check = config.enable_voting || config.enable_intra_motion;

  for (std::size_t i = 0; i < n; ++i) {
    FrameBundle frame = reader.load(i);
    if (frame.depth.width() != config.intrinsics.width ||
        frame.depth.height() != config.intrinsics.height) {
      throw PreconditionError("run: frame " + frame.stamp + " size differs from the configured " +
                              std::to_string(config.intrinsics.width) + "x" +
                              std::to_string(config.intrinsics.height));
    }

    // Instances, tracking.
    std::vector<Instance> instances =
        extract_instances(frame, config, summary.rejected_instances);
    std::vector<ObjectInstance> curr_objects;
    for (const auto& inst : instances) curr_objects.push_back(inst.object);

    std::vector<ObjectInstance> candidates = prev_objects;
    std::set<int> seen_last;
    for (const auto& o : prev_objects) seen_last.insert(o.track_id);
    const double dt = 1.0 / voting.frame_rate;
    for (const auto& [id, track] : tracks) {
      if (seen_last.count(id) || track.history.empty()) continue;
      ObjectInstance predicted;
      predicted.track_id = id;
      predicted.class_name = track.class_name;
      predicted.centroid = track.history.size() >= 2
                               ? predict_missing(track, dt * (track.missed_frames + 1))
                               : track.history.back().centroid;
      candidates.push_back(std::move(predicted));
    }
    const int ids_before = next_track_id;
    const std::vector<int> ids =
        associate_tracks(candidates, curr_objects, config.track_gate, next_track_id);
    summary.tracks_created += static_cast<std::size_t>(next_track_id - ids_before);
    for (std::size_t k = 0; k < curr_objects.size(); ++k) curr_objects[k].track_id = ids[k];

    // Voting on objects seen in both frames.
    std::set<int> dynamic_ids;
    if (config.enable_voting && prev_frame) {
      const VoteResult vote = vote_dynamic_objects(prev_objects, curr_objects, voting);
      if (vote.indeterminate()) {
        ++summary.indeterminate_vote_frames;
        dynamic_ids = displacement_fallback(prev_objects, curr_objects,
                                            voting.dist_threshold, last_motion);
      } else {
        dynamic_ids = vote.dynamic_ids;
      }
      for (const auto& [id, count] : vote.accumulator.counts) {
        result.votes.push_back({i, id, count, dynamic_ids.count(id) > 0});
      }
    }

    // Track bookkeeping.
    std::set<int> observed;
    for (const auto& o : curr_objects) {
      auto [it, created] = tracks.try_emplace(o.track_id);
      if (created) {
        it->second.track_id = o.track_id;
        it->second.class_name = o.class_name;
      }
      it->second.observe(frame.timestamp, o.centroid, o.cloud);
      observed.insert(o.track_id);
    }
    for (auto it = tracks.begin(); it != tracks.end();) {
      if (!observed.count(it->first) && ++it->second.missed_frames > config.max_missed_frames) {
        it = tracks.erase(it);
      } else {
        ++it;
      }
    }

    // Deformation checks and the exclusion mask.
    MaskImage exclusion = MaskImage::Zero(config.intrinsics.height, config.intrinsics.width);
    std::set<std::uint16_t> excluded_labels;
    for (std::size_t k = 0; k < curr_objects.size(); ++k) {
      const ObjectInstance& o = curr_objects[k];
      const ObjectTrack& track = tracks.at(o.track_id);
      const bool consecutive = prev_frame && track.history.size() >= 2 &&
                               track.history[track.history.size() - 2].timestamp ==
                                   prev_frame->timestamp;
      ObjectReportRow row;
      row.frame = i;
      row.timestamp = frame.timestamp;
      row.track_id = o.track_id;
      row.class_name = o.class_name;
      row.centroid = o.centroid;
      row.points = o.cloud.size();
      row.voted_dynamic = dynamic_ids.count(o.track_id) > 0;
      if (config.enable_intra_motion && !row.voted_dynamic && consecutive) {
        row.deformation = deformation_score(track, config.chamfer);
        row.deformable = *row.deformation >= config.chamfer.deform_threshold;
      }
      row.excluded = row.voted_dynamic || row.deformable;
      if (!row.excluded && any_check && config.dynamic_classes.count(o.class_name)) {
        // A-priori dynamic classes stay out until every enabled check cleared them.
        const bool voting_cleared = !config.enable_voting || consecutive;
        const bool intra_cleared = !config.enable_intra_motion || row.deformation.has_value();
        row.excluded = !(voting_cleared && intra_cleared);
      }
      if (row.excluded) excluded_labels.insert(o.mask_id);
      result.objects.push_back(std::move(row));
    }
    if (!excluded_labels.empty()) {
      const auto& labels = frame.masks->label_map;
      for (Eigen::Index v = 0; v < labels.rows(); ++v) {
        for (Eigen::Index u = 0; u < labels.cols(); ++u) {
          if (labels(v, u) && excluded_labels.count(labels(v, u))) exclusion(v, u) = 1;
        }
      }
      exclusion = dilate_mask(exclusion, config.mask_dilation);
    }

    // Features and frame-to-frame pose.
    FrameFeatures features;
    features.keypoints = detect_keypoints(to_gray(frame.color), exclusion, &detector);
    if (config.enable_pgo) features.points = lift_keypoints(features.keypoints, frame.depth, config);

    if (prev_frame) {
      const IndexPairs matches = match_descriptors(prev_features.keypoints, features.keypoints,
                                                   config.match_ratio, config.match_max_pixels);
      std::vector<PixelMatch> pixel_matches;
      for (const auto& [a, b] : matches) {
        pixel_matches.push_back({{prev_features.keypoints[a].u, prev_features.keypoints[a].v},
                                 {features.keypoints[b].u, features.keypoints[b].v}});
      }
      if (pixel_matches.size() >= 8) {
        try {
          const auto keep = epipolar_filter(pixel_matches, config.intrinsics, epipolar_params);
          std::vector<PixelMatch> filtered;
          for (std::size_t k : keep) filtered.push_back(pixel_matches[k]);
          pixel_matches = std::move(filtered);
        } catch (const Error&) {
          // Degenerate geometry: keep the unfiltered matches for 3D RANSAC.
        }
      }
      const auto corrs = lift_matches_to_3d(pixel_matches, prev_frame->depth, frame.depth,
                                            config.intrinsics, config.kernel);
      Se3d rel;  // camera motion: previous-from-current
      try {
        if (corrs.size() < 3) throw NumericalError("too few correspondences");
        const PoseEstimate est = estimate_pose_ransac(corrs, config.ransac);
        last_motion = est.pose;
        rel = est.pose.inverse();
      } catch (const Error&) {
        summary.extrapolated_frames.push_back(i);
        rel = last_motion.inverse();
      }
      const std::size_t node = append_odometry(graph, rel, config.odometry_weight);

      if (config.enable_pgo) {
        if (const auto cand = detect_loop_closure(graph, config.loop_radius,
                                                  static_cast<std::size_t>(config.loop_min_gap))) {
          if (const auto reg = register_frames(stored[cand->from], features, config)) {
            graph.edges.push_back(
                {cand->from, node, reg->pose.inverse(), config.closure_weight, true});
            ++summary.closures_inserted;
          }
        }
      }
    }
    if (config.enable_pgo) stored.push_back(features);

    prev_objects = std::move(curr_objects);
    prev_features = std::move(features);
    prev_frame = std::move(frame);
    ++summary.frames;
    if (progress) progress(i, n);
  }

  std::vector<Se3d> nodes = graph.nodes;
  if (config.enable_pgo && summary.closures_inserted > 0) {
    summary.optimization = optimize(graph, config.pgo_max_iterations, config.pgo_damping);
    nodes = summary.optimization->nodes;
  }
  for (std::size_t i = 0; i < n; ++i) result.trajectory.poses.push_back({reader.timestamp(i), nodes[i]});

  if (reader.ground_truth() && reader.ground_truth()->size() >= 3 && n >= config.eval_delta + 1) {
    try {
      EvaluationOptions options;
      options.delta = config.eval_delta;
      options.max_diff = config.max_time_diff;
      summary.metrics = evaluate(result.trajectory, *reader.ground_truth(), options);
    } catch (const PreconditionError&) {
      // Too few matched poses for metrics.
    }
  }
  return result;
}

void write_summary(const RunResult& result, const RunConfig& config, std::ostream& out) {
  const RunSummary& s = result.summary;
  out << "stages";
  for (std::size_t k = 0; k < s.stages.size(); ++k) out << (k ? " > " : " ") << s.stages[k];
  out << '\n'
      << "frames_processed " << s.frames << '\n'
      << "tracks_created " << s.tracks_created << '\n'
      << "closures_inserted " << s.closures_inserted << '\n'
      << "extrapolated_frames " << s.extrapolated_frames.size();
  for (std::size_t f : s.extrapolated_frames) out << ' ' << f;
  out << '\n'
      << "indeterminate_vote_frames " << s.indeterminate_vote_frames << '\n'
      << "rejected_instances " << s.rejected_instances << '\n'
      << "frame_rate " << format_double(s.frame_rate) << '\n';
  if (s.low_frame_rate) {
    out << "warning frame rate below min_fps " << format_double(config.voting.min_fps)
        << "; voting is unreliable\n";
  }
  if (s.optimization) {
    out << "pgo_initial_cost " << format_double(s.optimization->initial_cost) << '\n'
        << "pgo_final_cost " << format_double(s.optimization->final_cost) << '\n'
        << "pgo_iterations " << s.optimization->iterations << '\n';
  }
  if (s.metrics) {
    out << "ate_rmse " << format_double(s.metrics->ate_rmse) << '\n'
        << "rpe_trans_rmse " << format_double(s.metrics->rpe_trans_rmse) << '\n'
        << "rpe_rot_rmse_deg " << format_double(s.metrics->rpe_rot_rmse) << '\n';
  }
}

void write_run_outputs(const RunResult& result, const RunConfig& config, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  write_trajectory(result.trajectory, out_dir / "trajectory.txt");

  std::ofstream votes(out_dir / "votes.csv");
  votes << "frame,track_id,votes,dynamic\n";
  for (const auto& r : result.votes) {
    votes << r.frame << ',' << r.track_id << ',' << r.votes << ',' << int(r.dynamic) << '\n';
  }

  std::ofstream objects(out_dir / "objects.csv");
  objects << "frame,timestamp,track_id,class,cx,cy,cz,points,voted_dynamic,deformation,"
             "deformable,excluded\n";
  for (const auto& r : result.objects) {
    objects << r.frame << ',' << format_double(r.timestamp) << ',' << r.track_id << ','
            << r.class_name << ',' << format_double(r.centroid.x()) << ','
            << format_double(r.centroid.y()) << ',' << format_double(r.centroid.z()) << ','
            << r.points << ',' << int(r.voted_dynamic) << ','
            << (r.deformation ? format_double(*r.deformation) : std::string()) << ','
            << int(r.deformable) << ',' << int(r.excluded) << '\n';
  }

  std::ofstream summary(out_dir / "summary.txt");
  write_summary(result, config, summary);

  if (config.enable_pgo) write_pose_graph(result.graph, out_dir / "pose_graph.txt");
  if (!votes || !objects || !summary) throw IoError("failed writing outputs under " + out_dir.string());
}

}  // namespace dynodom
