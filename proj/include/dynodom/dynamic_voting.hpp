#pragma once

// Object tracking across frames and Hough voting over pairwise centroid
// distances to find moving objects.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "dynodom/instance_clouds.hpp"
#include "dynodom/types.hpp"

namespace dynodom {

struct TrackSample {
  double timestamp = 0.0;
  Point3 centroid = Point3::Zero();
  PointCloud cloud;
};

struct ObjectTrack {
  int track_id = -1;
  std::string class_name;
  std::vector<TrackSample> history;  ///< oldest first
  Eigen::Vector3d last_velocity = Eigen::Vector3d::Zero();  ///< m/s
  int missed_frames = 0;

  /// Appends an observation and refreshes the velocity estimate. Keeps at
  /// most `max_history` samples.
  void observe(double timestamp, const Point3& centroid, PointCloud cloud,
               std::size_t max_history = 4);
};

/// Unordered pair of distinct track ids, stored as (min, max).
struct PairKey {
  int first;
  int second;

  PairKey(int a, int b);
  auto operator<=>(const PairKey&) const = default;
};

struct VoteAccumulator {
  std::map<int, int> counts;

  int votes(int track_id) const {
    const auto it = counts.find(track_id);
    return it == counts.end() ? 0 : it->second;
  }
};

struct VotingParams {
  double dist_threshold = 0.03;  ///< T_d, meters per frame interval
  int vote_threshold = 2;        ///< T_v
  double frame_rate = 30.0;      ///< Hz
  double min_fps = 10.0;         ///< below this the voting is unreliable

  void validate() const {
    if (!(dist_threshold > 0)) throw PreconditionError("voting: dist_threshold must be > 0");
    if (vote_threshold < 1) throw PreconditionError("voting: vote_threshold must be >= 1");
    if (!(frame_rate > 0)) throw PreconditionError("voting: frame_rate must be > 0");
  }
  bool frame_rate_supported() const { return frame_rate >= min_fps; }
};

/// Greedy same-class nearest-centroid association within `gate` meters.
/// Returns one track id per entry of `curr`; unmatched entries get fresh ids
/// drawn from `next_track_id`.
std::vector<int> associate_tracks(const std::vector<ObjectInstance>& prev,
                                  const std::vector<ObjectInstance>& curr, double gate,
                                  int& next_track_id);

/// Centroid distance for every unordered pair of objects, keyed by track id.
std::map<PairKey, double> pairwise_center_dist(const std::vector<ObjectInstance>& objects);

struct VoteResult {
  VoteAccumulator accumulator;  ///< one entry per object present in both frames
  std::set<int> dynamic_ids;
  std::size_t shared_pairs = 0;

  std::size_t shared_objects() const { return accumulator.counts.size(); }
  /// Fewer than three shared objects: pairwise voting cannot single out a mover.
  bool indeterminate() const { return shared_objects() < 3; }
};

/// Every pair present in both frames whose centroid distance changed by at
/// least T_d casts one vote for each of its two objects; objects with at
/// least T_v votes are dynamic. Instances must already carry track ids.
VoteResult vote_dynamic_objects(const std::vector<ObjectInstance>& prev,
                                const std::vector<ObjectInstance>& curr,
                                const VotingParams& params);

/// Per-object test used when voting is indeterminate: an object is dynamic if
/// its centroid moved at least `dist_threshold`. `prev_to_curr` maps previous
/// camera coordinates into the current camera frame (ego-motion estimate).
std::set<int> displacement_fallback(const std::vector<ObjectInstance>& prev,
                                    const std::vector<ObjectInstance>& curr,
                                    double dist_threshold,
                                    const Se3d& prev_to_curr = Se3d::identity());

/// Constant-velocity extrapolation of a track's last centroid.
Point3 predict_missing(const ObjectTrack& track, double dt);

}  // namespace dynodom
