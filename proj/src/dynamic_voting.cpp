#include "dynodom/dynamic_voting.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace dynodom {

void ObjectTrack::observe(double timestamp, const Point3& centroid, PointCloud cloud,
                          std::size_t max_history) {
  if (!history.empty()) {
    const TrackSample& last = history.back();
    if (!(timestamp > last.timestamp)) {
      throw PreconditionError("track " + std::to_string(track_id) +
                              ": observation timestamps must increase");
    }
    last_velocity = (centroid - last.centroid) / (timestamp - last.timestamp);
  }
  history.push_back({timestamp, centroid, std::move(cloud)});
  while (history.size() > std::max<std::size_t>(2, max_history)) {
    history.erase(history.begin());
  }
  missed_frames = 0;
}

PairKey::PairKey(int a, int b) : first(std::min(a, b)), second(std::max(a, b)) {
  if (a == b) throw PreconditionError("pair key needs two distinct track ids");
}

std::vector<int> associate_tracks(const std::vector<ObjectInstance>& prev,
                                  const std::vector<ObjectInstance>& curr, double gate,
                                  int& next_track_id) {
  if (!(gate > 0)) throw PreconditionError("associate_tracks: gate must be > 0");
  struct Candidate {
    double dist;
    std::size_t p, c;
  };
  std::vector<Candidate> candidates;
  for (std::size_t c = 0; c < curr.size(); ++c) {
    for (std::size_t p = 0; p < prev.size(); ++p) {
      if (prev[p].class_name != curr[c].class_name) continue;
      const double d = (prev[p].centroid - curr[c].centroid).norm();
      if (d <= gate) candidates.push_back({d, p, c});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.dist, a.c, a.p) < std::tie(b.dist, b.c, b.p);
  });
  std::vector<int> ids(curr.size(), -1);
  std::set<int> used;
  for (const auto& cand : candidates) {
    const int tid = prev[cand.p].track_id;
    if (ids[cand.c] != -1 || used.count(tid)) continue;
    ids[cand.c] = tid;
    used.insert(tid);
  }
  for (int& id : ids) {
    if (id == -1) id = next_track_id++;
  }
  return ids;
}

std::map<PairKey, double> pairwise_center_dist(const std::vector<ObjectInstance>& objects) {
  std::map<PairKey, double> out;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    for (std::size_t j = i + 1; j < objects.size(); ++j) {
      const PairKey key(objects[i].track_id, objects[j].track_id);
      out[key] = (objects[i].centroid - objects[j].centroid).norm();
    }
  }
  return out;
}

VoteResult vote_dynamic_objects(const std::vector<ObjectInstance>& prev,
                                const std::vector<ObjectInstance>& curr,
                                const VotingParams& params) {
  params.validate();
  const auto dist_prev = pairwise_center_dist(prev);
  const auto dist_curr = pairwise_center_dist(curr);

  VoteResult result;
  std::set<int> prev_ids;
  for (const auto& o : prev) prev_ids.insert(o.track_id);
  for (const auto& o : curr) {
    if (prev_ids.count(o.track_id)) result.accumulator.counts[o.track_id] = 0;
  }

  for (const auto& [key, d_curr] : dist_curr) {
    const auto it = dist_prev.find(key);
    if (it == dist_prev.end()) continue;
    ++result.shared_pairs;
    if (std::abs(d_curr - it->second) >= params.dist_threshold) {
      ++result.accumulator.counts[key.first];
      ++result.accumulator.counts[key.second];
    }
  }
  if (result.indeterminate()) return result;
  for (const auto& [id, votes] : result.accumulator.counts) {
    if (votes >= params.vote_threshold) result.dynamic_ids.insert(id);
  }
  return result;
}

std::set<int> displacement_fallback(const std::vector<ObjectInstance>& prev,
                                    const std::vector<ObjectInstance>& curr,
                                    double dist_threshold, const Se3d& prev_to_curr) {
  std::set<int> out;
  for (const auto& c : curr) {
    for (const auto& p : prev) {
      if (p.track_id != c.track_id) continue;
      if ((prev_to_curr * p.centroid - c.centroid).norm() >= dist_threshold) {
        out.insert(c.track_id);
      }
    }
  }
  return out;
}

Point3 predict_missing(const ObjectTrack& track, double dt) {
  if (track.history.size() < 2) {
    throw PreconditionError("predict_missing: insufficient history for track " +
                            std::to_string(track.track_id));
  }
  return track.history.back().centroid + track.last_velocity * dt;
}

}  // namespace dynodom
