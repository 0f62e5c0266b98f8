#include "dynodom/intra_motion.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "dynodom/instance_clouds.hpp"

namespace dynodom {

PointCloud subsample(const PointCloud& cloud, std::size_t max_points, std::uint64_t seed) {
  if (cloud.size() <= max_points) return cloud;
  std::vector<std::size_t> idx(cloud.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first max_points slots become the sample.
  for (std::size_t i = 0; i < max_points; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(max_points);
  std::sort(idx.begin(), idx.end());
  PointCloud out;
  out.reserve(max_points);
  for (std::size_t i : idx) out.push_back(cloud[i]);
  return out;
}

PointCloud centered(const PointCloud& cloud) {
  const Point3 c = centroid(cloud);
  PointCloud out;
  out.reserve(cloud.size());
  for (const auto& p : cloud) out.push_back(p - c);
  return out;
}

double deformation_score(const ObjectTrack& track, const ChamferParams& params) {
  params.validate();
  if (track.history.size() < 2) {
    throw PreconditionError("classify_deformable: track " + std::to_string(track.track_id) +
                            " lacks two cloud samples");
  }
  const PointCloud& prev = track.history[track.history.size() - 2].cloud;
  const PointCloud& curr = track.history.back().cloud;
  if (prev.empty() || curr.empty()) {
    throw PreconditionError("classify_deformable: track " + std::to_string(track.track_id) +
                            " has an empty cloud sample");
  }
  const PointCloud a = centered(subsample(prev, params.max_points, params.seed));
  const PointCloud b = centered(subsample(curr, params.max_points, params.seed + 1));
  return chamfer_distance(a, b);
}

bool classify_deformable(const ObjectTrack& track, const ChamferParams& params) {
  return deformation_score(track, params) >= params.deform_threshold;
}

}  // namespace dynodom
