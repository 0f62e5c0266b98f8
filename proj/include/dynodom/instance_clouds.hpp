#pragma once

// Per-instance point cloud cleaning: voxel downsampling, DBSCAN and
// largest-blob retention, plus centroids.

#include <cstdint>
#include <string>
#include <vector>

#include "dynodom/types.hpp"

namespace dynodom {

struct VoxelParams {
  double voxel_size = 0.02;  ///< meters

  void validate() const {
    if (!(voxel_size > 0)) throw PreconditionError("voxel_size must be > 0");
  }
};

struct DbscanParams {
  double eps = 0.05;  ///< meters
  int min_pts = 10;   ///< neighbours within eps, the point itself included

  void validate() const {
    if (!(eps > 0)) throw PreconditionError("dbscan eps must be > 0");
    if (min_pts < 1) throw PreconditionError("dbscan min_pts must be >= 1");
  }
};

/// One segmented object observed in one frame, in camera coordinates.
struct ObjectInstance {
  int track_id = -1;
  std::uint16_t mask_id = 0;
  std::string class_name;
  PointCloud cloud;
  Point3 centroid = Point3::Zero();
  double frame_timestamp = 0.0;
};

template <typename Scalar>
Vector3<Scalar> centroid(const Cloud<Scalar>& cloud) {
  if (cloud.empty()) throw PreconditionError("centroid: empty cloud");
  Vector3<Scalar> sum = Vector3<Scalar>::Zero();
  for (const auto& p : cloud) sum += p;
  return sum / static_cast<Scalar>(cloud.size());
}

/// Voxel grid anchored at the origin (cell = floor(p / voxel_size)); one
/// output point per occupied cell at the mean of its points, in order of
/// first occupancy.
PointCloud voxel_downsample(const PointCloud& cloud, const VoxelParams& params);

inline constexpr int kDbscanNoise = -1;

/// DBSCAN labels (cluster id >= 0 or kDbscanNoise).
///
/// Clusters are the connected components of core points, numbered in order of
/// their lowest-index core point. A border point joins the cluster of its
/// nearest core neighbour (ties to the lower index), which keeps the result
/// independent of input order up to a relabelling.
std::vector<int> dbscan(const PointCloud& cloud, const DbscanParams& params);

/// Voxelize, cluster and keep the single largest cluster. Throws if every
/// point is noise.
PointCloud reject_outliers(const PointCloud& instance_cloud, const VoxelParams& voxel,
                           const DbscanParams& db);

}  // namespace dynodom
