#pragma once

// Deformation ("intra-object motion") detection with the symmetric Chamfer
// distance between consecutive, centroid-centred object clouds.

#include <cstdint>

#include "dynodom/dynamic_voting.hpp"
#include "dynodom/kd_tree.hpp"
#include "dynodom/types.hpp"

namespace dynodom {

struct ChamferParams {
  double deform_threshold = 0.01;  ///< T_c, squared meters
  std::size_t max_points = 2000;   ///< per-cloud subsampling bound
  std::uint64_t seed = 7;

  void validate() const {
    if (!(deform_threshold > 0)) throw PreconditionError("chamfer: deform_threshold must be > 0");
    if (max_points < 1) throw PreconditionError("chamfer: max_points must be >= 1");
  }
};

namespace detail {

template <typename Scalar>
Scalar mean_nearest_squared(const Cloud<Scalar>& from, const KdTree<Scalar>& into) {
  Scalar sum = 0;
  for (const auto& p : from) sum += into.nearest(p).squared_distance;
  return sum / static_cast<Scalar>(from.size());
}

}  // namespace detail

/// Mean squared nearest-neighbour distance from p1 into p2 plus the same
/// from p2 into p1. Symmetric and non-negative; units are squared meters.
template <typename Scalar>
Scalar chamfer_distance(const Cloud<Scalar>& p1, const Cloud<Scalar>& p2) {
  if (p1.empty() || p2.empty()) throw PreconditionError("chamfer_distance: empty cloud");
  const KdTree<Scalar> tree1(p1);
  const KdTree<Scalar> tree2(p2);
  const Scalar a = detail::mean_nearest_squared(p1, tree2);
  const Scalar b = detail::mean_nearest_squared(p2, tree1);
  return a + b;
}

/// Uniform random subset of at most `max_points` points (order preserved).
PointCloud subsample(const PointCloud& cloud, std::size_t max_points, std::uint64_t seed);

/// Translates the cloud so its centroid is at the origin.
PointCloud centered(const PointCloud& cloud);

/// Chamfer distance between the centred clouds of the two most recent track
/// samples.
double deformation_score(const ObjectTrack& track, const ChamferParams& params);

/// True iff deformation_score(track) >= T_c.
bool classify_deformable(const ObjectTrack& track, const ChamferParams& params);

}  // namespace dynodom
