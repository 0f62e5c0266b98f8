#pragma once

// Keypoints on static image regions, descriptor matching, epipolar outlier
// rejection and frame-to-frame 3D-3D pose estimation.

#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <optional>
#include <vector>

#include "dynodom/dataset_io.hpp"
#include "dynodom/depth_geometry.hpp"
#include "dynodom/types.hpp"

namespace dynodom {

/// 256-bit binary descriptor.
using Descriptor = std::array<std::uint64_t, 4>;

inline int hamming_distance(const Descriptor& a, const Descriptor& b) {
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += __builtin_popcountll(a[i] ^ b[i]);
  return d;
}

struct Keypoint {
  double u = 0.0;
  double v = 0.0;
  float response = 0.0f;
  Descriptor descriptor{};
};

/// Replaceable detector/descriptor. Implementations must never return a
/// keypoint whose pixel is set in `exclusion`.
class FeatureDetector {
 public:
  virtual ~FeatureDetector() = default;
  virtual std::vector<Keypoint> detect(const GrayImage& image,
                                       const MaskImage& exclusion) const = 0;
};

struct FastBriefParams {
  int fast_threshold = 20;     ///< intensity step for the segment test
  int arc_length = 9;          ///< contiguous circle pixels required
  int max_keypoints = 1000;
  int grid_cell = 32;          ///< pixels; bounds keypoints per cell for coverage
};

/// Segment-test corners (16-pixel circle of radius 3) with 3x3 non-maximum
/// suppression, described by 256 intensity comparisons on a box-smoothed
/// 31x31 patch. Not rotation aware.
class FastBriefDetector final : public FeatureDetector {
 public:
  explicit FastBriefDetector(FastBriefParams params = {});
  std::vector<Keypoint> detect(const GrayImage& image,
                               const MaskImage& exclusion) const override;

  /// Distance from the image border inside which no keypoint is reported.
  static constexpr int kBorder = 18;

 private:
  FastBriefParams params_;
};

/// Square dilation of a binary mask by `radius` pixels.
MaskImage dilate_mask(const MaskImage& mask, int radius);

/// Runs `detector` (the default FAST/binary detector when null) and enforces
/// the exclusion contract.
std::vector<Keypoint> detect_keypoints(const GrayImage& image, const MaskImage& exclusion_mask,
                                       const FeatureDetector* detector = nullptr);

/// Mutual nearest neighbours under Hamming distance that also pass the ratio
/// test best < ratio * second_best. When `max_pixel_distance` is finite only
/// candidates that close in the image are considered.
IndexPairs match_descriptors(const std::vector<Keypoint>& a, const std::vector<Keypoint>& b,
                             double ratio,
                             double max_pixel_distance = std::numeric_limits<double>::infinity());

struct PixelMatch {
  Eigen::Vector2d prev;
  Eigen::Vector2d curr;
};

struct RansacParams {
  int iterations = 500;
  double inlier_threshold = 0.02;  ///< meters for 3D-3D, pixels for epipolar
  int min_inliers = 12;
  std::uint64_t seed = 42;

  void validate() const {
    if (iterations < 1) throw PreconditionError("ransac: iterations must be >= 1");
    if (!(inlier_threshold > 0)) throw PreconditionError("ransac: inlier_threshold must be > 0");
    if (min_inliers < 3) throw PreconditionError("ransac: min_inliers must be >= 3");
  }
};

/// Pixel-space fundamental matrix from >= 8 matches (normalized 8-point with
/// rank-2 enforcement). Coordinates are normalized with the intrinsics.
Eigen::Matrix3d estimate_fundamental(std::span<const PixelMatch> matches,
                                     const CameraIntrinsics& intr);

/// First-order geometric (Sampson) distance of a match to F, in pixels.
double sampson_distance(const Eigen::Matrix3d& F, const PixelMatch& m);

/// RANSAC over 8-point models; returns indices of matches within
/// `inlier_threshold` pixels Sampson distance of the best model.
std::vector<std::size_t> epipolar_filter(const std::vector<PixelMatch>& matches,
                                         const CameraIntrinsics& intr,
                                         const RansacParams& params);

struct Correspondence3d {
  Point3 p_prev;
  Point3 p_curr;
};

/// Back-projects both ends of each match using denoised depth. Matches with
/// missing depth on either side are dropped; `kept` receives the indices of
/// the surviving matches when given.
std::vector<Correspondence3d> lift_matches_to_3d(const std::vector<PixelMatch>& matches,
                                                 const DepthFrame& depth_prev,
                                                 const DepthFrame& depth_curr,
                                                 const CameraIntrinsics& intr,
                                                 const GaussianKernelParams& denoise,
                                                 std::vector<std::size_t>* kept = nullptr);

struct PoseEstimate {
  Se3d pose;  ///< maps previous-frame points onto current-frame points
  std::vector<std::size_t> inliers;
};

/// 3-point RANSAC with closed-form rigid alignment, refit on all inliers.
/// Deterministic for a given seed.
PoseEstimate estimate_pose_ransac(const std::vector<Correspondence3d>& corrs,
                                  const RansacParams& params);

}  // namespace dynodom
