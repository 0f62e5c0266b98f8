#pragma once

// Gaussian depth re-estimation and pinhole back-projection of masked pixels.

#include <cstdint>
#include <optional>
#include <vector>

#include "dynodom/types.hpp"

namespace dynodom {

struct GaussianKernelParams {
  int k = 2;           ///< half-window radius; the window is (2k+1)^2
  double sigma = 1.0;  ///< pixels

  void validate() const {
    if (k < 0) throw PreconditionError("gaussian kernel: k must be >= 0");
    if (!(sigma > 0)) throw PreconditionError("gaussian kernel: sigma must be > 0");
  }
};

/// Precomputed (2k+1)^2 window weights exp(-(di^2 + dj^2) / (2 sigma^2)).
class GaussianKernel {
 public:
  explicit GaussianKernel(const GaussianKernelParams& params);

  int radius() const { return k_; }
  double weight(int du, int dv) const { return weights_[(dv + k_) * (2 * k_ + 1) + du + k_]; }

 private:
  int k_;
  std::vector<double> weights_;
};

/// Weighted mean of present depths in the window around (u, v), with the
/// weights renormalized over present samples. Missing if the window is empty.
std::optional<double> denoise_depth_at(const DepthFrame& depth, int u, int v,
                                       const GaussianKernel& kernel);
std::optional<double> denoise_depth_at(const DepthFrame& depth, int u, int v,
                                       const GaussianKernelParams& params);

/// One point per pixel labelled `instance_id` whose denoised depth is present.
PointCloud mask_to_cloud(const DepthFrame& depth, const LabelImage& label_map,
                         std::uint16_t instance_id, const CameraIntrinsics& intr,
                         const GaussianKernelParams& params);

}  // namespace dynodom
