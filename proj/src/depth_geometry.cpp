#include "dynodom/depth_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dynodom {

GaussianKernel::GaussianKernel(const GaussianKernelParams& params) : k_(params.k) {
  params.validate();
  const int n = 2 * k_ + 1;
  weights_.resize(std::size_t(n) * n);
  const double inv = 1.0 / (2.0 * params.sigma * params.sigma);
  for (int dv = -k_; dv <= k_; ++dv) {
    for (int du = -k_; du <= k_; ++du) {
      weights_[(dv + k_) * n + du + k_] = std::exp(-(du * du + dv * dv) * inv);
    }
  }
}

std::optional<double> denoise_depth_at(const DepthFrame& depth, int u, int v,
                                       const GaussianKernel& kernel) {
  if (!depth.contains(u, v)) {
    throw PreconditionError("denoise_depth_at: pixel (" + std::to_string(u) + ", " +
                            std::to_string(v) + ") outside image");
  }
  const int k = kernel.radius();
  const auto& values = depth.values();
  double sum_w = 0.0, sum_wd = 0.0;
  const int v0 = std::max(0, v - k), v1 = std::min(depth.height() - 1, v + k);
  const int u0 = std::max(0, u - k), u1 = std::min(depth.width() - 1, u + k);
  for (int j = v0; j <= v1; ++j) {
    for (int i = u0; i <= u1; ++i) {
      const float d = values(j, i);
      if (std::isnan(d)) continue;
      const double w = kernel.weight(i - u, j - v);
      sum_w += w;
      sum_wd += w * d;
    }
  }
  if (sum_w <= 0.0) return std::nullopt;
  return sum_wd / sum_w;
}

std::optional<double> denoise_depth_at(const DepthFrame& depth, int u, int v,
                                       const GaussianKernelParams& params) {
  return denoise_depth_at(depth, u, v, GaussianKernel(params));
}

PointCloud mask_to_cloud(const DepthFrame& depth, const LabelImage& label_map,
                         std::uint16_t instance_id, const CameraIntrinsics& intr,
                         const GaussianKernelParams& params) {
  if (label_map.rows() != depth.height() || label_map.cols() != depth.width()) {
    throw PreconditionError("mask_to_cloud: label map and depth sizes differ");
  }
  const GaussianKernel kernel(params);
  PointCloud cloud;
  bool seen = false;
  for (int v = 0; v < depth.height(); ++v) {
    for (int u = 0; u < depth.width(); ++u) {
      if (label_map(v, u) != instance_id) continue;
      seen = true;
      const auto z = denoise_depth_at(depth, u, v, kernel);
      if (!z) continue;
      cloud.push_back(backproject<double>(u, v, *z, intr));
    }
  }
  if (!seen) {
    throw PreconditionError("mask_to_cloud: instance id " + std::to_string(instance_id) +
                            " not present in label map");
  }
  return cloud;
}

}  // namespace dynodom
