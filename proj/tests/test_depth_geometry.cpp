#include <gtest/gtest.h>

#include "dynodom/depth_geometry.hpp"
#include "support.hpp"

using namespace dynodom;

namespace {

DepthFrame constant_depth(int w, int h, double z) {
  DepthFrame d(w, h);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) d.set(u, v, z);
  }
  return d;
}

}  // namespace

TEST(Denoise, ConstantDepth) {
  const DepthFrame d = constant_depth(20, 20, 2.0);
  for (auto [u, v] : {std::pair{0, 0}, {10, 10}, {19, 5}}) {
    EXPECT_DOUBLE_EQ(*denoise_depth_at(d, u, v, GaussianKernelParams{2, 1.0}), 2.0);
  }
}

TEST(Denoise, SinglePresentPixel) {
  DepthFrame d(9, 9);
  d.set(5, 3, 1.5);
  EXPECT_DOUBLE_EQ(*denoise_depth_at(d, 4, 4, GaussianKernelParams{2, 1.0}), 1.5);
  EXPECT_FALSE(denoise_depth_at(d, 0, 8, GaussianKernelParams{2, 1.0}).has_value());
}

TEST(Denoise, LinearRampKeepsCenterValue) {
  DepthFrame d(11, 11);
  for (int v = 0; v < 11; ++v) {
    for (int u = 0; u < 11; ++u) d.set(u, v, 1.0 + 0.01 * u);
  }
  EXPECT_NEAR(*denoise_depth_at(d, 5, 5, GaussianKernelParams{2, 1.0}), 1.05, 1e-6);
}

TEST(Denoise, RejectsBadInput) {
  const DepthFrame d = constant_depth(4, 4, 1.0);
  EXPECT_THROW(denoise_depth_at(d, 4, 0, GaussianKernelParams{}), PreconditionError);
  EXPECT_THROW(denoise_depth_at(d, 0, 0, GaussianKernelParams{-1, 1.0}), PreconditionError);
  EXPECT_THROW(denoise_depth_at(d, 0, 0, GaussianKernelParams{2, 0.0}), PreconditionError);
}

TEST(Backproject, Examples) {
  const CameraIntrinsics intr;
  EXPECT_TRUE(backproject(intr.cx, intr.cy, 1.0, intr).isApprox(Eigen::Vector3d(0, 0, 1)));
  EXPECT_TRUE(backproject(intr.cx + intr.fx, intr.cy, 2.0, intr).isApprox(Eigen::Vector3d(2, 0, 2)));
  EXPECT_THROW(backproject(10.0, 10.0, 0.0, intr), PreconditionError);
  EXPECT_THROW(backproject(10.0, 10.0, std::nan(""), intr), PreconditionError);
}

TEST(MaskToCloud, FullMaskConstantDepth) {
  const CameraIntrinsics intr{50, 50, 15.5, 11.5, 5000, 32, 24};
  const DepthFrame d = constant_depth(32, 24, 1.2);
  const LabelImage labels = LabelImage::Constant(24, 32, 1);
  const PointCloud cloud = mask_to_cloud(d, labels, 1, intr, GaussianKernelParams{});
  EXPECT_EQ(cloud.size(), 32u * 24u);
  for (const auto& p : cloud) EXPECT_NEAR(p.z(), 1.2, 1e-6);
}

TEST(MaskToCloud, AllMissingDepthGivesEmptyCloud) {
  const CameraIntrinsics intr{50, 50, 15.5, 11.5, 5000, 32, 24};
  const DepthFrame d(32, 24);
  const LabelImage labels = LabelImage::Constant(24, 32, 1);
  EXPECT_TRUE(mask_to_cloud(d, labels, 1, intr, GaussianKernelParams{}).empty());
}

TEST(MaskToCloud, SquareMaskExtents) {
  const CameraIntrinsics intr{100, 100, 50, 50, 5000, 101, 101};
  const DepthFrame d = constant_depth(101, 101, 1.0);
  LabelImage labels = LabelImage::Zero(101, 101);
  labels.block(45, 45, 10, 10).setConstant(7);
  const PointCloud cloud = mask_to_cloud(d, labels, 7, intr, GaussianKernelParams{});
  ASSERT_EQ(cloud.size(), 100u);
  Eigen::Vector3d lo = cloud[0], hi = cloud[0];
  for (const auto& p : cloud) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  EXPECT_TRUE(lo.isApprox(backproject(45.0, 45.0, 1.0, intr)));
  EXPECT_TRUE(hi.isApprox(backproject(54.0, 54.0, 1.0, intr)));
}

TEST(MaskToCloud, UnknownIdAndSizeMismatch) {
  const CameraIntrinsics intr{50, 50, 15.5, 11.5, 5000, 32, 24};
  const DepthFrame d = constant_depth(32, 24, 1.0);
  EXPECT_THROW(mask_to_cloud(d, LabelImage::Zero(24, 32), 1, intr, {}), PreconditionError);
  EXPECT_THROW(mask_to_cloud(d, LabelImage::Ones(10, 10), 1, intr, {}), PreconditionError);
}

TEST(GeometryProperties, ProjectInvertsBackproject) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> pu(0, 640), pv(0, 480), pz(0.1, 10);
  const CameraIntrinsics intr;
  for (int i = 0; i < 1000; ++i) {
    const double u = pu(rng), v = pv(rng), z = pz(rng);
    const Eigen::Vector2d uv = project(backproject(u, v, z, intr), intr);
    EXPECT_NEAR(uv.x(), u, 1e-9);
    EXPECT_NEAR(uv.y(), v, 1e-9);
  }
}

TEST(GeometryProperties, DenoisedDepthWithinWindowRange) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> z(0.5, 5.0), coin(0, 1);
  DepthFrame d(30, 30);
  for (int v = 0; v < 30; ++v) {
    for (int u = 0; u < 30; ++u) {
      if (coin(rng) < 0.7) d.set(u, v, z(rng));
    }
  }
  const GaussianKernelParams params{2, 1.3};
  for (int v = 0; v < 30; ++v) {
    for (int u = 0; u < 30; ++u) {
      double lo = 1e9, hi = -1e9;
      for (int j = std::max(0, v - 2); j <= std::min(29, v + 2); ++j) {
        for (int i = std::max(0, u - 2); i <= std::min(29, u + 2); ++i) {
          if (auto x = d.at(i, j)) {
            lo = std::min(lo, *x);
            hi = std::max(hi, *x);
          }
        }
      }
      const auto out = denoise_depth_at(d, u, v, params);
      ASSERT_EQ(out.has_value(), lo <= hi);
      if (out) {
        EXPECT_GE(*out, lo - 1e-12);
        EXPECT_LE(*out, hi + 1e-12);
      }
    }
  }
}
