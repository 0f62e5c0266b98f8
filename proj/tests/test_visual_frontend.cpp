#include <numbers>
#include <set>

#include <gtest/gtest.h>

#include "dynodom/visual_frontend.hpp"
#include "support.hpp"

using namespace dynodom;
using testing_support::uniform3;

namespace {

GrayImage white_square() {
  GrayImage img = GrayImage::Zero(120, 160);
  img.block(40, 50, 40, 60).setConstant(255);  // rows 40..79, cols 50..109
  return img;
}

Descriptor random_descriptor(std::mt19937_64& rng) {
  return {rng(), rng(), rng(), rng()};
}

struct Scene {
  std::vector<PixelMatch> matches;
  std::vector<Eigen::Vector3d> points;
  Se3d motion;  // previous camera coordinates to current
};

Scene projected_scene(std::mt19937_64& rng, std::size_t n, const CameraIntrinsics& intr) {
  Scene s;
  s.motion = Se3d::exp((Vector6d() << 0.1, -0.05, 0.08, 0.02, -0.04, 0.03).finished());
  while (s.matches.size() < n) {
    Eigen::Vector3d p = uniform3(rng, -1.5, 1.5);
    p.z() = 2.0 + std::abs(p.z()) * 2.0;
    const Eigen::Vector3d q = s.motion * p;
    const Eigen::Vector2d a = project(p, intr), b = project(q, intr);
    if (a.minCoeff() < 0 || b.minCoeff() < 0 || a.x() > intr.width || b.x() > intr.width ||
        a.y() > intr.height || b.y() > intr.height) {
      continue;
    }
    s.matches.push_back({a, b});
    s.points.push_back(p);
  }
  return s;
}

class PlantedDetector : public FeatureDetector {
 public:
  std::vector<Keypoint> detect(const GrayImage&, const MaskImage&) const override {
    return {{5, 5, 1.0f, {}}, {20, 20, 1.0f, {}}};
  }
};

}  // namespace

TEST(Keypoints, UniformImageHasNone) {
  const GrayImage img = GrayImage::Constant(120, 160, 128);
  EXPECT_TRUE(detect_keypoints(img, MaskImage::Zero(120, 160)).empty());
}

TEST(Keypoints, SquareCorners) {
  const GrayImage img = white_square();
  const auto kps = detect_keypoints(img, MaskImage::Zero(120, 160));
  const std::vector<Eigen::Vector2d> corners{{50, 40}, {109, 40}, {50, 79}, {109, 79}};
  for (const auto& c : corners) {
    bool found = false;
    for (const auto& k : kps) found |= (Eigen::Vector2d(k.u, k.v) - c).norm() <= 2.0;
    EXPECT_TRUE(found) << "corner " << c.transpose();
  }
  for (const auto& k : kps) {
    double best = 1e9;
    for (const auto& c : corners) best = std::min(best, (Eigen::Vector2d(k.u, k.v) - c).norm());
    EXPECT_LE(best, 2.0);
  }
}

TEST(Keypoints, FullyMaskedImageHasNone) {
  EXPECT_TRUE(detect_keypoints(white_square(), MaskImage::Ones(120, 160)).empty());
}

TEST(Keypoints, ExclusionEnforcedForCustomDetectors) {
  MaskImage mask = MaskImage::Zero(40, 40);
  mask(5, 5) = 1;
  const PlantedDetector planted;
  const auto kps = detect_keypoints(GrayImage::Zero(40, 40), mask, &planted);
  ASSERT_EQ(kps.size(), 1u);
  EXPECT_EQ(kps[0].u, 20);
}

TEST(Keypoints, MaskSizeMismatch) {
  EXPECT_THROW(detect_keypoints(white_square(), MaskImage::Zero(10, 10)), PreconditionError);
}

TEST(DilateMask, SquareGrowth) {
  MaskImage m = MaskImage::Zero(11, 11);
  m(5, 5) = 1;
  const MaskImage d = dilate_mask(m, 2);
  EXPECT_EQ(d.cast<int>().sum(), 25);
  EXPECT_EQ(d(3, 3), 1);
  EXPECT_EQ(d(7, 7), 1);
  EXPECT_EQ(d(2, 5), 0);
  EXPECT_EQ(dilate_mask(m, 0), m);
}

TEST(Match, IdenticalSetsMatchThemselves) {
  std::mt19937_64 rng(41);
  std::vector<Keypoint> a;
  for (int i = 0; i < 50; ++i) a.push_back({double(i), double(i), 1.0f, random_descriptor(rng)});
  const IndexPairs m = match_descriptors(a, a, 0.8);
  ASSERT_EQ(m.size(), a.size());
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_EQ(m[i], std::make_pair(i, i));
}

TEST(Match, FlippedBitStillMatchesAgainstDecoy) {
  std::mt19937_64 rng(42);
  Keypoint k{10, 10, 1.0f, random_descriptor(rng)};
  Keypoint flipped = k;
  flipped.descriptor[0] ^= 1ull;
  Keypoint decoy = k;
  for (int w = 0; w < 4; ++w) decoy.descriptor[w] ^= 0xFFFFull;  // 64 bits away
  const IndexPairs m = match_descriptors({k}, {decoy, flipped}, 0.7);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0], std::make_pair(std::size_t(0), std::size_t(1)));
}

TEST(Match, RandomDescriptorsRarelyMatch) {
  std::mt19937_64 rng(43);
  std::vector<Keypoint> a, b;
  for (int i = 0; i < 200; ++i) {
    a.push_back({0, 0, 1.0f, random_descriptor(rng)});
    b.push_back({0, 0, 1.0f, random_descriptor(rng)});
  }
  EXPECT_LE(match_descriptors(a, b, 0.7).size(), 2u);
}

TEST(Match, PixelGateAndRatioValidation) {
  std::mt19937_64 rng(44);
  Keypoint a{0, 0, 1.0f, random_descriptor(rng)};
  Keypoint b = a;
  b.u = 100;
  EXPECT_EQ(match_descriptors({a}, {b}, 0.8).size(), 1u);
  EXPECT_TRUE(match_descriptors({a}, {b}, 0.8, 50.0).empty());
  EXPECT_THROW(match_descriptors({a}, {b}, 0.0), PreconditionError);
}

TEST(Epipolar, PerfectProjectionsAreInliers) {
  std::mt19937_64 rng(45);
  const CameraIntrinsics intr;
  const Scene s = projected_scene(rng, 60, intr);
  const auto in = epipolar_filter(s.matches, intr, RansacParams{200, 1.0, 8, 1});
  EXPECT_EQ(in.size(), s.matches.size());
  const Eigen::Matrix3d F = estimate_fundamental(s.matches, intr);
  for (const auto& m : s.matches) EXPECT_LT(sampson_distance(F, m), 1e-6);
}

TEST(Epipolar, ScrambledMatchesRejected) {
  std::mt19937_64 rng(46);
  const CameraIntrinsics intr;
  Scene s = projected_scene(rng, 100, intr);
  std::uniform_real_distribution<double> pu(0, 640), pv(0, 480);
  std::set<std::size_t> scrambled;
  for (std::size_t i = 0; i < 30; ++i) {
    s.matches[i].curr = {pu(rng), pv(rng)};
    scrambled.insert(i);
  }
  const auto in = epipolar_filter(s.matches, intr, RansacParams{500, 1.0, 8, 3});
  std::size_t wrong = 0;
  for (std::size_t i : in) wrong += scrambled.count(i);
  ASSERT_FALSE(in.empty());
  EXPECT_GE(1.0 - double(wrong) / double(in.size()), 0.95);
  EXPECT_GE(in.size(), 65u);
}

TEST(Epipolar, NeedsEightMatches) {
  std::mt19937_64 rng(47);
  const CameraIntrinsics intr;
  Scene s = projected_scene(rng, 7, intr);
  EXPECT_THROW(epipolar_filter(s.matches, intr, RansacParams{}), PreconditionError);
}

TEST(Lift, DepthPresenceRules) {
  const CameraIntrinsics intr{100, 100, 20, 20, 5000, 40, 40};
  DepthFrame a(40, 40), b(40, 40);
  for (int v = 0; v < 40; ++v) {
    for (int u = 0; u < 40; ++u) {
      a.set(u, v, 2.0);
      if (u < 30) b.set(u, v, 2.0);
    }
  }
  const std::vector<PixelMatch> m{{{10, 10}, {12, 10}}, {{20, 20}, {38, 20}}, {{15, 5}, {16, 6}}};
  std::vector<std::size_t> kept;
  const auto out = lift_matches_to_3d(m, a, b, intr, GaussianKernelParams{1, 1.0}, &kept);
  EXPECT_EQ(kept, (std::vector<std::size_t>{0, 2}));
  ASSERT_EQ(out.size(), 2u);
  EXPECT_TRUE(out[0].p_prev.isApprox(backproject(10.0, 10.0, 2.0, intr)));
  EXPECT_TRUE(out[0].p_curr.isApprox(backproject(12.0, 10.0, 2.0, intr)));
}

TEST(Lift, SyntheticRenderMatchesGeometry) {
  auto spec = testing_support::tiny_scene(2);
  spec.objects.clear();
  const Se3d pose = spec.camera_path.pose_at(0.0);
  const auto frame = synth::render_frame(spec, pose, 0);
  // Back wall at z = 4 in world coordinates; the camera looks along +z.
  std::vector<PixelMatch> m;
  for (int v = 20; v < 30; v += 3) {
    for (int u = 30; u < 50; u += 4) m.push_back({{double(u), double(v)}, {double(u), double(v)}});
  }
  const auto out = lift_matches_to_3d(m, frame.depth, frame.depth, spec.intrinsics, GaussianKernelParams{2, 1.0});
  ASSERT_EQ(out.size(), m.size());
  for (const auto& c : out) EXPECT_NEAR((pose * c.p_prev).z(), 4.0, 2e-3);
}

TEST(PoseRansac, IdenticalSetsGiveIdentity) {
  std::mt19937_64 rng(48);
  std::vector<Correspondence3d> c;
  for (int i = 0; i < 30; ++i) {
    const Eigen::Vector3d p = uniform3(rng, -1, 1);
    c.push_back({p, p});
  }
  const PoseEstimate est = estimate_pose_ransac(c, RansacParams{});
  EXPECT_TRUE(est.pose.matrix().isIdentity(1e-12));
  EXPECT_EQ(est.inliers.size(), c.size());
}

TEST(PoseRansac, ExactMotionRecovered) {
  std::mt19937_64 rng(49);
  const Se3d T = testing_support::random_pose(rng, 0.5, 0.4);
  std::vector<Correspondence3d> c;
  for (int i = 0; i < 40; ++i) {
    const Eigen::Vector3d p = uniform3(rng, -1, 1) + Eigen::Vector3d(0, 0, 3);
    c.push_back({p, T * p});
  }
  const PoseEstimate est = estimate_pose_ransac(c, RansacParams{});
  EXPECT_LT((est.pose.matrix() - T.matrix()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(PoseRansac, OutliersAndNoise) {
  std::mt19937_64 rng(50);
  std::normal_distribution<double> noise(0.0, 0.005);
  int good = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Se3d T = testing_support::random_pose(rng, 0.3, 0.3);
    std::vector<Correspondence3d> c;
    for (int i = 0; i < 100; ++i) {
      const Eigen::Vector3d p = uniform3(rng, -1.5, 1.5) + Eigen::Vector3d(0, 0, 3);
      Eigen::Vector3d q = T * p + Eigen::Vector3d(noise(rng), noise(rng), noise(rng));
      if (i % 10 < 3) q = uniform3(rng, -2, 2) + Eigen::Vector3d(0, 0, 3);
      c.push_back({p, q});
    }
    RansacParams params;
    params.seed = trial;
    const PoseEstimate est = estimate_pose_ransac(c, params);
    const Se3d err = T.inverse() * est.pose;
    good += err.angle() * 180.0 / std::numbers::pi <= 0.5 && err.translation().norm() <= 0.005;
  }
  EXPECT_GE(good, 19);
}

TEST(PoseRansac, Degenerate) {
  std::vector<Correspondence3d> two{{{0, 0, 1}, {0, 0, 1}}, {{1, 0, 1}, {1, 0, 1}}};
  EXPECT_THROW(estimate_pose_ransac(two, RansacParams{}), PreconditionError);
  std::vector<Correspondence3d> line;
  for (int i = 0; i < 20; ++i) line.push_back({{double(i), 0, 1}, {double(i), 0, 1}});
  EXPECT_THROW(estimate_pose_ransac(line, RansacParams{}), NumericalError);
}
