#include <gtest/gtest.h>

#include "dynodom/intra_motion.hpp"
#include "oracles/naive_chamfer.hpp"
#include "support.hpp"

using namespace dynodom;
using testing_support::random_cloud;

namespace {

ObjectTrack track_of(const PointCloud& a, const PointCloud& b) {
  ObjectTrack t;
  t.track_id = 1;
  t.observe(0.0, centroid(a), a);
  t.observe(1.0 / 30, centroid(b), b);
  return t;
}

}  // namespace

TEST(Chamfer, HandExamples) {
  const PointCloud a{{0, 0, 0}};
  EXPECT_DOUBLE_EQ(chamfer_distance(a, a), 0.0);
  EXPECT_DOUBLE_EQ(chamfer_distance(a, PointCloud{{1, 0, 0}}), 2.0);
  EXPECT_DOUBLE_EQ(chamfer_distance(PointCloud{{0, 0, 0}, {2, 0, 0}}, a), 2.0);
  EXPECT_THROW(chamfer_distance(a, PointCloud{}), PreconditionError);
}

TEST(Chamfer, MatchesBruteForce) {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<std::size_t> n(1, 200);
  for (int trial = 0; trial < 30; ++trial) {
    const PointCloud a = random_cloud(rng, n(rng)), b = random_cloud(rng, n(rng), 0.2, 1.3);
    EXPECT_NEAR(chamfer_distance(a, b), oracle::chamfer(a, b), 1e-12);
    EXPECT_EQ(chamfer_distance(a, b), chamfer_distance(b, a));
    EXPECT_EQ(chamfer_distance(a, a), 0.0);
  }
}

TEST(Chamfer, FloatScalar) {
  const Cloud<float> a{{0, 0, 0}}, b{{1, 0, 0}};
  EXPECT_FLOAT_EQ(chamfer_distance(a, b), 2.0f);
}

TEST(Subsample, KeepsOrderAndBound) {
  std::mt19937_64 rng(32);
  PointCloud c;
  for (int i = 0; i < 100; ++i) c.push_back({double(i), 0, 0});
  const PointCloud s = subsample(c, 10, 5);
  ASSERT_EQ(s.size(), 10u);
  for (std::size_t i = 1; i < s.size(); ++i) EXPECT_LT(s[i - 1].x(), s[i].x());
  EXPECT_EQ(subsample(c, 10, 5), s);
  EXPECT_EQ(subsample(c, 500, 5).size(), 100u);
}

TEST(Deformable, RigidTranslationIsNotDeformation) {
  std::mt19937_64 rng(33);
  const PointCloud a = random_cloud(rng, 300, 0, 0.3);
  PointCloud b;
  for (const auto& p : a) b.push_back(p + Eigen::Vector3d(0.4, -0.1, 0.2));
  const ChamferParams params{0.005, 2000};
  EXPECT_NEAR(deformation_score(track_of(a, b), params), 0.0, 1e-24);
  EXPECT_FALSE(classify_deformable(track_of(a, b), params));
}

TEST(Deformable, HalfCloudDisplaced) {
  std::mt19937_64 rng(34);
  const PointCloud a = random_cloud(rng, 400, 0, 0.3);
  PointCloud b = a;
  for (std::size_t i = 0; i < b.size() / 2; ++i) b[i].x() += 1.0;
  EXPECT_TRUE(classify_deformable(track_of(a, b), ChamferParams{0.005, 2000}));
}

TEST(Deformable, SensorNoiseIsNotDeformation) {
  std::mt19937_64 rng(35);
  std::normal_distribution<double> noise(0.0, 0.002);
  const PointCloud a = random_cloud(rng, 2000, 0, 0.3);
  PointCloud b = a;
  for (auto& p : b) p += Eigen::Vector3d(noise(rng), noise(rng), noise(rng));
  EXPECT_FALSE(classify_deformable(track_of(a, b), ChamferParams{0.005, 2000}));
}

TEST(Deformable, NeedsTwoSamples) {
  ObjectTrack t;
  t.observe(0.0, {0, 0, 0}, {{0, 0, 0}});
  EXPECT_THROW(classify_deformable(t, ChamferParams{}), PreconditionError);
  t.observe(0.1, {0, 0, 0}, {});
  EXPECT_THROW(classify_deformable(t, ChamferParams{}), PreconditionError);
  EXPECT_THROW(classify_deformable(track_of({{0, 0, 0}}, {{0, 0, 0}}), ChamferParams{-1.0, 10}),
               PreconditionError);
}
