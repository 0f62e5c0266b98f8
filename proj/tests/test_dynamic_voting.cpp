#include <gtest/gtest.h>

#include "dynodom/dynamic_voting.hpp"
#include "oracles/naive_voting.hpp"
#include "support.hpp"

using namespace dynodom;

namespace {

ObjectInstance object(int id, const Eigen::Vector3d& c, const std::string& cls = "thing") {
  ObjectInstance o;
  o.track_id = id;
  o.class_name = cls;
  o.centroid = c;
  o.cloud = {c};
  return o;
}

}  // namespace

TEST(AssociateTracks, IdenticalFramesKeepIds) {
  const std::vector<ObjectInstance> prev{object(4, {0, 0, 1}), object(9, {1, 0, 2})};
  int next = 10;
  EXPECT_EQ(associate_tracks(prev, prev, 0.3, next), (std::vector<int>{4, 9}));
  EXPECT_EQ(next, 10);
}

TEST(AssociateTracks, SmallShiftKeepsId) {
  const std::vector<ObjectInstance> prev{object(1, {0, 0, 1})};
  const std::vector<ObjectInstance> curr{object(-1, {0.05, 0, 1})};
  int next = 2;
  EXPECT_EQ(associate_tracks(prev, curr, 0.3, next), (std::vector<int>{1}));
}

TEST(AssociateTracks, NewClassGetsFreshId) {
  const std::vector<ObjectInstance> prev{object(1, {0, 0, 1}, "chair")};
  const std::vector<ObjectInstance> curr{object(-1, {0, 0, 1}, "person")};
  int next = 5;
  EXPECT_EQ(associate_tracks(prev, curr, 0.3, next), (std::vector<int>{5}));
  EXPECT_EQ(next, 6);
}

TEST(AssociateTracks, GreedyNearestFirst) {
  const std::vector<ObjectInstance> prev{object(1, {0, 0, 1}), object(2, {0.2, 0, 1})};
  const std::vector<ObjectInstance> curr{object(-1, {0.15, 0, 1}), object(-1, {0.05, 0, 1})};
  int next = 3;
  EXPECT_EQ(associate_tracks(prev, curr, 0.3, next), (std::vector<int>{2, 1}));
  EXPECT_THROW(associate_tracks(prev, curr, 0.0, next), PreconditionError);
}

TEST(PairwiseDistance, Examples) {
  const auto d = pairwise_center_dist({object(1, {0, 0, 0}), object(2, {3, 4, 0})});
  ASSERT_EQ(d.size(), 1u);
  EXPECT_DOUBLE_EQ(d.at(PairKey(2, 1)), 5.0);
  EXPECT_TRUE(pairwise_center_dist({object(1, {0, 0, 0})}).empty());
  EXPECT_EQ(pairwise_center_dist({object(1, {0, 0, 0}), object(2, {1, 0, 0}), object(3, {0, 1, 0}),
                                  object(4, {0, 0, 1})})
                .size(),
            6u);
  EXPECT_THROW(PairKey(3, 3), PreconditionError);
}

TEST(Voting, StaticObjects) {
  const std::vector<ObjectInstance> f{object(1, {0, 0, 2}), object(2, {1, 0, 2}), object(3, {0, 1, 3})};
  const VoteResult r = vote_dynamic_objects(f, f, VotingParams{});
  EXPECT_TRUE(r.dynamic_ids.empty());
  EXPECT_EQ(r.accumulator.counts.size(), 3u);
  for (const auto& [id, n] : r.accumulator.counts) EXPECT_EQ(n, 0);
}

TEST(Voting, OneDisplacedObject) {
  const std::vector<ObjectInstance> prev{object(1, {0, 0, 2}), object(2, {1, 0, 2}), object(3, {0, 1, 3})};
  auto curr = prev;
  curr[0].centroid += Eigen::Vector3d(-1.0, 0, 0);
  const VoteResult r = vote_dynamic_objects(prev, curr, VotingParams{0.1, 2});
  EXPECT_EQ(r.dynamic_ids, (std::set<int>{1}));
  EXPECT_EQ(r.accumulator.votes(1), 2);
  EXPECT_EQ(r.accumulator.votes(2), 1);
  EXPECT_EQ(r.accumulator.votes(3), 1);
  EXPECT_FALSE(r.indeterminate());
}

TEST(Voting, TwoObjectsAreIndeterminate) {
  const std::vector<ObjectInstance> prev{object(1, {0, 0, 2}), object(2, {1, 0, 2})};
  auto curr = prev;
  curr[0].centroid.x() -= 0.5;
  const VoteResult r = vote_dynamic_objects(prev, curr, VotingParams{0.1, 2});
  EXPECT_TRUE(r.dynamic_ids.empty());
  EXPECT_TRUE(r.indeterminate());
  EXPECT_EQ(displacement_fallback(prev, curr, 0.1), (std::set<int>{1}));
}

TEST(Voting, FallbackUsesEgoMotion) {
  const std::vector<ObjectInstance> prev{object(1, {0, 0, 2})};
  // The camera moved +0.2 m in x, so a static object appears shifted by -0.2 m.
  const Se3d prev_to_curr(Eigen::Matrix3d::Identity(), Eigen::Vector3d(-0.2, 0, 0));
  const std::vector<ObjectInstance> curr{object(1, {-0.2, 0, 2})};
  EXPECT_TRUE(displacement_fallback(prev, curr, 0.05, prev_to_curr).empty());
  EXPECT_EQ(displacement_fallback(prev, curr, 0.05), (std::set<int>{1}));
}

TEST(Voting, OnlySharedObjectsVote) {
  const std::vector<ObjectInstance> prev{object(1, {0, 0, 2}), object(2, {1, 0, 2}), object(3, {0, 1, 3})};
  std::vector<ObjectInstance> curr{prev[0], prev[1], prev[2], object(7, {5, 5, 5})};
  const VoteResult r = vote_dynamic_objects(prev, curr, VotingParams{});
  EXPECT_EQ(r.accumulator.counts.count(7), 0u);
  EXPECT_EQ(r.shared_pairs, 3u);
}

TEST(Voting, MatchesPairEnumeration) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> count(2, 9);
  std::normal_distribution<double> jitter(0.0, 0.05);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ObjectInstance> prev, curr;
    std::map<int, Eigen::Vector3d> pm, cm;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      const Eigen::Vector3d c = testing_support::uniform3(rng, -2, 2);
      const Eigen::Vector3d d(jitter(rng), jitter(rng), jitter(rng));
      prev.push_back(object(i, c));
      curr.push_back(object(i, c + d));
      pm[i] = c;
      cm[i] = c + d;
    }
    const VotingParams params{0.04, 2};
    const VoteResult r = vote_dynamic_objects(prev, curr, params);
    const oracle::Votes o = oracle::vote(pm, cm, 0.04, 2);
    EXPECT_EQ(r.accumulator.counts, o.counts);
    if (!r.indeterminate()) EXPECT_EQ(r.dynamic_ids, o.dynamic);
  }
}

TEST(Track, ObserveAndPredict) {
  ObjectTrack t;
  t.track_id = 3;
  t.observe(0.0, {0, 0, 1}, {});
  EXPECT_THROW(predict_missing(t, 1.0 / 30), PreconditionError);
  t.observe(1.0 / 30, {1.0 / 30, 0, 1}, {});
  EXPECT_TRUE(t.last_velocity.isApprox(Eigen::Vector3d(1, 0, 0)));
  EXPECT_TRUE(predict_missing(t, 1.0 / 30).isApprox(Eigen::Vector3d(2.0 / 30, 0, 1)));
  EXPECT_THROW(t.observe(0.0, {0, 0, 1}, {}), PreconditionError);
  for (int i = 2; i < 10; ++i) t.observe(i / 30.0, {i / 30.0, 0, 1}, {}, 4);
  EXPECT_EQ(t.history.size(), 4u);
}

TEST(Track, ZeroVelocityPredictsSamePoint) {
  ObjectTrack t;
  t.observe(0.0, {1, 2, 3}, {});
  t.observe(0.1, {1, 2, 3}, {});
  EXPECT_TRUE(predict_missing(t, 0.5).isApprox(Eigen::Vector3d(1, 2, 3)));
}
