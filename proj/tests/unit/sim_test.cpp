#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "uwbloc/sim.hpp"

using namespace uwbloc;
using namespace uwbloc::sim;

namespace {

ScenarioConfig four_launches(double scatter_range = 0.0, double scatter_bearing = 0.0) {
  ScenarioConfig c;
  for (double b : {45.0, 135.0, -135.0, -45.0}) {
    c.deployment.launches.push_back({b, 15.0, scatter_range, scatter_bearing});
  }
  return c;
}

}  // namespace

TEST(Deploy, ZeroScatterLandsOnNominalOffsets) {
  const ScenarioConfig c = four_launches();
  Rng rng(7);
  const WorldState w = deploy_anchors(WorldState{}, c.deployment, c.arena, rng);
  ASSERT_EQ(w.anchors.size(), 5u);
  EXPECT_NEAR(w.anchors[0].true_position.value.x, -0.3, 1e-12);
  EXPECT_NEAR(w.anchors[0].true_position.value.y, 0.0, 1e-12);
  const double r = 15.0 / std::sqrt(2.0);
  EXPECT_NEAR(w.anchors[1].true_position.value.x, r, 1e-9);
  EXPECT_NEAR(w.anchors[1].true_position.value.y, r, 1e-9);
  EXPECT_NEAR(w.anchors[4].true_position.value.x, r, 1e-9);
  EXPECT_NEAR(w.anchors[4].true_position.value.y, -r, 1e-9);
}

TEST(Deploy, FollowsRoverPose) {
  ScenarioConfig c = four_launches();
  WorldState start;
  start.true_pose.value = {{2.0, -1.0}, M_PI / 2};
  Rng rng(1);
  const WorldState w = deploy_anchors(start, c.deployment, c.arena, rng);
  // Origin drop is 0.3 m behind a rover facing +y.
  EXPECT_NEAR(w.anchors[0].true_position.value.x, 2.0, 1e-12);
  EXPECT_NEAR(w.anchors[0].true_position.value.y, -1.3, 1e-12);
  for (std::size_t i = 1; i < w.anchors.size(); ++i) {
    EXPECT_NEAR(distance(w.anchors[i].true_position.value, {2.0, -1.0}), 15.0, 1e-9);
  }
}

TEST(Deploy, ScatteredRangesStayWithinThreeSigma) {
  const ScenarioConfig c = four_launches(1.5, 3.0);
  Rng rng(99);
  int outside = 0;
  for (int i = 0; i < 1000; ++i) {
    const WorldState w = deploy_anchors(WorldState{}, c.deployment, c.arena, rng);
    for (std::size_t k = 1; k < w.anchors.size(); ++k) {
      const double d = w.anchors[k].true_position.value.norm();
      if (std::abs(d - 15.0) > 4.5) ++outside;
    }
  }
  // 3 sigma: expect about 0.27% of 4000 draws outside.
  EXPECT_LE(outside, 25);
}

TEST(Deploy, Errors) {
  ScenarioConfig c = four_launches();
  Rng rng(3);
  const WorldState w = deploy_anchors(WorldState{}, c.deployment, c.arena, rng);
  EXPECT_ERROR_CODE(deploy_anchors(w, c.deployment, c.arena, rng), ErrorCode::AlreadyDeployed);

  ScenarioConfig many = four_launches();
  many.deployment.launches.push_back({0.0, 10.0, 0.0, 0.0});
  EXPECT_ERROR_CODE(deploy_anchors(WorldState{}, many.deployment, many.arena, rng), ErrorCode::AnchorCapacity);

  ScenarioConfig tight = four_launches();
  tight.arena = {-5, -5, 5, 5};
  WorldState before;
  EXPECT_ERROR_CODE(deploy_anchors(before, tight.deployment, tight.arena, rng), ErrorCode::OutOfArena);
  EXPECT_FALSE(before.deployed());
}

TEST(World, ZeroCommandLeavesPoseAlone) {
  ScenarioConfig c = four_launches();
  World w(c);
  const Pose2 before = w.state().true_pose.value;
  w.step({0.0, 0.0}, 0.02);
  EXPECT_EQ(w.state().true_pose.value.position.x, before.position.x);
  EXPECT_EQ(w.state().true_pose.value.position.y, before.position.y);
  EXPECT_EQ(w.state().true_pose.value.heading, before.heading);
  EXPECT_DOUBLE_EQ(w.state().sim_time, 0.02);
}

TEST(World, StraightDriveCoversCommandedDistance) {
  ScenarioConfig c = four_launches();
  c.controller.max_linear = 2.0;
  World w(c);
  for (int i = 0; i < 100; ++i) w.step({1.0, 0.0}, 0.1);
  EXPECT_NEAR(w.state().true_pose.value.position.x, 10.0, 1e-9);
  EXPECT_NEAR(w.state().true_pose.value.position.y, 0.0, 1e-12);
  EXPECT_NEAR(w.state().sim_time, 10.0, 1e-12);
}

TEST(World, CommandsAreClamped) {
  ScenarioConfig c = four_launches();
  World w(c);
  const Twist u = w.clamp({5.0, -5.0});
  EXPECT_DOUBLE_EQ(u.linear, c.controller.max_linear);
  EXPECT_DOUBLE_EQ(u.angular, -c.controller.max_angular);
}

TEST(World, RejectsBadDt) {
  World w(four_launches());
  EXPECT_ERROR_CODE(w.step({}, 0.0), ErrorCode::InvalidDt);
  EXPECT_ERROR_CODE(w.step({}, 0.2), ErrorCode::InvalidDt);
  EXPECT_ERROR_CODE(w.step({}, -0.01), ErrorCode::InvalidDt);
}

TEST(World, TrueRanges) {
  WorldState s;
  EXPECT_ERROR_CODE(true_ranges(s), ErrorCode::NotDeployed);
  s.anchors.push_back({AnchorId{0}, {{3.0, 4.0}}, true});
  s.anchors.push_back({AnchorId{1}, {{0.0, -2.0}}, true});
  const auto r = true_ranges(s);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_DOUBLE_EQ(r[0].second, 5.0);
  EXPECT_DOUBLE_EQ(r[1].second, 2.0);
}

TEST(World, UwbFramePutsFirstLaunchOnPlusX) {
  World w(four_launches());
  w.deploy();
  const auto f = uwb_frame(w.state());
  const auto anchors = surveyed_anchors(w.state());
  const auto& a = anchors.anchors();
  EXPECT_NEAR(a[0].position.value.x, 0.0, 1e-12);
  EXPECT_NEAR(a[0].position.value.y, 0.0, 1e-12);
  EXPECT_NEAR(a[1].position.value.y, 0.0, 1e-9);
  EXPECT_GT(a[1].position.value.x, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Point2 back = f(a[i].position).value;
    EXPECT_NEAR(back.x, w.state().anchors[i].true_position.value.x, 1e-9);
    EXPECT_NEAR(back.y, w.state().anchors[i].true_position.value.y, 1e-9);
  }
}

TEST(World, RangingRoundsArriveAtTheConfiguredRate) {
  ScenarioConfig c = four_launches();
  c.ranging.rate_hz = 2.0;
  World w(c);
  w.deploy();
  int rounds = 0;
  for (int i = 0; i < 500; ++i) {
    if (w.step({}, 0.02).round) ++rounds;
  }
  EXPECT_EQ(rounds, 20);
}

TEST(World, SameSeedSameTrajectory) {
  ScenarioConfig c = four_launches(1.0, 3.0);
  c.seed = 1234;
  World a(c), b(c);
  a.deploy();
  b.deploy();
  for (int i = 0; i < 300; ++i) {
    const auto oa = a.step({0.5, 0.1}, 0.02);
    const auto ob = b.step({0.5, 0.1}, 0.02);
    ASSERT_EQ(oa.round.has_value(), ob.round.has_value());
    if (oa.round) {
      ASSERT_EQ(oa.round->measurements.size(), ob.round->measurements.size());
      for (std::size_t k = 0; k < oa.round->measurements.size(); ++k) {
        EXPECT_EQ(oa.round->measurements[k].distance, ob.round->measurements[k].distance);
      }
    }
  }
  EXPECT_EQ(a.state().true_pose.value.position.x, b.state().true_pose.value.position.x);
}
