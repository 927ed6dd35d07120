// Copyright 2026 The rssmon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rssmon/world.hpp"

#include <random>
#include <string>

#include <gtest/gtest.h>

namespace rssmon {
namespace {

std::string validation_message(const RssParameters& p) {
  try {
    validate_parameters(p);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

TEST(ValidateParametersTest, DefaultsAccepted) {
  const ValidatedParameters p = validate_parameters(RssParameters{});
  EXPECT_DOUBLE_EQ(p->response_time_s, 0.5);
  EXPECT_DOUBLE_EQ(p->accel_max_long, 3.5);
  EXPECT_DOUBLE_EQ(p->brake_min_long, 4.0);
  EXPECT_DOUBLE_EQ(p->brake_max_long, 8.0);
}

TEST(ValidateParametersTest, BrakeOrderingNamesBothFields) {
  RssParameters p;
  p.brake_min_long = 9.0;
  p.brake_max_long = 8.0;
  const std::string msg = validation_message(p);
  EXPECT_NE(msg.find("brake_min_long"), std::string::npos) << msg;
  EXPECT_NE(msg.find("brake_max_long"), std::string::npos) << msg;
}

TEST(ValidateParametersTest, ZeroResponseTimeRejected) {
  RssParameters p;
  p.response_time_s = 0.0;
  EXPECT_NE(validation_message(p).find("response_time_s"), std::string::npos);
}

TEST(ValidateParametersTest, ResponseTimeSanityBound) {
  RssParameters p;
  p.response_time_s = 10.0;
  EXPECT_NO_THROW(validate_parameters(p));
  p.response_time_s = 10.5;
  EXPECT_THROW(validate_parameters(p), ValidationError);
}

TEST(ValidateParametersTest, ComfortMarginsMayBeZero) {
  RssParameters p;
  p.comfort_margin_long = 0.0;
  p.comfort_margin_lat = 0.0;
  EXPECT_NO_THROW(validate_parameters(p));
  p.comfort_margin_lat = -0.1;
  EXPECT_THROW(validate_parameters(p), ValidationError);
}

// Random points on both sides of every bound.
TEST(ValidateParametersTest, AcceptsExactlyTheValidRegion) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> pos(0.01, 9.0);
  std::uniform_real_distribution<double> neg(-5.0, 0.0);
  for (int i = 0; i < 2000; ++i) {
    RssParameters p;
    p.response_time_s = pos(rng);
    p.accel_max_long = pos(rng);
    p.brake_min_long = pos(rng);
    p.brake_max_long = p.brake_min_long + pos(rng);
    p.accel_max_lat = pos(rng);
    p.brake_min_lat = pos(rng);
    p.lateral_margin_mu = pos(rng);
    p.pedestrian_max_speed = pos(rng);
    p.comfort_margin_long = pos(rng) - 0.01;
    p.comfort_margin_lat = pos(rng) - 0.01;
    ASSERT_NO_THROW(validate_parameters(p));

    RssParameters bad = p;
    switch (i % 12) {
      case 0: bad.response_time_s = neg(rng); break;
      case 1: bad.accel_max_long = neg(rng); break;
      case 2: bad.brake_min_long = neg(rng); break;
      case 3: bad.brake_max_long = bad.brake_min_long - pos(rng); break;
      case 4: bad.accel_max_lat = neg(rng); break;
      case 5: bad.brake_min_lat = neg(rng); break;
      case 6: bad.lateral_margin_mu = neg(rng); break;
      case 7: bad.pedestrian_max_speed = neg(rng); break;
      case 8: bad.comfort_margin_long = neg(rng) - 1e-9; break;
      case 9: bad.comfort_margin_lat = neg(rng) - 1e-9; break;
      case 10: bad.response_time_s = 10.0 + pos(rng); break;
      case 11: bad.brake_min_long = std::nan(""); break;
    }
    EXPECT_THROW(validate_parameters(bad), ValidationError) << "case " << i % 12;
  }
}

TEST(ActorTest, EdgesAndRear) {
  ActorState a;
  a.s = 10.0;
  a.l = 1.0;
  EXPECT_DOUBLE_EQ(a.rear(), 5.5);
  EXPECT_DOUBLE_EQ(a.left_edge(), 0.1);
  EXPECT_DOUBLE_EQ(a.right_edge(), 1.9);
}

TEST(ActorTest, Validation) {
  ActorState a;
  a.actor_id = "x";
  EXPECT_NO_THROW(validate_actor(a));
  a.v_long = -1.0;
  EXPECT_THROW(validate_actor(a), ValidationError);
  a.v_long = 0.0;
  a.length = 0.0;
  EXPECT_THROW(validate_actor(a), ValidationError);
}

TEST(WorldFrameTest, EgoMustAppearOnce) {
  WorldFrame f;
  f.ego_id = "ego";
  ActorState ego;
  ego.actor_id = "ego";
  EXPECT_THROW(validate_frame(f), ValidationError);
  f.actors.push_back(ego);
  EXPECT_NO_THROW(validate_frame(f));
  f.actors.push_back(ego);
  EXPECT_THROW(validate_frame(f), ValidationError);
}

TEST(WorldFrameTest, FindAndEgo) {
  WorldFrame f;
  f.ego_id = "ego";
  ActorState ego;
  ego.actor_id = "ego";
  ActorState other;
  other.actor_id = "b";
  other.s = 7.0;
  f.actors = {ego, other};
  EXPECT_EQ(f.ego().actor_id, "ego");
  ASSERT_NE(f.find("b"), nullptr);
  EXPECT_DOUBLE_EQ(f.find("b")->s, 7.0);
  EXPECT_EQ(f.find("zz"), nullptr);
}

TEST(LaneLayoutTest, LaneLookupAndAdjacency) {
  LaneLayout layout{{{0, 0.0, 3.5}, {1, 3.5, 3.5}, {2, 10.0, 3.5}}};
  EXPECT_EQ(layout.lane_at(0.3), 0);
  EXPECT_EQ(layout.lane_at(2.0), 1);
  EXPECT_FALSE(layout.lane_at(7.0).has_value());
  EXPECT_TRUE(layout.adjacent(0, 1));
  EXPECT_TRUE(layout.adjacent(1, 0));
  EXPECT_FALSE(layout.adjacent(1, 2));
  EXPECT_FALSE(layout.adjacent(0, 0));
  EXPECT_FALSE(layout.adjacent(0, 7));
}

TEST(EnvelopeTest, UnconstrainedAllowsFullAcceleration) {
  const ValidatedParameters p = validate_parameters(RssParameters{});
  const ResponseEnvelope env = unconstrained_envelope(p);
  EXPECT_EQ(env.state, EnvelopeState::kSafe);
  EXPECT_DOUBLE_EQ(env.max_allowed_accel_long, 3.5);
  EXPECT_DOUBLE_EQ(env.min_required_brake_long, 0.0);
  EXPECT_EQ(env.lateral_action, LateralAction::kNone);
  EXPECT_FALSE(env.since_t.has_value());
}

TEST(EnumTest, StringRoundTrip) {
  for (ActorKind k : {ActorKind::kVehicle, ActorKind::kPedestrian, ActorKind::kStaticObject, ActorKind::kUnknown}) {
    EXPECT_EQ(actor_kind_from_string(to_string(k)), k);
  }
  for (OcclusionHides h : {OcclusionHides::kPedestrian, OcclusionHides::kVehicle}) {
    EXPECT_EQ(occlusion_hides_from_string(to_string(h)), h);
  }
  EXPECT_THROW(actor_kind_from_string("bicycle"), ValidationError);
}

}  // namespace
}  // namespace rssmon
