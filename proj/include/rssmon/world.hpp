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

/**
 * \file world.hpp
 * Shared domain types: safety parameters, actor states, world frames and the
 * response envelope that the safety kernel imposes on the ego vehicle.
 *
 * Geometry is a lane-aligned "1.5-D" model. `s` runs along the direction of
 * travel and marks the front bumper; `l` is the lateral position of the body
 * centerline, positive to the right. All quantities are SI.
 */
#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rssmon {

/// Thrown for any input that violates a documented invariant.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Worst-case behavioural assumptions and comfort margins.
struct RssParameters {
  double response_time_s = 0.5;
  double accel_max_long = 3.5;
  double brake_min_long = 4.0;
  double brake_max_long = 8.0;
  double accel_max_lat = 1.0;
  double brake_min_lat = 2.0;
  double lateral_margin_mu = 0.1;
  double pedestrian_max_speed = 2.0;
  double comfort_margin_long = 0.5;
  double comfort_margin_lat = 0.5;

  bool operator==(const RssParameters&) const = default;
};

/// RssParameters that passed validation. Only obtainable via validate().
class ValidatedParameters {
 public:
  /// Throws ValidationError naming the offending field(s).
  static ValidatedParameters validate(const RssParameters& p);

  const RssParameters& get() const { return p_; }
  const RssParameters* operator->() const { return &p_; }

 private:
  explicit ValidatedParameters(const RssParameters& p) : p_(p) {}
  RssParameters p_;
};

inline ValidatedParameters validate_parameters(const RssParameters& p) {
  return ValidatedParameters::validate(p);
}

enum class ActorKind { kVehicle, kPedestrian, kStaticObject, kUnknown };

std::string_view to_string(ActorKind kind);
ActorKind actor_kind_from_string(std::string_view name);

struct ActorState {
  std::string actor_id;
  ActorKind kind = ActorKind::kVehicle;
  double s = 0.0;       // front bumper, m
  double l = 0.0;       // centerline, m, positive rightward
  double v_long = 0.0;  // m/s, >= 0
  double v_lat = 0.0;   // m/s, positive rightward
  double length = 4.5;
  double width = 1.8;
  int lane_id = 0;

  double rear() const { return s - length; }
  double left_edge() const { return l - 0.5 * width; }
  double right_edge() const { return l + 0.5 * width; }

  bool operator==(const ActorState&) const = default;
};

/// Throws if length/width are not positive or v_long is negative.
void validate_actor(const ActorState& actor);

enum class OcclusionHides { kPedestrian, kVehicle };

std::string_view to_string(OcclusionHides hides);
OcclusionHides occlusion_hides_from_string(std::string_view name);

struct OcclusionRegion {
  double s_near = 0.0;          // ego front bumper to occlusion edge, m
  double lateral_offset = 0.0;  // ego path edge to occlusion boundary, m
  OcclusionHides hides = OcclusionHides::kPedestrian;

  bool operator==(const OcclusionRegion&) const = default;
};

void validate_occlusion(const OcclusionRegion& region);

struct WorldFrame {
  double t = 0.0;
  std::string ego_id;
  std::vector<ActorState> actors;
  std::vector<OcclusionRegion> occlusions;

  const ActorState& ego() const;
  const ActorState* find(std::string_view actor_id) const;

  bool operator==(const WorldFrame&) const = default;
};

/// Ego present exactly once, ids unique, every actor and occlusion valid.
void validate_frame(const WorldFrame& frame);

struct LaneInfo {
  int lane_id = 0;
  double center_l = 0.0;
  double width = 3.5;

  bool operator==(const LaneInfo&) const = default;
};

/// Parallel same-direction lanes. Lane ids not listed here are treated as
/// off-road or crossing-road identifiers.
struct LaneLayout {
  std::vector<LaneInfo> lanes;

  const LaneInfo* find(int lane_id) const;
  /// Lane whose extent contains lateral position `l`, if any.
  std::optional<int> lane_at(double l) const;
  bool adjacent(int a, int b) const;

  bool operator==(const LaneLayout&) const = default;
};

enum class EnvelopeState {
  kSafe,
  kDangerousLongitudinal,
  kDangerousLateral,
  kDangerousBoth,
};

enum class LateralAction { kNone, kReachZeroLateralVelocity };

std::string_view to_string(EnvelopeState state);
std::string_view to_string(LateralAction action);

/// Acceleration constraints owed by the ego vehicle at one instant.
struct ResponseEnvelope {
  EnvelopeState state = EnvelopeState::kSafe;
  double max_allowed_accel_long = 0.0;
  double min_required_brake_long = 0.0;
  LateralAction lateral_action = LateralAction::kNone;
  std::optional<double> since_t;

  bool operator==(const ResponseEnvelope&) const = default;
};

/// The envelope that constrains nothing beyond the ego's own acceleration
/// assumption.
ResponseEnvelope unconstrained_envelope(const ValidatedParameters& p);

}  // namespace rssmon
