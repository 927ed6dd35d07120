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

#include <cmath>
#include <set>

#include <fmt/format.h>

namespace rssmon {

namespace {

void require_positive(double value, std::string_view field, std::vector<std::string>* errors) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    errors->push_back(fmt::format("{} must be > 0 (got {})", field, value));
  }
}

void require_non_negative(double value, std::string_view field, std::vector<std::string>* errors) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    errors->push_back(fmt::format("{} must be >= 0 (got {})", field, value));
  }
}

}  // namespace

ValidatedParameters ValidatedParameters::validate(const RssParameters& p) {
  std::vector<std::string> errors;
  require_positive(p.response_time_s, "response_time_s", &errors);
  require_positive(p.accel_max_long, "accel_max_long", &errors);
  require_positive(p.brake_min_long, "brake_min_long", &errors);
  require_positive(p.brake_max_long, "brake_max_long", &errors);
  require_positive(p.accel_max_lat, "accel_max_lat", &errors);
  require_positive(p.brake_min_lat, "brake_min_lat", &errors);
  require_positive(p.lateral_margin_mu, "lateral_margin_mu", &errors);
  require_positive(p.pedestrian_max_speed, "pedestrian_max_speed", &errors);
  require_non_negative(p.comfort_margin_long, "comfort_margin_long", &errors);
  require_non_negative(p.comfort_margin_lat, "comfort_margin_lat", &errors);
  if (p.brake_min_long > p.brake_max_long) {
    errors.push_back(fmt::format("brake_min_long ({}) must be <= brake_max_long ({})",
                                 p.brake_min_long, p.brake_max_long));
  }
  if (p.response_time_s > 10.0) {
    errors.push_back(
        fmt::format("response_time_s must be <= 10 s (got {}); check units", p.response_time_s));
  }
  if (!errors.empty()) {
    throw ValidationError(fmt::format("invalid rss parameters: {}", fmt::join(errors, "; ")));
  }
  return ValidatedParameters(p);
}

std::string_view to_string(ActorKind kind) {
  switch (kind) {
    case ActorKind::kVehicle:
      return "vehicle";
    case ActorKind::kPedestrian:
      return "pedestrian";
    case ActorKind::kStaticObject:
      return "static_object";
    case ActorKind::kUnknown:
      return "unknown";
  }
  return "unknown";
}

ActorKind actor_kind_from_string(std::string_view name) {
  if (name == "vehicle") return ActorKind::kVehicle;
  if (name == "pedestrian") return ActorKind::kPedestrian;
  if (name == "static_object") return ActorKind::kStaticObject;
  if (name == "unknown") return ActorKind::kUnknown;
  throw ValidationError(fmt::format("unknown actor kind '{}'", name));
}

std::string_view to_string(OcclusionHides hides) {
  return hides == OcclusionHides::kPedestrian ? "pedestrian" : "vehicle";
}

OcclusionHides occlusion_hides_from_string(std::string_view name) {
  if (name == "pedestrian") return OcclusionHides::kPedestrian;
  if (name == "vehicle") return OcclusionHides::kVehicle;
  throw ValidationError(fmt::format("unknown occlusion kind '{}'", name));
}

std::string_view to_string(EnvelopeState state) {
  switch (state) {
    case EnvelopeState::kSafe:
      return "safe";
    case EnvelopeState::kDangerousLongitudinal:
      return "dangerous_longitudinal";
    case EnvelopeState::kDangerousLateral:
      return "dangerous_lateral";
    case EnvelopeState::kDangerousBoth:
      return "dangerous_both";
  }
  return "safe";
}

std::string_view to_string(LateralAction action) {
  return action == LateralAction::kNone ? "none" : "reach_zero_lateral_velocity";
}

void validate_actor(const ActorState& actor) {
  std::vector<std::string> errors;
  require_positive(actor.length, "length", &errors);
  require_positive(actor.width, "width", &errors);
  require_non_negative(actor.v_long, "v_long", &errors);
  if (!std::isfinite(actor.s) || !std::isfinite(actor.l) || !std::isfinite(actor.v_lat)) {
    errors.push_back("position and velocity must be finite");
  }
  if (!errors.empty()) {
    throw ValidationError(
        fmt::format("invalid actor '{}': {}", actor.actor_id, fmt::join(errors, "; ")));
  }
}

void validate_occlusion(const OcclusionRegion& region) {
  if (!(region.s_near > 0.0)) {
    throw ValidationError(fmt::format("occlusion s_near must be > 0 (got {})", region.s_near));
  }
  if (!(region.lateral_offset >= 0.0)) {
    throw ValidationError(
        fmt::format("occlusion lateral_offset must be >= 0 (got {})", region.lateral_offset));
  }
}

const ActorState& WorldFrame::ego() const {
  if (const ActorState* found = find(ego_id)) return *found;
  throw ValidationError(fmt::format("ego '{}' not present in frame at t={}", ego_id, t));
}

const ActorState* WorldFrame::find(std::string_view actor_id) const {
  for (const ActorState& actor : actors) {
    if (actor.actor_id == actor_id) return &actor;
  }
  return nullptr;
}

void validate_frame(const WorldFrame& frame) {
  std::set<std::string_view> ids;
  int ego_count = 0;
  for (const ActorState& actor : frame.actors) {
    if (!ids.insert(actor.actor_id).second) {
      throw ValidationError(fmt::format("duplicate actor id '{}' at t={}", actor.actor_id, frame.t));
    }
    if (actor.actor_id == frame.ego_id) ++ego_count;
    validate_actor(actor);
  }
  if (ego_count != 1) {
    throw ValidationError(fmt::format("ego '{}' must appear exactly once at t={}", frame.ego_id, frame.t));
  }
  for (const OcclusionRegion& region : frame.occlusions) validate_occlusion(region);
}

const LaneInfo* LaneLayout::find(int lane_id) const {
  for (const LaneInfo& lane : lanes) {
    if (lane.lane_id == lane_id) return &lane;
  }
  return nullptr;
}

std::optional<int> LaneLayout::lane_at(double l) const {
  for (const LaneInfo& lane : lanes) {
    if (l >= lane.center_l - 0.5 * lane.width && l < lane.center_l + 0.5 * lane.width) {
      return lane.lane_id;
    }
  }
  return std::nullopt;
}

bool LaneLayout::adjacent(int a, int b) const {
  const LaneInfo* la = find(a);
  const LaneInfo* lb = find(b);
  if (la == nullptr || lb == nullptr || a == b) return false;
  const double touching = 0.5 * (la->width + lb->width);
  return std::abs(std::abs(la->center_l - lb->center_l) - touching) < 1e-6;
}

ResponseEnvelope unconstrained_envelope(const ValidatedParameters& p) {
  ResponseEnvelope env;
  env.max_allowed_accel_long = p->accel_max_long;
  return env;
}

}  // namespace rssmon
