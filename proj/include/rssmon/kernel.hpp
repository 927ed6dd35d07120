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
 * \file kernel.hpp
 * The safety rules as pure functions over world frames.
 *
 *  - Rule 1: safe longitudinal distance to the vehicle in front.
 *  - Rule 2: safe lateral distance (no reckless cut-ins).
 *  - Rule 3: right of way is given, not taken.
 *  - Rule 4: speed cap in front of occlusions.
 *  - Rule 5: evasive manoeuvres are legal only if they create no new
 *    dangerous situation.
 *
 * A pair of actors is in a dangerous situation when both the longitudinal and
 * the lateral distance are below their safe values. The last non-dangerous
 * instant before that is the danger threshold; from there the ego owes the
 * proper response encoded as a ResponseEnvelope.
 */
#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rssmon/world.hpp"

namespace rssmon {

/// Minimum safe bumper gap behind a front vehicle. Excludes comfort margin.
double safe_longitudinal_distance(double v_rear, double v_front, const ValidatedParameters& p);

/// Minimum safe edge-to-edge gap between a left actor (v1) and a right actor
/// (v2). Lateral velocities are positive rightward. Always >= mu.
double safe_lateral_distance(double v1_lat, double v2_lat, const ValidatedParameters& p);

/// Distance covered by the ego if it accelerates for one response time and
/// then brakes at brake_min_long until stationary.
double worst_case_stopping_distance(double v, const ValidatedParameters& p);

/// Largest speed whose worst-case stopping distance is <= distance, >= 0.
double max_speed_to_stop_within(double distance, const ValidatedParameters& p);

struct SituationAssessment {
  double long_distance_actual = 0.0;
  double long_distance_required = 0.0;
  double lat_distance_actual = 0.0;
  double lat_distance_required = 0.0;
  bool long_safe = true;
  bool lat_safe = true;
  bool dangerous = false;
  bool collision = false;
  /// True when the other actor is in front of the ego.
  bool other_ahead = true;

  bool operator==(const SituationAssessment&) const = default;
};

SituationAssessment assess_pair(const ActorState& ego, const ActorState& other,
                                const ValidatedParameters& p, bool apply_comfort);

/// True when the two bodies overlap longitudinally (gap <= 0) and laterally.
bool bodies_collide(const ActorState& a, const ActorState& b);

/// One tick of the ego/other relationship.
struct PairSample {
  double t = 0.0;
  SituationAssessment assessment;
  double ego_v_long = 0.0;
  double ego_v_lat = 0.0;
};

/// Pair samples for `other_id` across `frames`. Frames where the actor is
/// absent contribute a non-dangerous placeholder. When `trailing_only` is set,
/// only the current dangerous episode and the sample preceding it are kept,
/// which is all proper_response needs.
std::vector<PairSample> pair_history(std::span<const WorldFrame> frames, std::string_view other_id,
                                     const ValidatedParameters& p, bool trailing_only);

/// Time of the last non-dangerous sample before the first dangerous one;
/// nullopt when never dangerous; the first sample's time when dangerous from
/// the start. Throws on empty history.
std::optional<double> danger_threshold(std::span<const PairSample> history);

/// Envelope owed by the ego at the last sample of `history`.
ResponseEnvelope proper_response(std::span<const PairSample> history, const ValidatedParameters& p);

/// Tightest envelope satisfying both inputs.
ResponseEnvelope combine_envelopes(const ResponseEnvelope& a, const ResponseEnvelope& b);

/// Envelope owed by the ego at the last frame of `history`, over all actors.
ResponseEnvelope ego_envelope(std::span<const WorldFrame> history, const ValidatedParameters& p);

/// Envelope owed because of a single actor.
ResponseEnvelope actor_envelope(std::span<const WorldFrame> history, std::string_view actor_id,
                                const ValidatedParameters& p);

enum class RightOfWay { kProceed, kYield };

std::string_view to_string(RightOfWay decision);

/// Ego holds the formal right of way. Yield when the other agent cannot stop
/// at its stop line under the foreseeable maximum braking.
RightOfWay right_of_way_decision(double ego_dist_to_conflict, double ego_v,
                                 double other_dist_to_stopline, double other_v,
                                 const ValidatedParameters& p);

/// A crossing road where the ego holds the right of way. Crossing actors
/// carry `crossing_lane` as lane id and move laterally from `stop_l` toward
/// `clear_l`; the conflict area spans [s_start, s_end] along the ego lane.
struct ConflictZone {
  std::string zone_id;
  int crossing_lane = 100;
  double s_start = 0.0;
  double s_end = 0.0;
  double stop_l = 0.0;
  double clear_l = 0.0;

  bool operator==(const ConflictZone&) const = default;
};

/// Ids of crossing actors in `frame` the ego must yield to at `zone`.
std::vector<std::string> actors_requiring_yield(const WorldFrame& frame, const ConflictZone& zone,
                                                const ValidatedParameters& p);

/// Highest ego speed that still allows a full stop before the occlusion edge.
double occlusion_speed_limit(const OcclusionRegion& region, const ValidatedParameters& p);

enum class EvasiveVerdict { kPermitted, kForbidden };

std::string_view to_string(EvasiveVerdict verdict);

/// Rule 5 legality of moving the ego into `target_lane`. The ego is projected
/// onto the target lane centre, moving toward it at `lane_change_lat_speed`,
/// and every resulting pair must be non-dangerous. Throws ValidationError if
/// the lane is unknown or not adjacent to the ego lane.
EvasiveVerdict evasive_maneuver_check(const WorldFrame& frame, int target_lane,
                                      const LaneLayout& layout, const ValidatedParameters& p,
                                      double lane_change_lat_speed = 1.0);

struct EgoCommand {
  double a_long = 0.0;
  double a_lat = 0.0;

  bool operator==(const EgoCommand&) const = default;
};

/// Whether `command` lies inside `envelope` for an ego with the given
/// velocities; `dt` bounds how much lateral deceleration is physically needed
/// to reach zero lateral velocity within one tick.
bool command_within_envelope(const ResponseEnvelope& envelope, const EgoCommand& command,
                             double ego_v_lat, double dt, const ValidatedParameters& p);

struct ComplianceReport {
  std::vector<bool> compliant;
  std::vector<ResponseEnvelope> envelopes;
  std::optional<std::size_t> first_violation;
};

/// Per-frame check of applied ego accelerations against the ground-truth
/// envelope. Comfort margins are never applied here.
ComplianceReport compliance_check(std::span<const WorldFrame> trace,
                                  std::span<const EgoCommand> ego_commands,
                                  const ValidatedParameters& p);

/// Result of comparing a reference envelope with a candidate one.
struct EnvelopeComparison {
  /// Rule number (1 or 2) whose reference demand the candidate fails to
  /// impose at least as strongly.
  std::optional<int> weaker_rule;
  /// Candidate imposes a strictly stronger constraint somewhere.
  bool stronger = false;
};

EnvelopeComparison compare_envelopes(const ResponseEnvelope& reference,
                                     const ResponseEnvelope& candidate);

}  // namespace rssmon
