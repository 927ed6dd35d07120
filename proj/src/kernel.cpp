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

#include "rssmon/kernel.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace rssmon {

namespace {

constexpr double kTimeEps = 1e-9;
constexpr double kAccelTol = 1e-9;
constexpr double kStationary = 1e-9;

bool has_longitudinal(EnvelopeState s) {
  return s == EnvelopeState::kDangerousLongitudinal || s == EnvelopeState::kDangerousBoth;
}

bool has_lateral(EnvelopeState s) {
  return s == EnvelopeState::kDangerousLateral || s == EnvelopeState::kDangerousBoth;
}

EnvelopeState merge_states(EnvelopeState a, EnvelopeState b) {
  const bool lon = has_longitudinal(a) || has_longitudinal(b);
  const bool lat = has_lateral(a) || has_lateral(b);
  if (lon && lat) return EnvelopeState::kDangerousBoth;
  if (lon) return EnvelopeState::kDangerousLongitudinal;
  if (lat) return EnvelopeState::kDangerousLateral;
  return EnvelopeState::kSafe;
}

// Signed lateral displacement while braking from v toward zero.
double signed_braking_displacement(double v, double brake) { return v * std::abs(v) / (2.0 * brake); }

PairSample sample_for(const WorldFrame& frame, std::string_view other_id,
                      const ValidatedParameters& p) {
  const ActorState& ego = frame.ego();
  PairSample sample;
  sample.t = frame.t;
  sample.ego_v_long = ego.v_long;
  sample.ego_v_lat = ego.v_lat;
  if (const ActorState* other = frame.find(other_id)) {
    sample.assessment = assess_pair(ego, *other, p, false);
  }
  return sample;
}

}  // namespace

double safe_longitudinal_distance(double v_rear, double v_front, const ValidatedParameters& p) {
  if (v_rear < 0.0 || v_front < 0.0) {
    throw ValidationError(
        fmt::format("velocities must be >= 0 (v_rear={}, v_front={})", v_rear, v_front));
  }
  const double rho = p->response_time_s;
  const double v_after = v_rear + rho * p->accel_max_long;
  const double d = v_rear * rho + 0.5 * p->accel_max_long * rho * rho +
                   v_after * v_after / (2.0 * p->brake_min_long) -
                   v_front * v_front / (2.0 * p->brake_max_long);
  return std::max(0.0, d);
}

double safe_lateral_distance(double v1_lat, double v2_lat, const ValidatedParameters& p) {
  const double rho = p->response_time_s;
  const double v1_rho = v1_lat + rho * p->accel_max_lat;
  const double v2_rho = v2_lat - rho * p->accel_max_lat;
  const double travel1 = 0.5 * (v1_lat + v1_rho) * rho + signed_braking_displacement(v1_rho, p->brake_min_lat);
  const double travel2 = 0.5 * (v2_lat + v2_rho) * rho + signed_braking_displacement(v2_rho, p->brake_min_lat);
  return p->lateral_margin_mu + std::max(0.0, travel1 - travel2);
}

double worst_case_stopping_distance(double v, const ValidatedParameters& p) {
  return safe_longitudinal_distance(v, 0.0, p);
}

double max_speed_to_stop_within(double distance, const ValidatedParameters& p) {
  // With u = v + a*rho the stopping distance is u^2/(2b) + rho*u - a*rho^2/2.
  const double rho = p->response_time_s;
  const double a = p->accel_max_long;
  const double b = p->brake_min_long;
  const double c = distance + 0.5 * a * rho * rho;
  if (c <= 0.0) return 0.0;
  const double u = b * (-rho + std::sqrt(rho * rho + 2.0 * c / b));
  return std::max(0.0, u - a * rho);
}

SituationAssessment assess_pair(const ActorState& ego, const ActorState& other,
                                const ValidatedParameters& p, bool apply_comfort) {
  SituationAssessment out;
  const double ego_mid = ego.s - 0.5 * ego.length;
  const double other_mid = other.s - 0.5 * other.length;
  out.other_ahead = other_mid >= ego_mid;

  double long_gap = 0.0;
  if (out.other_ahead) {
    long_gap = other.rear() - ego.s;
    out.long_distance_required = safe_longitudinal_distance(ego.v_long, other.v_long, p);
  } else {
    long_gap = ego.rear() - other.s;
    out.long_distance_required = safe_longitudinal_distance(other.v_long, ego.v_long, p);
  }

  const bool ego_left = ego.l <= other.l;
  const ActorState& left = ego_left ? ego : other;
  const ActorState& right = ego_left ? other : ego;
  const double lat_gap = right.left_edge() - left.right_edge();
  out.lat_distance_required = safe_lateral_distance(left.v_lat, right.v_lat, p);

  if (apply_comfort) {
    out.long_distance_required += p->comfort_margin_long;
    out.lat_distance_required += p->comfort_margin_lat;
  }

  out.long_distance_actual = std::max(0.0, long_gap);
  out.lat_distance_actual = std::max(0.0, lat_gap);
  out.long_safe = long_gap >= out.long_distance_required;
  out.lat_safe = lat_gap >= out.lat_distance_required;
  out.dangerous = !out.long_safe && !out.lat_safe;
  out.collision = long_gap <= 0.0 && lat_gap < 0.0;
  return out;
}

bool bodies_collide(const ActorState& a, const ActorState& b) {
  const double long_overlap = std::min(a.s, b.s) - std::max(a.rear(), b.rear());
  const double lat_overlap = std::min(a.right_edge(), b.right_edge()) - std::max(a.left_edge(), b.left_edge());
  return long_overlap >= 0.0 && lat_overlap > 0.0;
}

std::vector<PairSample> pair_history(std::span<const WorldFrame> frames, std::string_view other_id,
                                     const ValidatedParameters& p, bool trailing_only) {
  std::vector<PairSample> out;
  if (!trailing_only) {
    out.reserve(frames.size());
    for (const WorldFrame& frame : frames) out.push_back(sample_for(frame, other_id, p));
    return out;
  }
  for (auto it = frames.rbegin(); it != frames.rend(); ++it) {
    out.push_back(sample_for(*it, other_id, p));
    if (!out.back().assessment.dangerous) {
      // Keep one extra sample for the tick spacing when the episode is empty.
      if (out.size() == 1 && std::next(it) != frames.rend()) {
        out.push_back(sample_for(*std::next(it), other_id, p));
      }
      break;
    }
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::optional<double> danger_threshold(std::span<const PairSample> history) {
  if (history.empty()) throw ValidationError("danger_threshold: empty history");
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (history[i].assessment.dangerous) {
      return i == 0 ? history[0].t : history[i - 1].t;
    }
  }
  return std::nullopt;
}

ResponseEnvelope proper_response(std::span<const PairSample> history, const ValidatedParameters& p) {
  if (history.empty()) throw ValidationError("proper_response: empty history");
  ResponseEnvelope env = unconstrained_envelope(p);
  const PairSample& last = history.back();
  if (!last.assessment.dangerous) return env;

  // Start of the current dangerous episode.
  std::size_t first = history.size() - 1;
  while (first > 0 && history[first - 1].assessment.dangerous) --first;
  const double threshold = first > 0 ? history[first - 1].t : history[0].t;

  bool lateral_last = false;
  if (first > 0) {
    const SituationAssessment& before = history[first - 1].assessment;
    const SituationAssessment& onset = history[first].assessment;
    const bool long_became_unsafe = before.long_safe && !onset.long_safe;
    const bool lat_became_unsafe = before.lat_safe && !onset.lat_safe;
    // Simultaneous onset counts as longitudinal.
    lateral_last = lat_became_unsafe && !long_became_unsafe;
  }

  const double dt = history.size() >= 2 ? last.t - history[history.size() - 2].t : 0.0;
  // Acceleration is allowed only on ticks that end within the response time.
  const bool response_due = last.t + dt > threshold + p->response_time_s + kTimeEps;

  env.since_t = threshold;
  if (lateral_last) {
    env.state = EnvelopeState::kDangerousLateral;
    if (response_due) env.lateral_action = LateralAction::kReachZeroLateralVelocity;
    return env;
  }
  if (!last.assessment.other_ahead) {
    // The other actor is behind: the ego owes no longitudinal response.
    return unconstrained_envelope(p);
  }
  env.state = EnvelopeState::kDangerousLongitudinal;
  if (response_due) {
    if (last.ego_v_long <= kStationary) {
      env.max_allowed_accel_long = 0.0;
    } else {
      env.min_required_brake_long = p->brake_min_long;
      env.max_allowed_accel_long = -p->brake_min_long;
    }
  }
  return env;
}

ResponseEnvelope combine_envelopes(const ResponseEnvelope& a, const ResponseEnvelope& b) {
  ResponseEnvelope out;
  out.state = merge_states(a.state, b.state);
  out.max_allowed_accel_long = std::min(a.max_allowed_accel_long, b.max_allowed_accel_long);
  out.min_required_brake_long = std::max(a.min_required_brake_long, b.min_required_brake_long);
  out.lateral_action = std::max(a.lateral_action, b.lateral_action);
  if (a.since_t && b.since_t) {
    out.since_t = std::min(*a.since_t, *b.since_t);
  } else {
    out.since_t = a.since_t ? a.since_t : b.since_t;
  }
  return out;
}

ResponseEnvelope actor_envelope(std::span<const WorldFrame> history, std::string_view actor_id,
                                const ValidatedParameters& p) {
  if (history.empty()) throw ValidationError("actor_envelope: empty history");
  const std::vector<PairSample> samples = pair_history(history, actor_id, p, true);
  return proper_response(samples, p);
}

ResponseEnvelope ego_envelope(std::span<const WorldFrame> history, const ValidatedParameters& p) {
  if (history.empty()) throw ValidationError("ego_envelope: empty history");
  ResponseEnvelope env = unconstrained_envelope(p);
  const WorldFrame& current = history.back();
  for (const ActorState& actor : current.actors) {
    if (actor.actor_id == current.ego_id) continue;
    env = combine_envelopes(env, actor_envelope(history, actor.actor_id, p));
  }
  return env;
}

std::string_view to_string(RightOfWay decision) {
  return decision == RightOfWay::kProceed ? "proceed" : "yield";
}

RightOfWay right_of_way_decision(double ego_dist_to_conflict, double ego_v,
                                 double other_dist_to_stopline, double other_v,
                                 const ValidatedParameters& p) {
  if (ego_dist_to_conflict < 0.0 || ego_v < 0.0 || other_dist_to_stopline < 0.0 || other_v < 0.0) {
    throw ValidationError("right_of_way_decision: inputs must be >= 0");
  }
  if (other_v <= 0.0) return RightOfWay::kProceed;
  if (other_dist_to_stopline <= 0.0) return RightOfWay::kYield;
  const double required_decel = other_v * other_v / (2.0 * other_dist_to_stopline);
  return required_decel > p->brake_max_long ? RightOfWay::kYield : RightOfWay::kProceed;
}

std::vector<std::string> actors_requiring_yield(const WorldFrame& frame, const ConflictZone& zone,
                                                const ValidatedParameters& p) {
  std::vector<std::string> out;
  const ActorState& ego = frame.ego();
  if (ego.rear() > zone.s_end) return out;
  const double dir = zone.clear_l >= zone.stop_l ? 1.0 : -1.0;
  const double ego_dist = std::max(0.0, zone.s_start - ego.s);
  for (const ActorState& actor : frame.actors) {
    if (actor.actor_id == frame.ego_id || actor.lane_id != zone.crossing_lane) continue;
    const double leading = dir > 0.0 ? actor.right_edge() : actor.left_edge();
    const double trailing = dir > 0.0 ? actor.left_edge() : actor.right_edge();
    if ((trailing - zone.clear_l) * dir >= 0.0) continue;
    const double dist = std::max(0.0, (zone.stop_l - leading) * dir);
    const double speed = std::max(0.0, actor.v_lat * dir);
    if (right_of_way_decision(ego_dist, ego.v_long, dist, speed, p) == RightOfWay::kYield) {
      out.push_back(actor.actor_id);
    }
  }
  return out;
}

double occlusion_speed_limit(const OcclusionRegion& region, const ValidatedParameters& p) {
  validate_occlusion(region);
  return max_speed_to_stop_within(region.s_near, p);
}

std::string_view to_string(EvasiveVerdict verdict) {
  return verdict == EvasiveVerdict::kPermitted ? "permitted" : "forbidden";
}

EvasiveVerdict evasive_maneuver_check(const WorldFrame& frame, int target_lane,
                                      const LaneLayout& layout, const ValidatedParameters& p,
                                      double lane_change_lat_speed) {
  const ActorState& ego = frame.ego();
  const LaneInfo* target = layout.find(target_lane);
  if (target == nullptr) {
    throw ValidationError(fmt::format("evasive_maneuver_check: unknown lane id {}", target_lane));
  }
  if (!layout.adjacent(ego.lane_id, target_lane)) {
    throw ValidationError(fmt::format("evasive_maneuver_check: lane {} is not adjacent to ego lane {}",
                                      target_lane, ego.lane_id));
  }
  ActorState projected = ego;
  projected.l = target->center_l;
  projected.lane_id = target_lane;
  projected.v_lat = target->center_l > ego.l ? lane_change_lat_speed : -lane_change_lat_speed;

  for (const ActorState& actor : frame.actors) {
    if (actor.actor_id == frame.ego_id) continue;
    if (assess_pair(projected, actor, p, false).dangerous) return EvasiveVerdict::kForbidden;
  }
  return EvasiveVerdict::kPermitted;
}

bool command_within_envelope(const ResponseEnvelope& envelope, const EgoCommand& command,
                             double ego_v_lat, double dt, const ValidatedParameters& p) {
  if (command.a_long > envelope.max_allowed_accel_long + kAccelTol) return false;
  if (envelope.min_required_brake_long > 0.0 &&
      command.a_long > -envelope.min_required_brake_long + kAccelTol) {
    return false;
  }
  if (envelope.lateral_action == LateralAction::kReachZeroLateralVelocity) {
    if (std::abs(ego_v_lat) <= kStationary) return std::abs(command.a_lat) <= kAccelTol;
    const double needed = dt > 0.0 ? std::min(p->brake_min_lat, std::abs(ego_v_lat) / dt) : p->brake_min_lat;
    const double toward_zero = -command.a_lat * (ego_v_lat > 0.0 ? 1.0 : -1.0);
    if (toward_zero < needed - 1e-6) return false;
  }
  return true;
}

ComplianceReport compliance_check(std::span<const WorldFrame> trace,
                                  std::span<const EgoCommand> ego_commands,
                                  const ValidatedParameters& p) {
  if (trace.size() != ego_commands.size()) {
    throw ValidationError(fmt::format("compliance_check: {} frames but {} ego commands",
                                      trace.size(), ego_commands.size()));
  }
  ComplianceReport report;
  report.compliant.reserve(trace.size());
  report.envelopes.reserve(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const ResponseEnvelope env = ego_envelope(trace.first(i + 1), p);
    double dt = 0.0;
    if (i + 1 < trace.size()) {
      dt = trace[i + 1].t - trace[i].t;
    } else if (i > 0) {
      dt = trace[i].t - trace[i - 1].t;
    }
    const bool ok = command_within_envelope(env, ego_commands[i], trace[i].ego().v_lat, dt, p);
    report.compliant.push_back(ok);
    report.envelopes.push_back(env);
    if (!ok && !report.first_violation) report.first_violation = i;
  }
  return report;
}

EnvelopeComparison compare_envelopes(const ResponseEnvelope& reference,
                                     const ResponseEnvelope& candidate) {
  constexpr double kTol = 1e-9;
  EnvelopeComparison out;
  auto weaker = [&](int rule) {
    if (!out.weaker_rule) out.weaker_rule = rule;
  };

  const bool ref_lon = has_longitudinal(reference.state);
  const bool cand_lon = has_longitudinal(candidate.state);
  const bool ref_lat = has_lateral(reference.state);
  const bool cand_lat = has_lateral(candidate.state);

  const bool both_owed = reference.since_t && candidate.since_t;
  const bool cand_later = both_owed && *candidate.since_t > *reference.since_t + kTimeEps;
  const bool cand_earlier = both_owed && *candidate.since_t < *reference.since_t - kTimeEps;

  if (ref_lon && !cand_lon) weaker(1);
  if (ref_lon && cand_lon && cand_later) weaker(1);
  if (candidate.min_required_brake_long < reference.min_required_brake_long - kTol) weaker(1);
  if (candidate.max_allowed_accel_long > reference.max_allowed_accel_long + kTol) weaker(1);
  if (ref_lat && !cand_lat) weaker(2);
  if (ref_lat && cand_lat && cand_later) weaker(2);
  if (candidate.lateral_action < reference.lateral_action) weaker(2);

  out.stronger = (cand_lon && !ref_lon) || (cand_lat && !ref_lat) || cand_earlier ||
                 candidate.min_required_brake_long > reference.min_required_brake_long + kTol ||
                 candidate.max_allowed_accel_long < reference.max_allowed_accel_long - kTol ||
                 candidate.lateral_action > reference.lateral_action;
  return out;
}

}  // namespace rssmon
