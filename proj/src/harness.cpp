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

#include "rssmon/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <memory>
#include <set>
#include <thread>

#include <fmt/format.h>

namespace rssmon {

namespace {

constexpr double kTimeEps = 1e-9;
constexpr double kLateralStill = 1e-9;

void advance_long(double& s, double& v, double a, double dt) {
  if (a < 0.0 && v <= -a * dt) {
    s += v * v / (2.0 * -a);
    v = 0.0;
    return;
  }
  s += v * dt + 0.5 * a * dt * dt;
  v += a * dt;
}

void advance_lat(double& l, double& v, double a, double dt, bool stop_at_zero) {
  if (stop_at_zero && v * a < 0.0 && std::abs(v) <= std::abs(a) * dt) {
    l += v * std::abs(v) / (2.0 * std::abs(a));
    v = 0.0;
    return;
  }
  l += v * dt + 0.5 * a * dt * dt;
  v += a * dt;
}

void update_lane(ActorState& actor, const LaneLayout& layout) {
  if (layout.find(actor.lane_id) == nullptr) return;
  if (auto lane = layout.lane_at(actor.l)) actor.lane_id = *lane;
}

const ActorScript* script_for(std::span<const ActorScript> scripts, std::string_view id) {
  for (const ActorScript& s : scripts) {
    if (s.initial.actor_id == id) return &s;
  }
  return nullptr;
}

void advance_scripted(ActorState& actor, const Behavior* b, double t, double dt) {
  double a_long = 0.0;
  if (b != nullptr && b->type == BehaviorType::kBrakeAt && t >= b->t - kTimeEps) a_long = -b->decel;
  if (b != nullptr && b->type == BehaviorType::kCutIn) {
    if (t >= b->t - kTimeEps && actor.l != b->target_l) {
      const double dir = b->target_l > actor.l ? 1.0 : -1.0;
      actor.v_lat = dir * b->lateral_rate;
      actor.l += actor.v_lat * dt;
      if ((b->target_l - actor.l) * dir <= 0.0) {
        actor.l = b->target_l;
        actor.v_lat = 0.0;
      }
    }
  } else {
    actor.l += actor.v_lat * dt;
  }
  advance_long(actor.s, actor.v_long, a_long, dt);
}

double sign(double x) { return x > 0.0 ? 1.0 : -1.0; }

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

}  // namespace

std::string_view to_string(BehaviorType type) {
  switch (type) {
    case BehaviorType::kConstantSpeed:
      return "constant_speed";
    case BehaviorType::kBrakeAt:
      return "brake_at";
    case BehaviorType::kCutIn:
      return "cut_in";
    case BehaviorType::kRedLightRunner:
      return "red_light_runner";
    case BehaviorType::kEmergeFromOcclusion:
      return "emerge_from_occlusion";
  }
  return "constant_speed";
}

BehaviorType behavior_type_from_string(std::string_view name) {
  for (BehaviorType t : {BehaviorType::kConstantSpeed, BehaviorType::kBrakeAt, BehaviorType::kCutIn,
                         BehaviorType::kRedLightRunner, BehaviorType::kEmergeFromOcclusion}) {
    if (to_string(t) == name) return t;
  }
  throw ValidationError(fmt::format("unknown behavior '{}'", name));
}

std::string_view to_string(VerdictSource source) {
  switch (source) {
    case VerdictSource::kChannelA:
      return "channel_a";
    case VerdictSource::kChannelB:
      return "channel_b";
    case VerdictSource::kFused:
      return "fused";
  }
  return "fused";
}

void validate_scenario(const ScenarioSpec& spec) {
  require(spec.dt_s > 0.0 && spec.dt_s <= 1.0, fmt::format("dt_s must be in (0, 1] (got {})", spec.dt_s));
  require(spec.duration_s > 0.0 && std::isfinite(spec.duration_s),
          fmt::format("duration_s must be > 0 (got {})", spec.duration_s));
  require(spec.duration_s / spec.dt_s <= 1e8, "duration_s / dt_s is too large");
  require(spec.runs >= 1, "runs must be >= 1");
  require(spec.max_script_decel > 0.0, "max_script_decel must be > 0");
  require(spec.fusion_gate_m > 0.0, "fusion_gate_m must be > 0");
  const ValidatedParameters p = validate_parameters(spec.rss);

  require(!spec.layout.lanes.empty(), "layout.lanes must not be empty");
  std::set<int> lane_ids;
  for (const LaneInfo& lane : spec.layout.lanes) {
    require(lane.width > 0.0, fmt::format("lane {} width must be > 0", lane.lane_id));
    require(lane_ids.insert(lane.lane_id).second, fmt::format("duplicate lane id {}", lane.lane_id));
  }

  validate_actor(spec.ego);
  require(spec.layout.find(spec.ego.lane_id) != nullptr,
          fmt::format("ego lane {} is not in layout", spec.ego.lane_id));
  require(spec.controller.target_speed >= 0.0, "controller.target_speed must be >= 0");
  require(spec.controller.speed_gain > 0.0, "controller.speed_gain must be > 0");
  require(spec.controller.lateral_gain > 0.0, "controller.lateral_gain must be > 0");
  require(spec.controller.lane_change_lat_speed > 0.0, "controller.lane_change_lat_speed must be > 0");
  require(spec.controller.evasion_lookahead_s >= 0.0, "controller.evasion_lookahead_s must be >= 0");

  std::set<std::string> ids{spec.ego.actor_id};
  for (const ActorScript& script : spec.actors) {
    const ActorState& a = script.initial;
    validate_actor(a);
    require(ids.insert(a.actor_id).second, fmt::format("duplicate actor id '{}'", a.actor_id));
    const Behavior& b = script.behavior;
    require(b.t >= 0.0, fmt::format("actor '{}': behavior.t must be >= 0", a.actor_id));
    if (b.type == BehaviorType::kBrakeAt) {
      require(b.decel > 0.0 && b.decel <= spec.max_script_decel,
              fmt::format("actor '{}': decel must be in (0, {}]", a.actor_id, spec.max_script_decel));
      require(b.decel <= p->brake_max_long + 1e-12 || spec.assumption_violation,
              fmt::format("actor '{}': decel {} exceeds brake_max_long; mark the scenario "
                          "assumption_violation",
                          a.actor_id, b.decel));
    }
    if (b.type == BehaviorType::kCutIn) {
      require(b.lateral_rate > 0.0, fmt::format("actor '{}': lateral_rate must be > 0", a.actor_id));
    }
  }
  for (const OcclusionSpec& occ : spec.occlusions) {
    require(std::isfinite(occ.s_edge), "occlusion s_edge must be finite");
    require(occ.lateral_offset >= 0.0, "occlusion lateral_offset must be >= 0");
    if (occ.reveals_actor.empty()) continue;
    const ActorScript* s = script_for(spec.actors, occ.reveals_actor);
    require(s != nullptr && s->behavior.type == BehaviorType::kEmergeFromOcclusion,
            fmt::format("occlusion reveals '{}', which is not an emerging actor", occ.reveals_actor));
  }
  std::set<std::string> zones;
  for (const ConflictZone& zone : spec.conflicts) {
    require(zone.s_end >= zone.s_start, fmt::format("conflict '{}': s_end < s_start", zone.zone_id));
    require(zones.insert(zone.zone_id).second, fmt::format("duplicate conflict id '{}'", zone.zone_id));
  }
  validate_fault_model(spec.channel_a);
  validate_fault_model(spec.channel_b);
}

std::size_t frame_count(const ScenarioSpec& spec) {
  return static_cast<std::size_t>(std::llround(spec.duration_s / spec.dt_s)) + 1;
}

std::size_t coincidence_window(const ScenarioSpec& spec) {
  if (spec.coincidence_window_frames > 0) return spec.coincidence_window_frames;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(spec.rss.response_time_s / spec.dt_s)));
}

EgoCommand clip_to_envelope(const EgoCommand& desired, const ResponseEnvelope& envelope, double ego_v_lat,
                            double dt, const ValidatedParameters& p) {
  EgoCommand out = desired;
  out.a_long = std::min(out.a_long, envelope.max_allowed_accel_long);
  if (envelope.min_required_brake_long > 0.0) out.a_long = std::min(out.a_long, -envelope.min_required_brake_long);
  out.a_long = std::max(out.a_long, -p->brake_max_long);
  if (envelope.lateral_action == LateralAction::kReachZeroLateralVelocity) {
    if (std::abs(ego_v_lat) <= kLateralStill) {
      out.a_lat = 0.0;
    } else {
      out.a_lat = -sign(ego_v_lat) * std::min(p->brake_min_lat, std::abs(ego_v_lat) / dt);
    }
  }
  return out;
}

WorldFrame step(const WorldFrame& world, std::span<const ActorScript> scripts,
                const ResponseEnvelope& ego_envelope, const EgoCommand& ego_command, double dt,
                const LaneLayout& layout, const ValidatedParameters& p) {
  if (!(dt > 0.0)) throw ValidationError("step: dt must be > 0");
  WorldFrame next = world;
  next.t = world.t + dt;
  for (ActorState& actor : next.actors) {
    if (actor.actor_id == world.ego_id) {
      const EgoCommand cmd = clip_to_envelope(ego_command, ego_envelope, actor.v_lat, dt, p);
      advance_long(actor.s, actor.v_long, cmd.a_long, dt);
      advance_lat(actor.l, actor.v_lat, cmd.a_lat, dt,
                  ego_envelope.lateral_action == LateralAction::kReachZeroLateralVelocity);
    } else {
      const ActorScript* script = script_for(scripts, actor.actor_id);
      advance_scripted(actor, script ? &script->behavior : nullptr, world.t, dt);
    }
    update_lane(actor, layout);
  }
  return next;
}

ControllerOutput ego_controller(std::span<const WorldFrame> perceived_history, bool perceived_blind,
                                const ScenarioSpec& spec, const ValidatedParameters& p, ControllerState& state) {
  const WorldFrame& frame = perceived_history.back();
  const ActorState& ego = frame.ego();
  const ControllerConfig& cfg = spec.controller;
  const double dt = spec.dt_s;
  const double v = ego.v_long;

  ControllerOutput out;
  out.envelope = ego_envelope(perceived_history, p);
  state.yielding = false;

  if (perceived_blind) {
    out.command.a_long = -p->brake_max_long;
    out.command.a_lat = std::abs(ego.v_lat) <= kLateralStill
                            ? 0.0
                            : -sign(ego.v_lat) * std::min(p->brake_min_lat, std::abs(ego.v_lat) / dt);
    out.command = clip_to_envelope(out.command, out.envelope, ego.v_lat, dt, p);
    return out;
  }

  double a = std::clamp(cfg.speed_gain * (cfg.target_speed - v), -p->brake_min_long, p->accel_max_long);

  // Following: nearest actor ahead whose lateral distance is unsafe.
  const ActorState* lead = nullptr;
  double lead_gap = std::numeric_limits<double>::infinity();
  for (const ActorState& actor : frame.actors) {
    if (actor.actor_id == frame.ego_id) continue;
    const SituationAssessment sa = assess_pair(ego, actor, p, true);
    if (!sa.other_ahead || sa.lat_safe) continue;
    if (!sa.long_safe) a = std::min(a, -p->brake_min_long);
    const double desired = sa.long_distance_required + 0.1 * v;
    const double follow = 0.3 * (sa.long_distance_actual - desired) + 0.8 * (actor.v_long - v);
    a = std::min(a, std::max(follow, -p->brake_min_long));
    if (sa.long_distance_actual < lead_gap) {
      lead_gap = sa.long_distance_actual;
      lead = &actor;
    }
  }

  if (state.evading) {
    const LaneInfo* target = spec.layout.find(state.target_lane);
    if (target == nullptr || std::abs(ego.l - target->center_l) < 0.1) state.evading = false;
  }
  if (cfg.enable_evasion && !state.evading && lead != nullptr && lead->v_long < v - 0.5 &&
      spec.layout.find(ego.lane_id) != nullptr) {
    const double trigger = safe_longitudinal_distance(v, lead->v_long, p) + p->comfort_margin_long +
                           v * cfg.evasion_lookahead_s;
    if (lead_gap < trigger) {
      for (const LaneInfo& lane : spec.layout.lanes) {
        if (!spec.layout.adjacent(ego.lane_id, lane.lane_id)) continue;
        if (evasive_maneuver_check(frame, lane.lane_id, spec.layout, p, cfg.lane_change_lat_speed) ==
            EvasiveVerdict::kPermitted) {
          state.target_lane = lane.lane_id;
          state.evading = true;
          break;
        }
      }
    }
  }

  // Occlusions: keep the next-tick speed below the cap for the next-tick distance.
  for (const OcclusionRegion& region : frame.occlusions) {
    const double d_next = std::max(0.0, region.s_near - v * dt - 0.5 * p->accel_max_long * dt * dt);
    const double cap = max_speed_to_stop_within(d_next, p);
    a = std::min(a, (cap - v) / dt);
  }

  for (const ConflictZone& zone : spec.conflicts) {
    if (actors_requiring_yield(frame, zone, p).empty()) continue;
    state.yielding = true;
    if (ego.s > zone.s_start) continue;
    const double dist = zone.s_start - p->comfort_margin_long - ego.s;
    const double need = dist > 0.05 ? v * v / (2.0 * dist) : p->brake_max_long;
    a = std::min({a, 0.0, -std::min(need, p->brake_max_long)});
  }

  double a_lat = 0.0;
  if (const LaneInfo* target = spec.layout.find(state.target_lane)) {
    const double desired =
        std::clamp(cfg.lateral_gain * (target->center_l - ego.l), -cfg.lane_change_lat_speed,
                   cfg.lane_change_lat_speed);
    a_lat = std::clamp((desired - ego.v_lat) / dt, -p->accel_max_lat, p->accel_max_lat);
  }

  out.command = clip_to_envelope({a, a_lat}, out.envelope, ego.v_lat, dt, p);
  return out;
}

void RunStatistics::merge(const RunStatistics& o) {
  runs += o.runs;
  frames += o.frames;
  dangerous_frames += o.dangerous_frames;
  proper_responses_triggered += o.proper_responses_triggered;
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t l = 0; l < 3; ++l) verdict_counts[s][l] += o.verdict_counts[s][l];
    safety_relevant_frames[s] += o.safety_relevant_frames[s];
  }
  system_failures += o.system_failures;
  collisions += o.collisions;
  in_model_collisions += o.in_model_collisions;
  explained_collisions += o.explained_collisions;
  noncompliant_frames += o.noncompliant_frames;
  yield_frames += o.yield_frames;
  lane_changes += o.lane_changes;
  dt_s = o.dt_s;
}

RunResult run_scenario(const ScenarioSpec& spec, std::size_t run_index) {
  validate_scenario(spec);
  const ValidatedParameters p = validate_parameters(spec.rss);
  const std::size_t n_frames = frame_count(spec);
  const double dt = spec.dt_s;

  RunResult result;
  result.run_index = run_index;
  RunStatistics& stats = result.stats;
  stats.runs = 1;
  stats.dt_s = dt;

  ChannelStream stream_a(spec.master_seed, run_index, ChannelId::kCameraOnly);
  ChannelStream stream_b(spec.master_seed, run_index, ChannelId::kRadarLidar);

  WorldFrame world;
  world.ego_id = spec.ego.actor_id;
  world.actors.push_back(spec.ego);
  std::vector<const ActorScript*> pending;
  for (const ActorScript& script : spec.actors) {
    if (script.behavior.type == BehaviorType::kEmergeFromOcclusion && script.behavior.t > kTimeEps) {
      pending.push_back(&script);
    } else {
      world.actors.push_back(script.initial);
    }
  }
  std::set<std::string> revealed;

  ControllerState ctl;
  ctl.target_lane = spec.ego.lane_id;
  ClassifyOptions options;
  options.conflicts = spec.conflicts;

  std::vector<WorldFrame> hist_a, hist_b, hist_f;
  result.truth.reserve(n_frames);
  auto flags = std::make_unique<bool[]>(3 * n_frames);
  bool prev_owed = false;
  std::set<std::string> colliding;

  for (std::size_t n = 0; n < n_frames; ++n) {
    world.t = static_cast<double>(n) * dt;
    for (auto it = pending.begin(); it != pending.end();) {
      if ((*it)->behavior.t <= world.t + kTimeEps) {
        world.actors.push_back((*it)->initial);
        revealed.insert((*it)->initial.actor_id);
        it = pending.erase(it);
      } else {
        ++it;
      }
    }
    const ActorState& ego_now = world.ego();
    world.occlusions.clear();
    for (const OcclusionSpec& occ : spec.occlusions) {
      if (!occ.reveals_actor.empty() && revealed.contains(occ.reveals_actor)) continue;
      const double s_near = occ.s_edge - ego_now.s;
      if (s_near > 0.0) world.occlusions.push_back({s_near, occ.lateral_offset, occ.hides});
    }
    result.truth.push_back(world);

    ChannelObservation obs_a = observe(world, spec.channel_a, stream_a);
    ChannelObservation obs_b = observe(world, spec.channel_b, stream_b);
    FusedPerception fused = fuse(obs_a, obs_b, FusionPolicy::kSafetyUnion, spec.fusion_gate_m);
    const FusedPerception view_a = channel_view(obs_a, world.ego_id);
    const FusedPerception view_b = channel_view(obs_b, world.ego_id);
    hist_a.push_back(view_a.frame);
    hist_b.push_back(view_b.frame);
    hist_f.push_back(fused.frame);

    FrameVerdicts verdicts;
    const std::array<std::pair<const std::vector<WorldFrame>*, bool>, 3> sources{
        {{&hist_a, view_a.blind}, {&hist_b, view_b.blind}, {&hist_f, fused.blind}}};
    for (std::size_t s = 0; s < 3; ++s) {
      options.perceived_blind = sources[s].second;
      verdicts.by_source[s] = classify_frame(result.truth, *sources[s].first, p, options);
      for (const RelevanceVerdict& v : verdicts.by_source[s]) {
        ++stats.verdict_counts[s][static_cast<std::size_t>(v.label)];
      }
      flags[s * n_frames + n] = has_safety_relevant(verdicts.by_source[s]);
      stats.safety_relevant_frames[s] += flags[s * n_frames + n] ? 1 : 0;
    }

    const int lane_before = ctl.target_lane;
    const ControllerOutput ctl_out = ego_controller(hist_f, fused.blind, spec, p, ctl);
    if (ctl.target_lane != lane_before) ++stats.lane_changes;
    if (ctl.yielding) ++stats.yield_frames;
    // A proper response is owed from the danger threshold onward.
    const bool owed = ctl_out.envelope.state != EnvelopeState::kSafe;
    if (owed && !prev_owed) ++stats.proper_responses_triggered;
    prev_owed = owed;

    const ResponseEnvelope truth_env = ego_envelope(result.truth, p);
    if (truth_env.state != EnvelopeState::kSafe) ++stats.dangerous_frames;
    verdicts.compliant = command_within_envelope(truth_env, ctl_out.command, ego_now.v_lat, dt, p);
    if (!verdicts.compliant) ++stats.noncompliant_frames;

    for (const ActorState& actor : world.actors) {
      if (actor.actor_id == world.ego_id) continue;
      if (bodies_collide(ego_now, actor)) {
        if (colliding.insert(actor.actor_id).second) result.collision_frames.push_back(n);
      } else {
        colliding.erase(actor.actor_id);
      }
    }

    result.channel_a.push_back(std::move(obs_a));
    result.channel_b.push_back(std::move(obs_b));
    result.fused.push_back(std::move(fused));
    result.commands.push_back(ctl_out.command);
    result.verdicts.push_back(std::move(verdicts));

    if (n + 1 < n_frames) {
      world = step(world, spec.actors, ctl_out.envelope, ctl_out.command, dt, spec.layout, p);
    }
  }

  stats.frames = n_frames;
  stats.collisions = result.collision_frames.size();
  result.episode = episode_summary(std::span<const bool>(flags.get(), n_frames),
                                   std::span<const bool>(flags.get() + n_frames, n_frames),
                                   std::span<const bool>(flags.get() + 2 * n_frames, n_frames),
                                   coincidence_window(spec), stats.collisions);
  stats.system_failures = result.episode.system_failures;
  if (!spec.assumption_violation) {
    stats.in_model_collisions = stats.collisions;
    for (std::size_t frame : result.collision_frames) {
      const auto& starts = result.episode.system_failure_frames;
      if (!starts.empty() && starts.front() <= frame) ++stats.explained_collisions;
    }
  }
  return result;
}

MonteCarloResult monte_carlo(const ScenarioSpec& spec, std::size_t workers) {
  validate_scenario(spec);
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, spec.runs);

  MonteCarloResult out;
  out.per_run.resize(spec.runs);
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < spec.runs; i = next++) out.per_run[i] = run_scenario(spec, i).stats;
      } catch (...) {
        errors[w] = std::current_exception();
        next = spec.runs;
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  out.aggregate.dt_s = spec.dt_s;
  for (const RunStatistics& s : out.per_run) out.aggregate.merge(s);
  return out;
}

CoincidenceResult coincidence_experiment(const WorldFrame& frame, const FaultModel& a, const FaultModel& b,
                                         std::size_t frames, std::uint64_t master_seed, std::size_t run_index) {
  validate_frame(frame);
  validate_fault_model(a);
  validate_fault_model(b);
  ChannelStream sa(master_seed, run_index, ChannelId::kCameraOnly);
  ChannelStream sb(master_seed, run_index, ChannelId::kRadarLidar);
  CoincidenceResult out;
  out.frames = frames;
  for (std::size_t i = 0; i < frames; ++i) {
    const bool fa = observation_failed(frame, observe(frame, a, sa));
    const bool fb = observation_failed(frame, observe(frame, b, sb));
    out.a_failures += fa ? 1 : 0;
    out.b_failures += fb ? 1 : 0;
    out.joint_failures += (fa && fb) ? 1 : 0;
  }
  const double n = static_cast<double>(frames);
  const double na = static_cast<double>(out.a_failures);
  const double nb = static_cast<double>(out.b_failures);
  const double denom = std::sqrt(na * (n - na) * nb * (n - nb));
  out.correlation = denom > 0.0 ? (n * static_cast<double>(out.joint_failures) - na * nb) / denom : 0.0;
  return out;
}

}  // namespace rssmon
