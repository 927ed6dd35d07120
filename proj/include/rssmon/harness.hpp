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
 * \file harness.hpp
 * Deterministic closed-loop simulation: scripted actors, a naive ego
 * controller that obeys every kernel constraint computed from the fused
 * perception, and a Monte Carlo batch runner.
 */
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rssmon/kernel.hpp"
#include "rssmon/perception.hpp"
#include "rssmon/relevance.hpp"
#include "rssmon/world.hpp"

namespace rssmon {

enum class BehaviorType { kConstantSpeed, kBrakeAt, kCutIn, kRedLightRunner, kEmergeFromOcclusion };

std::string_view to_string(BehaviorType type);
BehaviorType behavior_type_from_string(std::string_view name);

/// Script for one non-ego actor.
///  - constant_speed: keeps its initial velocities.
///  - brake_at: from `t`, decelerates at `decel` until stationary.
///  - cut_in: from `t`, moves laterally at `lateral_rate` until reaching
///    `target_l`.
///  - red_light_runner: crosses at its initial lateral velocity and never
///    stops for the conflict zone.
///  - emerge_from_occlusion: absent until `t`, then keeps its initial
///    velocities.
struct Behavior {
  BehaviorType type = BehaviorType::kConstantSpeed;
  double t = 0.0;
  double decel = 0.0;
  double lateral_rate = 0.0;
  double target_l = 0.0;

  bool operator==(const Behavior&) const = default;
};

struct ActorScript {
  ActorState initial;
  Behavior behavior;

  bool operator==(const ActorScript&) const = default;
};

/// Occlusion fixed in the world at `s_edge`. Disappears once the actor named
/// in `reveals_actor` has emerged.
struct OcclusionSpec {
  double s_edge = 0.0;
  double lateral_offset = 0.0;
  OcclusionHides hides = OcclusionHides::kPedestrian;
  std::string reveals_actor;

  bool operator==(const OcclusionSpec&) const = default;
};

struct ControllerConfig {
  double target_speed = 20.0;
  double speed_gain = 0.5;
  double lateral_gain = 0.8;
  double lane_change_lat_speed = 1.0;
  double evasion_lookahead_s = 3.0;
  bool enable_evasion = true;

  bool operator==(const ControllerConfig&) const = default;
};

struct ScenarioSpec {
  std::string name = "unnamed";
  double duration_s = 10.0;
  double dt_s = 0.1;
  std::uint64_t master_seed = 1;
  std::size_t runs = 1;
  /// Scripted actors deliberately break the worst-case assumptions.
  bool assumption_violation = false;
  double max_script_decel = 10.0;
  RssParameters rss;
  LaneLayout layout;
  ActorState ego;
  ControllerConfig controller;
  std::vector<ActorScript> actors;
  std::vector<OcclusionSpec> occlusions;
  std::vector<ConflictZone> conflicts;
  FaultModel channel_a;
  FaultModel channel_b;
  double fusion_gate_m = 2.0;
  /// 0 selects one response time worth of frames.
  std::size_t coincidence_window_frames = 0;

  bool operator==(const ScenarioSpec&) const = default;
};

/// Throws ValidationError describing the first problem found.
void validate_scenario(const ScenarioSpec& spec);

std::size_t frame_count(const ScenarioSpec& spec);
std::size_t coincidence_window(const ScenarioSpec& spec);

/// Advances `world` by `dt`. Scripted actors follow `scripts` (matched by
/// actor id); the ego applies `ego_command` clipped into `ego_envelope`.
/// Each tick integrates constant acceleration exactly, stopping at zero
/// velocity instead of reversing. Lane ids follow lateral position for lanes
/// in `layout`.
WorldFrame step(const WorldFrame& world, std::span<const ActorScript> scripts,
                const ResponseEnvelope& ego_envelope, const EgoCommand& ego_command, double dt,
                const LaneLayout& layout, const ValidatedParameters& p);

/// Applies the envelope to a desired command.
EgoCommand clip_to_envelope(const EgoCommand& desired, const ResponseEnvelope& envelope, double ego_v_lat,
                            double dt, const ValidatedParameters& p);

struct ControllerState {
  int target_lane = 0;
  bool yielding = false;
  bool evading = false;
};

struct ControllerOutput {
  EgoCommand command;
  ResponseEnvelope envelope;
};

/// Target-speed tracker clipped by every kernel constraint evaluated on the
/// perceived history: proper response, occlusion cap, yielding, evasive lane
/// change and the blind-frame fallback.
ControllerOutput ego_controller(std::span<const WorldFrame> perceived_history, bool perceived_blind,
                                const ScenarioSpec& spec, const ValidatedParameters& p, ControllerState& state);

enum class VerdictSource { kChannelA = 0, kChannelB = 1, kFused = 2 };

std::string_view to_string(VerdictSource source);

struct FrameVerdicts {
  std::array<std::vector<RelevanceVerdict>, 3> by_source;
  bool compliant = true;
};

struct RunStatistics {
  std::size_t runs = 0;
  std::size_t frames = 0;
  std::size_t dangerous_frames = 0;
  std::size_t proper_responses_triggered = 0;
  /// [source][label] verdict counts.
  std::array<std::array<std::size_t, 3>, 3> verdict_counts{};
  /// [source] frames carrying a safety-relevant verdict.
  std::array<std::size_t, 3> safety_relevant_frames{};
  std::size_t system_failures = 0;
  std::size_t collisions = 0;
  std::size_t in_model_collisions = 0;
  std::size_t explained_collisions = 0;
  std::size_t noncompliant_frames = 0;
  std::size_t yield_frames = 0;
  std::size_t lane_changes = 0;
  double dt_s = 0.1;

  double exposure_hours() const { return static_cast<double>(frames) * dt_s / 3600.0; }
  std::size_t unexplained_collisions() const { return in_model_collisions - explained_collisions; }

  void merge(const RunStatistics& other);
  bool operator==(const RunStatistics&) const = default;
};

struct RunResult {
  std::size_t run_index = 0;
  std::vector<WorldFrame> truth;
  std::vector<ChannelObservation> channel_a;
  std::vector<ChannelObservation> channel_b;
  std::vector<FusedPerception> fused;
  std::vector<EgoCommand> commands;
  std::vector<FrameVerdicts> verdicts;
  std::vector<std::size_t> collision_frames;
  EpisodeReport episode;
  RunStatistics stats;
};

/// Fully deterministic given (spec.master_seed, run_index).
RunResult run_scenario(const ScenarioSpec& spec, std::size_t run_index);

struct MonteCarloResult {
  RunStatistics aggregate;
  std::vector<RunStatistics> per_run;
};

/// Runs `spec.runs` independent runs on `workers` threads (0 = hardware
/// concurrency). Results do not depend on the worker count.
MonteCarloResult monte_carlo(const ScenarioSpec& spec, std::size_t workers = 0);

/// Per-frame failure indicators of two channels observing a fixed frame.
struct CoincidenceResult {
  std::size_t frames = 0;
  std::size_t a_failures = 0;
  std::size_t b_failures = 0;
  std::size_t joint_failures = 0;
  double correlation = 0.0;
};

CoincidenceResult coincidence_experiment(const WorldFrame& frame, const FaultModel& a, const FaultModel& b,
                                         std::size_t frames, std::uint64_t master_seed,
                                         std::size_t run_index = 0);

}  // namespace rssmon
