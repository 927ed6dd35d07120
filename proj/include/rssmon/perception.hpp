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
 * \file perception.hpp
 * Two independent sensing channels with injectable faults, and the
 * conservative union fusion the ego controller acts on.
 */
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "rssmon/world.hpp"

namespace rssmon {

enum class ChannelId { kCameraOnly, kRadarLidar };

std::string_view to_string(ChannelId id);
ChannelId channel_id_from_string(std::string_view name);

/// Area in which ghost (false positive) actors are placed. Longitudinal
/// bounds are relative to the ego front bumper.
struct GhostBounds {
  double s_ahead_min = 10.0;
  double s_ahead_max = 60.0;
  double l_min = -1.75;
  double l_max = 1.75;
  int lane_id = 0;

  bool operator==(const GhostBounds&) const = default;
};

struct FaultModel {
  double p_false_negative = 0.0;   // per actor per frame
  double p_false_positive = 0.0;   // expected ghosts per frame (Poisson mean)
  double pos_noise_sigma = 0.0;    // m
  double vel_noise_sigma = 0.0;    // m/s
  double p_misclassify = 0.0;      // per actor per frame
  double p_dropout_start = 0.0;    // per frame
  double dropout_mean_frames = 1.0;
  /// When non-empty, false negatives only hit these actor ids.
  std::vector<std::string> target_actors;
  GhostBounds ghost_bounds;

  bool operator==(const FaultModel&) const = default;
};

void validate_fault_model(const FaultModel& fm);

/// Per-channel random stream plus the dropout state machine it drives.
/// Seeded from (master seed, run index, channel) so that each channel and
/// each Monte Carlo run draws from its own sequence.
class ChannelStream {
 public:
  ChannelStream(std::uint64_t master_seed, std::uint64_t run_index, ChannelId channel);

  ChannelId channel() const { return channel_; }
  std::mt19937_64& engine() { return engine_; }

  int dropout_frames_left = 0;
  std::uint64_t frame_counter = 0;

 private:
  ChannelId channel_;
  std::mt19937_64 engine_;
};

struct ChannelObservation {
  ChannelId channel_id = ChannelId::kCameraOnly;
  double t = 0.0;
  bool available = true;
  std::vector<ActorState> perceived;
  /// Bookkeeping only; fusion never reads this.
  std::vector<std::string> ghost_ids;
  /// Proprioceptive ego state, present even while the channel is blind.
  ActorState ego_state;
  /// Static scene geometry, passed through unchanged.
  std::vector<OcclusionRegion> occlusions;

  bool operator==(const ChannelObservation&) const = default;
};

/// Dropout, then per-actor misses, then noise and misclassification, then
/// ghost injection. Ego is never dropped or perturbed.
ChannelObservation observe(const WorldFrame& frame, const FaultModel& fm, ChannelStream& stream);

/// Whether this observation missed any real (non-ego) actor of `truth` or was
/// unavailable.
bool observation_failed(const WorldFrame& truth, const ChannelObservation& obs);

enum class FusionPolicy { kSafetyUnion };

struct FusedPerception {
  WorldFrame frame;
  bool a_available = true;
  bool b_available = true;
  /// Both channels unavailable: a system-level sensing failure frame.
  bool blind = false;

  bool operator==(const FusedPerception&) const = default;
};

/// Union of both channels. Actors within `gate_m` of each other (nearest
/// neighbour in the s/l plane) are merged by averaging. Throws
/// ValidationError on timestamp mismatch.
FusedPerception fuse(const ChannelObservation& a, const ChannelObservation& b,
                     FusionPolicy policy = FusionPolicy::kSafetyUnion, double gate_m = 2.0);

/// View of a single channel as a perceived world (for per-channel relevance).
FusedPerception channel_view(const ChannelObservation& obs, const std::string& ego_id);

}  // namespace rssmon
