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

#include "rssmon/perception.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <tuple>

#include <fmt/format.h>

namespace rssmon {

namespace {

constexpr std::array<ActorKind, 4> kAllKinds = {ActorKind::kVehicle, ActorKind::kPedestrian,
                                                ActorKind::kStaticObject, ActorKind::kUnknown};

bool in_unit_interval(double p) { return p >= 0.0 && p <= 1.0; }

std::vector<ActorState> non_ego(const ChannelObservation& obs) {
  std::vector<ActorState> out;
  if (!obs.available) return out;
  for (const ActorState& actor : obs.perceived) {
    if (actor.actor_id != obs.ego_state.actor_id) out.push_back(actor);
  }
  return out;
}

ActorState average(const ActorState& a, const ActorState& b) {
  ActorState m = a;
  m.kind = a.kind == b.kind ? a.kind : ActorKind::kUnknown;
  m.s = 0.5 * (a.s + b.s);
  m.l = 0.5 * (a.l + b.l);
  m.v_long = 0.5 * (a.v_long + b.v_long);
  m.v_lat = 0.5 * (a.v_lat + b.v_lat);
  m.length = 0.5 * (a.length + b.length);
  m.width = 0.5 * (a.width + b.width);
  return m;
}

}  // namespace

std::string_view to_string(ChannelId id) {
  return id == ChannelId::kCameraOnly ? "camera_only" : "radar_lidar";
}

ChannelId channel_id_from_string(std::string_view name) {
  if (name == "camera_only") return ChannelId::kCameraOnly;
  if (name == "radar_lidar") return ChannelId::kRadarLidar;
  throw ValidationError(fmt::format("unknown channel id '{}'", name));
}

void validate_fault_model(const FaultModel& fm) {
  std::vector<std::string> errors;
  if (!in_unit_interval(fm.p_false_negative)) errors.emplace_back("p_false_negative must be in [0,1]");
  if (!(fm.p_false_positive >= 0.0)) errors.emplace_back("p_false_positive must be >= 0");
  if (!(fm.pos_noise_sigma >= 0.0)) errors.emplace_back("pos_noise_sigma must be >= 0");
  if (!(fm.vel_noise_sigma >= 0.0)) errors.emplace_back("vel_noise_sigma must be >= 0");
  if (!in_unit_interval(fm.p_misclassify)) errors.emplace_back("p_misclassify must be in [0,1]");
  if (!in_unit_interval(fm.p_dropout_start)) errors.emplace_back("p_dropout_start must be in [0,1]");
  if (!(fm.dropout_mean_frames > 0.0)) errors.emplace_back("dropout_mean_frames must be > 0");
  if (fm.ghost_bounds.s_ahead_min > fm.ghost_bounds.s_ahead_max ||
      fm.ghost_bounds.l_min > fm.ghost_bounds.l_max) {
    errors.emplace_back("ghost_bounds min must not exceed max");
  }
  if (!errors.empty()) {
    throw ValidationError(fmt::format("invalid fault model: {}", fmt::join(errors, "; ")));
  }
}

ChannelStream::ChannelStream(std::uint64_t master_seed, std::uint64_t run_index, ChannelId channel)
    : channel_(channel) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(run_index), static_cast<std::uint32_t>(run_index >> 32),
                    static_cast<std::uint32_t>(channel) + 0x5eed0u};
  engine_.seed(seq);
}

ChannelObservation observe(const WorldFrame& frame, const FaultModel& fm, ChannelStream& stream) {
  ChannelObservation obs;
  obs.channel_id = stream.channel();
  obs.t = frame.t;
  obs.ego_state = frame.ego();
  obs.occlusions = frame.occlusions;
  ++stream.frame_counter;
  auto& rng = stream.engine();

  if (stream.dropout_frames_left > 0) {
    --stream.dropout_frames_left;
    obs.available = false;
    return obs;
  }
  if (fm.p_dropout_start > 0.0 && std::bernoulli_distribution(fm.p_dropout_start)(rng)) {
    // Geometric duration with the configured mean, at least one frame.
    const double mean = std::max(1.0, fm.dropout_mean_frames);
    const int extra = std::geometric_distribution<int>(1.0 / mean)(rng);
    stream.dropout_frames_left = extra;
    obs.available = false;
    return obs;
  }

  for (const ActorState& actor : frame.actors) {
    if (actor.actor_id == frame.ego_id) {
      obs.perceived.push_back(actor);
      continue;
    }
    const bool targeted = fm.target_actors.empty() ||
                          std::find(fm.target_actors.begin(), fm.target_actors.end(), actor.actor_id) !=
                              fm.target_actors.end();
    if (targeted && fm.p_false_negative > 0.0 && std::bernoulli_distribution(fm.p_false_negative)(rng)) {
      continue;
    }
    ActorState seen = actor;
    if (fm.pos_noise_sigma > 0.0) {
      std::normal_distribution<double> noise(0.0, fm.pos_noise_sigma);
      seen.s += noise(rng);
      seen.l += noise(rng);
    }
    if (fm.vel_noise_sigma > 0.0) {
      std::normal_distribution<double> noise(0.0, fm.vel_noise_sigma);
      seen.v_long = std::max(0.0, seen.v_long + noise(rng));
      seen.v_lat += noise(rng);
    }
    if (fm.p_misclassify > 0.0 && std::bernoulli_distribution(fm.p_misclassify)(rng)) {
      std::array<ActorKind, 3> others{};
      std::size_t n = 0;
      for (ActorKind kind : kAllKinds) {
        if (kind != actor.kind && n < others.size()) others[n++] = kind;
      }
      seen.kind = others[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)];
    }
    obs.perceived.push_back(std::move(seen));
  }

  if (fm.p_false_positive > 0.0) {
    const int ghosts = std::poisson_distribution<int>(fm.p_false_positive)(rng);
    const GhostBounds& gb = fm.ghost_bounds;
    for (int k = 0; k < ghosts; ++k) {
      ActorState ghost;
      ghost.actor_id = fmt::format("ghost-{}-{}-{}", to_string(stream.channel()), stream.frame_counter, k);
      ghost.kind = ActorKind::kVehicle;
      const double gap = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      const double lat = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      ghost.s = obs.ego_state.s + gb.s_ahead_min + gap * (gb.s_ahead_max - gb.s_ahead_min) + ghost.length;
      ghost.l = gb.l_min + lat * (gb.l_max - gb.l_min);
      ghost.lane_id = gb.lane_id;
      obs.ghost_ids.push_back(ghost.actor_id);
      obs.perceived.push_back(std::move(ghost));
    }
  }
  return obs;
}

bool observation_failed(const WorldFrame& truth, const ChannelObservation& obs) {
  if (!obs.available) return true;
  for (const ActorState& actor : truth.actors) {
    if (actor.actor_id == truth.ego_id) continue;
    const bool seen = std::any_of(obs.perceived.begin(), obs.perceived.end(),
                                  [&](const ActorState& p) { return p.actor_id == actor.actor_id; });
    if (!seen) return true;
  }
  return false;
}

FusedPerception fuse(const ChannelObservation& a, const ChannelObservation& b, FusionPolicy policy,
                     double gate_m) {
  (void)policy;  // kSafetyUnion is the only policy.
  if (std::abs(a.t - b.t) > 1e-9) {
    throw ValidationError(fmt::format("fuse: timestamp mismatch ({} vs {})", a.t, b.t));
  }
  FusedPerception out;
  out.a_available = a.available;
  out.b_available = b.available;
  out.blind = !a.available && !b.available;
  out.frame.t = a.t;
  out.frame.ego_id = a.ego_state.actor_id;
  out.frame.occlusions = a.occlusions;
  out.frame.actors.push_back(a.ego_state);

  const std::vector<ActorState> from_a = non_ego(a);
  const std::vector<ActorState> from_b = non_ego(b);

  // Greedy nearest-neighbour matching within the gate.
  std::vector<std::tuple<double, std::size_t, std::size_t>> candidates;
  for (std::size_t i = 0; i < from_a.size(); ++i) {
    for (std::size_t j = 0; j < from_b.size(); ++j) {
      const double d = std::hypot(from_a[i].s - from_b[j].s, from_a[i].l - from_b[j].l);
      if (d <= gate_m) candidates.emplace_back(d, i, j);
    }
  }
  std::sort(candidates.begin(), candidates.end());
  std::vector<int> match_of_a(from_a.size(), -1);
  std::vector<bool> b_used(from_b.size(), false);
  for (const auto& [d, i, j] : candidates) {
    if (match_of_a[i] >= 0 || b_used[j]) continue;
    match_of_a[i] = static_cast<int>(j);
    b_used[j] = true;
  }

  for (std::size_t i = 0; i < from_a.size(); ++i) {
    out.frame.actors.push_back(match_of_a[i] >= 0 ? average(from_a[i], from_b[match_of_a[i]]) : from_a[i]);
  }
  for (std::size_t j = 0; j < from_b.size(); ++j) {
    if (b_used[j]) continue;
    ActorState extra = from_b[j];
    if (out.frame.find(extra.actor_id) != nullptr) extra.actor_id += "#b";
    out.frame.actors.push_back(std::move(extra));
  }
  return out;
}

FusedPerception channel_view(const ChannelObservation& obs, const std::string& ego_id) {
  FusedPerception out;
  out.a_available = obs.available;
  out.b_available = obs.available;
  out.blind = !obs.available;
  out.frame.t = obs.t;
  out.frame.ego_id = ego_id;
  out.frame.occlusions = obs.occlusions;
  if (obs.available) {
    out.frame.actors = obs.perceived;
  } else {
    out.frame.actors.push_back(obs.ego_state);
  }
  return out;
}

}  // namespace rssmon
