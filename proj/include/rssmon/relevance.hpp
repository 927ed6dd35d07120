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
 * \file relevance.hpp
 * Labels each perception discrepancy by its effect on the proper response.
 *
 * A discrepancy is safety relevant when the envelope derived from ground
 * truth demands something the envelope derived from the perceived world does
 * not demand at least as strongly; comfort relevant when the perceived world
 * demands strictly more; irrelevant otherwise.
 */
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rssmon/kernel.hpp"
#include "rssmon/world.hpp"

namespace rssmon {

enum class Discrepancy { kMissedActor, kGhostActor, kStateError, kMisclassification, kChannelBlind };
enum class RelevanceLabel { kIrrelevant, kComfortRelevant, kSafetyRelevant };

std::string_view to_string(Discrepancy d);
std::string_view to_string(RelevanceLabel label);
Discrepancy discrepancy_from_string(std::string_view name);
RelevanceLabel relevance_label_from_string(std::string_view name);

struct RelevanceVerdict {
  double t = 0.0;
  Discrepancy discrepancy = Discrepancy::kMissedActor;
  std::optional<std::string> actor_id;
  RelevanceLabel label = RelevanceLabel::kIrrelevant;
  std::string reason;

  bool operator==(const RelevanceVerdict&) const = default;
};

struct ClassifyOptions {
  /// The perceived frame comes from a view with no available channel.
  bool perceived_blind = false;
  std::span<const ConflictZone> conflicts;
  /// Position/velocity differences at or below this are not state errors.
  double state_tolerance = 1e-6;
};

/// Verdicts for the last frame of the two histories. Both histories run up to
/// and including the same instant; throws ValidationError otherwise.
std::vector<RelevanceVerdict> classify_frame(std::span<const WorldFrame> truth_history,
                                             std::span<const WorldFrame> perceived_history,
                                             const ValidatedParameters& p,
                                             const ClassifyOptions& options = {});

bool has_safety_relevant(std::span<const RelevanceVerdict> verdicts);

struct EpisodeReport {
  std::size_t frames = 0;
  std::size_t channel_a_safety_frames = 0;
  std::size_t channel_b_safety_frames = 0;
  std::size_t fused_safety_frames = 0;
  /// Merged episodes of coincident channel failures or fused failures.
  std::size_t system_failures = 0;
  /// First frame index of each system failure episode.
  std::vector<std::size_t> system_failure_frames;
  std::size_t collisions = 0;

  bool operator==(const EpisodeReport&) const = default;
};

/// Per-frame flags: true when that frame carries a safety-relevant verdict.
/// A frame is a system failure frame if the fused flag is set, or if one
/// channel's flag is set while the other's is set within fewer than
/// `coincidence_window_frames` frames of it. System failure frames closer
/// than the window merge into one episode.
EpisodeReport episode_summary(std::span<const bool> channel_a, std::span<const bool> channel_b,
                              std::span<const bool> fused, std::size_t coincidence_window_frames,
                              std::size_t collisions = 0);

/// Convenience overload over per-frame verdict lists.
EpisodeReport episode_summary(std::span<const std::vector<RelevanceVerdict>> channel_a,
                              std::span<const std::vector<RelevanceVerdict>> channel_b,
                              std::span<const std::vector<RelevanceVerdict>> fused,
                              std::size_t coincidence_window_frames, std::size_t collisions = 0);

}  // namespace rssmon
