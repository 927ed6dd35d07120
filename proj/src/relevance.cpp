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

#include "rssmon/relevance.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>

#include <fmt/format.h>

namespace rssmon {

namespace {

struct Judgement {
  RelevanceLabel label = RelevanceLabel::kIrrelevant;
  std::string reason;
};

std::string_view rule_name(int rule) {
  switch (rule) {
    case 1:
      return "rule 1 (safe longitudinal distance)";
    case 2:
      return "rule 2 (safe lateral distance)";
    case 3:
      return "rule 3 (right of way is given, not taken)";
    default:
      return "rule ?";
  }
}

std::set<std::string> yield_set(const WorldFrame& frame, std::span<const ConflictZone> zones,
                                const ValidatedParameters& p) {
  std::set<std::string> out;
  for (const ConflictZone& zone : zones) {
    for (std::string& id : actors_requiring_yield(frame, zone, p)) out.insert(std::move(id));
  }
  return out;
}

Judgement judge(const ResponseEnvelope& truth_env, const ResponseEnvelope& perceived_env, bool truth_yield,
                bool perceived_yield) {
  const EnvelopeComparison cmp = compare_envelopes(truth_env, perceived_env);
  if (cmp.weaker_rule) {
    return {RelevanceLabel::kSafetyRelevant,
            fmt::format("{}: ground truth demands a response the perceived world does not impose",
                        rule_name(*cmp.weaker_rule))};
  }
  if (truth_yield && !perceived_yield) {
    return {RelevanceLabel::kSafetyRelevant,
            fmt::format("{}: ground truth requires yielding the perceived world does not", rule_name(3))};
  }
  if (cmp.stronger || (perceived_yield && !truth_yield)) {
    return {RelevanceLabel::kComfortRelevant, "perceived world demands a stronger response than ground truth"};
  }
  return {RelevanceLabel::kIrrelevant, "required response unchanged"};
}

bool state_differs(const ActorState& a, const ActorState& b, double tol) {
  return std::abs(a.s - b.s) > tol || std::abs(a.l - b.l) > tol || std::abs(a.v_long - b.v_long) > tol ||
         std::abs(a.v_lat - b.v_lat) > tol || std::abs(a.length - b.length) > tol ||
         std::abs(a.width - b.width) > tol;
}

}  // namespace

std::string_view to_string(Discrepancy d) {
  switch (d) {
    case Discrepancy::kMissedActor:
      return "missed_actor";
    case Discrepancy::kGhostActor:
      return "ghost_actor";
    case Discrepancy::kStateError:
      return "state_error";
    case Discrepancy::kMisclassification:
      return "misclassification";
    case Discrepancy::kChannelBlind:
      return "channel_blind";
  }
  return "missed_actor";
}

std::string_view to_string(RelevanceLabel label) {
  switch (label) {
    case RelevanceLabel::kIrrelevant:
      return "irrelevant";
    case RelevanceLabel::kComfortRelevant:
      return "comfort_relevant";
    case RelevanceLabel::kSafetyRelevant:
      return "safety_relevant";
  }
  return "irrelevant";
}

Discrepancy discrepancy_from_string(std::string_view name) {
  for (Discrepancy d : {Discrepancy::kMissedActor, Discrepancy::kGhostActor, Discrepancy::kStateError,
                        Discrepancy::kMisclassification, Discrepancy::kChannelBlind}) {
    if (to_string(d) == name) return d;
  }
  throw ValidationError(fmt::format("unknown discrepancy '{}'", name));
}

RelevanceLabel relevance_label_from_string(std::string_view name) {
  for (RelevanceLabel l :
       {RelevanceLabel::kIrrelevant, RelevanceLabel::kComfortRelevant, RelevanceLabel::kSafetyRelevant}) {
    if (to_string(l) == name) return l;
  }
  throw ValidationError(fmt::format("unknown relevance label '{}'", name));
}

std::vector<RelevanceVerdict> classify_frame(std::span<const WorldFrame> truth_history,
                                             std::span<const WorldFrame> perceived_history,
                                             const ValidatedParameters& p, const ClassifyOptions& options) {
  if (truth_history.empty() || perceived_history.empty()) {
    throw ValidationError("classify_frame: empty history");
  }
  const WorldFrame& truth = truth_history.back();
  const WorldFrame& perceived = perceived_history.back();
  if (std::abs(truth.t - perceived.t) > 1e-9) {
    throw ValidationError(fmt::format("classify_frame: misaligned frames ({} vs {})", truth.t, perceived.t));
  }

  std::vector<RelevanceVerdict> out;
  const std::set<std::string> truth_yields = yield_set(truth, options.conflicts, p);
  const std::set<std::string> perceived_yields = yield_set(perceived, options.conflicts, p);

  if (options.perceived_blind) {
    const ResponseEnvelope truth_env = ego_envelope(truth_history, p);
    const ResponseEnvelope perceived_env = ego_envelope(perceived_history, p);
    Judgement j = judge(truth_env, perceived_env, !truth_yields.empty(), !perceived_yields.empty());
    out.push_back({truth.t, Discrepancy::kChannelBlind, std::nullopt, j.label, std::move(j.reason)});
    return out;
  }

  auto judge_actor = [&](const std::string& id) {
    return judge(actor_envelope(truth_history, id, p), actor_envelope(perceived_history, id, p),
                 truth_yields.contains(id), perceived_yields.contains(id));
  };

  for (const ActorState& actor : truth.actors) {
    if (actor.actor_id == truth.ego_id) continue;
    const ActorState* seen = perceived.find(actor.actor_id);
    if (seen == nullptr) {
      Judgement j = judge_actor(actor.actor_id);
      out.push_back({truth.t, Discrepancy::kMissedActor, actor.actor_id, j.label, std::move(j.reason)});
      continue;
    }
    if (seen->kind != actor.kind) {
      // The kernel envelope does not depend on the class; the worst-case
      // fallback therefore always covers a class change on its own.
      out.push_back({truth.t, Discrepancy::kMisclassification, actor.actor_id, RelevanceLabel::kIrrelevant,
                     "class-independent worst-case response unchanged"});
    }
    if (state_differs(*seen, actor, options.state_tolerance)) {
      Judgement j = judge_actor(actor.actor_id);
      out.push_back({truth.t, Discrepancy::kStateError, actor.actor_id, j.label, std::move(j.reason)});
    }
  }
  for (const ActorState& actor : perceived.actors) {
    if (actor.actor_id == perceived.ego_id || truth.find(actor.actor_id) != nullptr) continue;
    Judgement j = judge_actor(actor.actor_id);
    out.push_back({truth.t, Discrepancy::kGhostActor, actor.actor_id, j.label, std::move(j.reason)});
  }
  return out;
}

bool has_safety_relevant(std::span<const RelevanceVerdict> verdicts) {
  return std::any_of(verdicts.begin(), verdicts.end(),
                     [](const RelevanceVerdict& v) { return v.label == RelevanceLabel::kSafetyRelevant; });
}

EpisodeReport episode_summary(std::span<const bool> channel_a, std::span<const bool> channel_b,
                              std::span<const bool> fused, std::size_t coincidence_window_frames,
                              std::size_t collisions) {
  if (channel_a.size() != channel_b.size() || channel_a.size() != fused.size()) {
    throw ValidationError("episode_summary: verdict sequences are not aligned");
  }
  if (coincidence_window_frames < 1) throw ValidationError("episode_summary: window must be >= 1");
  const std::size_t n = channel_a.size();
  const std::size_t w = coincidence_window_frames;

  // prefix[i] = number of flagged frames in [0, i).
  auto prefix_of = [n](std::span<const bool> flags) {
    std::vector<std::size_t> prefix(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + (flags[i] ? 1 : 0);
    return prefix;
  };
  const std::vector<std::size_t> pa = prefix_of(channel_a);
  const std::vector<std::size_t> pb = prefix_of(channel_b);
  auto any_within = [&](const std::vector<std::size_t>& prefix, std::size_t i) {
    const std::size_t lo = i + 1 >= w ? i + 1 - w : 0;
    const std::size_t hi = std::min(n, i + w);
    return prefix[hi] - prefix[lo] > 0;
  };

  EpisodeReport report;
  report.frames = n;
  report.collisions = collisions;
  std::optional<std::size_t> last_marked;
  for (std::size_t i = 0; i < n; ++i) {
    report.channel_a_safety_frames += channel_a[i] ? 1 : 0;
    report.channel_b_safety_frames += channel_b[i] ? 1 : 0;
    report.fused_safety_frames += fused[i] ? 1 : 0;
    const bool marked = fused[i] || (channel_a[i] && any_within(pb, i)) || (channel_b[i] && any_within(pa, i));
    if (!marked) continue;
    if (!last_marked || i - *last_marked >= w) {
      ++report.system_failures;
      report.system_failure_frames.push_back(i);
    }
    last_marked = i;
  }
  return report;
}

EpisodeReport episode_summary(std::span<const std::vector<RelevanceVerdict>> channel_a,
                              std::span<const std::vector<RelevanceVerdict>> channel_b,
                              std::span<const std::vector<RelevanceVerdict>> fused,
                              std::size_t coincidence_window_frames, std::size_t collisions) {
  // std::vector<bool> is not contiguous, so flags live in plain arrays.
  auto flags = [](std::span<const std::vector<RelevanceVerdict>> frames) {
    auto out = std::make_unique<bool[]>(frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) out[i] = has_safety_relevant(frames[i]);
    return out;
  };
  const auto a = flags(channel_a);
  const auto b = flags(channel_b);
  const auto f = flags(fused);
  return episode_summary(std::span<const bool>(a.get(), channel_a.size()),
                         std::span<const bool>(b.get(), channel_b.size()),
                         std::span<const bool>(f.get(), fused.size()), coincidence_window_frames, collisions);
}

}  // namespace rssmon
