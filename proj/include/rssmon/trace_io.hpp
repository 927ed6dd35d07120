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
 * \file trace_io.hpp
 * Scenario files, JSONL trace streams, run reports and offline replay.
 *
 * Every trace file starts with a header record; each following line is one
 * record `{"stream": ..., "t": ..., <payload>}`. Keys are written in sorted
 * order and doubles round-trip exactly, so equal inputs give equal bytes.
 */
#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rssmon/harness.hpp"
#include "rssmon/kernel.hpp"
#include "rssmon/perception.hpp"
#include "rssmon/relevance.hpp"
#include "rssmon/reliability.hpp"
#include "rssmon/world.hpp"

namespace rssmon {

using Json = nlohmann::json;

/// File could not be read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kFormatVersion = 1;

void to_json(Json& j, const RssParameters& v);
void from_json(const Json& j, RssParameters& v);
void to_json(Json& j, const ActorState& v);
void from_json(const Json& j, ActorState& v);
void to_json(Json& j, const OcclusionRegion& v);
void from_json(const Json& j, OcclusionRegion& v);
void to_json(Json& j, const WorldFrame& v);
void from_json(const Json& j, WorldFrame& v);
void to_json(Json& j, const LaneInfo& v);
void from_json(const Json& j, LaneInfo& v);
void to_json(Json& j, const LaneLayout& v);
void from_json(const Json& j, LaneLayout& v);
void to_json(Json& j, const ConflictZone& v);
void from_json(const Json& j, ConflictZone& v);
void to_json(Json& j, const EgoCommand& v);
void from_json(const Json& j, EgoCommand& v);
void to_json(Json& j, const GhostBounds& v);
void from_json(const Json& j, GhostBounds& v);
void to_json(Json& j, const FaultModel& v);
void from_json(const Json& j, FaultModel& v);
void to_json(Json& j, const ChannelObservation& v);
void from_json(const Json& j, ChannelObservation& v);
void to_json(Json& j, const FusedPerception& v);
void from_json(const Json& j, FusedPerception& v);
void to_json(Json& j, const RelevanceVerdict& v);
void from_json(const Json& j, RelevanceVerdict& v);
void to_json(Json& j, const Behavior& v);
void from_json(const Json& j, Behavior& v);
void to_json(Json& j, const ActorScript& v);
void from_json(const Json& j, ActorScript& v);
void to_json(Json& j, const OcclusionSpec& v);
void from_json(const Json& j, OcclusionSpec& v);
void to_json(Json& j, const ControllerConfig& v);
void from_json(const Json& j, ControllerConfig& v);
void to_json(Json& j, const ScenarioSpec& v);
void from_json(const Json& j, ScenarioSpec& v);
void to_json(Json& j, const EpisodeReport& v);
void to_json(Json& j, const RunStatistics& v);

/// Reads and parses a JSON document. IoError when unreadable,
/// ValidationError when malformed.
Json read_json_file(const std::filesystem::path& path);

/// Applies `key=value` with a dotted key (array elements by index) to a fully
/// populated scenario document. The value is parsed as JSON when possible,
/// otherwise taken as a string. Unknown keys raise ValidationError naming them.
void apply_override(Json& scenario, const std::string& assignment);

/// Parses, applies overrides and validates.
ScenarioSpec scenario_from_json(const Json& doc, const std::vector<std::string>& overrides = {});
ScenarioSpec load_scenario(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Header record for one stream of one run.
Json trace_header(std::string_view stream, const ScenarioSpec& spec, std::size_t run_index);

/// Verdict record; only sources present in `by_source` are written.
Json verdict_record(double t, std::optional<bool> compliant,
                    const std::vector<std::pair<VerdictSource, const std::vector<RelevanceVerdict>*>>& by_source);

/// Per-stream file contents for a finished run, keyed by stream name.
struct TraceFiles {
  std::string truth;
  std::string channel_a;
  std::string channel_b;
  std::string fused;
  std::string verdicts;
  std::string report;
};

TraceFiles render_traces(const ScenarioSpec& spec, const RunResult& run);
Json run_report(const ScenarioSpec& spec, const RunResult& run);

/// Writes the five streams and report.json into `out_dir` (created if
/// missing). Throws IoError on failure.
void write_traces(const std::filesystem::path& out_dir, const TraceFiles& files);

struct Trace {
  Json header;
  std::vector<Json> records;
};

/// Reads one JSONL trace and checks its header and time ordering.
Trace read_trace(const std::filesystem::path& path);
Trace parse_trace(const std::string& text, const std::string& origin);

/// Recomputes compliance and relevance verdicts from recorded streams. The
/// output matches the verdict stream written by the simulation when all
/// three perceived streams are supplied. Throws ValidationError on version
/// mismatch, misaligned timestamps or empty traces.
std::string replay(const Trace& truth, const std::vector<Trace>& perceived,
                   const std::optional<RssParameters>& params = std::nullopt);

/// Verdicts only, one line per frame, for a truth trace and one perceived
/// trace.
std::string classify_traces(const Trace& truth, const Trace& perceived,
                            const std::optional<RssParameters>& params = std::nullopt);

}  // namespace rssmon
