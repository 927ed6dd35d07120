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

#include "rssmon/trace_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace rssmon {

namespace {

// Dotted path of the field being read, for error messages.
thread_local std::vector<std::string> g_path;

std::string current_path(std::string_view leaf = {}) {
  std::string out;
  for (const std::string& part : g_path) {
    if (!out.empty()) out += '.';
    out += part;
  }
  if (!leaf.empty()) {
    if (!out.empty()) out += '.';
    out += leaf;
  }
  return out;
}

struct PathGuard {
  explicit PathGuard(std::string part) { g_path.push_back(std::move(part)); }
  ~PathGuard() { g_path.pop_back(); }
  PathGuard(const PathGuard&) = delete;
  PathGuard& operator=(const PathGuard&) = delete;
};

/// Reads named fields from an object; absent fields keep their defaults and
/// keys nobody asked for are rejected by finish().
class ObjectReader {
 public:
  explicit ObjectReader(const Json& j) : j_(j) {
    if (!j.is_object()) throw ValidationError(fmt::format("{}: expected an object", where()));
  }

  template <typename T>
  void operator()(const char* key, T& field) {
    known_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    PathGuard guard(key);
    try {
      field = it->template get<T>();
    } catch (const Json::exception& e) {
      throw ValidationError(fmt::format("{}: {}", current_path(), e.what()));
    }
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!known_.contains(key)) throw ValidationError(fmt::format("unknown key '{}'", current_path(key)));
    }
  }

 private:
  static std::string where() {
    const std::string p = current_path();
    return p.empty() ? "document" : p;
  }

  const Json& j_;
  std::set<std::string> known_;
};

template <typename Enum, typename Parse>
Enum enum_from(const Json& j, Parse parse) {
  if (!j.is_string()) throw ValidationError(fmt::format("{}: expected a string", current_path()));
  return parse(j.get<std::string>());
}

}  // namespace

}  // namespace rssmon

// Enums and optionals are written as strings / null.
namespace nlohmann {

#define RSSMON_ENUM_SERIALIZER(Type, parse)                                             \
  template <>                                                                           \
  struct adl_serializer<rssmon::Type> {                                                 \
    static void to_json(json& j, rssmon::Type v) { j = std::string(rssmon::to_string(v)); } \
    static void from_json(const json& j, rssmon::Type& v) {                             \
      v = rssmon::enum_from<rssmon::Type>(j, [](const std::string& s) { return rssmon::parse(s); }); \
    }                                                                                   \
  };

RSSMON_ENUM_SERIALIZER(ActorKind, actor_kind_from_string)
RSSMON_ENUM_SERIALIZER(OcclusionHides, occlusion_hides_from_string)
RSSMON_ENUM_SERIALIZER(ChannelId, channel_id_from_string)
RSSMON_ENUM_SERIALIZER(Discrepancy, discrepancy_from_string)
RSSMON_ENUM_SERIALIZER(RelevanceLabel, relevance_label_from_string)
RSSMON_ENUM_SERIALIZER(BehaviorType, behavior_type_from_string)

#undef RSSMON_ENUM_SERIALIZER

template <typename T>
struct adl_serializer<std::optional<T>> {
  static void to_json(json& j, const std::optional<T>& v) {
    if (v) {
      j = *v;
    } else {
      j = nullptr;
    }
  }
  static void from_json(const json& j, std::optional<T>& v) {
    if (j.is_null()) {
      v.reset();
    } else {
      v = j.get<T>();
    }
  }
};

}  // namespace nlohmann

namespace rssmon {

void to_json(Json& j, const RssParameters& v) {
  j = Json{{"response_time_s", v.response_time_s},       {"accel_max_long", v.accel_max_long},
           {"brake_min_long", v.brake_min_long},         {"brake_max_long", v.brake_max_long},
           {"accel_max_lat", v.accel_max_lat},           {"brake_min_lat", v.brake_min_lat},
           {"lateral_margin_mu", v.lateral_margin_mu},   {"pedestrian_max_speed", v.pedestrian_max_speed},
           {"comfort_margin_long", v.comfort_margin_long}, {"comfort_margin_lat", v.comfort_margin_lat}};
}

void from_json(const Json& j, RssParameters& v) {
  ObjectReader r(j);
  r("response_time_s", v.response_time_s);
  r("accel_max_long", v.accel_max_long);
  r("brake_min_long", v.brake_min_long);
  r("brake_max_long", v.brake_max_long);
  r("accel_max_lat", v.accel_max_lat);
  r("brake_min_lat", v.brake_min_lat);
  r("lateral_margin_mu", v.lateral_margin_mu);
  r("pedestrian_max_speed", v.pedestrian_max_speed);
  r("comfort_margin_long", v.comfort_margin_long);
  r("comfort_margin_lat", v.comfort_margin_lat);
  r.finish();
}

void to_json(Json& j, const ActorState& v) {
  j = Json{{"actor_id", v.actor_id}, {"kind", v.kind},     {"s", v.s},          {"l", v.l},
           {"v_long", v.v_long},     {"v_lat", v.v_lat},   {"length", v.length}, {"width", v.width},
           {"lane_id", v.lane_id}};
}

void from_json(const Json& j, ActorState& v) {
  ObjectReader r(j);
  r("actor_id", v.actor_id);
  r("kind", v.kind);
  r("s", v.s);
  r("l", v.l);
  r("v_long", v.v_long);
  r("v_lat", v.v_lat);
  r("length", v.length);
  r("width", v.width);
  r("lane_id", v.lane_id);
  r.finish();
}

void to_json(Json& j, const OcclusionRegion& v) {
  j = Json{{"s_near", v.s_near}, {"lateral_offset", v.lateral_offset}, {"hides", v.hides}};
}

void from_json(const Json& j, OcclusionRegion& v) {
  ObjectReader r(j);
  r("s_near", v.s_near);
  r("lateral_offset", v.lateral_offset);
  r("hides", v.hides);
  r.finish();
}

void to_json(Json& j, const WorldFrame& v) {
  j = Json{{"t", v.t}, {"ego_id", v.ego_id}, {"actors", v.actors}, {"occlusions", v.occlusions}};
}

void from_json(const Json& j, WorldFrame& v) {
  ObjectReader r(j);
  r("t", v.t);
  r("ego_id", v.ego_id);
  r("actors", v.actors);
  r("occlusions", v.occlusions);
  r.finish();
}

void to_json(Json& j, const LaneInfo& v) {
  j = Json{{"lane_id", v.lane_id}, {"center_l", v.center_l}, {"width", v.width}};
}

void from_json(const Json& j, LaneInfo& v) {
  ObjectReader r(j);
  r("lane_id", v.lane_id);
  r("center_l", v.center_l);
  r("width", v.width);
  r.finish();
}

void to_json(Json& j, const LaneLayout& v) { j = Json{{"lanes", v.lanes}}; }

void from_json(const Json& j, LaneLayout& v) {
  ObjectReader r(j);
  r("lanes", v.lanes);
  r.finish();
}

void to_json(Json& j, const ConflictZone& v) {
  j = Json{{"zone_id", v.zone_id}, {"crossing_lane", v.crossing_lane}, {"s_start", v.s_start},
           {"s_end", v.s_end},     {"stop_l", v.stop_l},               {"clear_l", v.clear_l}};
}

void from_json(const Json& j, ConflictZone& v) {
  ObjectReader r(j);
  r("zone_id", v.zone_id);
  r("crossing_lane", v.crossing_lane);
  r("s_start", v.s_start);
  r("s_end", v.s_end);
  r("stop_l", v.stop_l);
  r("clear_l", v.clear_l);
  r.finish();
}

void to_json(Json& j, const EgoCommand& v) { j = Json{{"a_long", v.a_long}, {"a_lat", v.a_lat}}; }

void from_json(const Json& j, EgoCommand& v) {
  ObjectReader r(j);
  r("a_long", v.a_long);
  r("a_lat", v.a_lat);
  r.finish();
}

void to_json(Json& j, const GhostBounds& v) {
  j = Json{{"s_ahead_min", v.s_ahead_min}, {"s_ahead_max", v.s_ahead_max}, {"l_min", v.l_min},
           {"l_max", v.l_max},             {"lane_id", v.lane_id}};
}

void from_json(const Json& j, GhostBounds& v) {
  ObjectReader r(j);
  r("s_ahead_min", v.s_ahead_min);
  r("s_ahead_max", v.s_ahead_max);
  r("l_min", v.l_min);
  r("l_max", v.l_max);
  r("lane_id", v.lane_id);
  r.finish();
}

void to_json(Json& j, const FaultModel& v) {
  j = Json{{"p_false_negative", v.p_false_negative},
           {"p_false_positive", v.p_false_positive},
           {"pos_noise_sigma", v.pos_noise_sigma},
           {"vel_noise_sigma", v.vel_noise_sigma},
           {"p_misclassify", v.p_misclassify},
           {"p_dropout_start", v.p_dropout_start},
           {"dropout_mean_frames", v.dropout_mean_frames},
           {"target_actors", v.target_actors},
           {"ghost_bounds", v.ghost_bounds}};
}

void from_json(const Json& j, FaultModel& v) {
  ObjectReader r(j);
  r("p_false_negative", v.p_false_negative);
  r("p_false_positive", v.p_false_positive);
  r("pos_noise_sigma", v.pos_noise_sigma);
  r("vel_noise_sigma", v.vel_noise_sigma);
  r("p_misclassify", v.p_misclassify);
  r("p_dropout_start", v.p_dropout_start);
  r("dropout_mean_frames", v.dropout_mean_frames);
  r("target_actors", v.target_actors);
  r("ghost_bounds", v.ghost_bounds);
  r.finish();
}

void to_json(Json& j, const ChannelObservation& v) {
  j = Json{{"channel_id", v.channel_id}, {"t", v.t},
           {"available", v.available},   {"perceived", v.perceived},
           {"ghost_ids", v.ghost_ids},   {"ego_state", v.ego_state},
           {"occlusions", v.occlusions}};
}

void from_json(const Json& j, ChannelObservation& v) {
  ObjectReader r(j);
  r("channel_id", v.channel_id);
  r("t", v.t);
  r("available", v.available);
  r("perceived", v.perceived);
  r("ghost_ids", v.ghost_ids);
  r("ego_state", v.ego_state);
  r("occlusions", v.occlusions);
  r.finish();
}

void to_json(Json& j, const FusedPerception& v) {
  j = Json{{"frame", v.frame}, {"a_available", v.a_available}, {"b_available", v.b_available}, {"blind", v.blind}};
}

void from_json(const Json& j, FusedPerception& v) {
  ObjectReader r(j);
  r("frame", v.frame);
  r("a_available", v.a_available);
  r("b_available", v.b_available);
  r("blind", v.blind);
  r.finish();
}

void to_json(Json& j, const RelevanceVerdict& v) {
  j = Json{{"t", v.t}, {"discrepancy", v.discrepancy}, {"actor_id", v.actor_id}, {"label", v.label},
           {"reason", v.reason}};
}

void from_json(const Json& j, RelevanceVerdict& v) {
  ObjectReader r(j);
  r("t", v.t);
  r("discrepancy", v.discrepancy);
  r("actor_id", v.actor_id);
  r("label", v.label);
  r("reason", v.reason);
  r.finish();
}

void to_json(Json& j, const Behavior& v) {
  j = Json{{"type", v.type},
           {"t", v.t},
           {"decel", v.decel},
           {"lateral_rate", v.lateral_rate},
           {"target_l", v.target_l}};
}

void from_json(const Json& j, Behavior& v) {
  ObjectReader r(j);
  r("type", v.type);
  r("t", v.t);
  r("decel", v.decel);
  r("lateral_rate", v.lateral_rate);
  r("target_l", v.target_l);
  r.finish();
}

void to_json(Json& j, const ActorScript& v) { j = Json{{"initial", v.initial}, {"behavior", v.behavior}}; }

void from_json(const Json& j, ActorScript& v) {
  ObjectReader r(j);
  r("initial", v.initial);
  r("behavior", v.behavior);
  r.finish();
}

void to_json(Json& j, const OcclusionSpec& v) {
  j = Json{{"s_edge", v.s_edge},
           {"lateral_offset", v.lateral_offset},
           {"hides", v.hides},
           {"reveals_actor", v.reveals_actor}};
}

void from_json(const Json& j, OcclusionSpec& v) {
  ObjectReader r(j);
  r("s_edge", v.s_edge);
  r("lateral_offset", v.lateral_offset);
  r("hides", v.hides);
  r("reveals_actor", v.reveals_actor);
  r.finish();
}

void to_json(Json& j, const ControllerConfig& v) {
  j = Json{{"target_speed", v.target_speed},
           {"speed_gain", v.speed_gain},
           {"lateral_gain", v.lateral_gain},
           {"lane_change_lat_speed", v.lane_change_lat_speed},
           {"evasion_lookahead_s", v.evasion_lookahead_s},
           {"enable_evasion", v.enable_evasion}};
}

void from_json(const Json& j, ControllerConfig& v) {
  ObjectReader r(j);
  r("target_speed", v.target_speed);
  r("speed_gain", v.speed_gain);
  r("lateral_gain", v.lateral_gain);
  r("lane_change_lat_speed", v.lane_change_lat_speed);
  r("evasion_lookahead_s", v.evasion_lookahead_s);
  r("enable_evasion", v.enable_evasion);
  r.finish();
}

void to_json(Json& j, const ScenarioSpec& v) {
  j = Json{{"name", v.name},
           {"duration_s", v.duration_s},
           {"dt_s", v.dt_s},
           {"master_seed", v.master_seed},
           {"runs", v.runs},
           {"assumption_violation", v.assumption_violation},
           {"max_script_decel", v.max_script_decel},
           {"rss", v.rss},
           {"layout", v.layout},
           {"ego", v.ego},
           {"controller", v.controller},
           {"actors", v.actors},
           {"occlusions", v.occlusions},
           {"conflicts", v.conflicts},
           {"channel_a", v.channel_a},
           {"channel_b", v.channel_b},
           {"fusion_gate_m", v.fusion_gate_m},
           {"coincidence_window_frames", v.coincidence_window_frames}};
}

void from_json(const Json& j, ScenarioSpec& v) {
  ObjectReader r(j);
  r("name", v.name);
  r("duration_s", v.duration_s);
  r("dt_s", v.dt_s);
  r("master_seed", v.master_seed);
  r("runs", v.runs);
  r("assumption_violation", v.assumption_violation);
  r("max_script_decel", v.max_script_decel);
  r("rss", v.rss);
  r("layout", v.layout);
  r("ego", v.ego);
  r("controller", v.controller);
  r("actors", v.actors);
  r("occlusions", v.occlusions);
  r("conflicts", v.conflicts);
  r("channel_a", v.channel_a);
  r("channel_b", v.channel_b);
  r("fusion_gate_m", v.fusion_gate_m);
  r("coincidence_window_frames", v.coincidence_window_frames);
  r.finish();
}

void to_json(Json& j, const EpisodeReport& v) {
  j = Json{{"frames", v.frames},
           {"channel_a_safety_frames", v.channel_a_safety_frames},
           {"channel_b_safety_frames", v.channel_b_safety_frames},
           {"fused_safety_frames", v.fused_safety_frames},
           {"system_failures", v.system_failures},
           {"system_failure_frames", v.system_failure_frames},
           {"collisions", v.collisions}};
}

void to_json(Json& j, const RunStatistics& v) {
  Json counts = Json::object();
  Json safety_frames = Json::object();
  for (std::size_t s = 0; s < 3; ++s) {
    const std::string source(to_string(static_cast<VerdictSource>(s)));
    Json per_label = Json::object();
    for (std::size_t l = 0; l < 3; ++l) {
      per_label[std::string(to_string(static_cast<RelevanceLabel>(l)))] = v.verdict_counts[s][l];
    }
    counts[source] = per_label;
    safety_frames[source] = v.safety_relevant_frames[s];
  }
  j = Json{{"runs", v.runs},
           {"frames", v.frames},
           {"dt_s", v.dt_s},
           {"exposure_hours", v.exposure_hours()},
           {"dangerous_frames", v.dangerous_frames},
           {"proper_responses_triggered", v.proper_responses_triggered},
           {"verdict_counts", counts},
           {"safety_relevant_frames", safety_frames},
           {"system_failures", v.system_failures},
           {"collisions", v.collisions},
           {"in_model_collisions", v.in_model_collisions},
           {"explained_collisions", v.explained_collisions},
           {"unexplained_collisions", v.unexplained_collisions()},
           {"noncompliant_frames", v.noncompliant_frames},
           {"yield_frames", v.yield_frames},
           {"lane_changes", v.lane_changes}};
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot read '{}'", path.string()));
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ValidationError(fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
  }
}

void apply_override(Json& scenario, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ValidationError(fmt::format("override '{}' is not key=value", assignment));
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);

  Json* node = &scenario;
  std::stringstream parts(key);
  std::string part;
  while (std::getline(parts, part, '.')) {
    if (node->is_object() && node->contains(part)) {
      node = &(*node)[part];
    } else if (node->is_array() && !part.empty() &&
               std::all_of(part.begin(), part.end(), [](char c) { return c >= '0' && c <= '9'; }) &&
               std::stoul(part) < node->size()) {
      node = &(*node)[std::stoul(part)];
    } else {
      throw ValidationError(fmt::format("unknown override key '{}'", key));
    }
  }
  Json value;
  try {
    value = Json::parse(text);
  } catch (const Json::parse_error&) {
    value = text;
  }
  *node = std::move(value);
}

ScenarioSpec scenario_from_json(const Json& doc, const std::vector<std::string>& overrides) {
  ScenarioSpec spec = doc.get<ScenarioSpec>();
  if (!overrides.empty()) {
    Json full = spec;
    for (const std::string& o : overrides) apply_override(full, o);
    spec = full.get<ScenarioSpec>();
  }
  validate_scenario(spec);
  return spec;
}

ScenarioSpec load_scenario(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  return scenario_from_json(read_json_file(path), overrides);
}

Json trace_header(std::string_view stream, const ScenarioSpec& spec, std::size_t run_index) {
  return Json{{"stream", stream},
              {"header", true},
              {"format_version", kFormatVersion},
              {"scenario", spec.name},
              {"master_seed", spec.master_seed},
              {"run_index", run_index},
              {"parameters", spec.rss},
              {"scenario_spec", spec}};
}

Json verdict_record(double t, std::optional<bool> compliant,
                    const std::vector<std::pair<VerdictSource, const std::vector<RelevanceVerdict>*>>& by_source) {
  Json j{{"stream", "verdicts"}, {"t", t}};
  if (compliant) j["compliant"] = *compliant;
  for (const auto& [source, verdicts] : by_source) j[std::string(to_string(source))] = *verdicts;
  return j;
}

Json run_report(const ScenarioSpec& spec, const RunResult& run) {
  std::vector<double> collision_times;
  for (std::size_t f : run.collision_frames) collision_times.push_back(run.truth[f].t);
  std::vector<double> failure_times;
  for (std::size_t f : run.episode.system_failure_frames) failure_times.push_back(run.truth[f].t);
  return Json{{"format_version", kFormatVersion},
              {"scenario", spec.name},
              {"master_seed", spec.master_seed},
              {"run_index", run.run_index},
              {"assumption_violation", spec.assumption_violation},
              {"statistics", run.stats},
              {"episode", run.episode},
              {"collision_times", collision_times},
              {"system_failure_times", failure_times}};
}

TraceFiles render_traces(const ScenarioSpec& spec, const RunResult& run) {
  TraceFiles out;
  auto line = [](std::string& dst, const Json& j) {
    dst += j.dump();
    dst += '\n';
  };
  line(out.truth, trace_header("truth", spec, run.run_index));
  line(out.channel_a, trace_header("channel_a", spec, run.run_index));
  line(out.channel_b, trace_header("channel_b", spec, run.run_index));
  line(out.fused, trace_header("fused", spec, run.run_index));
  line(out.verdicts, trace_header("verdicts", spec, run.run_index));
  for (std::size_t i = 0; i < run.truth.size(); ++i) {
    const double t = run.truth[i].t;
    line(out.truth, Json{{"stream", "truth"}, {"t", t}, {"frame", run.truth[i]}, {"ego_command", run.commands[i]}});
    line(out.channel_a, Json{{"stream", "channel_a"}, {"t", t}, {"observation", run.channel_a[i]}});
    line(out.channel_b, Json{{"stream", "channel_b"}, {"t", t}, {"observation", run.channel_b[i]}});
    line(out.fused, Json{{"stream", "fused"}, {"t", t}, {"fused", run.fused[i]}});
    const auto& v = run.verdicts[i].by_source;
    line(out.verdicts, verdict_record(t, run.verdicts[i].compliant,
                                      {{VerdictSource::kChannelA, &v[0]},
                                       {VerdictSource::kChannelB, &v[1]},
                                       {VerdictSource::kFused, &v[2]}}));
  }
  out.report = run_report(spec, run).dump(2) + "\n";
  return out;
}

void write_traces(const std::filesystem::path& out_dir, const TraceFiles& files) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError(fmt::format("cannot create '{}': {}", out_dir.string(), ec.message()));
  const std::pair<const char*, const std::string*> outputs[] = {
      {"truth.jsonl", &files.truth},       {"channel_a.jsonl", &files.channel_a},
      {"channel_b.jsonl", &files.channel_b}, {"fused.jsonl", &files.fused},
      {"verdicts.jsonl", &files.verdicts}, {"report.json", &files.report}};
  for (const auto& [name, text] : outputs) {
    const std::filesystem::path path = out_dir / name;
    std::ofstream out(path, std::ios::binary);
    out << *text;
    if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  }
}

Trace parse_trace(const std::string& text, const std::string& origin) {
  Trace trace;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::optional<double> last_t;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw ValidationError(fmt::format("{}:{}: malformed record: {}", origin, lineno, e.what()));
    }
    if (trace.header.is_null()) {
      if (!j.is_object() || !j.value("header", false)) {
        throw ValidationError(fmt::format("{}: first record is not a header", origin));
      }
      if (j.value("format_version", -1) != kFormatVersion) {
        throw ValidationError(fmt::format("{}: format_version mismatch (expected {}, got {})", origin,
                                          kFormatVersion, j.value("format_version", Json()).dump()));
      }
      trace.header = std::move(j);
      continue;
    }
    if (!j.is_object() || !j.contains("t") || !j["t"].is_number() ||
        j.value("stream", std::string()) != trace.header.value("stream", std::string())) {
      throw ValidationError(fmt::format("{}:{}: record does not belong to this stream", origin, lineno));
    }
    const double t = j["t"].get<double>();
    if (last_t && !(t > *last_t)) {
      throw ValidationError(fmt::format("{}:{}: timestamps are not strictly increasing", origin, lineno));
    }
    last_t = t;
    trace.records.push_back(std::move(j));
  }
  if (trace.header.is_null()) throw ValidationError(fmt::format("{}: empty trace", origin));
  return trace;
}

Trace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot read '{}'", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_trace(buffer.str(), path.string());
}

namespace {

struct PerceivedStream {
  VerdictSource source;
  const Trace* trace;
  std::vector<WorldFrame> history;
};

VerdictSource source_of(const Trace& trace) {
  const std::string stream = trace.header.value("stream", std::string());
  for (VerdictSource s : {VerdictSource::kChannelA, VerdictSource::kChannelB, VerdictSource::kFused}) {
    if (to_string(s) == stream) return s;
  }
  throw ValidationError(fmt::format("'{}' is not a perceived stream", stream));
}

std::string recompute(const Trace& truth, const std::vector<Trace>& perceived,
                      const std::optional<RssParameters>& params, bool with_compliance) {
  if (truth.header.value("stream", std::string()) != "truth") {
    throw ValidationError("first trace must be the truth stream");
  }
  if (truth.records.empty()) throw ValidationError("empty trace: no truth frames");
  if (perceived.empty()) throw ValidationError("at least one perceived trace is required");

  const ScenarioSpec spec = truth.header.at("scenario_spec").get<ScenarioSpec>();
  const RssParameters rss = params ? *params : truth.header.at("parameters").get<RssParameters>();
  const ValidatedParameters p = validate_parameters(rss);

  std::vector<PerceivedStream> streams;
  for (const Trace& trace : perceived) {
    const VerdictSource source = source_of(trace);
    for (const PerceivedStream& s : streams) {
      if (s.source == source) throw ValidationError(fmt::format("duplicate {} trace", to_string(source)));
    }
    if (trace.records.size() != truth.records.size()) {
      throw ValidationError(fmt::format("{} has {} records, truth has {}", to_string(source),
                                        trace.records.size(), truth.records.size()));
    }
    streams.push_back({source, &trace, {}});
  }
  std::sort(streams.begin(), streams.end(),
            [](const PerceivedStream& a, const PerceivedStream& b) { return a.source < b.source; });

  Json header = truth.header;
  header["stream"] = "verdicts";
  header["parameters"] = rss;
  std::string out = header.dump() + "\n";

  std::vector<WorldFrame> truth_history;
  ClassifyOptions options;
  options.conflicts = spec.conflicts;
  for (std::size_t i = 0; i < truth.records.size(); ++i) {
    const Json& rec = truth.records[i];
    const double t = rec.at("t").get<double>();
    truth_history.push_back(rec.at("frame").get<WorldFrame>());
    validate_frame(truth_history.back());
    const WorldFrame& frame = truth_history.back();

    std::vector<std::vector<RelevanceVerdict>> verdicts(streams.size());
    std::vector<std::pair<VerdictSource, const std::vector<RelevanceVerdict>*>> by_source;
    for (std::size_t k = 0; k < streams.size(); ++k) {
      const Json& prec = streams[k].trace->records[i];
      if (std::abs(prec.at("t").get<double>() - t) > 1e-9) {
        throw ValidationError(fmt::format("timestamp misalignment at record {}: truth t={}, {} t={}", i + 1, t,
                                          to_string(streams[k].source), prec.at("t").get<double>()));
      }
      FusedPerception view;
      if (streams[k].source == VerdictSource::kFused) {
        view = prec.at("fused").get<FusedPerception>();
      } else {
        view = channel_view(prec.at("observation").get<ChannelObservation>(), frame.ego_id);
      }
      streams[k].history.push_back(std::move(view.frame));
      options.perceived_blind = view.blind;
      verdicts[k] = classify_frame(truth_history, streams[k].history, p, options);
      by_source.emplace_back(streams[k].source, &verdicts[k]);
    }
    std::optional<bool> compliant;
    if (with_compliance) {
      const EgoCommand cmd = rec.at("ego_command").get<EgoCommand>();
      compliant = command_within_envelope(ego_envelope(truth_history, p), cmd, frame.ego().v_lat, spec.dt_s, p);
    }
    out += verdict_record(t, compliant, by_source).dump();
    out += '\n';
  }
  return out;
}

}  // namespace

std::string replay(const Trace& truth, const std::vector<Trace>& perceived,
                   const std::optional<RssParameters>& params) {
  return recompute(truth, perceived, params, true);
}

std::string classify_traces(const Trace& truth, const Trace& perceived, const std::optional<RssParameters>& params) {
  return recompute(truth, {perceived}, params, false);
}

}  // namespace rssmon
