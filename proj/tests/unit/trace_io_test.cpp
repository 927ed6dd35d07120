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

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

namespace rssmon {
namespace {

namespace fs = std::filesystem;

const fs::path kScenarios = RSSMON_SCENARIO_DIR;

std::vector<fs::path> shipped_scenarios() {
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(kScenarios)) {
    if (entry.path().extension() == ".json") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("rssmon_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Random {
 public:
  explicit Random(std::uint64_t seed) : rng_(seed) {}
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin() { return integer(0, 1) == 1; }
  std::string id() { return "a" + std::to_string(integer(0, 99999)); }

  ActorState actor() {
    ActorState a;
    a.actor_id = id();
    a.kind = static_cast<ActorKind>(integer(0, 3));
    a.s = real(-100, 300);
    a.l = real(-10, 10);
    a.v_long = real(0, 40);
    a.v_lat = real(-3, 3);
    a.length = real(0.3, 12);
    a.width = real(0.3, 3);
    a.lane_id = integer(-2, 3);
    return a;
  }

  WorldFrame frame() {
    WorldFrame f;
    f.t = real(0, 100);
    f.ego_id = "ego";
    ActorState ego = actor();
    ego.actor_id = "ego";
    f.actors.push_back(ego);
    for (int i = integer(0, 4); i > 0; --i) f.actors.push_back(actor());
    for (int i = integer(0, 2); i > 0; --i) {
      f.occlusions.push_back({real(0.1, 80), real(0, 5), coin() ? OcclusionHides::kPedestrian : OcclusionHides::kVehicle});
    }
    return f;
  }

  FaultModel faults() {
    FaultModel fm;
    fm.p_false_negative = real(0, 1);
    fm.p_false_positive = real(0, 2);
    fm.pos_noise_sigma = real(0, 1);
    fm.vel_noise_sigma = real(0, 1);
    fm.p_misclassify = real(0, 1);
    fm.p_dropout_start = real(0, 1);
    fm.dropout_mean_frames = real(1, 10);
    if (coin()) fm.target_actors = {id(), id()};
    fm.ghost_bounds = {real(1, 10), real(10, 50), real(-2, 0), real(0, 2), integer(0, 2)};
    return fm;
  }

 private:
  std::mt19937_64 rng_;
};

template <typename T>
T round_trip(const T& value) {
  return Json::parse(Json(value).dump()).get<T>();
}

TEST(JsonRoundTripTest, RandomizedDomainValues) {
  Random r(2026);
  for (int i = 0; i < 300; ++i) {
    const WorldFrame f = r.frame();
    EXPECT_EQ(round_trip(f), f);
    const FaultModel fm = r.faults();
    EXPECT_EQ(round_trip(fm), fm);

    ChannelObservation obs;
    obs.channel_id = r.coin() ? ChannelId::kCameraOnly : ChannelId::kRadarLidar;
    obs.t = f.t;
    obs.available = r.coin();
    obs.perceived = f.actors;
    obs.ghost_ids = {r.id()};
    obs.ego_state = f.actors[0];
    obs.occlusions = f.occlusions;
    EXPECT_EQ(round_trip(obs), obs);

    FusedPerception fused{f, r.coin(), r.coin(), r.coin()};
    EXPECT_EQ(round_trip(fused), fused);

    RelevanceVerdict v{f.t, static_cast<Discrepancy>(r.integer(0, 4)), std::nullopt,
                       static_cast<RelevanceLabel>(r.integer(0, 2)), "why"};
    if (r.coin()) v.actor_id = r.id();
    EXPECT_EQ(round_trip(v), v);

    RssParameters p;
    p.response_time_s = r.real(0.1, 2);
    p.brake_max_long = r.real(8, 12);
    EXPECT_EQ(round_trip(p), p);

    EgoCommand c{r.real(-8, 3.5), r.real(-2, 2)};
    EXPECT_EQ(round_trip(c), c);
  }
}

TEST(JsonRoundTripTest, ShippedScenarios) {
  for (const fs::path& path : shipped_scenarios()) {
    const ScenarioSpec spec = load_scenario(path);
    EXPECT_EQ(round_trip(spec), spec) << path;
  }
}

TEST(ScenarioJsonTest, UnknownKeysAreRejectedWithPath) {
  Json doc = read_json_file(kScenarios / "lead_brake.json");
  doc["ego"]["colour"] = "red";
  try {
    scenario_from_json(doc);
    FAIL() << "accepted an unknown key";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("ego.colour"), std::string::npos) << e.what();
  }
}

TEST(ScenarioJsonTest, BadEnumRejected) {
  Json doc = read_json_file(kScenarios / "lead_brake.json");
  doc["actors"][0]["behavior"]["type"] = "teleport";
  EXPECT_THROW(scenario_from_json(doc), ValidationError);
}

TEST(OverrideTest, DottedPathsAndArrays) {
  const ScenarioSpec spec = load_scenario(
      kScenarios / "lead_brake.json",
      {"rss.response_time_s=0.8", "actors.0.behavior.t=1.5", "name=renamed", "channel_a.target_actors=[\"x\"]"});
  EXPECT_DOUBLE_EQ(spec.rss.response_time_s, 0.8);
  EXPECT_DOUBLE_EQ(spec.actors[0].behavior.t, 1.5);
  EXPECT_EQ(spec.name, "renamed");
  EXPECT_EQ(spec.channel_a.target_actors, std::vector<std::string>{"x"});
}

TEST(OverrideTest, Errors) {
  const fs::path path = kScenarios / "lead_brake.json";
  EXPECT_THROW(load_scenario(path, {"rss.no_such_field=1"}), ValidationError);
  EXPECT_THROW(load_scenario(path, {"actors.7.behavior.t=1"}), ValidationError);
  EXPECT_THROW(load_scenario(path, {"missing_equals"}), ValidationError);
  EXPECT_THROW(load_scenario(path, {"dt_s=\"fast\""}), ValidationError);
  EXPECT_THROW(load_scenario(kScenarios / "does_not_exist.json"), IoError);
}

TEST(TraceParseTest, HeaderAndOrderingChecks) {
  EXPECT_THROW(parse_trace("", "empty"), ValidationError);
  EXPECT_THROW(parse_trace("{\"stream\":\"truth\",\"t\":0}\n", "noheader"), ValidationError);
  try {
    parse_trace("{\"header\":true,\"stream\":\"truth\",\"format_version\":2}\n", "v2");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("format_version mismatch"), std::string::npos);
  }
  const std::string head = "{\"header\":true,\"stream\":\"truth\",\"format_version\":1}\n";
  EXPECT_THROW(parse_trace(head + "{\"stream\":\"truth\",\"t\":1}\n{\"stream\":\"truth\",\"t\":1}\n", "dup"),
               ValidationError);
  EXPECT_THROW(parse_trace(head + "{\"stream\":\"fused\",\"t\":1}\n", "wrong"), ValidationError);
  EXPECT_THROW(parse_trace(head + "{not json\n", "broken"), ValidationError);
  EXPECT_EQ(parse_trace(head, "ok").records.size(), 0u);
}

struct Rendered {
  ScenarioSpec spec;
  TraceFiles files;
};

Rendered render(const std::string& name, std::size_t run_index = 0) {
  const ScenarioSpec spec = load_scenario(kScenarios / (name + ".json"));
  return {spec, render_traces(spec, run_scenario(spec, run_index))};
}

TEST(ReplayTest, MisalignedTimestampsRejected) {
  const Rendered r = render("lead_brake");
  const Trace truth = parse_trace(r.files.truth, "truth");
  Trace fused = parse_trace(r.files.fused, "fused");
  fused.records[3]["t"] = fused.records[3]["t"].get<double>() + 0.05;
  EXPECT_THROW(replay(truth, {fused}), ValidationError);
  Trace short_fused = parse_trace(r.files.fused, "fused");
  short_fused.records.pop_back();
  EXPECT_THROW(replay(truth, {short_fused}), ValidationError);
  const Trace a = parse_trace(r.files.channel_a, "a");
  EXPECT_THROW(replay(truth, {a, a}), ValidationError);
  EXPECT_THROW(replay(a, {a}), ValidationError);
}

TEST(ReplayTest, ReproducesSimulateVerdictsByteForByte) {
  for (const fs::path& path : shipped_scenarios()) {
    ScenarioSpec spec = load_scenario(path);
    if (spec.runs > 1) spec = load_scenario(path, {"runs=1", "duration_s=20"});
    const TraceFiles files = render_traces(spec, run_scenario(spec, 0));
    const std::string replayed =
        replay(parse_trace(files.truth, "truth"), {parse_trace(files.channel_b, "b"), parse_trace(files.fused, "f"),
                                                    parse_trace(files.channel_a, "a")});
    EXPECT_EQ(replayed, files.verdicts) << path;
  }
}

TEST(ReplayTest, RenderingIsDeterministic) {
  const Rendered a = render("ghost_in_lane", 3);
  const Rendered b = render("ghost_in_lane", 3);
  EXPECT_EQ(a.files.truth, b.files.truth);
  EXPECT_EQ(a.files.channel_a, b.files.channel_a);
  EXPECT_EQ(a.files.fused, b.files.fused);
  EXPECT_EQ(a.files.verdicts, b.files.verdicts);
  EXPECT_EQ(a.files.report, b.files.report);
  EXPECT_NE(a.files.channel_a, render("ghost_in_lane", 4).files.channel_a);
}

TEST(ReplayTest, ParameterOverrideChangesVerdicts) {
  const Rendered r = render("lead_missed");
  const Trace truth = parse_trace(r.files.truth, "truth");
  const Trace fused = parse_trace(r.files.fused, "fused");
  RssParameters lax;
  lax.response_time_s = 0.1;
  lax.accel_max_long = 0.1;
  lax.brake_min_long = 8.0;
  const std::string strict = classify_traces(truth, fused);
  const std::string relaxed = classify_traces(truth, fused, lax);
  EXPECT_NE(strict.find("safety_relevant"), std::string::npos);
  EXPECT_EQ(relaxed.find("safety_relevant"), std::string::npos);
}

// Three frames written by hand: a stopped lead 30 m ahead of an ego at
// 20 m/s, absent from channel A.
TEST(ClassifyTest, HandWrittenTraceFlagsMissedLead) {
  const std::string spec =
      R"("scenario_spec":{"name":"hand","layout":{"lanes":[{"lane_id":0,"center_l":0,"width":3.5}]},)"
      R"("ego":{"actor_id":"ego","v_long":20}})";
  std::string truth = R"({"header":true,"format_version":1,"stream":"truth",)" + spec +
                      R"(,"parameters":{"response_time_s":0.5}})" "\n";
  std::string chan = R"({"header":true,"format_version":1,"stream":"channel_a"})" "\n";
  for (int n = 0; n < 3; ++n) {
    const std::string t = n == 0 ? "0.0" : (n == 1 ? "0.1" : "0.2");
    const std::string ego = R"({"actor_id":"ego","s":)" + std::to_string(2.0 * n) + R"(,"v_long":20})";
    truth += R"({"stream":"truth","t":)" + t + R"(,"ego_command":{"a_long":0,"a_lat":0},"frame":{"t":)" + t +
             R"(,"ego_id":"ego","actors":[)" + ego + R"(,{"actor_id":"lead","s":34.5,"v_long":0}]}})" "\n";
    chan += R"({"stream":"channel_a","t":)" + t + R"(,"observation":{"t":)" + t + R"(,"ego_state":)" + ego +
            R"(,"perceived":[)" + ego + "]}}\n";
  }
  const std::string out = classify_traces(parse_trace(truth, "truth"), parse_trace(chan, "a"));
  std::istringstream lines(out);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(Json::parse(line).at("stream"), "verdicts");
  int records = 0;
  while (std::getline(lines, line)) {
    const Json rec = Json::parse(line);
    ++records;
    EXPECT_FALSE(rec.contains("compliant"));
    ASSERT_EQ(rec.at("channel_a").size(), 1u);
    const Json& v = rec.at("channel_a")[0];
    EXPECT_EQ(v.at("discrepancy"), "missed_actor");
    EXPECT_EQ(v.at("actor_id"), "lead");
    EXPECT_EQ(v.at("label"), "safety_relevant");
    EXPECT_NE(v.at("reason").get<std::string>().find("rule 1"), std::string::npos);
  }
  EXPECT_EQ(records, 3);
}

TEST(WriteTracesTest, WritesAllFiles) {
  const fs::path dir = scratch_dir("write");
  const Rendered r = render("red_light");
  write_traces(dir, r.files);
  EXPECT_EQ(slurp(dir / "truth.jsonl"), r.files.truth);
  EXPECT_EQ(slurp(dir / "verdicts.jsonl"), r.files.verdicts);
  const Json report = read_json_file(dir / "report.json");
  EXPECT_EQ(report.at("scenario"), "red_light");
  EXPECT_EQ(report.at("statistics").at("collisions"), 0);
  EXPECT_EQ(read_trace(dir / "fused.jsonl").records.size(), frame_count(r.spec));
  fs::remove_all(dir);
}

int run_cli(const std::string& args, const fs::path& dir) {
  const std::string cmd = std::string(RSSMON_CLI_PATH) + " " + args + " > " + (dir / "stdout.txt").string() +
                          " 2> " + (dir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(CliTest, ExitCodesAndReplay) {
  const fs::path dir = scratch_dir("cli");
  const std::string scenario = (kScenarios / "lead_missed.json").string();
  const std::string out = (dir / "out").string();

  ASSERT_EQ(run_cli("simulate " + scenario + " -o " + out, dir), 0);
  EXPECT_NE(slurp(dir / "stdout.txt").find("wrote"), std::string::npos);
  ASSERT_EQ(run_cli("replay " + out + "/truth.jsonl " + out + "/channel_a.jsonl " + out + "/channel_b.jsonl " +
                        out + "/fused.jsonl -o " + (dir / "replayed.jsonl").string(),
                    dir),
            0);
  EXPECT_EQ(slurp(dir / "replayed.jsonl"), slurp(dir / "out" / "verdicts.jsonl"));
  EXPECT_EQ(run_cli("classify " + out + "/truth.jsonl " + out + "/fused.jsonl", dir), 0);
  EXPECT_NE(slurp(dir / "stdout.txt").find("safety_relevant"), std::string::npos);

  EXPECT_EQ(run_cli("simulate " + scenario + " -o " + out + " --set rss.response_time_s=0", dir), 2);
  EXPECT_NE(slurp(dir / "stderr.txt").find("response_time_s"), std::string::npos);
  EXPECT_EQ(run_cli("simulate " + scenario + " -o " + out + " --set bogus.key=1", dir), 2);
  EXPECT_EQ(run_cli("simulate " + (dir / "nope.json").string(), dir), 3);

  std::ofstream(dir / "empty.jsonl").close();
  EXPECT_EQ(run_cli("replay " + (dir / "empty.jsonl").string() + " " + out + "/fused.jsonl", dir), 2);
  EXPECT_EQ(run_cli("reliability --p_human abc", dir), 2);
  EXPECT_EQ(run_cli("reliability --fleet 1000000 --mtbf 1e6", dir), 0);
  EXPECT_NE(slurp(dir / "stdout.txt").find("1 incident/hour"), std::string::npos);
  EXPECT_EQ(run_cli("reliability --p_channel_a 0", dir), 0);
  EXPECT_NE(slurp(dir / "stdout.txt").find("infinite"), std::string::npos);
  EXPECT_EQ(run_cli("reliability --p_human 2", dir), 2);

  EXPECT_EQ(run_cli("montecarlo " + (kScenarios / "lead_brake.json").string() + " --runs 3 --workers 2", dir), 0);
  const Json mc = Json::parse(slurp(dir / "stdout.txt"));
  EXPECT_EQ(mc.at("statistics").at("runs"), 3);
  EXPECT_TRUE(mc.at("mtbf_estimate").at("point_hours").is_null());
  fs::remove_all(dir);
}

}  // namespace
}  // namespace rssmon
