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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "rssmon/harness.hpp"
#include "rssmon/kernel.hpp"
#include "rssmon/reliability.hpp"
#include "rssmon/trace_io.hpp"
#include "support/oracles.hpp"

namespace {

using namespace rssmon;
namespace fs = std::filesystem;

const fs::path kScenarios = RSSMON_SCENARIO_DIR;

ScenarioSpec scenario(const std::string& name, const std::vector<std::string>& overrides = {}) {
  return load_scenario(kScenarios / (name + ".json"), overrides);
}

std::vector<fs::path> shipped_scenarios() {
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(kScenarios)) {
    if (entry.path().extension() == ".json") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back("failed: " + what);
    }
  }
  void note(const std::string& what) { notes.push_back(what); }
};

bool same6(double computed, double expected) {
  return fmt::format("{:.6g}", computed) == fmt::format("{:.6g}", expected);
}

// ---------------------------------------------------------------------------

Outcome published_numbers() {
  Outcome o;
  const FailureRate human = FailureRate::of(2e-5);
  o.check(same6(mtbf_from_rate(human), 50000.0), "human MTBF 50,000 h");
  const FailureRate joint = joint_rate(human, human);
  o.check(same6(joint.p_per_hour, 4e-10), "joint rate 4e-10");
  o.check(same6(safety_factor_vs_human(joint, human), 50000.0), "safety factor 50,000");
  const FailureRate channel = FailureRate::of(1e-4);
  o.check(same6(mtbf_from_rate(joint_rate(channel, channel)), 1e8), "joint MTBF 1e8 h");
  o.check(same6(fleet_incident_rate(1e6, 1000000), 1.0), "1 incident/hour");
  o.check(same6(validation_burden(1e7, 30.0, 1, 2.0).failure_free_hours, 1e7), "1e7 failure-free hours");

  const std::string report = reliability_report(ReliabilityInputs{});
  const auto footnotes_at = report.find("\nfootnotes\n");
  o.check(footnotes_at != std::string::npos, "report has a footnote section");
  const std::string notes = footnotes_at == std::string::npos ? "" : report.substr(footnotes_at);
  o.check(notes.find("3e+08 miles") != std::string::npos, "footnote: 3e+08 miles vs 30 billion");
  o.check(notes.find("2000x") != std::string::npos, "footnote: 2000x vs 10,000x");
  o.check(report.find("10,000 years") != std::string::npos, "10,000-year statement listed");

  double years = 0.0;
  for (const PublishedFigure& f : published_figures()) {
    if (f.stated.find("10,000 years") != std::string::npos && f.footnote) years = f.computed;
  }
  o.check(std::abs(years - 137000.0) / 137000.0 < 0.005, "~137,000 years footnoted");
  o.note(fmt::format("10^8 h at 2 h/day = {:.6g} years", years));
  return o;
}

Outcome kinematic_oracles() {
  Outcome o;
  std::mt19937_64 rng(20260101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_long = 0.0, worst_lat = 0.0;
  for (int i = 0; i < 1000; ++i) {
    RssParameters r;
    r.response_time_s = 0.1 + 1.9 * u(rng);
    r.accel_max_long = 0.5 + 4.5 * u(rng);
    r.brake_min_long = 1.5 + 6.5 * u(rng);
    r.brake_max_long = r.brake_min_long + 6.0 * u(rng);
    r.accel_max_lat = 0.1 + 1.9 * u(rng);
    r.brake_min_lat = 0.5 + 3.5 * u(rng);
    r.lateral_margin_mu = 0.5 * u(rng);
    const ValidatedParameters p = validate_parameters(r);
    const oracle::Params op{r.response_time_s, r.accel_max_long, r.brake_min_long, r.brake_max_long,
                            r.accel_max_lat,   r.brake_min_lat,  r.lateral_margin_mu};

    const double v_rear = 40.0 * u(rng), v_front = 40.0 * u(rng);
    const double d_long = std::abs(safe_longitudinal_distance(v_rear, v_front, p) -
                                   oracle::longitudinal_worst_case(v_rear, v_front, op));
    const double v1 = -4.0 + 8.0 * u(rng), v2 = -4.0 + 8.0 * u(rng);
    const double d_lat =
        std::abs(safe_lateral_distance(v1, v2, p) - oracle::lateral_worst_case(v1, v2, op));
    worst_long = std::max(worst_long, d_long);
    worst_lat = std::max(worst_lat, d_lat);
  }
  o.check(worst_long <= 0.1, "longitudinal within 0.1 m");
  o.check(worst_lat <= 0.01, "lateral within 0.01 m");
  o.note(fmt::format("max deviation: longitudinal {:.3g} m, lateral {:.3g} m", worst_long, worst_lat));
  return o;
}

// Two cars in one lane. The front car follows random acceleration segments
// bounded below by -brake_max_long; the rear car accelerates as hard as its
// envelope allows, so it only brakes when a proper response is owed.
Outcome no_collision_property() {
  Outcome o;
  constexpr double dt = 0.01;
  std::mt19937_64 rng(31337);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t collisions = 0, dangerous_episodes = 0, responses = 0;

  auto advance = [](ActorState& a, double acc) {
    if (acc < 0.0 && a.v_long <= -acc * dt) {
      a.s += a.v_long * a.v_long / (-2.0 * acc);
      a.v_long = 0.0;
      return;
    }
    a.s += a.v_long * dt + 0.5 * acc * dt * dt;
    a.v_long += acc * dt;
  };

  for (int episode = 0; episode < 10000; ++episode) {
    RssParameters r;
    r.response_time_s = 0.2 + 1.3 * u(rng);
    r.accel_max_long = 1.0 + 3.0 * u(rng);
    r.brake_min_long = 2.0 + 5.0 * u(rng);
    r.brake_max_long = r.brake_min_long + 5.0 * u(rng);
    const ValidatedParameters p = validate_parameters(r);

    ActorState rear;
    rear.actor_id = "ego";
    rear.v_long = 35.0 * u(rng);
    ActorState front;
    front.actor_id = "front";
    front.v_long = 35.0 * u(rng);
    const double d_min = safe_longitudinal_distance(rear.v_long, front.v_long, p);
    front.s = front.length + d_min * (1.0 + 0.2 * u(rng) * u(rng)) + 1e-9;

    // Compact history: the sample before the current dangerous run, its
    // first sample, the previous one and the current one.
    std::optional<PairSample> before, onset, prev;
    double front_accel = 0.0, segment_end = 0.0;
    bool was_dangerous = false, owed_seen = false;
    const int steps = static_cast<int>(std::lround(20.0 / dt));
    for (int n = 0; n <= steps; ++n) {
      const double t = n * dt;
      PairSample cur{t, assess_pair(rear, front, p, false), rear.v_long, 0.0};
      if (bodies_collide(rear, front)) {
        ++collisions;
        break;
      }
      std::vector<PairSample> h;
      if (cur.assessment.dangerous) {
        if (!was_dangerous) {
          before = prev;
          onset = cur;
          ++dangerous_episodes;
        }
        if (before) h.push_back(*before);
        h.push_back(*onset);
        if (prev && prev->t > onset->t) h.push_back(*prev);
        if (cur.t > onset->t) h.push_back(cur);
      } else {
        h.push_back(cur);
      }
      const ResponseEnvelope env = proper_response(h, p);
      if (env.min_required_brake_long > 0.0 && !owed_seen) {
        owed_seen = true;
        ++responses;
      }
      was_dangerous = cur.assessment.dangerous;
      prev = cur;

      if (t >= segment_end - 1e-12) {
        segment_end = t + 0.2 + 2.8 * u(rng);
        const double pick = u(rng);
        front_accel = pick < 0.4 ? -r.brake_max_long : -r.brake_max_long + (r.brake_max_long + 2.0) * u(rng);
      }
      const double rear_accel = std::max(env.max_allowed_accel_long, -r.brake_max_long);
      advance(rear, rear_accel);
      advance(front, front_accel);
      if (rear.v_long == 0.0 && front.v_long == 0.0) break;
    }
  }
  o.check(collisions == 0, "zero collisions");
  o.note(fmt::format("{} episodes, {} dangerous situations, {} episodes with braking owed, {} collisions", 10000,
                     dangerous_episodes, responses, collisions));
  o.check(responses > 1000, "the property is exercised (braking owed in many episodes)");
  return o;
}

Outcome independence() {
  Outcome o;
  WorldFrame f;
  f.ego_id = "ego";
  ActorState ego;
  ego.actor_id = "ego";
  ego.v_long = 20.0;
  ActorState lead = ego;
  lead.actor_id = "lead";
  lead.s = 40.0;
  f.actors = {ego, lead};
  FaultModel fm;
  fm.p_false_negative = 1e-2;
  const std::size_t frames = 10000000;
  const CoincidenceResult r = coincidence_experiment(f, fm, fm, frames, 4242);
  const double expected = frames * 1e-4;
  const double sigma = std::sqrt(frames * 1e-4 * (1.0 - 1e-4));
  o.check(std::abs(static_cast<double>(r.joint_failures) - expected) <= 3.0 * sigma, "joint count within 3 sigma");
  o.note(fmt::format("joint failures {} (expected {:.0f}, sigma {:.1f}); per channel {} / {}; correlation {:.2e}",
                     r.joint_failures, expected, sigma, r.a_failures, r.b_failures, r.correlation));
  return o;
}

std::size_t count_label(const RunResult& r, RelevanceLabel label) {
  std::size_t n = 0;
  for (const FrameVerdicts& fv : r.verdicts) {
    for (const auto& by : fv.by_source) {
      for (const RelevanceVerdict& v : by) n += v.label == label ? 1 : 0;
    }
  }
  return n;
}

Outcome relevance_thesis() {
  Outcome o;
  auto timed = [&](const std::string& name) {
    const auto start = std::chrono::steady_clock::now();
    RunResult r = run_scenario(scenario(name), 0);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.check(secs < 5.0, name + " under 5 s");
    return r;
  };

  const RunResult offroad = timed("offroad_missed");
  o.check(count_label(offroad, RelevanceLabel::kSafetyRelevant) == 0, "off-road miss: no safety-relevant verdict");
  o.check(count_label(offroad, RelevanceLabel::kIrrelevant) > 0, "off-road miss: misses are recorded");

  const RunResult missed = timed("lead_missed");
  bool names_rule1 = false;
  for (const FrameVerdicts& fv : missed.verdicts) {
    for (const auto& by : fv.by_source) {
      for (const RelevanceVerdict& v : by) {
        names_rule1 |= v.label == RelevanceLabel::kSafetyRelevant && v.reason.find("rule 1") != std::string::npos;
      }
    }
  }
  o.check(names_rule1, "missed lead inside d_min: safety-relevant verdict naming rule 1");

  const RunResult ghost = timed("ghost_in_lane");
  o.check(count_label(ghost, RelevanceLabel::kComfortRelevant) > 0, "ghost: comfort-relevant verdicts");
  o.check(count_label(ghost, RelevanceLabel::kSafetyRelevant) == 0, "ghost: no safety-relevant verdict");
  o.check(ghost.stats.collisions == 0, "ghost: zero collisions");

  const RunResult flicker = timed("flicker_59_60");
  o.check(count_label(flicker, RelevanceLabel::kSafetyRelevant) == 0, "flicker: no safety-relevant verdict");
  o.check(count_label(flicker, RelevanceLabel::kIrrelevant) > 0, "flicker: misses are recorded");

  o.note(fmt::format("safety-relevant: off-road {}, missed lead {}, ghost {}, flicker {}; ghost comfort {}",
                     count_label(offroad, RelevanceLabel::kSafetyRelevant),
                     count_label(missed, RelevanceLabel::kSafetyRelevant),
                     count_label(ghost, RelevanceLabel::kSafetyRelevant),
                     count_label(flicker, RelevanceLabel::kSafetyRelevant),
                     count_label(ghost, RelevanceLabel::kComfortRelevant)));
  return o;
}

Outcome rule_scenarios() {
  Outcome o;
  const RunResult red = run_scenario(scenario("red_light"), 0);
  o.check(red.stats.yield_frames > 0, "red light: ego yields");
  o.check(red.stats.collisions == 0, "red light: zero collisions");

  std::size_t sweep_collisions = 0, over_limit = 0, runs = 0;
  for (int k = 1; k <= 30; ++k) {
    const double emerge = 0.5 * k;
    const ScenarioSpec spec = scenario("occlusion", {fmt::format("actors.0.behavior.t={}", emerge)});
    const RunResult r = run_scenario(spec, 0);
    ++runs;
    sweep_collisions += r.stats.collisions;
    for (const WorldFrame& f : r.truth) {
      for (const OcclusionRegion& region : f.occlusions) {
        if (f.ego().v_long > occlusion_speed_limit(region, validate_parameters(spec.rss)) + 1e-6) ++over_limit;
      }
    }
  }
  o.check(sweep_collisions == 0, "occlusion sweep: zero collisions");
  o.check(over_limit == 0, "occlusion sweep: speed never above the occlusion limit");

  const RunResult blocked = run_scenario(scenario("debris_blocked"), 0);
  double min_cmd = 0.0;
  for (const EgoCommand& c : blocked.commands) min_cmd = std::min(min_cmd, c.a_long);
  o.check(blocked.stats.lane_changes == 0, "blocked lane: no lane change");
  o.check(min_cmd < 0.0 && blocked.truth.back().ego().v_long < blocked.truth.front().ego().v_long,
          "blocked lane: braking chosen");
  o.check(blocked.stats.collisions == 0, "blocked lane: zero collisions");

  const RunResult free_lane = run_scenario(scenario("debris_free"), 0);
  o.check(free_lane.stats.lane_changes >= 1, "free lane: lane change chosen");
  o.check(free_lane.stats.collisions == 0, "free lane: zero collisions");

  o.note(fmt::format("red light yield frames {}; occlusion sweep {} runs; blocked final speed {:.2f} m/s; "
                     "free-lane final lane {}",
                     red.stats.yield_frames, runs, blocked.truth.back().ego().v_long,
                     free_lane.truth.back().ego().lane_id));
  return o;
}

Outcome determinism_and_replay() {
  Outcome o;
  // Rendered traces for several runs, sequential vs. threaded.
  const ScenarioSpec batch = scenario("soundness_batch", {"duration_s=30", "runs=8"});
  std::vector<TraceFiles> sequential(batch.runs), threaded(batch.runs);
  for (std::size_t i = 0; i < batch.runs; ++i) sequential[i] = render_traces(batch, run_scenario(batch, i));
  {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < 4; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < batch.runs; i += 4) threaded[i] = render_traces(batch, run_scenario(batch, i));
      });
    }
    for (auto& t : pool) t.join();
  }
  bool identical = true;
  for (std::size_t i = 0; i < batch.runs; ++i) {
    identical &= sequential[i].truth == threaded[i].truth && sequential[i].channel_a == threaded[i].channel_a &&
                 sequential[i].channel_b == threaded[i].channel_b && sequential[i].fused == threaded[i].fused &&
                 sequential[i].verdicts == threaded[i].verdicts && sequential[i].report == threaded[i].report;
  }
  o.check(identical, "traces bit-identical under 1 and 4 threads");

  const ScenarioSpec mc_spec = scenario("soundness_batch", {"duration_s=30", "runs=24"});
  const MonteCarloResult one = monte_carlo(mc_spec, 1);
  const MonteCarloResult many = monte_carlo(mc_spec, 4);
  o.check(one.aggregate == many.aggregate && one.per_run == many.per_run, "monte_carlo: 1 vs 4 workers identical");

  std::size_t scenarios = 0;
  for (const fs::path& path : shipped_scenarios()) {
    const ScenarioSpec spec = load_scenario(path);
    const TraceFiles files = render_traces(spec, run_scenario(spec, 0));
    const std::string replayed =
        replay(parse_trace(files.truth, "truth"), {parse_trace(files.channel_a, "channel_a"),
                                                   parse_trace(files.channel_b, "channel_b"),
                                                   parse_trace(files.fused, "fused")});
    o.check(replayed == files.verdicts, "replay byte-equal for " + path.filename().string());
    ++scenarios;
  }
  o.note(fmt::format("{} runs rendered twice, {} scenarios replayed", batch.runs, scenarios));
  return o;
}

Outcome soundness_audit() {
  Outcome o;
  const ScenarioSpec spec = scenario("soundness_batch");
  RunStatistics total;
  total.dt_s = spec.dt_s;
  std::size_t compliant_collisions = 0, unexplained = 0, explained = 0;
  for (std::size_t i = 0; i < spec.runs; ++i) {
    const RunResult r = run_scenario(spec, i);
    total.merge(r.stats);
    for (std::size_t frame : r.collision_frames) {
      bool compliant = true;
      for (std::size_t k = 0; k <= frame; ++k) compliant &= r.verdicts[k].compliant;
      compliant_collisions += compliant ? 1 : 0;
      const auto& starts = r.episode.system_failure_frames;
      const bool preceded = !starts.empty() && starts.front() <= frame;
      (preceded ? explained : unexplained) += 1;
    }
  }
  o.check(total.frames >= 1000000, "at least 10^6 frames");
  o.check(unexplained == 0, "every collision preceded by a system-level sensing failure");
  o.check(total.unexplained_collisions() == 0, "run statistics agree: zero unexplained collisions");
  o.note(fmt::format("{} runs, {} frames, {} collisions ({} with an always-compliant ego), {} explained, "
                     "{} system failures, {} noncompliant frames",
                     total.runs, total.frames, total.collisions, compliant_collisions, explained,
                     total.system_failures, total.noncompliant_frames));
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "published reliability figures", 1.0, published_numbers},
      {2, "safe distances vs 1 ms worst-case simulation", 30.0, kinematic_oracles},
      {3, "no collision under the proper response", 120.0, no_collision_property},
      {4, "independent channels compose multiplicatively", 120.0, independence},
      {5, "relevance of sensing mistakes", 20.0, relevance_thesis},
      {6, "right of way, occlusion, evasive manoeuvre", 60.0, rule_scenarios},
      {7, "determinism and replay", 600.0, determinism_and_replay},
      {8, "soundness audit over 10^6 frames", 1200.0, soundness_audit},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.notes.push_back(fmt::format("exception: {}", e.what()));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.budget_s) o.check(false, fmt::format("runtime {:.2f} s over budget {:.0f} s", secs, c.budget_s));
    failures += o.pass ? 0 : 1;
    fmt::print("{} criterion {}: {} ({:.2f} s)\n", o.pass ? "PASS" : "FAIL", c.id, c.title, secs);
    for (const std::string& n : o.notes) fmt::print("    {}\n", n);
    std::fflush(stdout);
  }
  fmt::print("{}/{} criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
