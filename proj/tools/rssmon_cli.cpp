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

// rssmon command line: simulate, replay, classify, reliability, montecarlo.
// Exit codes: 0 ok, 2 invalid input, 3 i/o failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "rssmon/harness.hpp"
#include "rssmon/reliability.hpp"
#include "rssmon/trace_io.hpp"

namespace {

using namespace rssmon;

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitIo = 3;

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  out << text;
  if (!out) throw IoError(fmt::format("cannot write '{}'", out_path));
}

std::string stats_summary(const RunStatistics& s) {
  std::string out;
  auto row = [&out](std::string_view label, const std::string& value) {
    out += fmt::format("  {:<30} {}\n", label, value);
  };
  row("frames", fmt::format("{} ({:.6g} h)", s.frames, s.exposure_hours()));
  row("dangerous frames", fmt::format("{}", s.dangerous_frames));
  row("proper responses triggered", fmt::format("{}", s.proper_responses_triggered));
  for (std::size_t src = 0; src < 3; ++src) {
    row(fmt::format("verdicts {}", to_string(static_cast<VerdictSource>(src))),
        fmt::format("irrelevant {}, comfort {}, safety {}", s.verdict_counts[src][0], s.verdict_counts[src][1],
                    s.verdict_counts[src][2]));
  }
  row("system failures", fmt::format("{}", s.system_failures));
  row("collisions", fmt::format("{} (in model {}, explained {}, unexplained {})", s.collisions,
                                s.in_model_collisions, s.explained_collisions, s.unexplained_collisions()));
  row("noncompliant frames", fmt::format("{}", s.noncompliant_frames));
  row("yield frames", fmt::format("{}", s.yield_frames));
  row("lane changes", fmt::format("{}", s.lane_changes));
  return out;
}

std::optional<RssParameters> load_params(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return read_json_file(path).get<RssParameters>();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Runtime safety monitor: simulation, replay and reliability arithmetic"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir = "out", out_path, params_path;
  std::vector<std::string> overrides;
  std::size_t run_index = 0;

  CLI::App* sim = app.add_subcommand("simulate", "Run one scenario and write traces plus report");
  sim->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  sim->add_option("-o,--out", out_dir, "Output directory");
  sim->add_option("--set", overrides, "Override key=value (dotted path)");
  sim->add_option("--run-index", run_index, "Run index selecting the random streams");

  std::string truth_path;
  std::vector<std::string> perceived_paths;
  CLI::App* rep = app.add_subcommand("replay", "Recompute compliance and relevance from traces");
  rep->add_option("truth", truth_path, "truth.jsonl")->required();
  rep->add_option("perceived", perceived_paths, "channel_a / channel_b / fused traces")->required();
  rep->add_option("--params", params_path, "RSS parameter JSON overriding the trace header");
  rep->add_option("-o,--out", out_path, "Write verdict stream here instead of stdout");

  std::string classify_perceived;
  CLI::App* cls = app.add_subcommand("classify", "Relevance verdicts only, for two traces");
  cls->add_option("truth", truth_path, "truth.jsonl")->required();
  cls->add_option("perceived", classify_perceived, "perceived trace")->required();
  cls->add_option("--params", params_path, "RSS parameter JSON overriding the trace header");
  cls->add_option("-o,--out", out_path, "Write verdicts here instead of stdout");

  ReliabilityInputs rel;
  CLI::App* rcmd = app.add_subcommand("reliability", "Print the failure-rate derivation table");
  rcmd->add_option("--p_human", rel.p_human, "Human failure probability per hour");
  rcmd->add_option("--p_channel_a", rel.p_channel_a, "Channel A failure probability per hour");
  rcmd->add_option("--p_channel_b", rel.p_channel_b, "Channel B failure probability per hour");
  rcmd->add_option("--mtbf,--mtbf_goal", rel.mtbf_goal_hours, "MTBF goal, hours");
  rcmd->add_option("--fleet", rel.fleet, "Fleet size");
  rcmd->add_option("--speed_mph", rel.speed_mph, "Average speed, mph");
  rcmd->add_option("--hours_per_day", rel.hours_per_day, "Driving hours per vehicle per day");
  rcmd->add_option("--multiplier", rel.multiplier, "Demonstration multiplier on the MTBF goal");
  rcmd->add_option("--window", rel.window_hours, "Coincidence window, hours");

  std::optional<std::size_t> runs;
  std::size_t workers = 0;
  double confidence = 0.95;
  CLI::App* mc = app.add_subcommand("montecarlo", "Run a seeded batch and estimate the system MTBF");
  mc->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  mc->add_option("--set", overrides, "Override key=value (dotted path)");
  mc->add_option("--runs", runs, "Number of runs (overrides the scenario)");
  mc->add_option("--workers", workers, "Worker threads, 0 = all cores");
  mc->add_option("--confidence", confidence, "Confidence level of the MTBF interval");
  mc->add_option("-o,--out", out_path, "Write the JSON report here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (sim->parsed()) {
      const ScenarioSpec spec = load_scenario(scenario_path, overrides);
      const RunResult run = run_scenario(spec, run_index);
      write_traces(out_dir, render_traces(spec, run));
      std::cout << fmt::format("scenario {} run {} seed {}\n", spec.name, run_index, spec.master_seed)
                << stats_summary(run.stats) << fmt::format("wrote {}\n", out_dir);
    } else if (rep->parsed()) {
      const Trace truth = read_trace(truth_path);
      std::vector<Trace> perceived;
      for (const std::string& path : perceived_paths) perceived.push_back(read_trace(path));
      emit(replay(truth, perceived, load_params(params_path)), out_path);
    } else if (cls->parsed()) {
      const Trace truth = read_trace(truth_path);
      const Trace perceived = read_trace(classify_perceived);
      emit(classify_traces(truth, perceived, load_params(params_path)), out_path);
    } else if (rcmd->parsed()) {
      std::cout << reliability_report(rel);
    } else if (mc->parsed()) {
      if (runs) overrides.push_back(fmt::format("runs={}", *runs));
      const ScenarioSpec spec = load_scenario(scenario_path, overrides);
      const MonteCarloResult result = monte_carlo(spec, workers);
      const RunStatistics& agg = result.aggregate;
      const MtbfEstimate est = empirical_mtbf(agg.system_failures, agg.exposure_hours(), confidence);
      const Json report{{"format_version", kFormatVersion},
                        {"scenario", spec.name},
                        {"master_seed", spec.master_seed},
                        {"statistics", agg},
                        {"mtbf_estimate",
                         {{"failures", est.failures},
                          {"exposure_hours", est.exposure_hours},
                          {"point_hours", est.point ? Json(*est.point) : Json()},
                          {"lower_bound_hours", est.lower_bound ? Json(*est.lower_bound) : Json()},
                          {"ci_low_hours", est.ci_low},
                          {"ci_high_hours", est.ci_high ? Json(*est.ci_high) : Json()},
                          {"confidence", confidence}}}};
      emit(report.dump(2) + "\n", out_path);
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const InfiniteMtbf& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const Json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitOk;
}
