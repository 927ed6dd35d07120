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

#include "rssmon/reliability.hpp"

#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>
#include <fmt/format.h>

#include "rssmon/world.hpp"

namespace rssmon {

namespace {

constexpr double kDaysPerYear = 365.0;

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ValidationError(fmt::format("{} must be > 0 (got {})", name, value));
  }
}

double chi2_quantile(double dof, double prob) {
  return boost::math::quantile(boost::math::chi_squared_distribution<double>(dof), prob);
}

std::string mtbf_text(FailureRate r) {
  if (r.p_per_hour <= 0.0) return "infinite (zero failure rate)";
  return fmt::format("{:.6g} h", mtbf_from_rate(r));
}

}  // namespace

FailureRate FailureRate::of(double p_per_hour) {
  if (!(p_per_hour >= 0.0 && p_per_hour <= 1.0)) {
    throw ValidationError(fmt::format("p_per_hour must be in [0,1] (got {})", p_per_hour));
  }
  return FailureRate{p_per_hour};
}

double mtbf_from_rate(FailureRate r) {
  if (r.p_per_hour == 0.0) throw InfiniteMtbf();
  FailureRate::of(r.p_per_hour);
  return 1.0 / r.p_per_hour;
}

FailureRate rate_from_mtbf(double mtbf_hours) {
  require_positive(mtbf_hours, "mtbf_hours");
  if (mtbf_hours < 1.0) throw ValidationError("mtbf_hours must be >= 1 h for a per-hour probability");
  return FailureRate{1.0 / mtbf_hours};
}

FailureRate joint_rate(FailureRate a, FailureRate b, double window_hours) {
  require_positive(window_hours, "window_hours");
  if (window_hours > 1.0) throw ValidationError("window_hours must be <= 1");
  FailureRate::of(a.p_per_hour);
  FailureRate::of(b.p_per_hour);
  return FailureRate{a.p_per_hour * b.p_per_hour * window_hours};
}

double safety_factor_vs_human(FailureRate system, FailureRate human) {
  require_positive(system.p_per_hour, "system failure rate");
  return human.p_per_hour / system.p_per_hour;
}

double fleet_incident_rate(double mtbf_hours, std::int64_t fleet_size) {
  require_positive(mtbf_hours, "mtbf_hours");
  if (fleet_size <= 0) throw ValidationError("fleet_size must be > 0");
  return static_cast<double>(fleet_size) / mtbf_hours;
}

ValidationBurden validation_burden(double mtbf_goal_hours, double avg_speed_mph, std::int64_t fleet_size,
                                   double hours_per_vehicle_day, double demonstration_multiplier) {
  require_positive(mtbf_goal_hours, "mtbf_goal_hours");
  require_positive(avg_speed_mph, "avg_speed_mph");
  require_positive(hours_per_vehicle_day, "hours_per_vehicle_day");
  require_positive(demonstration_multiplier, "demonstration_multiplier");
  if (fleet_size <= 0) throw ValidationError("fleet_size must be > 0");
  if (hours_per_vehicle_day > 24.0) throw ValidationError("hours_per_vehicle_day must be <= 24");
  ValidationBurden out;
  out.failure_free_hours = mtbf_goal_hours * demonstration_multiplier;
  out.miles = out.failure_free_hours * avg_speed_mph;
  out.calendar_days = out.failure_free_hours / (static_cast<double>(fleet_size) * hours_per_vehicle_day);
  return out;
}

MtbfEstimate empirical_mtbf(std::size_t failures, double exposure_hours, double confidence) {
  require_positive(exposure_hours, "exposure_hours");
  if (!(confidence > 0.0 && confidence < 1.0)) throw ValidationError("confidence must be in (0,1)");
  MtbfEstimate out;
  out.failures = failures;
  out.exposure_hours = exposure_hours;
  if (failures == 0) {
    out.lower_bound = exposure_hours;
    out.ci_low = 2.0 * exposure_hours / chi2_quantile(2.0, confidence);
    return out;
  }
  const double r = static_cast<double>(failures);
  const double alpha = 1.0 - confidence;
  out.point = exposure_hours / r;
  out.ci_low = 2.0 * exposure_hours / chi2_quantile(2.0 * r + 2.0, 1.0 - alpha / 2.0);
  out.ci_high = 2.0 * exposure_hours / chi2_quantile(2.0 * r, alpha / 2.0);
  return out;
}

double per_frame_probability(double p_per_hour, double dt_s) {
  FailureRate::of(p_per_hour);
  require_positive(dt_s, "dt_s");
  return p_per_hour * dt_s / 3600.0;
}

std::vector<PublishedFigure> published_figures() {
  const FailureRate human = FailureRate::of(2e-5);
  const FailureRate channel = rate_from_mtbf(1e4);
  const FailureRate joint_human_grade = joint_rate(human, human);
  const FailureRate joint_channels = joint_rate(channel, channel);
  const double joint_mtbf = mtbf_from_rate(joint_channels);
  const ValidationBurden goal = validation_burden(1e7, 30.0, 1, 24.0);
  const ValidationBurden per_channel_single = validation_burden(1e4, 30.0, 1, 2.0);
  const ValidationBurden per_channel_fleet = validation_burden(1e4, 30.0, 100, 2.0);
  const ValidationBurden single_channel_1e8 = validation_burden(1e8, 30.0, 1, 2.0);

  std::vector<PublishedFigure> out;
  out.push_back({"human MTBF", mtbf_from_rate(human), "h", "about 50,000 hours", std::nullopt});
  out.push_back({"joint rate, two human-grade channels", joint_human_grade.p_per_hour, "/h", "4x10^-10",
                 std::nullopt});
  out.push_back({"safety factor, human-grade channels", safety_factor_vs_human(joint_human_grade, human), "x",
                 "50,000 times better", std::nullopt});
  out.push_back({"AV with MTBF 10^6 h vs human", 1e6 / mtbf_from_rate(human), "x", "20 times better",
                 std::nullopt});
  out.push_back({"fleet of 10^6 AVs at MTBF 10^6 h", fleet_incident_rate(1e6, 1000000), "incidents/h",
                 "one accident every hour", std::nullopt});
  out.push_back({"MTBF goal", 1e7, "h", "once in 1 million hours",
                 fmt::format("(a) an MTBF of 10^7 h is one failure per {:.6g} hours, not per 1 million",
                             1e7)});
  out.push_back({"failure-free hours to demonstrate 10^7 h", goal.failure_free_hours, "h", "10 million hours",
                 std::nullopt});
  out.push_back({"miles at 30 mph for 10^7 h", goal.miles, "miles", "30 Billion miles",
                 fmt::format("(b) 10^7 h x 30 mph = {:.6g} miles; 30 billion does not follow from "
                             "this arithmetic",
                             goal.miles)});
  out.push_back({"joint MTBF, two 10^4 h channels", joint_mtbf, "h", "10^8", std::nullopt});
  out.push_back({"safety factor, 10^4 h channels vs human", safety_factor_vs_human(joint_channels, human), "x",
                 "10,000 times safer",
                 fmt::format("(c) 2x10^-5 / 10^-8 = {:.6g}x; 10,000x holds only with a human MTBF "
                             "rounded to 10^4 h",
                             safety_factor_vs_human(joint_channels, human))});
  out.push_back({"years at 2 h/day for 10^4 h", per_channel_single.calendar_years(), "years",
                 "2 hours a day for 10 years",
                 fmt::format("(e) 10^4 h at 2 h/day is {:.6g} years; 10 years is about 7,300 h",
                             per_channel_single.calendar_years())});
  out.push_back({"days for 10^4 h with 100 vehicles at 2 h/day", per_channel_fleet.calendar_days, "days",
                 "a few months", std::nullopt});
  out.push_back({"years at 2 h/day for 10^8 h", single_channel_1e8.calendar_years(), "years",
                 "2 hours a day for 10,000 years",
                 fmt::format("(d) 10^8 h at 2 h/day is {:.6g} years, not 10,000",
                             single_channel_1e8.calendar_years())});
  return out;
}

std::string reliability_report(const ReliabilityInputs& in) {
  const FailureRate human = FailureRate::of(in.p_human);
  const FailureRate a = FailureRate::of(in.p_channel_a);
  const FailureRate b = FailureRate::of(in.p_channel_b);
  const FailureRate joint = joint_rate(a, b, in.window_hours);

  std::string out;
  auto row = [&out](std::string_view label, const std::string& value) {
    out += fmt::format("  {:<44} {}\n", label, value);
  };

  out += "derivation\n";
  row("human failure rate", fmt::format("{:.6g} /h", human.p_per_hour));
  row("human MTBF", mtbf_text(human));
  row("channel A failure rate", fmt::format("{:.6g} /h", a.p_per_hour));
  row("channel A MTBF", mtbf_text(a));
  row("channel B failure rate", fmt::format("{:.6g} /h", b.p_per_hour));
  row("channel B MTBF", mtbf_text(b));
  row("coincidence window", fmt::format("{:.6g} h", in.window_hours));
  row("joint failure rate", fmt::format("{:.6g} /h", joint.p_per_hour));
  row("joint MTBF", mtbf_text(joint));
  if (joint.p_per_hour > 0.0) {
    row("safety factor vs human", fmt::format("{:.6g}x", safety_factor_vs_human(joint, human)));
  } else {
    row("safety factor vs human", "unbounded (zero joint rate)");
  }
  const double fleet_rate = fleet_incident_rate(in.mtbf_goal_hours, in.fleet);
  row(fmt::format("fleet of {} at MTBF {:.6g} h", in.fleet, in.mtbf_goal_hours),
      fmt::format("{:.6g} incident/hour", fleet_rate));
  const ValidationBurden burden =
      validation_burden(in.mtbf_goal_hours, in.speed_mph, in.fleet, in.hours_per_day, in.multiplier);
  row("failure-free hours to demonstrate MTBF", fmt::format("{:.6g} h", burden.failure_free_hours));
  row(fmt::format("miles at {:.6g} mph", in.speed_mph), fmt::format("{:.6g} miles", burden.miles));
  row(fmt::format("calendar time, fleet {} at {:.6g} h/day", in.fleet, in.hours_per_day),
      fmt::format("{:.6g} days ({:.6g} years)", burden.calendar_days, burden.calendar_years()));

  out += "\npublished figures\n";
  std::vector<std::string> footnotes;
  for (const PublishedFigure& fig : published_figures()) {
    row(fig.label, fmt::format("{:.6g} {}  [stated: {}]{}", fig.computed, fig.unit, fig.stated,
                               fig.footnote ? " *" : ""));
    if (fig.footnote) footnotes.push_back(*fig.footnote);
  }
  out += "\nfootnotes\n";
  for (const std::string& note : footnotes) out += fmt::format("  {}\n", note);
  return out;
}

}  // namespace rssmon
