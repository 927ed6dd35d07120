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
 * \file reliability.hpp
 * MTBF, redundancy composition, fleet rate and validation burden arithmetic.
 *
 * Rates are probabilities of at least one safety-relevant failure per hour of
 * operation. Miles and calendar days appear only at this boundary.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rssmon {

/// Raised when a zero failure rate is asked for its MTBF.
class InfiniteMtbf : public std::domain_error {
 public:
  InfiniteMtbf() : std::domain_error("failure rate is zero: MTBF is infinite") {}
};

struct FailureRate {
  double p_per_hour = 0.0;

  /// Throws ValidationError unless 0 <= p <= 1.
  static FailureRate of(double p_per_hour);
};

double mtbf_from_rate(FailureRate r);
FailureRate rate_from_mtbf(double mtbf_hours);

/// Probability per hour that both channels fail within the same coincidence
/// window: p_a * p_b * window_hours. window_hours = 1 gives plain p_a * p_b.
FailureRate joint_rate(FailureRate a, FailureRate b, double window_hours = 1.0);

double safety_factor_vs_human(FailureRate system, FailureRate human);

/// Fleet-wide incidents per hour.
double fleet_incident_rate(double mtbf_hours, std::int64_t fleet_size);

struct ValidationBurden {
  double failure_free_hours = 0.0;
  double miles = 0.0;
  double calendar_days = 0.0;

  double calendar_years() const { return calendar_days / 365.0; }
};

/// Failure-free hours needed to demonstrate `mtbf_goal_hours`, at
/// `demonstration_multiplier` times the goal.
ValidationBurden validation_burden(double mtbf_goal_hours, double avg_speed_mph, std::int64_t fleet_size,
                                   double hours_per_vehicle_day, double demonstration_multiplier = 1.0);

struct MtbfEstimate {
  std::size_t failures = 0;
  double exposure_hours = 0.0;
  /// exposure / failures; absent when no failure was observed.
  std::optional<double> point;
  /// With zero failures the exposure itself is reported as a lower bound.
  std::optional<double> lower_bound;
  /// Two-sided chi-square interval for the MTBF (upper absent for zero
  /// failures, where only the one-sided lower limit exists).
  double ci_low = 0.0;
  std::optional<double> ci_high;
};

MtbfEstimate empirical_mtbf(std::size_t failures, double exposure_hours, double confidence = 0.95);

/// Per-frame injection probability equivalent to a per-hour rate.
double per_frame_probability(double p_per_hour, double dt_s);

struct ReliabilityInputs {
  double p_human = 2e-5;
  double p_channel_a = 1e-4;
  double p_channel_b = 1e-4;
  double mtbf_goal_hours = 1e7;
  std::int64_t fleet = 1000000;
  double speed_mph = 30.0;
  double hours_per_day = 2.0;
  double multiplier = 1.0;
  double window_hours = 1.0;
};

/// One reproduced figure: the computed value next to what the source text
/// states, with a footnote when the two disagree.
struct PublishedFigure {
  std::string label;
  double computed = 0.0;
  std::string unit;
  std::string stated;
  std::optional<std::string> footnote;
};

/// Fixed reproduction of the published arithmetic, independent of inputs.
std::vector<PublishedFigure> published_figures();

/// Full printable derivation chain for `in`, followed by the fixed
/// reproduction table and its footnotes. Deterministic text.
std::string reliability_report(const ReliabilityInputs& in);

}  // namespace rssmon
