#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "collapse/error.hpp"
#include "collapse/sde.hpp"

namespace collapse {

enum class Eigenstate { plus, minus };

inline std::string_view to_string(Eigenstate e) { return e == Eigenstate::plus ? "plus" : "minus"; }

/// Time a free Rabi oscillation keeps a population above 1 - epsilon.
inline double rabi_dwell_time(double epsilon) {
  return std::numbers::pi / 2.0 - std::asin(1.0 - epsilon);
}

/// Closeness threshold and persistence window of the event detectors.
struct DetectorConfig {
  double epsilon = 0.01;
  double tau = 10.0 * rabi_dwell_time(0.01);

  static DetectorConfig with_epsilon(double epsilon) {
    return {epsilon, 10.0 * rabi_dwell_time(epsilon)};
  }

  void validate() const {
    if (!(epsilon > 0.0 && epsilon < 0.5)) throw DomainError("epsilon must lie in (0, 1/2)");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("tau must be positive");
  }
};

struct ReductionEvent {
  Eigenstate eigenstate = Eigenstate::plus;
  double t_r = 0.0;
};

struct DelocalizationEvent {
  Eigenstate from_eigenstate = Eigenstate::plus;
  double t_d = 0.0;
};

using TrajectoryEvent = std::variant<ReductionEvent, DelocalizationEvent>;

/// Populations of |+> and |-> on a sample grid. Detectors work on this view so
/// synthetic traces need no wavefunction.
struct PopulationTrace {
  std::vector<double> times;
  std::vector<double> pop_plus;
  std::vector<double> pop_minus;

  static PopulationTrace from_record(const TrajectoryRecord& record) {
    PopulationTrace trace;
    trace.times.assign(record.times().begin(), record.times().end());
    trace.pop_plus.reserve(record.size());
    trace.pop_minus.reserve(record.size());
    for (const auto& s : record.samples()) {
      trace.pop_plus.push_back(s.pop_plus());
      trace.pop_minus.push_back(s.pop_minus());
    }
    return trace;
  }

  /// Trace with pop_minus = 1 - pop_plus.
  static PopulationTrace from_populations(std::vector<double> times, std::vector<double> pop_plus) {
    PopulationTrace trace;
    trace.pop_minus.reserve(pop_plus.size());
    for (double p : pop_plus) trace.pop_minus.push_back(1.0 - p);
    trace.times = std::move(times);
    trace.pop_plus = std::move(pop_plus);
    return trace;
  }

  std::span<const double> population(Eigenstate e) const {
    return e == Eigenstate::plus ? std::span<const double>(pop_plus) : std::span<const double>(pop_minus);
  }
};

namespace detail {

inline void check_resolution(std::span<const double> times, const DetectorConfig& config) {
  config.validate();
  if (times.empty()) throw DomainError("empty trajectory");
  const double limit = config.tau / 10.0;
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (times[i] - times[i - 1] > limit * (1.0 + 1e-12)) {
      throw ResolutionError("window unresolvable at this sampling rate");
    }
  }
}

/// Earliest sample time t >= search_start such that holds(i) is true at every
/// sample in [t, t + tau] and t + tau does not exceed the last sample time.
template <class Pred>
std::optional<double> first_window(std::span<const double> times, double search_start, double tau,
                                   Pred holds) {
  const std::size_t n = times.size();
  const double horizon = times.back();
  std::size_t i = 0;
  while (i < n && times[i] < search_start) ++i;
  while (i < n) {
    if (!holds(i)) {
      ++i;
      continue;
    }
    // i is the first usable sample of a run; find where the run ends.
    std::size_t e = i;
    while (e + 1 < n && holds(e + 1)) ++e;
    const double end = times[i] + tau;
    const bool fits = e + 1 < n ? times[e + 1] > end : end <= horizon;
    if (fits) return times[i];
    i = e + 1;
  }
  return std::nullopt;
}

}  // namespace detail

/// First reduction at or after search_start: one eigenstate's population stays
/// above 1 - epsilon at every sample of a window of length tau.
inline std::optional<ReductionEvent> detect_reduction(const PopulationTrace& trace,
                                                      const DetectorConfig& config,
                                                      double search_start = 0.0) {
  detail::check_resolution(trace.times, config);
  const double threshold = 1.0 - config.epsilon;
  std::optional<ReductionEvent> best;
  for (Eigenstate e : {Eigenstate::plus, Eigenstate::minus}) {
    const auto pop = trace.population(e);
    const auto t = detail::first_window(trace.times, search_start, config.tau,
                                        [&](std::size_t i) { return pop[i] > threshold; });
    if (t && (!best || *t < best->t_r)) best = ReductionEvent{e, *t};
  }
  return best;
}

inline std::optional<ReductionEvent> detect_reduction(const TrajectoryRecord& record,
                                                      const DetectorConfig& config,
                                                      double search_start = 0.0) {
  return detect_reduction(PopulationTrace::from_record(record), config, search_start);
}

/// First delocalization after `reduction`: the reduced eigenstate's population
/// stays below 1 - epsilon at every sample of a window of length tau.
inline std::optional<DelocalizationEvent> detect_delocalization(const PopulationTrace& trace,
                                                                const ReductionEvent& reduction,
                                                                const DetectorConfig& config) {
  detail::check_resolution(trace.times, config);
  const double threshold = 1.0 - config.epsilon;
  const auto pop = trace.population(reduction.eigenstate);
  // Inside [t_r, t_r + tau] the population is above threshold, so searching from
  // the end of the reduction window is equivalent to searching from t_r.
  const auto t = detail::first_window(trace.times, reduction.t_r + config.tau, config.tau,
                                      [&](std::size_t i) { return pop[i] < threshold; });
  if (!t) return std::nullopt;
  return DelocalizationEvent{reduction.eigenstate, *t};
}

inline std::optional<DelocalizationEvent> detect_delocalization(const TrajectoryRecord& record,
                                                                const ReductionEvent& reduction,
                                                                const DetectorConfig& config) {
  return detect_delocalization(PopulationTrace::from_record(record), reduction, config);
}

/// Alternating reductions and delocalizations over the whole trace.
///
/// A delocalization search starts where the reduction window ended; the next
/// reduction search starts at the delocalization time itself.
inline std::vector<TrajectoryEvent> event_history(const PopulationTrace& trace,
                                                  const DetectorConfig& config) {
  std::vector<TrajectoryEvent> events;
  double start = 0.0;
  while (true) {
    const auto red = detect_reduction(trace, config, start);
    if (!red) break;
    events.emplace_back(*red);
    const auto deloc = detect_delocalization(trace, *red, config);
    if (!deloc) break;
    events.emplace_back(*deloc);
    start = deloc->t_d;
  }
  return events;
}

inline std::vector<TrajectoryEvent> event_history(const TrajectoryRecord& record,
                                                  const DetectorConfig& config) {
  return event_history(PopulationTrace::from_record(record), config);
}

}  // namespace collapse
