#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "collapse/error.hpp"
#include "collapse/noise.hpp"
#include "collapse/spin.hpp"

namespace collapse {

/// Two-phase time grid: fine_dt up to switch_time, coarse_dt afterwards.
struct StepSchedule {
  double fine_dt = 1e-5;
  double switch_time = 0.1;
  double coarse_dt = 1e-4;

  /// Default for desk-scale runs.
  static constexpr StepSchedule desk() { return {1e-5, 0.1, 1e-4}; }
  /// The step sizes of the original study, about 100 times more costly than desk().
  static constexpr StepSchedule paper() { return {1e-7, 0.1, 1e-3}; }
  static constexpr StepSchedule uniform(double dt) { return {dt, 0.0, dt}; }

  std::uint64_t fine_steps() const { return static_cast<std::uint64_t>(std::llround(switch_time / fine_dt)); }
  std::uint64_t fine_per_coarse() const { return static_cast<std::uint64_t>(std::llround(coarse_dt / fine_dt)); }

  void validate() const {
    if (!(fine_dt > 0.0) || !std::isfinite(fine_dt)) throw DomainError("fine_dt must be positive");
    if (!(coarse_dt >= fine_dt) || !std::isfinite(coarse_dt)) {
      throw DomainError("coarse_dt must be finite and >= fine_dt");
    }
    if (!(switch_time >= 0.0) || !std::isfinite(switch_time)) {
      throw DomainError("switch_time must be finite and non-negative");
    }
    auto is_multiple = [](double value, double unit) {
      const double k = std::round(value / unit);
      return std::abs(value - k * unit) <= 1e-9 * std::max(value, unit);
    };
    if (!is_multiple(switch_time, fine_dt)) {
      throw DomainError("switch_time must be an integer multiple of fine_dt");
    }
    if (!is_multiple(coarse_dt, fine_dt)) {
      throw DomainError("coarse_dt must be an integer multiple of fine_dt");
    }
  }
};

/// Integrator steps (of coarse_dt) per stored sample giving roughly 1 ms resolution.
inline std::size_t default_sample_stride(const StepSchedule& s) {
  return static_cast<std::size_t>(std::max(1.0, std::round(1e-3 / s.coarse_dt)));
}

struct StepperOptions {
  /// Project back onto the unit sphere after each step.
  bool renormalize = true;
  /// Negative-control hook: flips the sign of the collapse drift.
  bool corrupt_drift_sign = false;
};

/// Stored samples of one realization.
///
/// Times are strictly increasing from 0; each stored state is normalized. With a
/// two-phase schedule the sample spacing is sample_stride * coarse_dt in both phases.
class TrajectoryRecord {
 public:
  TrajectoryRecord(ModelParams params, std::vector<double> times, std::vector<SpinState> samples,
                   std::uint64_t seed = 0, std::uint64_t stream_index = 0,
                   std::size_t sample_stride = 1)
      : params_(params),
        times_(std::move(times)),
        samples_(std::move(samples)),
        seed_(seed),
        stream_index_(stream_index),
        sample_stride_(sample_stride) {
    if (times_.empty() || times_.size() != samples_.size()) {
      throw DomainError("trajectory record needs matching, non-empty times and samples");
    }
    if (times_.front() != 0.0) throw DomainError("trajectory record must start at t = 0");
    for (std::size_t i = 1; i < times_.size(); ++i) {
      if (!(times_[i] > times_[i - 1])) throw DomainError("sample times must be strictly increasing");
    }
  }

  const ModelParams& params() const noexcept { return params_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_index() const noexcept { return stream_index_; }
  std::size_t sample_stride() const noexcept { return sample_stride_; }
  std::span<const double> times() const noexcept { return times_; }
  std::span<const SpinState> samples() const noexcept { return samples_; }
  std::size_t size() const noexcept { return times_.size(); }
  double horizon() const noexcept { return times_.back(); }

  /// Largest |1 - norm| seen before renormalization (0 when not tracked).
  double max_norm_defect() const noexcept { return max_norm_defect_; }
  void set_max_norm_defect(double d) noexcept { max_norm_defect_ = d; }

 private:
  ModelParams params_;
  std::vector<double> times_;
  std::vector<SpinState> samples_;
  std::uint64_t seed_;
  std::uint64_t stream_index_;
  std::size_t sample_stride_;
  double max_norm_defect_ = 0.0;
};

namespace detail {

inline constexpr double degenerate_norm = 1e-6;

struct Amplitudes {
  complex alpha;
  complex beta;
};

/// Unnormalized explicit Euler-Maruyama update in component form.
inline Amplitudes euler_update(const complex& a, const complex& b, double omega, double gamma,
                               double sqrt_gamma, double dW, double dt,
                               bool corrupt_drift_sign = false) noexcept {
  const double ca = 1.0 - abs2(a);
  const double cb = 1.0 - abs2(b);
  const double drift = corrupt_drift_sign ? 2.0 * gamma : -2.0 * gamma;
  // -i * omega * z = omega * (Im z, -Re z)
  const complex rot_a(omega * b.imag(), -omega * b.real());
  const complex rot_b(omega * a.imag(), -omega * a.real());
  const double noise = 2.0 * sqrt_gamma * dW;
  return {a + (rot_a + drift * ca * ca * a) * dt + noise * ca * a,
          b + (rot_b + drift * cb * cb * b) * dt - noise * cb * b};
}

}  // namespace detail

/// One Euler-Maruyama step of the collapse equation followed by renormalization.
///
///   d alpha = [-i w beta - 2 g alpha (1 - |alpha|^2)^2] dt + 2 sqrt(g) alpha (1 - |alpha|^2) dW
///   d beta  = [-i w alpha - 2 g beta (1 - |beta|^2)^2] dt - 2 sqrt(g) beta (1 - |beta|^2) dW
inline SpinState euler_step(const SpinState& state, const ModelParams& params, double dW, double dt) {
  const auto next = detail::euler_update(state.alpha(), state.beta(), params.omega, params.gamma,
                                         std::sqrt(params.gamma), dW, dt);
  const double norm = std::sqrt(abs2(next.alpha) + abs2(next.beta));
  if (!(norm >= detail::degenerate_norm)) throw DegenerateStepError(norm);
  return {next.alpha, next.beta};
}

/// Integrates one realization and hands every stored sample to `visit(t, state)`.
///
/// Samples are taken at t = 0, every sample_stride coarse steps (the equivalent
/// number of fine steps in the fine phase) and at the horizon. The last step of
/// each phase is shortened to land exactly on its end time. Returns the largest
/// pre-renormalization norm defect.
template <class Visitor>
double integrate_trajectory(const ModelParams& params, const SpinState& init,
                            const StepSchedule& schedule, double horizon, NoiseStream& stream,
                            std::size_t sample_stride, const StepperOptions& options,
                            Visitor&& visit) {
  params.validate();
  schedule.validate();
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw DomainError("horizon must be positive");
  if (sample_stride == 0) throw DomainError("sample_stride must be at least 1");

  const double omega = params.omega;
  const double gamma = params.gamma;
  const double sqrt_gamma = std::sqrt(gamma);
  complex a = init.alpha();
  complex b = init.beta();
  double max_defect = 0.0;
  bool last_sampled = true;
  visit(0.0, init);

  auto run_phase = [&](double t_begin, double t_stop, double dt, std::uint64_t every) {
    const double span = t_stop - t_begin;
    if (!(span > 0.0)) return;
    const double ratio = span / dt;
    auto n_full = static_cast<std::uint64_t>(std::floor(ratio + 1e-9));
    double tail = span - static_cast<double>(n_full) * dt;
    if (tail < 1e-9 * dt) tail = 0.0;
    const std::uint64_t n_steps = n_full + (tail > 0.0 ? 1 : 0);
    const double sqrt_dt = std::sqrt(dt);
    const double sqrt_tail = std::sqrt(tail);

    std::uint64_t until_sample = every;
    for (std::uint64_t k = 1; k <= n_steps; ++k) {
      const bool is_tail = k > n_full;
      const double h = is_tail ? tail : dt;
      const double dW = (is_tail ? sqrt_tail : sqrt_dt) * stream.standard_normal();
      const auto next = detail::euler_update(a, b, omega, gamma, sqrt_gamma, dW, h,
                                             options.corrupt_drift_sign);
      const double t = k == n_steps ? t_stop : t_begin + static_cast<double>(k) * dt;
      const double norm = std::sqrt(abs2(next.alpha) + abs2(next.beta));
      if (!(norm >= detail::degenerate_norm) || !std::isfinite(norm)) {
        throw DegenerateStepError(norm, t);
      }
      max_defect = std::max(max_defect, std::abs(norm - 1.0));
      if (options.renormalize) {
        const double inv = 1.0 / norm;
        a = next.alpha * inv;
        b = next.beta * inv;
      } else {
        a = next.alpha;
        b = next.beta;
      }
      if (!is_tail && --until_sample == 0) {
        until_sample = every;
        visit(t, SpinState(a, b));
        last_sampled = true;
      } else {
        last_sampled = false;
      }
    }
  };

  const std::uint64_t fine_every = sample_stride * schedule.fine_per_coarse();
  const double fine_end = std::min(schedule.switch_time, horizon);
  run_phase(0.0, fine_end, schedule.fine_dt, fine_every);
  if (horizon > schedule.switch_time) {
    run_phase(schedule.switch_time, horizon, schedule.coarse_dt, sample_stride);
  }
  if (!last_sampled) visit(horizon, SpinState(a, b));
  return max_defect;
}

/// Runs one realization and stores it.
inline TrajectoryRecord simulate_trajectory(const ModelParams& params, const SpinState& init,
                                            const StepSchedule& schedule, double horizon,
                                            NoiseStream stream, std::size_t sample_stride,
                                            const StepperOptions& options = {}) {
  std::vector<double> times;
  std::vector<SpinState> samples;
  const double expected = horizon / (static_cast<double>(sample_stride) * schedule.coarse_dt) + 2.0;
  if (expected > 0.0 && expected < 1e8) {
    times.reserve(static_cast<std::size_t>(expected));
    samples.reserve(static_cast<std::size_t>(expected));
  }
  const std::uint64_t seed = stream.seed();
  const std::uint64_t index = stream.stream_index();
  const double defect = integrate_trajectory(params, init, schedule, horizon, stream, sample_stride,
                                             options, [&](double t, const SpinState& s) {
                                               times.push_back(t);
                                               samples.push_back(s);
                                             });
  TrajectoryRecord record(params, std::move(times), std::move(samples), seed, index, sample_stride);
  record.set_max_norm_defect(defect);
  return record;
}

}  // namespace collapse
