#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <thread>
#include <vector>

#include "collapse/analytic.hpp"
#include "collapse/error.hpp"
#include "collapse/events.hpp"
#include "collapse/noise.hpp"
#include "collapse/sde.hpp"
#include "collapse/spin.hpp"

namespace collapse {

struct EnsembleConfig {
  ModelParams params{1.0, 100.0};
  SpinState init = reference_initial_state();
  std::size_t n_trajectories = 10000;
  std::uint64_t master_seed = 1;
  StepSchedule schedule = StepSchedule::desk();
  double horizon = 2.0 * std::numbers::pi;
  DetectorConfig detector{};
  std::size_t sample_stride = 10;
  /// Concurrent workers; 0 means one per hardware thread. Never affects results.
  std::size_t workers = 1;
  StepperOptions stepper{};

  void validate(bool needs_detector = true) const {
    params.validate();
    schedule.validate();
    if (n_trajectories < 1) throw DomainError("n_trajectories must be at least 1");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw DomainError("horizon must be positive");
    if (sample_stride < 1) throw DomainError("sample_stride must be at least 1");
    if (needs_detector) {
      detector.validate();
      if (horizon < detector.tau) throw DomainError("horizon must be at least detector tau");
    }
  }
};

struct EnsembleStats {
  std::size_t n_total = 0;
  std::size_t n_reduced_plus = 0;
  std::size_t n_reduced_minus = 0;
  std::size_t n_reduced_total = 0;
  /// Over reduced trajectories only; std uses the n - 1 estimator (0 below two samples).
  double mean_t_r = 0.0;
  double std_t_r = 0.0;
  std::size_t n_delocalized = 0;
  double reduced_fraction = 0.0;
  /// Relative to n_reduced_total; both 0 when nothing reduced.
  double prob_plus_given_reduced = 0.0;
  double prob_minus_given_reduced = 0.0;
  /// n_delocalized / n_reduced_total.
  double delocalized_fraction = 0.0;

  bool operator==(const EnsembleStats&) const = default;
};

struct TrajectoryOutcome {
  std::size_t index = 0;
  std::optional<ReductionEvent> reduction;
  std::optional<DelocalizationEvent> delocalization;
};

/// Ensemble means on the shared sample grid.
struct EnsembleSeries {
  std::vector<double> times;
  std::vector<double> mean_pop_plus;
  /// Sample variance of |alpha|^2 across trajectories.
  std::vector<double> var_pop_plus;
  std::vector<double> mean_re;
  std::vector<double> mean_im;
  std::vector<double> mean_abs;
  std::size_t n = 0;
};

/// Mean of <+|psi><psi|-> and of its modulus.
struct CoherenceSeries {
  std::vector<double> sample_times;
  std::vector<double> mean_re;
  std::vector<double> mean_im;
  std::vector<double> mean_abs;
};

struct EnsembleResult {
  EnsembleStats stats;
  std::vector<TrajectoryOutcome> outcomes;
  EnsembleSeries series;
};

namespace detail {

inline std::size_t resolve_workers(std::size_t requested) {
  if (requested > 0) return requested;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Runs make_block over fixed index blocks on a worker pool and feeds the results
/// to merge strictly in block order, so floating-point sums do not depend on the
/// number of workers or on scheduling.
template <class MakeBlock, class Merge>
void run_blocks(std::size_t n, std::size_t block_size, std::size_t workers, MakeBlock&& make_block,
                Merge&& merge) {
  using Block = decltype(make_block(std::size_t{}, std::size_t{}));
  const std::size_t n_blocks = (n + block_size - 1) / block_size;
  workers = std::min(resolve_workers(workers), n_blocks);

  std::atomic<std::size_t> next_block{0};
  std::atomic<bool> stop{false};
  std::mutex mutex;
  std::map<std::size_t, Block> pending;
  std::size_t next_merge = 0;
  std::map<std::size_t, std::exception_ptr> failures;

  auto work = [&] {
    while (!stop.load(std::memory_order_relaxed)) {
      const std::size_t b = next_block.fetch_add(1);
      if (b >= n_blocks) return;
      try {
        Block block = make_block(b * block_size, std::min(n, (b + 1) * block_size));
        std::lock_guard lock(mutex);
        pending.emplace(b, std::move(block));
        for (auto it = pending.find(next_merge); it != pending.end(); it = pending.find(next_merge)) {
          merge(std::move(it->second));
          pending.erase(it);
          ++next_merge;
        }
      } catch (...) {
        std::lock_guard lock(mutex);
        failures.emplace(b, std::current_exception());
        stop = true;
      }
    }
  };

  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (!failures.empty()) std::rethrow_exception(failures.begin()->second);
}

struct SeriesSums {
  std::vector<double> times;
  std::vector<double> pop, pop2, re, im, abs;

  void add(const TrajectoryRecord& record) {
    const auto samples = record.samples();
    if (times.empty()) {
      times.assign(record.times().begin(), record.times().end());
      pop.assign(times.size(), 0.0);
      pop2 = re = im = abs = pop;
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const double p = samples[i].pop_plus();
      const complex c = coherence(samples[i]);
      pop[i] += p;
      pop2[i] += p * p;
      re[i] += c.real();
      im[i] += c.imag();
      abs[i] += std::abs(c);
    }
  }

  void merge(SeriesSums&& other) {
    if (other.times.empty()) return;
    if (times.empty()) {
      *this = std::move(other);
      return;
    }
    for (std::size_t i = 0; i < pop.size(); ++i) {
      pop[i] += other.pop[i];
      pop2[i] += other.pop2[i];
      re[i] += other.re[i];
      im[i] += other.im[i];
      abs[i] += other.abs[i];
    }
  }

  EnsembleSeries finish(std::size_t n) const {
    EnsembleSeries s;
    s.n = n;
    s.times = times;
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double m = pop[i] * inv;
      s.mean_pop_plus.push_back(m);
      const double var = n > 1 ? (pop2[i] - static_cast<double>(n) * m * m) / static_cast<double>(n - 1) : 0.0;
      s.var_pop_plus.push_back(std::max(0.0, var));
      s.mean_re.push_back(re[i] * inv);
      s.mean_im.push_back(im[i] * inv);
      s.mean_abs.push_back(abs[i] * inv);
    }
    return s;
  }
};

inline constexpr std::size_t ensemble_block_size = 64;

inline EnsembleResult simulate_ensemble(const EnsembleConfig& config, bool detect) {
  config.validate(detect);

  struct Block {
    SeriesSums sums;
    std::vector<TrajectoryOutcome> outcomes;
  };

  auto make_block = [&](std::size_t begin, std::size_t end) {
    Block block;
    block.outcomes.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      try {
        const TrajectoryRecord record =
            simulate_trajectory(config.params, config.init, config.schedule, config.horizon,
                                NoiseStream(config.master_seed, i), config.sample_stride, config.stepper);
        block.sums.add(record);
        TrajectoryOutcome outcome{i, std::nullopt, std::nullopt};
        if (detect) {
          const auto trace = PopulationTrace::from_record(record);
          outcome.reduction = detect_reduction(trace, config.detector);
          if (outcome.reduction) {
            outcome.delocalization = detect_delocalization(trace, *outcome.reduction, config.detector);
          }
        }
        block.outcomes.push_back(outcome);
      } catch (const std::exception& e) {
        throw TrajectoryError(i, e.what());
      }
    }
    return block;
  };

  SeriesSums total;
  EnsembleResult result;
  result.outcomes.reserve(config.n_trajectories);
  run_blocks(config.n_trajectories, ensemble_block_size, config.workers, make_block, [&](Block&& b) {
    total.merge(std::move(b.sums));
    result.outcomes.insert(result.outcomes.end(), b.outcomes.begin(), b.outcomes.end());
  });
  result.series = total.finish(config.n_trajectories);
  return result;
}

}  // namespace detail

/// Summary statistics over per-trajectory outcomes, accumulated in index order.
inline EnsembleStats summarize(const std::vector<TrajectoryOutcome>& outcomes) {
  EnsembleStats s;
  s.n_total = outcomes.size();
  double sum = 0.0;
  for (const auto& o : outcomes) {
    if (!o.reduction) continue;
    ++s.n_reduced_total;
    if (o.reduction->eigenstate == Eigenstate::plus) {
      ++s.n_reduced_plus;
    } else {
      ++s.n_reduced_minus;
    }
    if (o.delocalization) ++s.n_delocalized;
    sum += o.reduction->t_r;
  }
  if (s.n_total > 0) s.reduced_fraction = static_cast<double>(s.n_reduced_total) / static_cast<double>(s.n_total);
  if (s.n_reduced_total > 0) {
    const double nr = static_cast<double>(s.n_reduced_total);
    s.mean_t_r = sum / nr;
    s.prob_plus_given_reduced = static_cast<double>(s.n_reduced_plus) / nr;
    s.prob_minus_given_reduced = static_cast<double>(s.n_reduced_minus) / nr;
    s.delocalized_fraction = static_cast<double>(s.n_delocalized) / nr;
  }
  if (s.n_reduced_total > 1) {
    double ss = 0.0;
    for (const auto& o : outcomes) {
      if (o.reduction) ss += (o.reduction->t_r - s.mean_t_r) * (o.reduction->t_r - s.mean_t_r);
    }
    s.std_t_r = std::sqrt(ss / static_cast<double>(s.n_reduced_total - 1));
  }
  return s;
}

/// Simulates config.n_trajectories realizations on streams (master_seed, i),
/// detects the first reduction of each and a later delocalization, and aggregates.
inline EnsembleResult run_ensemble(const EnsembleConfig& config) {
  EnsembleResult result = detail::simulate_ensemble(config, true);
  result.stats = summarize(result.outcomes);
  return result;
}

/// Seed of the i-th member of a parameter sweep.
inline std::uint64_t sweep_seed(std::uint64_t master_seed, std::size_t index) {
  return mix_seed(master_seed, 0x5745455000000000ULL + index);
}

struct CurvePoint {
  double gamma = 0.0;
  std::uint64_t seed = 0;
  EnsembleStats stats;
};

/// One ensemble per gamma, each on its own derived seed.
inline std::vector<CurvePoint> reduction_time_curve(const EnsembleConfig& base,
                                                    const std::vector<double>& gammas) {
  std::vector<CurvePoint> out;
  out.reserve(gammas.size());
  for (std::size_t k = 0; k < gammas.size(); ++k) {
    if (!(gammas[k] >= 0.0)) throw DomainError("gamma values must be non-negative");
    EnsembleConfig cfg = base;
    cfg.params.gamma = gammas[k];
    cfg.master_seed = sweep_seed(base.master_seed, k);
    out.push_back({gammas[k], cfg.master_seed, run_ensemble(cfg).stats});
  }
  return out;
}

inline CoherenceSeries coherence_statistics(const EnsembleConfig& config) {
  auto series = detail::simulate_ensemble(config, false).series;
  return {std::move(series.times), std::move(series.mean_re), std::move(series.mean_im),
          std::move(series.mean_abs)};
}

struct MartingaleResult {
  double mean_pop = 0.0;
  double standard_error = 0.0;
};

/// Mean and standard error of |alpha|^2 at t_end with the Hamiltonian switched off.
inline MartingaleResult martingale_check(double gamma, const SpinState& init, std::size_t n,
                                         double t_end, std::uint64_t seed,
                                         const StepSchedule& schedule = StepSchedule::desk(),
                                         std::size_t workers = 1) {
  EnsembleConfig cfg;
  cfg.params = {0.0, gamma};
  cfg.init = init;
  cfg.n_trajectories = n;
  cfg.master_seed = seed;
  cfg.schedule = schedule;
  cfg.horizon = t_end;
  cfg.sample_stride = default_sample_stride(schedule);
  cfg.workers = workers;
  const auto series = detail::simulate_ensemble(cfg, false).series;
  const double var = series.var_pop_plus.back();
  return {series.mean_pop_plus.back(), std::sqrt(var / static_cast<double>(n))};
}

struct WeakConvergenceResult {
  /// max over the sample grid of |mean |alpha_t|^2 - x(t)|
  double max_deviation = 0.0;
  double time_of_max = 0.0;
  /// Largest standard error of the ensemble mean on the grid.
  double max_standard_error = 0.0;
};

inline WeakConvergenceResult weak_convergence_from_series(const EnsembleSeries& series,
                                                          const ModelParams& params,
                                                          const SpinState& init) {
  WeakConvergenceResult r;
  const DensityParams rho0 = to_density_params(init);
  for (std::size_t i = 0; i < series.times.size(); ++i) {
    const double x = solve_density(params, rho0, series.times[i]).x;
    const double dev = std::abs(series.mean_pop_plus[i] - x);
    if (dev > r.max_deviation) {
      r.max_deviation = dev;
      r.time_of_max = series.times[i];
    }
    r.max_standard_error = std::max(
        r.max_standard_error, std::sqrt(series.var_pop_plus[i] / static_cast<double>(series.n)));
  }
  return r;
}

/// Sup-norm distance between the ensemble mean of |alpha_t|^2 and the closed-form x(t).
inline WeakConvergenceResult weak_convergence_check(const EnsembleConfig& config) {
  if (!(config.params.omega > 0.0)) throw DomainError("weak convergence check needs omega > 0");
  const auto series = detail::simulate_ensemble(config, false).series;
  return weak_convergence_from_series(series, config.params, config.init);
}

}  // namespace collapse
