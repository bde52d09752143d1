#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "collapse/ensemble.hpp"

using namespace collapse;

namespace {

EnsembleConfig small(double gamma, std::size_t n, double horizon = 2.0) {
  EnsembleConfig c;
  c.params = {1.0, gamma};
  c.n_trajectories = n;
  c.master_seed = 12345;
  c.horizon = horizon;
  return c;
}

void expect_same_series(const EnsembleSeries& a, const EnsembleSeries& b) {
  ASSERT_EQ(a.times.size(), b.times.size());
  for (std::size_t i = 0; i < a.times.size(); ++i) {
    ASSERT_EQ(a.mean_pop_plus[i], b.mean_pop_plus[i]);
    ASSERT_EQ(a.var_pop_plus[i], b.var_pop_plus[i]);
    ASSERT_EQ(a.mean_re[i], b.mean_re[i]);
    ASSERT_EQ(a.mean_im[i], b.mean_im[i]);
    ASSERT_EQ(a.mean_abs[i], b.mean_abs[i]);
  }
}

}  // namespace

TEST(RunEnsemble, DeterministicAcrossWorkerCounts) {
  auto cfg = small(60.0, 300);
  cfg.workers = 1;
  const auto one = run_ensemble(cfg);
  for (std::size_t w : {4u, 16u}) {
    cfg.workers = w;
    const auto many = run_ensemble(cfg);
    EXPECT_EQ(one.stats, many.stats) << w;
    expect_same_series(one.series, many.series);
    ASSERT_EQ(one.outcomes.size(), many.outcomes.size());
    for (std::size_t i = 0; i < one.outcomes.size(); ++i) {
      ASSERT_EQ(many.outcomes[i].index, i);
      ASSERT_EQ(one.outcomes[i].reduction.has_value(), many.outcomes[i].reduction.has_value());
      if (one.outcomes[i].reduction) ASSERT_EQ(one.outcomes[i].reduction->t_r, many.outcomes[i].reduction->t_r);
    }
  }
}

TEST(RunEnsemble, CountsAreConsistent) {
  const auto r = run_ensemble(small(20.0, 200));
  const auto& s = r.stats;
  EXPECT_EQ(s.n_total, 200u);
  EXPECT_EQ(s.n_reduced_plus + s.n_reduced_minus, s.n_reduced_total);
  EXPECT_LE(s.n_reduced_total, s.n_total);
  EXPECT_LE(s.n_delocalized, s.n_reduced_total);
  std::size_t reduced = 0;
  for (const auto& o : r.outcomes) {
    if (o.reduction) ++reduced;
    if (o.delocalization) {
      ASSERT_TRUE(o.reduction);
      EXPECT_GT(o.delocalization->t_d, o.reduction->t_r);
      EXPECT_EQ(o.delocalization->from_eigenstate, o.reduction->eigenstate);
    }
  }
  EXPECT_EQ(reduced, s.n_reduced_total);
  if (s.n_reduced_total > 0) EXPECT_NEAR(s.prob_plus_given_reduced + s.prob_minus_given_reduced, 1.0, 1e-15);
}

TEST(RunEnsemble, NoCouplingNeverReduces) {
  const auto r = run_ensemble(small(0.0, 64, 2.0 * std::numbers::pi));
  EXPECT_EQ(r.stats.n_reduced_total, 0u);
  EXPECT_EQ(r.stats.reduced_fraction, 0.0);
  EXPECT_EQ(r.stats.mean_t_r, 0.0);
}

TEST(RunEnsemble, StrongCouplingReducesEverything) {
  // Reduction times have a long tail, so use the full 2 pi interval.
  const auto r = run_ensemble(small(100.0, 200, 2.0 * std::numbers::pi));
  EXPECT_GE(r.stats.reduced_fraction, 0.97);
  EXPECT_LT(r.stats.mean_t_r, 1.5);
}

TEST(RunEnsemble, TrajectoryErrorsCarryIndex) {
  auto cfg = small(5.0, 10);
  cfg.sample_stride = 2000;  // 0.2 s spacing, coarser than tau / 10
  try {
    run_ensemble(cfg);
    FAIL() << "expected TrajectoryError";
  } catch (const TrajectoryError& e) {
    EXPECT_EQ(e.index(), 0u);
    EXPECT_NE(std::string(e.what()).find("window unresolvable"), std::string::npos);
  }
}

TEST(RunEnsemble, RejectsInvalidConfig) {
  auto cfg = small(5.0, 0);
  EXPECT_THROW(run_ensemble(cfg), DomainError);
  cfg = small(5.0, 10, 1.0);  // shorter than tau
  EXPECT_THROW(run_ensemble(cfg), DomainError);
}

TEST(RunBlocks, MergesInOrderAndRethrowsLowestFailure) {
  std::vector<std::size_t> order;
  detail::run_blocks(
      1000, 64, 8, [](std::size_t b, std::size_t) { return b; }, [&](std::size_t b) { order.push_back(b); });
  ASSERT_EQ(order.size(), 16u);
  for (std::size_t i = 0; i < order.size(); ++i) EXPECT_EQ(order[i], i * 64);

  auto failing = [](std::size_t b, std::size_t) -> std::size_t {
    if (b >= 128) throw std::runtime_error("block " + std::to_string(b / 64));
    return b;
  };
  try {
    detail::run_blocks(1000, 64, 1, failing, [](std::size_t) {});
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "block 2");
  }
}

TEST(Summarize, MeanAndUnbiasedStd) {
  std::vector<TrajectoryOutcome> o(5);
  for (std::size_t i = 0; i < 5; ++i) o[i].index = i;
  o[0].reduction = ReductionEvent{Eigenstate::plus, 1.0};
  o[1].reduction = ReductionEvent{Eigenstate::minus, 2.0};
  o[3].reduction = ReductionEvent{Eigenstate::plus, 3.0};
  o[3].delocalization = DelocalizationEvent{Eigenstate::plus, 4.0};
  const auto s = summarize(o);
  EXPECT_EQ(s.n_reduced_total, 3u);
  EXPECT_EQ(s.n_reduced_plus, 2u);
  EXPECT_DOUBLE_EQ(s.mean_t_r, 2.0);
  EXPECT_DOUBLE_EQ(s.std_t_r, 1.0);
  EXPECT_DOUBLE_EQ(s.reduced_fraction, 0.6);
  EXPECT_DOUBLE_EQ(s.prob_plus_given_reduced, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.delocalized_fraction, 1.0 / 3.0);

  o.resize(1);
  const auto single = summarize(o);
  EXPECT_EQ(single.std_t_r, 0.0);
  EXPECT_EQ(summarize({}).n_total, 0u);
}

TEST(Martingale, AbsorbingEigenstate) {
  const auto m = martingale_check(100.0, SpinState::plus(), 64, 0.2, 1);
  EXPECT_EQ(m.mean_pop, 1.0);
  EXPECT_EQ(m.standard_error, 0.0);
}

TEST(Martingale, MeanPopulationConserved) {
  for (double g : {5.0, 100.0}) {
    const auto m = martingale_check(g, reference_initial_state(), 1000, 0.5, 77);
    EXPECT_LE(std::abs(m.mean_pop - 0.75), 4.0 * m.standard_error) << g;
    EXPECT_GT(m.standard_error, 0.0);
  }
}

TEST(WeakConvergence, SmallEnsembleWithinBand) {
  auto cfg = small(5.0, 1000, 2.0 * std::numbers::pi);
  const auto w = weak_convergence_check(cfg);
  EXPECT_LE(w.max_deviation, 4.0 * 0.5 / std::sqrt(1000.0));
  EXPECT_GT(w.max_standard_error, 0.0);
  cfg.params.omega = 0.0;
  EXPECT_THROW(weak_convergence_check(cfg), DomainError);
}

TEST(WeakConvergence, HalvingCoarseStepStaysInsideNoise) {
  auto a = small(5.0, 500, 2.0 * std::numbers::pi);
  auto b = a;
  b.schedule.coarse_dt = 5e-5;
  b.sample_stride = 20;
  const auto sa = detail::simulate_ensemble(a, false).series;
  const auto sb = detail::simulate_ensemble(b, false).series;
  ASSERT_EQ(sa.times.size(), sb.times.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < sa.times.size(); ++i) {
    ASSERT_NEAR(sa.times[i], sb.times[i], 1e-9);
    worst = std::max(worst, std::abs(sa.mean_pop_plus[i] - sb.mean_pop_plus[i]));
  }
  EXPECT_LE(worst, 4.0 * 0.5 * std::sqrt(2.0 / 500.0));
}

TEST(Coherence, TriangleInequalityAndAnalyticMean) {
  auto cfg = small(2.0, 400, 2.0);
  const auto c = coherence_statistics(cfg);
  ASSERT_EQ(c.sample_times.size(), c.mean_abs.size());
  const DensityParams rho0 = to_density_params(cfg.init);
  for (std::size_t i = 0; i < c.sample_times.size(); ++i) {
    EXPECT_GE(c.mean_abs[i] + 1e-15, std::hypot(c.mean_re[i], c.mean_im[i]));
    const DensityParams d = solve_density(cfg.params, rho0, c.sample_times[i]);
    // |coherence| <= 1/2, so 4 standard errors are at most 4 * 0.5 / sqrt(n).
    EXPECT_NEAR(c.mean_re[i], d.y, 0.1);
    EXPECT_NEAR(c.mean_im[i], d.z, 0.1);
  }
}

TEST(Sweep, DerivedSeedsAndCurve) {
  EXPECT_NE(sweep_seed(1, 0), sweep_seed(1, 1));
  EXPECT_NE(sweep_seed(1, 0), sweep_seed(2, 0));
  auto base = small(0.0, 64, 2.0 * std::numbers::pi);
  const auto curve = reduction_time_curve(base, {0.0, 80.0});
  ASSERT_EQ(curve.size(), 2u);
  EXPECT_EQ(curve[0].seed, sweep_seed(base.master_seed, 0));
  EXPECT_EQ(curve[0].stats.n_reduced_total, 0u);
  EXPECT_GE(curve[1].stats.reduced_fraction, 0.95);
  EXPECT_THROW(reduction_time_curve(base, {-1.0}), DomainError);
}
