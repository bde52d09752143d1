#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "collapse/analytic.hpp"
#include "collapse/config.hpp"
#include "collapse/ensemble.hpp"

namespace collapse {

struct CheckResult {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
  nlohmann::json details = nlohmann::json::object();
};

struct ValidationReport {
  std::vector<CheckResult> checks;

  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
  }
};

inline constexpr double oracle_tolerance = 1e-8;
inline constexpr double continuity_tolerance = 1e-4;

/// Largest |closed form - RK4| over x, y, z on the reference grid.
inline double oracle_gap(const ModelParams& p, const DensityParams& init, double t_end, double dt) {
  const auto every = static_cast<std::size_t>(std::max(1.0, std::round(1e-3 / dt)));
  double gap = 0.0;
  for (const auto& s : integrate_density_reference(p, init, t_end, dt, every)) {
    const DensityParams c = solve_density(p, init, s.t);
    gap = std::max({gap, std::abs(c.x - s.rho.x), std::abs(c.y - s.rho.y), std::abs(c.z - s.rho.z)});
  }
  return gap;
}

/// Closed form just off the critical point against the critical branch.
inline double critical_continuity_gap(double omega, const DensityParams& init, double t_end) {
  double gap = 0.0;
  const ModelParams crit{omega, 2.0 * omega};
  for (double rel : {-1e-6, 1e-6}) {
    const ModelParams p{omega, 2.0 * omega * (1.0 + rel)};
    for (int k = 0; k <= 200; ++k) {
      const double t = t_end * k / 200.0;
      const DensityParams a = solve_density(p, init, t);
      const DensityParams b = solve_density(crit, init, t);
      gap = std::max({gap, std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(a.z - b.z)});
    }
  }
  return gap;
}

/// Weak convergence, martingale and closed-form-vs-ODE checks for one configuration.
///
/// The oracle runs one damping regime each around the configured omega; the
/// stochastic checks use the configured gamma, ensemble size and seed.
inline ValidationReport run_validation(const RunConfig& cfg) {
  ValidationReport report;
  const EnsembleConfig& base = cfg.ensemble;
  const double omega = base.params.omega;
  const DensityParams rho0 = to_density_params(base.init);

  {
    const std::vector<std::pair<std::string, double>> regimes = {
        {"over_damped", 5.0 * omega}, {"critically_damped", 2.0 * omega}, {"under_damped", 0.5 * omega}};
    double worst = 0.0;
    nlohmann::json per = nlohmann::json::object();
    for (const auto& [name, gamma] : regimes) {
      const double gap = oracle_gap({omega, gamma}, rho0, base.horizon, cfg.validate.ode_dt);
      per[name] = {{"gamma", gamma}, {"max_abs_diff", gap}};
      worst = std::max(worst, gap);
    }
    report.checks.push_back({"analytic_vs_ode", worst, oracle_tolerance, worst <= oracle_tolerance, per});
    const double cont = critical_continuity_gap(omega, rho0, base.horizon);
    report.checks.push_back({"critical_continuity", cont, continuity_tolerance, cont <= continuity_tolerance,
                             {{"relative_offsets", {-1e-6, 1e-6}}}});
  }

  const double n = static_cast<double>(base.n_trajectories);
  {
    EnsembleConfig ec = base;
    ec.stepper.corrupt_drift_sign = cfg.validate.corrupt_drift_sign;
    const auto w = weak_convergence_check(ec);
    // Binomial bound on the standard error of a mean of values in [0, 1].
    const double threshold = 4.0 * 0.5 / std::sqrt(n);
    report.checks.push_back({"weak_convergence", w.max_deviation, threshold, w.max_deviation <= threshold,
                             {{"time_of_max", w.time_of_max}, {"max_standard_error", w.max_standard_error}}});
  }
  {
    EnsembleConfig ec = base;
    ec.params.omega = 0.0;
    ec.horizon = cfg.validate.martingale_t_end;
    ec.stepper.corrupt_drift_sign = cfg.validate.corrupt_drift_sign;
    const auto series = detail::simulate_ensemble(ec, false).series;
    const double mean = series.mean_pop_plus.back();
    const double se = std::sqrt(series.var_pop_plus.back() / n);
    const double target = base.init.pop_plus();
    const double gap = std::abs(mean - target);
    report.checks.push_back({"martingale", gap, 4.0 * se, gap <= 4.0 * se,
                             {{"mean_pop_plus", mean}, {"expected", target}, {"standard_error", se},
                              {"t_end", ec.horizon}}});
  }
  return report;
}

inline nlohmann::json to_json(const ValidationReport& r) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"name", c.name}, {"value", c.value}, {"threshold", c.threshold}, {"pass", c.pass},
                      {"details", c.details}});
  }
  return {{"pass", r.all_pass()}, {"checks", checks}};
}

}  // namespace collapse
