#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "collapse/ensemble.hpp"

namespace collapse {

/// Invalid run configuration. The message starts with the offending field path.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

enum class Experiment { trajectory, ensemble, sweep, validate, analytic };

inline std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::trajectory: return "trajectory";
    case Experiment::ensemble: return "ensemble";
    case Experiment::sweep: return "sweep";
    case Experiment::validate: return "validate";
    case Experiment::analytic: return "analytic";
  }
  return "unknown";
}

inline std::optional<Experiment> parse_experiment(std::string_view s) {
  for (auto e : {Experiment::trajectory, Experiment::ensemble, Experiment::sweep,
                 Experiment::validate, Experiment::analytic}) {
    if (to_string(e) == s) return e;
  }
  return std::nullopt;
}

struct OutputOptions {
  std::filesystem::path directory = "out";
  bool csv = true;
  bool json = true;
  bool svg = true;
};

struct AnalyticOptions {
  double t_end = 2.0 * std::numbers::pi;
  /// Spacing of the closed-form table.
  double dt = 1e-3;
  std::optional<double> mass_g;
  std::optional<double> delta_x0_cm;
  std::optional<double> constituents;
};

struct ValidateOptions {
  /// RK4 step of the reference integration compared against the closed form.
  double ode_dt = 1e-6;
  double martingale_t_end = 0.5;
  /// Negative-control hook: flips the collapse drift sign in the stochastic runs.
  bool corrupt_drift_sign = false;
};

struct RunConfig {
  Experiment experiment = Experiment::ensemble;
  /// "desk", "paper" or "custom" (explicit step sizes).
  std::string schedule_preset = "desk";
  EnsembleConfig ensemble;
  /// Initial amplitudes as written; ensemble.init is their normalization.
  complex init_alpha = std::sqrt(0.75);
  complex init_beta = std::sqrt(0.25);
  std::vector<double> gammas = {5, 10, 20, 40, 60, 80, 100};
  AnalyticOptions analytic;
  ValidateOptions validate;
  OutputOptions output;
};

namespace detail {

using nlohmann::json;

class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(display(), "expected an object");
  }

  /// Rejects keys that were never looked up.
  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) throw ConfigError(child(key), "unknown key");
    }
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  std::optional<double> number(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_number()) throw ConfigError(child(key), "expected a number");
    const double d = v->get<double>();
    if (!std::isfinite(d)) throw ConfigError(child(key), "must be finite");
    return d;
  }

  std::optional<std::uint64_t> count(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<std::int64_t>() < 0)) {
      throw ConfigError(child(key), "expected a non-negative integer");
    }
    return v->get<std::uint64_t>();
  }

  std::optional<bool> boolean(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_boolean()) throw ConfigError(child(key), "expected true or false");
    return v->get<bool>();
  }

  std::optional<std::string> string(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) throw ConfigError(child(key), "expected a string");
    return v->get<std::string>();
  }

 private:
  std::string display() const { return path_.empty() ? "<root>" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline complex read_complex(const json& v, const std::string& path) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    return {v[0].get<double>(), v[1].get<double>()};
  }
  throw ConfigError(path, "expected a number or a [re, im] pair");
}

inline void require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw ConfigError(path, what);
}

}  // namespace detail

/// Parses and validates a JSON run configuration; absent keys take defaults.
///
/// `experiment` fixes the experiment kind when the document does not name one,
/// and must agree with it when it does.
inline RunConfig parse_config(std::string_view text, std::optional<Experiment> experiment = std::nullopt) {
  using detail::json;
  using detail::require;

  json doc;
  const bool blank = text.find_first_not_of(" \t\r\n") == std::string_view::npos;
  if (!blank) {
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError("<root>", std::string("malformed document: ") + e.what());
    }
  } else {
    doc = json::object();
  }

  RunConfig cfg;
  EnsembleConfig& ens = cfg.ensemble;
  detail::ObjectReader root(doc, "");

  if (auto e = root.string("experiment")) {
    auto parsed = parse_experiment(*e);
    require(parsed.has_value(), "experiment", "unknown experiment '" + *e + "'");
    require(!experiment || *experiment == *parsed, "experiment",
            "document names '" + *e + "' but '" + std::string(to_string(*experiment)) + "' was requested");
    cfg.experiment = *parsed;
  } else if (experiment) {
    cfg.experiment = *experiment;
  }

  if (const json* m = root.find("model")) {
    detail::ObjectReader r(*m, "model");
    if (auto v = r.number("omega")) {
      require(*v >= 0.0, "model.omega", "must be >= 0");
      ens.params.omega = *v;
    }
    if (auto v = r.number("gamma")) {
      require(*v >= 0.0, "model.gamma", "must be >= 0");
      ens.params.gamma = *v;
    }
    r.finish();
  }

  if (const json* s = root.find("initial_state")) {
    detail::ObjectReader r(*s, "initial_state");
    const json* a = r.find("alpha");
    const json* b = r.find("beta");
    r.finish();
    require(a && b, "initial_state", "needs both alpha and beta");
    const complex alpha = detail::read_complex(*a, "initial_state.alpha");
    const complex beta = detail::read_complex(*b, "initial_state.beta");
    cfg.init_alpha = alpha;
    cfg.init_beta = beta;
    try {
      ens.init = SpinState(alpha, beta);
    } catch (const DomainError& e) {
      throw ConfigError("initial_state", e.what());
    }
  }

  bool explicit_n = false;
  if (auto v = root.count("trajectories")) {
    require(*v >= 1, "trajectories", "must be >= 1");
    ens.n_trajectories = *v;
    explicit_n = true;
  }
  if (auto v = root.count("master_seed")) ens.master_seed = *v;
  if (auto v = root.count("workers")) ens.workers = *v;
  if (auto v = root.number("horizon")) {
    require(*v > 0.0, "horizon", "must be > 0");
    ens.horizon = *v;
  }

  if (const json* s = root.find("schedule")) {
    detail::ObjectReader r(*s, "schedule");
    if (auto p = r.string("preset")) {
      require(*p == "desk" || *p == "paper", "schedule.preset", "expected 'desk' or 'paper'");
      cfg.schedule_preset = *p;
    }
    ens.schedule = cfg.schedule_preset == "paper" ? StepSchedule::paper() : StepSchedule::desk();
    bool custom = false;
    if (auto v = r.number("fine_dt")) {
      require(*v > 0.0, "schedule.fine_dt", "must be > 0");
      ens.schedule.fine_dt = *v;
      custom = true;
    }
    if (auto v = r.number("switch_time")) {
      require(*v >= 0.0, "schedule.switch_time", "must be >= 0");
      ens.schedule.switch_time = *v;
      custom = true;
    }
    if (auto v = r.number("coarse_dt")) {
      require(*v > 0.0, "schedule.coarse_dt", "must be > 0");
      ens.schedule.coarse_dt = *v;
      custom = true;
    }
    r.finish();
    if (custom) cfg.schedule_preset = "custom";
    try {
      ens.schedule.validate();
    } catch (const DomainError& e) {
      throw ConfigError("schedule", e.what());
    }
  }
  if (cfg.schedule_preset == "paper" && !explicit_n) ens.n_trajectories = 100000;

  if (auto v = root.count("sample_stride")) {
    require(*v >= 1, "sample_stride", "must be >= 1");
    ens.sample_stride = *v;
  } else {
    ens.sample_stride = default_sample_stride(ens.schedule);
  }

  if (const json* d = root.find("detector")) {
    detail::ObjectReader r(*d, "detector");
    if (auto v = r.number("epsilon")) {
      require(*v > 0.0 && *v < 0.5, "detector.epsilon", "must lie in (0, 0.5)");
      ens.detector = DetectorConfig::with_epsilon(*v);
    }
    if (auto v = r.number("tau")) {
      require(*v > 0.0, "detector.tau", "must be > 0");
      ens.detector.tau = *v;
    }
    r.finish();
  }

  if (const json* s = root.find("sweep")) {
    detail::ObjectReader r(*s, "sweep");
    if (const json* g = r.find("gammas")) {
      require(g->is_array() && !g->empty(), "sweep.gammas", "expected a non-empty array of numbers");
      cfg.gammas.clear();
      for (const auto& x : *g) {
        require(x.is_number() && std::isfinite(x.get<double>()) && x.get<double>() >= 0.0,
                "sweep.gammas", "entries must be finite numbers >= 0");
        cfg.gammas.push_back(x.get<double>());
      }
    }
    r.finish();
  }

  if (const json* a = root.find("analytic")) {
    detail::ObjectReader r(*a, "analytic");
    if (auto v = r.number("t_end")) {
      require(*v >= 0.0, "analytic.t_end", "must be >= 0");
      cfg.analytic.t_end = *v;
    }
    if (auto v = r.number("dt")) {
      require(*v > 0.0, "analytic.dt", "must be > 0");
      cfg.analytic.dt = *v;
    }
    if (auto v = r.number("mass_g")) {
      require(*v > 0.0, "analytic.mass_g", "must be > 0");
      cfg.analytic.mass_g = *v;
    }
    if (auto v = r.number("delta_x0_cm")) {
      require(*v > 0.0, "analytic.delta_x0_cm", "must be > 0");
      cfg.analytic.delta_x0_cm = *v;
    }
    if (auto v = r.number("constituents")) {
      require(*v >= 1.0, "analytic.constituents", "must be >= 1");
      cfg.analytic.constituents = *v;
    }
    r.finish();
  }

  if (const json* v = root.find("validate")) {
    detail::ObjectReader r(*v, "validate");
    if (auto x = r.number("ode_dt")) {
      require(*x > 0.0, "validate.ode_dt", "must be > 0");
      cfg.validate.ode_dt = *x;
    }
    if (auto x = r.number("martingale_t_end")) {
      require(*x > 0.0, "validate.martingale_t_end", "must be > 0");
      cfg.validate.martingale_t_end = *x;
    }
    if (auto x = r.boolean("corrupt_drift_sign")) cfg.validate.corrupt_drift_sign = *x;
    r.finish();
  }

  if (const json* o = root.find("output")) {
    detail::ObjectReader r(*o, "output");
    if (auto d = r.string("directory")) {
      require(!d->empty(), "output.directory", "must not be empty");
      cfg.output.directory = *d;
    }
    if (auto b = r.boolean("csv")) cfg.output.csv = *b;
    if (auto b = r.boolean("json")) cfg.output.json = *b;
    if (auto b = r.boolean("svg")) cfg.output.svg = *b;
    r.finish();
  }

  root.finish();

  if (cfg.experiment == Experiment::ensemble || cfg.experiment == Experiment::sweep) {
    require(ens.horizon >= ens.detector.tau, "horizon", "must be at least detector.tau");
  }
  if (cfg.experiment == Experiment::analytic || cfg.experiment == Experiment::validate) {
    require(ens.params.omega > 0.0, "model.omega", "the closed-form solution needs omega > 0");
  }
  return cfg;
}

/// The fully resolved configuration as a document that parse_config accepts.
///
/// Worker count and output location are left out: they never change results.
inline nlohmann::json to_json(const RunConfig& cfg) {
  using nlohmann::json;
  const EnsembleConfig& e = cfg.ensemble;
  json schedule = json::object();
  if (cfg.schedule_preset == "custom") {
    schedule = {{"fine_dt", e.schedule.fine_dt},
                {"switch_time", e.schedule.switch_time},
                {"coarse_dt", e.schedule.coarse_dt}};
  } else {
    schedule = {{"preset", cfg.schedule_preset}};
  }
  json analytic = {{"t_end", cfg.analytic.t_end}, {"dt", cfg.analytic.dt}};
  if (cfg.analytic.mass_g) analytic["mass_g"] = *cfg.analytic.mass_g;
  if (cfg.analytic.delta_x0_cm) analytic["delta_x0_cm"] = *cfg.analytic.delta_x0_cm;
  if (cfg.analytic.constituents) analytic["constituents"] = *cfg.analytic.constituents;
  return {
      {"experiment", to_string(cfg.experiment)},
      {"model", {{"omega", e.params.omega}, {"gamma", e.params.gamma}}},
      {"initial_state",
       {{"alpha", {cfg.init_alpha.real(), cfg.init_alpha.imag()}},
        {"beta", {cfg.init_beta.real(), cfg.init_beta.imag()}}}},
      {"trajectories", e.n_trajectories},
      {"master_seed", e.master_seed},
      {"horizon", e.horizon},
      {"schedule", schedule},
      {"sample_stride", e.sample_stride},
      {"detector", {{"epsilon", e.detector.epsilon}, {"tau", e.detector.tau}}},
      {"sweep", {{"gammas", cfg.gammas}}},
      {"analytic", analytic},
      {"validate",
       {{"ode_dt", cfg.validate.ode_dt},
        {"martingale_t_end", cfg.validate.martingale_t_end},
        {"corrupt_drift_sign", cfg.validate.corrupt_drift_sign}}},
  };
}

}  // namespace collapse
