// Command-line driver: trajectory | ensemble | sweep | validate | analytic.

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "collapse/config.hpp"
#include "collapse/ensemble.hpp"
#include "collapse/events.hpp"
#include "collapse/report.hpp"
#include "collapse/svg.hpp"
#include "collapse/validate.hpp"

namespace {

using namespace collapse;
using nlohmann::json;
namespace fs = std::filesystem;

enum ExitCode : int { ok = 0, simulation_error = 1, config_error = 2, validation_failed = 3, io_error = 4 };

struct Overrides {
  std::string config_path;
  std::optional<double> gamma, omega, horizon;
  std::optional<std::uint64_t> n, seed, workers;
  std::optional<std::string> preset, out;
  bool corrupt_drift_sign = false;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON run configuration");
  cmd->add_option("--gamma", o.gamma, "collapse rate (1/s)");
  cmd->add_option("--omega", o.omega, "Rabi frequency (1/s)");
  cmd->add_option("--n", o.n, "number of trajectories");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--horizon", o.horizon, "simulated time (s)");
  cmd->add_option("--preset", o.preset, "step schedule preset")->check(CLI::IsMember({"desk", "paper"}));
  cmd->add_option("--workers", o.workers, "worker threads (0 = all cores)");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_flag("--corrupt-drift-sign", o.corrupt_drift_sign)->group("");
}

std::string read_text(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(path, "cannot open configuration");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

/// Loads the document and patches the flag values into it, so flags win.
RunConfig load_config(const Overrides& o, Experiment experiment) {
  json doc = json::object();
  if (!o.config_path.empty()) {
    const std::string text = read_text(o.config_path);
    if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
      try {
        doc = json::parse(text);
      } catch (const json::parse_error& e) {
        throw ConfigError("<root>", std::string("malformed document: ") + e.what());
      }
    }
    if (!doc.is_object()) throw ConfigError("<root>", "expected an object");
  }
  auto sub = [&](const char* key) -> json& {
    json& v = doc[key];
    if (v.is_null()) v = json::object();
    if (!v.is_object()) throw ConfigError(key, "expected an object");
    return v;
  };
  if (o.gamma) sub("model")["gamma"] = *o.gamma;
  if (o.omega) sub("model")["omega"] = *o.omega;
  if (o.n) doc["trajectories"] = *o.n;
  if (o.seed) doc["master_seed"] = *o.seed;
  if (o.horizon) doc["horizon"] = *o.horizon;
  if (o.workers) doc["workers"] = *o.workers;
  if (o.preset) doc["schedule"] = {{"preset", *o.preset}};
  if (o.out) sub("output")["directory"] = *o.out;
  if (o.corrupt_drift_sign) sub("validate")["corrupt_drift_sign"] = true;

  RunConfig cfg = parse_config(doc.dump(), experiment);
  if (const char* cap = std::getenv("COLLAPSE_MAX_WORKERS")) {
    const long limit = std::strtol(cap, nullptr, 10);
    if (limit > 0) {
      auto& w = cfg.ensemble.workers;
      w = std::min<std::size_t>(detail::resolve_workers(w), static_cast<std::size_t>(limit));
    }
  }
  return cfg;
}

std::string csv_with_preamble(const RunConfig& cfg, const std::function<void(std::ostream&)>& body) {
  std::ostringstream os;
  write_csv_preamble(os, cfg);
  body(os);
  return os.str();
}

void note(const fs::path& p) { std::cout << "wrote " << p.string() << '\n'; }

int cmd_trajectory(const RunConfig& cfg) {
  const EnsembleConfig& e = cfg.ensemble;
  const auto record = simulate_trajectory(e.params, e.init, e.schedule, e.horizon, NoiseStream(e.master_seed, 0),
                                          e.sample_stride);
  const fs::path dir = cfg.output.directory;
  std::cout << fmt::format("samples: {}  max norm defect: {:.3g}\n", record.size(), record.max_norm_defect());
  if (e.horizon >= e.detector.tau) {
    for (const auto& ev : event_history(record, e.detector)) {
      if (const auto* r = std::get_if<ReductionEvent>(&ev)) {
        std::cout << fmt::format("reduction to {} at t = {:.4f} s\n", to_string(r->eigenstate), r->t_r);
      } else {
        const auto& d = std::get<DelocalizationEvent>(ev);
        std::cout << fmt::format("delocalization from {} at t = {:.4f} s\n", to_string(d.from_eigenstate), d.t_d);
      }
    }
  }
  if (cfg.output.csv) {
    note(write_file(dir, "trajectory.csv",
                    csv_with_preamble(cfg, [&](std::ostream& os) { write_trajectory_csv(os, record); })));
  }
  if (cfg.output.json) note(write_file(dir, "config.json", to_json(cfg).dump(2) + "\n"));
  if (cfg.output.svg) {
    std::vector<BlochVector> path;
    svg::LineSeries pop{"|alpha|^2", {}, {}};
    for (std::size_t i = 0; i < record.size(); ++i) {
      path.push_back(bloch_coordinates(record.samples()[i]));
      pop.x.push_back(record.times()[i]);
      pop.y.push_back(record.samples()[i].pop_plus());
    }
    const std::string tag = fmt::format("gamma = {:g}/s, omega = {:g}/s", e.params.gamma, e.params.omega);
    note(write_file(dir, "bloch.svg", svg::bloch_path("Bloch path, " + tag, path)));
    note(write_file(dir, "population.svg", svg::line_chart("Population of |+>, " + tag, "t (s)", "|alpha|^2", {pop})));
  }
  return ok;
}

int cmd_ensemble(const RunConfig& cfg) {
  const EnsembleConfig& e = cfg.ensemble;
  const auto result = run_ensemble(e);
  const auto& s = result.stats;
  const fs::path dir = cfg.output.directory;
  std::cout << fmt::format(
      "N = {}  reduced = {} ({:.4f})  P(+|reduced) = {:.4f}  mean t_r = {:.4f} s  std t_r = {:.4f} s  "
      "delocalized = {} ({:.4f})\n",
      s.n_total, s.n_reduced_total, s.reduced_fraction, s.prob_plus_given_reduced, s.mean_t_r, s.std_t_r,
      s.n_delocalized, s.delocalized_fraction);
  if (cfg.output.json) note(write_file(dir, "stats.json", stats_document(cfg, s).dump(2) + "\n"));
  if (cfg.output.csv) {
    note(write_file(dir, "events.csv",
                    csv_with_preamble(cfg, [&](std::ostream& os) { write_events_csv(os, result.outcomes); })));
    note(write_file(dir, "series.csv", csv_with_preamble(cfg, [&](std::ostream& os) {
                      write_series_csv(os, result.series, e.params, e.init);
                    })));
  }
  if (cfg.output.svg) {
    const auto& ser = result.series;
    std::vector<svg::LineSeries> pop{{"ensemble mean", ser.times, ser.mean_pop_plus}};
    if (e.params.omega > 0.0) {
      svg::LineSeries x{"closed form x(t)", ser.times, {}};
      const DensityParams rho0 = to_density_params(e.init);
      for (double t : ser.times) x.y.push_back(solve_density(e.params, rho0, t).x);
      pop.push_back(std::move(x));
    }
    note(write_file(dir, "mean_population.svg",
                    svg::line_chart(fmt::format("Mean |alpha|^2, gamma = {:g}/s", e.params.gamma), "t (s)",
                                    "|alpha|^2", pop)));
    note(write_file(dir, "coherence.svg",
                    svg::line_chart(fmt::format("Mean coherence, gamma = {:g}/s", e.params.gamma), "t (s)",
                                    "<+|rho|->",
                                    {{"Im mean", ser.times, ser.mean_im}, {"mean |.|", ser.times, ser.mean_abs}})));
  }
  return ok;
}

int cmd_sweep(const RunConfig& cfg) {
  const auto curve = reduction_time_curve(cfg.ensemble, cfg.gammas);
  const fs::path dir = cfg.output.directory;
  for (const auto& p : curve) {
    std::cout << fmt::format("gamma = {:>6g}  reduced = {:.4f}  P(+|reduced) = {:.4f}  mean t_r = {:.4f} s  "
                             "std t_r = {:.4f} s  delocalized = {:.4f}\n",
                             p.gamma, p.stats.reduced_fraction, p.stats.prob_plus_given_reduced, p.stats.mean_t_r,
                             p.stats.std_t_r, p.stats.delocalized_fraction);
  }
  if (cfg.output.json) note(write_file(dir, "sweep.json", sweep_document(cfg, curve).dump(2) + "\n"));
  if (cfg.output.csv) {
    note(write_file(dir, "sweep.csv", csv_with_preamble(cfg, [&](std::ostream& os) { write_sweep_csv(os, curve); })));
  }
  if (cfg.output.svg) {
    std::vector<svg::Bar> times, deloc, reduced;
    for (const auto& p : curve) {
      const std::string label = fmt::format("{:g}", p.gamma);
      times.push_back({label, p.stats.mean_t_r, p.stats.std_t_r});
      deloc.push_back({label, p.stats.delocalized_fraction, 0.0});
      reduced.push_back({label, p.stats.reduced_fraction, 0.0});
    }
    note(write_file(dir, "reduction_time.svg",
                    svg::bar_chart("Mean reduction time (bars: one std)", "gamma (1/s)", "t_r (s)", times)));
    note(write_file(dir, "delocalized_fraction.svg",
                    svg::bar_chart("Delocalized fraction of reduced trajectories", "gamma (1/s)", "fraction", deloc)));
    note(write_file(dir, "reduced_fraction.svg",
                    svg::bar_chart("Reduced fraction", "gamma (1/s)", "fraction", reduced)));
  }
  return ok;
}

int cmd_validate(const RunConfig& cfg) {
  const auto report = run_validation(cfg);
  for (const auto& c : report.checks) {
    std::cout << fmt::format("{} {}: {:.3e} (threshold {:.3e})\n", c.pass ? "PASS" : "FAIL", c.name, c.value,
                             c.threshold);
  }
  if (cfg.output.json) {
    json doc = to_json(report);
    doc["config"] = to_json(cfg);
    doc["master_seed"] = cfg.ensemble.master_seed;
    note(write_file(cfg.output.directory, "validate.json", doc.dump(2) + "\n"));
  }
  return report.all_pass() ? ok : validation_failed;
}

int cmd_analytic(const RunConfig& cfg) {
  const EnsembleConfig& e = cfg.ensemble;
  const fs::path dir = cfg.output.directory;
  const DensityParams rho0 = to_density_params(e.init);
  std::cout << "damping regime: " << to_string(classify_damping(e.params)) << '\n';
  const DensityParams end = solve_density(e.params, rho0, cfg.analytic.t_end);
  std::cout << fmt::format("x, y, z at t = {:g} s: {:.10f} {:.10f} {:.10f}\n", cfg.analytic.t_end, end.x, end.y, end.z);

  json scalars = json::object();
  if (cfg.analytic.mass_g || cfg.analytic.delta_x0_cm) {
    const double m = cfg.analytic.mass_g.value_or(proton_mass_g);
    const double dx = cfg.analytic.delta_x0_cm.value_or(1e-5);
    const double t = spread_characteristic_time(m, dx);
    std::cout << fmt::format("spread characteristic time (m = {:g} g, dx0 = {:g} cm): {:.3e} s\n", m, dx, t);
    scalars["spread_characteristic_time"] = {{"mass_g", m}, {"delta_x0_cm", dx}, {"seconds", t}};
  }
  if (cfg.analytic.constituents) {
    const double rate = amplification_rate(*cfg.analytic.constituents);
    std::cout << fmt::format("amplified collapse rate (N = {:g}): {:.3e} 1/s\n", *cfg.analytic.constituents, rate);
    scalars["amplification_rate"] = {{"constituents", *cfg.analytic.constituents}, {"per_second", rate}};
  }

  if (cfg.output.csv) {
    note(write_file(dir, "density.csv", csv_with_preamble(cfg, [&](std::ostream& os) {
                      write_density_csv(os, e.params, rho0, cfg.analytic.t_end, cfg.analytic.dt);
                    })));
  }
  if (cfg.output.json) {
    json doc = {{"config", to_json(cfg)},
                {"regime", to_string(classify_damping(e.params))},
                {"final", {{"t", cfg.analytic.t_end}, {"x", end.x}, {"y", end.y}, {"z", end.z}}},
                {"scalars", scalars}};
    note(write_file(dir, "analytic.json", doc.dump(2) + "\n"));
  }
  if (cfg.output.svg) {
    svg::LineSeries x{"x", {}, {}}, y{"y", {}, {}}, z{"z", {}, {}};
    const int n = 1000;
    for (int k = 0; k <= n; ++k) {
      const double t = cfg.analytic.t_end * k / n;
      const DensityParams d = solve_density(e.params, rho0, t);
      x.x.push_back(t), x.y.push_back(d.x);
      y.x.push_back(t), y.y.push_back(d.y);
      z.x.push_back(t), z.y.push_back(d.z);
    }
    note(write_file(dir, "density.svg",
                    svg::line_chart(fmt::format("Density matrix, gamma = {:g}/s, omega = {:g}/s", e.params.gamma,
                                                e.params.omega),
                                    "t (s)", "value", {x, y, z})));
  }
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic collapse simulator for a two-level system"};
  app.require_subcommand(1);
  Overrides o;
  struct Sub {
    Experiment kind;
    CLI::App* app;
  };
  std::vector<Sub> subs;
  for (auto [kind, help] : {std::pair{Experiment::trajectory, "simulate and export one trajectory"},
                            std::pair{Experiment::ensemble, "ensemble statistics at one gamma"},
                            std::pair{Experiment::sweep, "ensemble statistics over a list of gammas"},
                            std::pair{Experiment::validate, "numerical self-checks; exit 3 on failure"},
                            std::pair{Experiment::analytic, "closed-form density matrix and scalar estimates"}}) {
    auto* cmd = app.add_subcommand(std::string(to_string(kind)), help);
    add_overrides(cmd, o);
    subs.push_back({kind, cmd});
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : config_error;
  }

  try {
    Experiment kind = Experiment::ensemble;
    for (const auto& s : subs) {
      if (s.app->parsed()) kind = s.kind;
    }
    const RunConfig cfg = load_config(o, kind);
    switch (kind) {
      case Experiment::trajectory: return cmd_trajectory(cfg);
      case Experiment::ensemble: return cmd_ensemble(cfg);
      case Experiment::sweep: return cmd_sweep(cfg);
      case Experiment::validate: return cmd_validate(cfg);
      case Experiment::analytic: return cmd_analytic(cfg);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return config_error;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return io_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return simulation_error;
  }
  return ok;
}
