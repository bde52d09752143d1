#pragma once

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "collapse/analytic.hpp"
#include "collapse/config.hpp"
#include "collapse/ensemble.hpp"
#include "collapse/events.hpp"
#include "collapse/sde.hpp"

namespace collapse {

/// Failure to create or write an output file.
class IoError : public Error {
 public:
  IoError(const std::filesystem::path& path, const std::string& what)
      : Error(path.string() + ": " + what) {}
};

/// 17 significant digits, '.' separator, independent of the C locale.
inline std::string format_number(double v) {
  if (v == 0.0) v = 0.0;  // no "-0"
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

/// Writes a CSV header block: one comment line with the resolved configuration.
inline void write_csv_preamble(std::ostream& os, const RunConfig& cfg) {
  os << "# config: " << to_json(cfg).dump() << '\n';
  os << "# master_seed: " << cfg.ensemble.master_seed << '\n';
}

inline void write_csv_row(std::ostream& os, const std::vector<double>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) os << ',';
    os << format_number(values[i]);
  }
  os << '\n';
}

inline void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& record) {
  os << "t,re_alpha,im_alpha,re_beta,im_beta,pop_plus,coh_re,coh_im,sx,sy,sz\n";
  const auto times = record.times();
  const auto samples = record.samples();
  for (std::size_t i = 0; i < record.size(); ++i) {
    const SpinState& s = samples[i];
    const complex c = coherence(s);
    const BlochVector b = bloch_coordinates(s);
    write_csv_row(os, {times[i], s.alpha().real(), s.alpha().imag(), s.beta().real(),
                       s.beta().imag(), s.pop_plus(), c.real(), c.imag(), b.sx, b.sy, b.sz});
  }
}

inline void write_events_csv(std::ostream& os, const std::vector<TrajectoryOutcome>& outcomes) {
  os << "trajectory_index,kind,eigenstate,time\n";
  for (const auto& o : outcomes) {
    if (o.reduction) {
      os << o.index << ",reduction," << to_string(o.reduction->eigenstate) << ','
         << format_number(o.reduction->t_r) << '\n';
    }
    if (o.delocalization) {
      os << o.index << ",delocalization," << to_string(o.delocalization->from_eigenstate) << ','
         << format_number(o.delocalization->t_d) << '\n';
    }
  }
}

/// Ensemble means next to the closed-form density matrix (when omega > 0).
inline void write_series_csv(std::ostream& os, const EnsembleSeries& series, const ModelParams& params,
                             const SpinState& init) {
  const bool analytic = params.omega > 0.0;
  os << "t,mean_pop_plus,stderr_pop_plus,mean_coh_re,mean_coh_im,mean_coh_abs";
  if (analytic) os << ",x,y,z";
  os << '\n';
  const DensityParams rho0 = to_density_params(init);
  for (std::size_t i = 0; i < series.times.size(); ++i) {
    std::vector<double> row{series.times[i], series.mean_pop_plus[i],
                            std::sqrt(series.var_pop_plus[i] / static_cast<double>(series.n)),
                            series.mean_re[i], series.mean_im[i], series.mean_abs[i]};
    if (analytic) {
      const DensityParams d = solve_density(params, rho0, series.times[i]);
      row.insert(row.end(), {d.x, d.y, d.z});
    }
    write_csv_row(os, row);
  }
}

inline void write_sweep_csv(std::ostream& os, const std::vector<CurvePoint>& curve) {
  os << "gamma,seed,n_total,n_reduced_plus,n_reduced_minus,n_reduced_total,reduced_fraction,"
        "prob_plus_given_reduced,prob_minus_given_reduced,mean_t_r,std_t_r,n_delocalized,"
        "delocalized_fraction\n";
  for (const auto& p : curve) {
    const auto& s = p.stats;
    os << format_number(p.gamma) << ',' << p.seed << ',' << s.n_total << ',' << s.n_reduced_plus
       << ',' << s.n_reduced_minus << ',' << s.n_reduced_total << ','
       << format_number(s.reduced_fraction) << ',' << format_number(s.prob_plus_given_reduced) << ','
       << format_number(s.prob_minus_given_reduced) << ',' << format_number(s.mean_t_r) << ','
       << format_number(s.std_t_r) << ',' << s.n_delocalized << ','
       << format_number(s.delocalized_fraction) << '\n';
  }
}

inline void write_density_csv(std::ostream& os, const ModelParams& params, const DensityParams& init,
                              double t_end, double dt) {
  os << "t,x,y,z\n";
  const auto n = static_cast<std::size_t>(std::floor(t_end / dt + 1e-9));
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * dt;
    const DensityParams d = solve_density(params, init, t);
    write_csv_row(os, {t, d.x, d.y, d.z});
  }
  if (t_end - static_cast<double>(n) * dt > 1e-9 * dt) {
    const DensityParams d = solve_density(params, init, t_end);
    write_csv_row(os, {t_end, d.x, d.y, d.z});
  }
}

inline nlohmann::json to_json(const EnsembleStats& s) {
  return {{"n_total", s.n_total},
          {"n_reduced_plus", s.n_reduced_plus},
          {"n_reduced_minus", s.n_reduced_minus},
          {"n_reduced_total", s.n_reduced_total},
          {"mean_t_r", s.mean_t_r},
          {"std_t_r", s.std_t_r},
          {"n_delocalized", s.n_delocalized},
          {"reduced_fraction", s.reduced_fraction},
          {"prob_plus_given_reduced", s.prob_plus_given_reduced},
          {"prob_minus_given_reduced", s.prob_minus_given_reduced},
          {"delocalized_fraction", s.delocalized_fraction}};
}

/// Stats document written by the ensemble command.
inline nlohmann::json stats_document(const RunConfig& cfg, const EnsembleStats& stats) {
  return {{"config", to_json(cfg)}, {"master_seed", cfg.ensemble.master_seed}, {"stats", to_json(stats)}};
}

inline nlohmann::json sweep_document(const RunConfig& cfg, const std::vector<CurvePoint>& curve) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : curve) {
    points.push_back({{"gamma", p.gamma}, {"seed", p.seed}, {"stats", to_json(p.stats)}});
  }
  return {{"config", to_json(cfg)}, {"master_seed", cfg.ensemble.master_seed}, {"points", points}};
}

/// Opens `dir / name` for writing, creating the directory when needed.
inline std::ofstream open_output(const std::filesystem::path& dir, const std::string& name) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(dir, "cannot create directory: " + ec.message());
  const auto path = dir / name;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(path, "cannot open for writing");
  return os;
}

/// Writes `content` to `dir / name`, checking the stream state afterwards.
inline std::filesystem::path write_file(const std::filesystem::path& dir, const std::string& name,
                                        const std::string& content) {
  auto os = open_output(dir, name);
  os << content;
  os.flush();
  if (!os) throw IoError(dir / name, "write failed");
  return dir / name;
}

}  // namespace collapse
