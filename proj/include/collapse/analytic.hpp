#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "collapse/error.hpp"
#include "collapse/spin.hpp"

namespace collapse {

enum class DampingRegime { over_damped, critically_damped, under_damped };

inline std::string_view to_string(DampingRegime r) {
  switch (r) {
    case DampingRegime::over_damped: return "over_damped";
    case DampingRegime::critically_damped: return "critically_damped";
    case DampingRegime::under_damped: return "under_damped";
  }
  return "unknown";
}

/// Relative band around gamma = 2 omega routed to the critical branch.
inline constexpr double critical_band = 1e-9;

inline DampingRegime classify_damping(const ModelParams& p) {
  p.validate();
  if (p.omega == 0.0) throw DomainError("undamped oscillator undefined classification (omega = 0)");
  const double ratio = p.gamma / (2.0 * p.omega);
  if (std::abs(ratio - 1.0) <= critical_band) return DampingRegime::critically_damped;
  return ratio > 1.0 ? DampingRegime::over_damped : DampingRegime::under_damped;
}

struct DensityRate {
  double dx = 0.0;
  double dy = 0.0;
  double dz = 0.0;
};

/// Right-hand side of the population/coherence equations of the master equation.
inline DensityRate density_ode_rhs(const ModelParams& p, const DensityParams& d) noexcept {
  return {-2.0 * p.omega * d.z, -2.0 * p.gamma * d.y,
          -p.omega + 2.0 * p.omega * d.x - 2.0 * p.gamma * d.z};
}

/// Closed-form density matrix at time t.
///
/// x and z follow a damped oscillator with natural frequency 2 omega and damping
/// gamma; y decays as exp(-2 gamma t). The branch is chosen by classify_damping.
/// omega = 0 is rejected; use integrate_density_reference for that case.
inline DensityParams solve_density(const ModelParams& p, const DensityParams& init, double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("time must be finite and non-negative");
  const DampingRegime regime = classify_damping(p);
  const double w = p.omega;
  const double g = p.gamma;
  const double x0 = init.x;
  const double z0 = init.z;
  const double y = init.y * std::exp(-2.0 * g * t);

  switch (regime) {
    case DampingRegime::over_damped: {
      const double mu = std::sqrt(1.0 - (2.0 * w / g) * (2.0 * w / g));
      const double r = 2.0 * w / g;
      const double u0 = x0 - 0.5;
      const double a = ((mu - 1.0) * u0 + r * z0) / (2.0 * mu);
      const double b = ((1.0 + mu) * u0 - r * z0) / (2.0 * mu);
      const double c = (r * u0 - (1.0 - mu) * z0) / (2.0 * mu);
      const double d = ((1.0 + mu) * z0 - r * u0) / (2.0 * mu);
      const double fast = std::exp(-g * (1.0 + mu) * t);
      const double slow = std::exp(-g * (1.0 - mu) * t);
      return {a * fast + b * slow + 0.5, y, c * slow + d * fast};
    }
    case DampingRegime::critically_damped: {
      const double a = x0 - 0.5;
      const double b = (2.0 * x0 - 1.0) * w - g * z0;
      const double decay = std::exp(-g * t);
      return {(a + b * t) * decay + 0.5, y, (z0 + b * t) * decay};
    }
    case DampingRegime::under_damped: {
      const double lambda = g * std::sqrt((2.0 * w / g) * (2.0 * w / g) - 1.0);
      // g == 0 makes the line above 0 * inf; the undamped frequency is 2 omega.
      const double freq = g > 0.0 ? lambda : 2.0 * w;
      const double a = x0 - 0.5;
      const double b = (g * x0 - 2.0 * w * z0 - 0.5 * g) / freq;
      const double d = (2.0 * w * x0 - w - g * z0) / freq;
      const double decay = std::exp(-g * t);
      const double cs = std::cos(freq * t);
      const double sn = std::sin(freq * t);
      return {(a * cs + b * sn) * decay + 0.5, y, (z0 * cs + d * sn) * decay};
    }
  }
  return init;
}

struct DensitySample {
  double t = 0.0;
  DensityParams rho;
};

/// Fixed-step classic RK4 integration of density_ode_rhs from 0 to t_end.
///
/// Every record_every-th step is kept, plus the initial and final points. The last
/// step is shortened so the series ends exactly at t_end.
inline std::vector<DensitySample> integrate_density_reference(const ModelParams& p,
                                                              const DensityParams& init,
                                                              double t_end, double dt,
                                                              std::size_t record_every = 1) {
  p.validate();
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("dt must be positive");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw DomainError("t_end must be non-negative");
  if (record_every == 0) throw DomainError("record_every must be at least 1");

  auto axpy = [](const DensityParams& s, double h, const DensityRate& k) {
    return DensityParams{s.x + h * k.dx, s.y + h * k.dy, s.z + h * k.dz};
  };

  std::vector<DensitySample> out;
  out.push_back({0.0, init});
  DensityParams s = init;
  const auto full_steps = static_cast<std::uint64_t>(std::floor(t_end / dt));
  const double tail = t_end - static_cast<double>(full_steps) * dt;
  const std::uint64_t total = full_steps + (tail > 1e-12 * dt ? 1 : 0);

  for (std::uint64_t i = 0; i < total; ++i) {
    const double h = i < full_steps ? dt : tail;
    const DensityRate k1 = density_ode_rhs(p, s);
    const DensityRate k2 = density_ode_rhs(p, axpy(s, 0.5 * h, k1));
    const DensityRate k3 = density_ode_rhs(p, axpy(s, 0.5 * h, k2));
    const DensityRate k4 = density_ode_rhs(p, axpy(s, h, k3));
    s.x += h / 6.0 * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
    s.y += h / 6.0 * (k1.dy + 2.0 * k2.dy + 2.0 * k3.dy + k4.dy);
    s.z += h / 6.0 * (k1.dz + 2.0 * k2.dz + 2.0 * k3.dz + k4.dz);
    if (!std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.z)) {
      throw Error("reference integration diverged");
    }
    const bool last = i + 1 == total;
    if (last || (i + 1) % record_every == 0) {
      const double t = last ? t_end : static_cast<double>(i + 1) * dt;
      out.push_back({t, s});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scalar estimates for the spatial collapse model (CGS units).

/// Planck constant h in erg s.
inline constexpr double planck_h_cgs = 6.62607e-27;

/// Proton mass in g.
inline constexpr double proton_mass_g = 1.67262192e-24;

inline constexpr double avogadro = 6.02214076e23;

struct SpaceCollapseConstants {
  /// Inverse squared localization length, 1/cm^2 (1/sqrt(alpha) = 1e-5 cm).
  double alpha_loc = 1e10;
  /// Single-particle collapse rate, 1/s.
  double lambda_rate = 1e-17;
};

/// Time for a free wavepacket of the given mass to double its spread.
inline double spread_characteristic_time(double mass_g, double delta_x0_cm) {
  if (!(mass_g > 0.0) || !(delta_x0_cm > 0.0)) {
    throw DomainError("mass and initial spread must be positive");
  }
  return std::sqrt(12.0) * mass_g * delta_x0_cm * delta_x0_cm / planck_h_cgs;
}

/// Collapse rate of the centre of mass of n constituents.
inline double amplification_rate(double n_constituents,
                                 const SpaceCollapseConstants& constants = {}) {
  if (!(n_constituents >= 1.0)) throw DomainError("need at least one constituent");
  return n_constituents * constants.lambda_rate;
}

}  // namespace collapse
