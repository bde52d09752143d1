#pragma once

#include <cmath>
#include <complex>

#include "collapse/error.hpp"

namespace collapse {

using complex = std::complex<double>;

/// |z|^2. libstdc++'s std::norm goes through hypot unless fast-math is on.
constexpr double abs2(const complex& z) noexcept { return z.real() * z.real() + z.imag() * z.imag(); }

/// Normalized spin-1/2 wavefunction, alpha on |+> and beta on |->.
///
/// Construction normalizes the pair; the zero vector and non-finite amplitudes
/// are rejected. Instances are immutable values.
class SpinState {
 public:
  SpinState(complex alpha, complex beta) {
    if (!std::isfinite(alpha.real()) || !std::isfinite(alpha.imag()) ||
        !std::isfinite(beta.real()) || !std::isfinite(beta.imag())) {
      throw DomainError("spin state amplitudes must be finite");
    }
    const double n2 = abs2(alpha) + abs2(beta);
    if (!(n2 > 0.0)) throw DomainError("spin state cannot be the zero vector");
    const double inv = 1.0 / std::sqrt(n2);
    alpha_ = alpha * inv;
    beta_ = beta * inv;
  }

  static SpinState plus() { return {1.0, 0.0}; }
  static SpinState minus() { return {0.0, 1.0}; }

  /// sqrt(p)|+> + e^{i phase} sqrt(1-p)|->, for p in [0, 1].
  static SpinState from_population(double pop_plus, double relative_phase = 0.0) {
    if (!(pop_plus >= 0.0 && pop_plus <= 1.0)) {
      throw DomainError("population must lie in [0, 1]");
    }
    return {std::sqrt(pop_plus), std::polar(std::sqrt(1.0 - pop_plus), relative_phase)};
  }

  const complex& alpha() const noexcept { return alpha_; }
  const complex& beta() const noexcept { return beta_; }

  double pop_plus() const noexcept { return abs2(alpha_); }
  double pop_minus() const noexcept { return abs2(beta_); }

 private:
  complex alpha_;
  complex beta_;
};

/// sqrt(3/4)|+> + sqrt(1/4)|->, the initial state used throughout.
inline SpinState reference_initial_state() {
  return {std::sqrt(0.75), std::sqrt(0.25)};
}

/// Hamiltonian frequency and collapse coupling, both in 1/s.
struct ModelParams {
  double omega = 1.0;
  double gamma = 0.0;

  void validate() const {
    if (!std::isfinite(omega) || omega < 0.0) {
      throw DomainError("omega must be finite and non-negative");
    }
    if (!std::isfinite(gamma) || gamma < 0.0) {
      throw DomainError("gamma must be finite and non-negative");
    }
  }
};

/// Density matrix [[x, y + iz], [y - iz, 1 - x]] in the sigma_z basis.
struct DensityParams {
  double x = 0.5;
  double y = 0.0;
  double z = 0.0;

  /// Squared distance of the Bloch vector from the centre, scaled by 1/4.
  double purity_radius2() const noexcept { return (x - 0.5) * (x - 0.5) + y * y + z * z; }

  bool is_physical(double tol = 1e-12) const noexcept {
    return x >= -tol && x <= 1.0 + tol && purity_radius2() <= 0.25 + tol;
  }
};

struct BlochVector {
  double sx = 0.0;
  double sy = 0.0;
  double sz = 0.0;
};

inline double expect_sigma_z(const SpinState& s) noexcept { return 2.0 * s.pop_plus() - 1.0; }

/// <+|psi><psi|-> = alpha * conj(beta).
inline complex coherence(const SpinState& s) noexcept { return s.alpha() * std::conj(s.beta()); }

inline DensityParams to_density_params(const SpinState& s) noexcept {
  const complex c = coherence(s);
  return {s.pop_plus(), c.real(), c.imag()};
}

// sy carries the minus sign of the standard convention.
inline BlochVector bloch_coordinates(const SpinState& s) noexcept {
  const complex c = coherence(s);
  return {2.0 * c.real(), -2.0 * c.imag(), expect_sigma_z(s)};
}

}  // namespace collapse
