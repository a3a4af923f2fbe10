#pragma once

// Material parameters of the magnetizable piezoelectric beam and the closed-form
// constants derived from them.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "piezoamp/error.hpp"

namespace piezoamp {

/// Physical constants in SI units.
struct MaterialParams {
  double L = 1.0;       ///< beam length [m]
  double rho = 6000.0;  ///< mass density [kg/m^3]
  double mu = 1e-6;     ///< magnetic permeability [H/m]
  double alpha = 1e9;   ///< elastic stiffness [N/m^2]
  double gamma = 1e-3;  ///< piezoelectric constant [C/m^3]
  double beta = 1e12;   ///< impermittivity [m/F]

  /// Reduced stiffness alpha - gamma^2 beta.
  [[nodiscard]] double alpha1() const { return alpha - gamma * gamma * beta; }

  /// Throws DomainError unless every field is finite and positive and alpha1 > 0.
  void validate() const {
    auto check = [](double v, const char* name) {
      if (!std::isfinite(v) || v <= 0.0) {
        std::ostringstream os;
        os << "material parameter " << name << " must be finite and > 0 (got " << v << ")";
        throw DomainError(os.str());
      }
    };
    check(L, "L");
    check(rho, "rho");
    check(mu, "mu");
    check(alpha, "alpha");
    check(gamma, "gamma");
    check(beta, "beta");
    if (!(alpha1() > 0.0)) {
      std::ostringstream os;
      os << "non-physical parameter set: alpha1 = alpha - gamma^2*beta = " << alpha1()
         << " must be > 0";
      throw DomainError(os.str());
    }
  }

  friend bool operator==(const MaterialParams&, const MaterialParams&) = default;
};

/// Realistic piezoelectric material on a 1 m beam.
inline MaterialParams table1_preset() { return MaterialParams{}; }

struct DerivedConstants {
  double alpha1 = 0.0;      ///< reduced stiffness [N/m^2]
  double eta = 0.0;         ///< Lyapunov constant [s/m]
  double zeta_minus = 0.0;  ///< smaller slowness root [s/m]
  double zeta_plus = 0.0;   ///< larger slowness root [s/m]
  double sigma_max = 0.0;   ///< maximal guaranteed decay rate 1/(4 eta L) [1/s]
  double T_obs_min = 0.0;   ///< observation-time threshold 2L / max(zeta-, zeta+)
};

/// Computes alpha1, eta, zeta-/+, sigma_max and the observation-time threshold.
///
/// zeta^2 are the roots of z^2 - S z + P = 0 with S = alpha mu/(alpha1 beta) + rho/alpha1
/// and P = rho mu/(beta alpha1). For realistic materials P << S^2, so the smaller
/// root is recovered from the product P / zeta+^2 instead of the cancelling difference.
inline DerivedConstants derive_constants(const MaterialParams& p) {
  p.validate();
  DerivedConstants d;
  d.alpha1 = p.alpha1();
  const double a1 = d.alpha1;

  const double coupling = std::sqrt(p.mu * p.gamma * p.gamma / a1);
  d.eta = std::max(std::sqrt(p.rho / a1) + coupling, std::sqrt(p.mu / p.beta) + coupling);

  const double S = p.alpha * p.mu / (a1 * p.beta) + p.rho / a1;
  const double P = p.rho * p.mu / (p.beta * a1);
  const double disc = S * S - 4.0 * P;
  if (disc < -1e-12 * S * S || !std::isfinite(disc)) {
    std::ostringstream os;
    os << "numerically inconsistent parameters: wave-speed discriminant " << disc << " < 0";
    throw DomainError(os.str());
  }
  const double zp2 = 0.5 * (S + std::sqrt(std::max(disc, 0.0)));
  const double zm2 = P / zp2;
  d.zeta_plus = std::sqrt(zp2);
  d.zeta_minus = std::sqrt(zm2);

  d.sigma_max = 1.0 / (4.0 * d.eta * p.L);
  d.T_obs_min = 2.0 * p.L / std::max(d.zeta_minus, d.zeta_plus);
  return d;
}

} // namespace piezoamp
