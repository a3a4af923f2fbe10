#pragma once

// Lyapunov decay-rate formulas and the safe-interval design of the two boundary
// feedback amplifiers.
//
// With the perturbed energy E_delta = E + delta F, choosing
//   delta < (1/L) min(1/eta, f1(xi1, eps), f2(xi2, eps))
// gives E(t) <= M E(0) exp(-sigma t) with sigma = delta (1 - delta L eta) and
// M = (1 + delta L eta) / (1 - delta L eta). sigma peaks at delta = 1/(2 eta L),
// which is admissible exactly when f1, f2 > 1/(2 eta); solving those two
// quadratic inequalities in xi gives the intervals (c1-, c1+) and (c2-, c2+).

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "piezoamp/error.hpp"
#include "piezoamp/material.hpp"

namespace piezoamp {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  /// Open-interval membership; endpoints are excluded.
  [[nodiscard]] bool contains(double x) const { return lo < x && x < hi; }
};

struct FeedbackDesign {
  double epsilon = 1.0;
  Interval c1;            ///< admissible xi1 [N s/m]
  Interval c2;            ///< admissible xi2
  double xi1_star = 0.0;  ///< rho / (2 eta)
  double xi2_star = 0.0;  ///< mu / (2 eta)
  double sigma = 0.0;     ///< guaranteed decay exponent [1/s]
  double bigM = 0.0;      ///< overshoot constant
  double delta = 0.0;     ///< Lyapunov perturbation weight used for (sigma, bigM)
};

struct DeltaBudget {
  double f1_val = 0.0;
  double f2_val = 0.0;
  double delta_max = 0.0;
};

struct LyapunovRate {
  double sigma = 0.0;
  double bigM = 1.0;
};

/// Outcome of checking a concrete amplifier pair against the design.
struct DesignReport {
  double xi1 = 0.0;
  double xi2 = 0.0;
  double epsilon = 0.0;
  double f1_val = 0.0;
  double f2_val = 0.0;
  double threshold = 0.0;  ///< 1/(2 eta)
  bool zero_amplifier = false;
  bool f1_ok = false;      ///< f1 > 1/(2 eta)
  bool f2_ok = false;      ///< f2 > 1/(2 eta)
  bool epsilon_ok = false;
  bool xi1_in_interval = false;
  bool xi2_in_interval = false;
  Interval c1;
  Interval c2;

  [[nodiscard]] bool all_pass() const {
    return !zero_amplifier && f1_ok && f2_ok && epsilon_ok && xi1_in_interval && xi2_in_interval;
  }
};

namespace detail {

// Discriminants this close to zero (relative to the largest term) are clamped to zero.
inline constexpr double kDiscriminantSlack = 1e-12;

inline double clamp_discriminant(double disc, double scale) {
  if (disc < 0.0 && disc > -kDiscriminantSlack * scale) return 0.0;
  return disc;
}

// Roots of a x^2 - b x + c = 0 with a, b, c > 0, computed without cancellation:
// the larger root from the quadratic formula, the smaller from the product c/a.
inline Interval positive_roots(double a, double b, double c, const char* what) {
  const double disc = clamp_discriminant(b * b - 4.0 * a * c, b * b);
  if (!(disc >= 0.0)) {
    std::ostringstream os;
    os << what << ": negative discriminant " << disc << ", interval is empty";
    throw DomainError(os.str());
  }
  const double hi = (b + std::sqrt(disc)) / (2.0 * a);
  const double lo = c / (a * hi);
  return {lo, hi};
}

} // namespace detail

/// f1(xi1, eps) = 2 xi1 alpha1 / (rho alpha1 + (1 + eps) xi1^2).
inline double f1(double xi1, double eps, const DerivedConstants& d, const MaterialParams& p) {
  const double a1 = d.alpha1;
  return 2.0 * xi1 * a1 / (p.rho * a1 + (1.0 + eps) * xi1 * xi1);
}

/// f2(xi2, eps) = 2 xi2 eps alpha1 beta / (eps mu alpha1 beta + (eps alpha + gamma^2 beta) xi2^2).
inline double f2(double xi2, double eps, const DerivedConstants& d, const MaterialParams& p) {
  const double a1b = d.alpha1 * p.beta;
  const double g2b = p.gamma * p.gamma * p.beta;
  return 2.0 * xi2 * eps * a1b / (eps * p.mu * a1b + (eps * p.alpha + g2b) * xi2 * xi2);
}

/// Upper epsilon curve from f1 > 1/(2 eta). Positive only between the roots a1-/a1+.
inline double h1(double xi1, const DerivedConstants& d, const MaterialParams& p) {
  if (!(xi1 > 0.0)) throw DomainError("h1 requires xi1 > 0");
  const double a1 = d.alpha1;
  return (4.0 * a1 * xi1 * d.eta - p.rho * a1 - xi1 * xi1) / (xi1 * xi1);
}

/// Roots of h1's numerator, 2 alpha1 eta -/+ sqrt(4 alpha1^2 eta^2 - rho alpha1).
inline Interval h1_roots(const DerivedConstants& d, const MaterialParams& p) {
  return detail::positive_roots(1.0, 4.0 * d.alpha1 * d.eta, p.rho * d.alpha1, "h1 roots");
}

/// Vertical asymptotes a2-/+ of h2 (zeros of its denominator).
inline Interval h2_asymptotes(const DerivedConstants& d, const MaterialParams& p) {
  const double a1b = d.alpha1 * p.beta;
  return detail::positive_roots(p.alpha, 4.0 * a1b * d.eta, p.mu * a1b, "h2 asymptotes");
}

/// Lower epsilon curve from f2 > 1/(2 eta); defined only strictly between the asymptotes.
inline double h2(double xi2, const DerivedConstants& d, const MaterialParams& p) {
  const double a1b = d.alpha1 * p.beta;
  const double denom = 4.0 * a1b * xi2 * d.eta - p.mu * a1b - p.alpha * xi2 * xi2;
  if (!(xi2 > 0.0) || !(denom > 0.0)) {
    std::ostringstream os;
    os << "h2 undefined at xi2 = " << xi2 << ": outside the asymptotes, denominator " << denom
       << " <= 0";
    throw DomainError(os.str());
  }
  return p.beta * p.gamma * p.gamma * xi2 * xi2 / denom;
}

/// Open interval of admissible epsilon: (min h2, max h1).
inline Interval epsilon_bounds(const DerivedConstants& d, const MaterialParams& p) {
  const double eta2 = d.eta * d.eta;
  const double lo =
      p.beta * p.gamma * p.gamma * p.mu / (4.0 * d.alpha1 * p.beta * eta2 - p.alpha * p.mu);
  const double hi = (4.0 * d.alpha1 * eta2 - p.rho) / p.rho;
  return {lo, hi};
}

/// sigma(delta) = delta (1 - delta L eta), M(delta) = (1 + delta L eta) / (1 - delta L eta).
inline LyapunovRate lyapunov_rate(double delta, const DerivedConstants& d, double L) {
  const double x = delta * L * d.eta;
  if (!(delta > 0.0) || !(x < 1.0)) {
    std::ostringstream os;
    os << "delta = " << delta << " outside (0, 1/(eta L)) = (0, " << 1.0 / (d.eta * L)
       << "); energy equivalence fails";
    throw DomainError(os.str());
  }
  return {delta * (1.0 - x), (1.0 + x) / (1.0 - x)};
}

inline LyapunovRate lyapunov_rate(double delta, const DerivedConstants& d, const MaterialParams& p) {
  return lyapunov_rate(delta, d, p.L);
}

/// Amplifier intervals for a given epsilon, plus the rate guaranteed by any pair inside them.
inline FeedbackDesign amplifier_intervals(double eps, const DerivedConstants& d,
                                          const MaterialParams& p) {
  const Interval eb = epsilon_bounds(d, p);
  if (!eb.contains(eps)) {
    std::ostringstream os;
    os.precision(6);
    os << "epsilon = " << eps << " outside the admissible interval (" << eb.lo << ", " << eb.hi
       << ")";
    throw DomainError(os.str());
  }
  const double a1 = d.alpha1;
  const double a1b = a1 * p.beta;
  const double g2b = p.gamma * p.gamma * p.beta;

  FeedbackDesign fd;
  fd.epsilon = eps;
  // (1+eps) xi^2 - 4 alpha1 eta xi + rho alpha1 < 0
  fd.c1 = detail::positive_roots(1.0 + eps, 4.0 * a1 * d.eta, p.rho * a1, "c1 interval");
  // (eps alpha + beta gamma^2) xi^2 - 4 eps alpha1 beta eta xi + eps mu alpha1 beta < 0
  fd.c2 = detail::positive_roots(eps * p.alpha + g2b, 4.0 * eps * a1b * d.eta, eps * p.mu * a1b,
                                 "c2 interval");
  fd.xi1_star = p.rho / (2.0 * d.eta);
  fd.xi2_star = p.mu / (2.0 * d.eta);
  fd.delta = 1.0 / (2.0 * d.eta * p.L);
  const LyapunovRate r = lyapunov_rate(fd.delta, d, p.L);
  fd.sigma = r.sigma;
  fd.bigM = r.bigM;
  return fd;
}

/// delta_max = (1/L) min(1/eta, f1, f2).
inline DeltaBudget delta_budget(double xi1, double xi2, double eps, const DerivedConstants& d,
                                const MaterialParams& p) {
  if (!(xi1 >= 0.0) || !(xi2 >= 0.0) || !(eps > 0.0))
    throw DomainError("delta_budget requires xi1, xi2 >= 0 and epsilon > 0");
  DeltaBudget b;
  b.f1_val = f1(xi1, eps, d, p);
  b.f2_val = f2(xi2, eps, d, p);
  b.delta_max = std::min({1.0 / d.eta, b.f1_val, b.f2_val}) / p.L;
  return b;
}

/// Checks (xi1, xi2, eps) against both the inequality form and the interval form.
/// The two verdicts agree away from floating-point ties at the endpoints.
inline DesignReport verify_design(double xi1, double xi2, double eps, const DerivedConstants& d,
                                  const MaterialParams& p) {
  DesignReport r;
  r.xi1 = xi1;
  r.xi2 = xi2;
  r.epsilon = eps;
  r.threshold = 1.0 / (2.0 * d.eta);
  r.zero_amplifier = !(xi1 > 0.0) || !(xi2 > 0.0);
  const Interval eb = epsilon_bounds(d, p);
  r.epsilon_ok = eb.contains(eps);
  if (eps > 0.0) {
    r.f1_val = f1(std::max(xi1, 0.0), eps, d, p);
    r.f2_val = f2(std::max(xi2, 0.0), eps, d, p);
    r.f1_ok = r.f1_val > r.threshold;
    r.f2_ok = r.f2_val > r.threshold;
  }
  if (r.epsilon_ok) {
    const FeedbackDesign fd = amplifier_intervals(eps, d, p);
    r.c1 = fd.c1;
    r.c2 = fd.c2;
    r.xi1_in_interval = fd.c1.contains(xi1);
    r.xi2_in_interval = fd.c2.contains(xi2);
  }
  return r;
}

} // namespace piezoamp
