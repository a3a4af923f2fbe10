#pragma once

// Time integration of the semi-discrete closed loop, energy traces, decay-rate fits
// and the exponential-envelope check.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include "piezoamp/error.hpp"
#include "piezoamp/orfd.hpp"
#include "piezoamp/spectrum.hpp"

namespace piezoamp {

/// Piecewise-linear hat on both fields: 0 at the clamped end, 1 at node
/// floor(peak_frac (N+1)), 0 at the free end. Velocities are zero.
inline StateVector hat_initial_condition(int N, double peak_frac = 0.5) {
  if (N < 2) throw DomainError("hat initial condition needs N >= 2");
  if (!(peak_frac > 0.0 && peak_frac < 1.0))
    throw DomainError("peak_frac must lie strictly inside (0, 1)");
  const int last = N + 1;
  const int k = static_cast<int>(std::floor(peak_frac * last));
  if (k <= 0 || k >= last) {
    std::ostringstream os;
    os << "hat peak at node " << k << " coincides with a boundary node";
    throw DomainError(os.str());
  }
  StateVector s = StateVector::zero(last);
  for (int j = 1; j <= last; ++j) {
    const double val = j <= k ? double(j) / k : double(last - j) / (last - k);
    s.v[j - 1] = val;
    s.p[j - 1] = val;
  }
  return s;
}

enum class Scheme {
  /// Exact propagator exp(dt A) assembled from the eigendecomposition of the
  /// energy-normalized operator (extended precision).
  Modal,
  /// (I - dt/2 A) s_{k+1} = (I + dt/2 A) s_k, one LU factorization.
  ImplicitMidpoint,
};

inline const char* scheme_name(Scheme s) {
  return s == Scheme::Modal ? "modal" : "midpoint";
}

/// One-step map z -> P z in energy-normalized coordinates, |z|^2 = 2 E_h / h.
class Propagator {
public:
  Propagator(const EnergyForm<long double>& ef, double dt, Scheme scheme) : scheme_(scheme) {
    const Eigen::Index dim = ef.op.rows();
    if (scheme == Scheme::ImplicitMidpoint) {
      const Eigen::MatrixXd A = ef.op.cast<double>();
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(dim, dim);
      lu_.compute(I - 0.5 * dt * A);
      if (!(lu_.rcond() > 0.0))
        throw NumericalError("singular implicit-midpoint step matrix");
      rhs_ = I + 0.5 * dt * A;
    } else {
      using CT = std::complex<long double>;
      MatrixT<long double> B = ef.op;
      const VectorT<long double> d = balance(B);
      Eigen::EigenSolver<MatrixT<long double>> es(B, true);
      if (es.info() != Eigen::Success) throw NumericalError("modal eigendecomposition failed");
      MatrixT<CT> V = es.eigenvectors();
      for (Eigen::Index i = 0; i < dim; ++i) V.row(i) *= d(i);
      const Eigen::PartialPivLU<MatrixT<CT>> lu(V);
      const MatrixT<CT> Vinv = lu.inverse();
      const long double defect =
          (V * Vinv - MatrixT<CT>::Identity(dim, dim)).cwiseAbs().maxCoeff();
      if (!(defect < 1e-6L)) {
        std::ostringstream os;
        os << "modal basis is ill-conditioned (||V V^-1 - I|| = " << double(defect)
           << "); use the midpoint scheme";
        throw NumericalError(os.str());
      }
      VectorT<CT> expo(dim);
      for (Eigen::Index i = 0; i < dim; ++i) expo(i) = std::exp(es.eigenvalues()(i) * (long double)dt);
      const MatrixT<CT> P = V * expo.asDiagonal() * Vinv;
      step_ = P.real().cast<double>();
    }
  }

  [[nodiscard]] Eigen::VectorXd step(const Eigen::VectorXd& z) const {
    if (scheme_ == Scheme::ImplicitMidpoint) return lu_.solve(rhs_ * z);
    return step_ * z;
  }

  [[nodiscard]] Scheme scheme() const { return scheme_; }

private:
  Scheme scheme_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  Eigen::MatrixXd rhs_;
  Eigen::MatrixXd step_;
};

struct EnergyTrace {
  std::vector<double> times;
  std::vector<double> energies;
  std::vector<double> boundary_v_dot;  ///< v_dot at node N+1
  std::vector<double> boundary_p_dot;  ///< p_dot at node N+1
  std::vector<double> functional;      ///< discrete F, only when requested
  StateVector final_state;
  double dt = 0.0;
  Scheme scheme = Scheme::Modal;
  double spectral_radius = 0.0;        ///< power-iteration estimate of |mu|_max
  bool fastest_mode_resolved = false;  ///< dt <= 0.2 / |mu|_max
};

struct IntegrateOptions {
  Scheme scheme = Scheme::Modal;
  int record_every = 1;            ///< record one sample every this many steps
  bool record_functional = false;  ///< also record discrete_F (costs a back-transform per sample)
};

/// Advances s' = A_op s from s0 over [0, T] with step dt.
inline EnergyTrace integrate(const OrfdSystem& sys, const StateVector& s0, double T, double dt,
                             const IntegrateOptions& opt = {}) {
  if (!(dt > 0.0) || !(T >= dt)) {
    std::ostringstream os;
    os << "integration needs dt > 0 and T >= dt (T = " << T << ", dt = " << dt << ")";
    throw DomainError(os.str());
  }
  if (opt.record_every < 1) throw DomainError("record_every must be >= 1");
  detail::check_state(sys, s0);

  const EnergyForm<long double> ef = energy_form<long double>(sys);
  const Eigen::Index n = sys.nodes();
  const Propagator prop(ef, dt, opt.scheme);

  EnergyTrace tr;
  tr.dt = dt;
  tr.scheme = opt.scheme;
  tr.spectral_radius = spectral_radius_estimate(ef.op.cast<double>());
  tr.fastest_mode_resolved = dt <= 0.2 / tr.spectral_radius;

  // Tip velocities read straight from z: v_dot_{N+1} = (Rm^-1 z_v')_{N+1} / sqrt(rho).
  const Eigen::MatrixXd Rm = ef.R_mass.cast<double>();
  Eigen::VectorXd tip = Eigen::VectorXd::Zero(n);
  tip(n - 1) = 1.0;
  const Eigen::VectorXd tip_row = Rm.transpose().triangularView<Eigen::Lower>().solve(tip);
  const double srho = std::sqrt(sys.params.rho);
  const double smu = std::sqrt(sys.params.mu);
  const double half_h = 0.5 * sys.h;

  auto record = [&](double t, const Eigen::VectorXd& z) {
    const double e = half_h * z.squaredNorm();
    if (!std::isfinite(e)) {
      std::ostringstream os;
      os << "non-finite energy at t = " << t << " (scheme " << scheme_name(opt.scheme) << ")";
      throw NumericalError(os.str());
    }
    tr.times.push_back(t);
    tr.energies.push_back(e);
    tr.boundary_v_dot.push_back(tip_row.dot(z.segment(2 * n, n)) / srho);
    tr.boundary_p_dot.push_back(tip_row.dot(z.segment(3 * n, n)) / smu);
    if (opt.record_functional) {
      const VectorT<long double> s = ef.from_energy(z.cast<long double>());
      tr.functional.push_back(discrete_F(sys, StateVector::from_flat(s.cast<double>())));
    }
  };

  Eigen::VectorXd z = ef.to_energy(s0.flatten().cast<long double>()).cast<double>();
  const long steps = std::lround(T / dt);
  record(0.0, z);
  for (long k = 1; k <= steps; ++k) {
    z = prop.step(z);
    if (k % opt.record_every == 0 || k == steps) record(double(k) * dt, z);
  }
  tr.final_state = StateVector::from_flat(ef.from_energy(z.cast<long double>()).cast<double>());
  return tr;
}

struct DecayFit {
  double sigma_fit = 0.0;  ///< -slope of log E over the window [1/s]
  double r_squared = 0.0;
  double t_start = 0.0;
  double t_end = 0.0;
  std::size_t samples = 0;
  bool truncated = false;  ///< energy hit the numerical floor inside the window
};

/// Least-squares fit of log E_h(t) over [lo_frac T, hi_frac T]. Samples below
/// 1e3 * machine epsilon * E_h(0) end the usable window (fit on the prefix).
inline DecayFit fit_decay(const EnergyTrace& trace, double lo_frac = 0.1, double hi_frac = 0.9) {
  const auto& t = trace.times;
  const auto& e = trace.energies;
  if (t.size() < 10 || e.size() != t.size())
    throw DomainError("fit_decay needs at least 10 samples");
  if (!(e.front() > 0.0)) throw DomainError("fit_decay needs a positive initial energy");

  const double T0 = t.front();
  const double span = t.back() - T0;
  const double floor = 1e3 * std::numeric_limits<double>::epsilon() * e.front();
  DecayFit fit;
  fit.t_start = T0 + lo_frac * span;
  fit.t_end = T0 + hi_frac * span;

  double st = 0, sy = 0, stt = 0, sty = 0, syy = 0;
  std::size_t m = 0;
  double last_t = fit.t_start;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] < fit.t_start || t[k] > fit.t_end) continue;
    if (!(e[k] > floor)) {
      fit.truncated = true;
      break;
    }
    const double y = std::log(e[k]);
    st += t[k];
    sy += y;
    stt += t[k] * t[k];
    sty += t[k] * y;
    syy += y * y;
    last_t = t[k];
    ++m;
  }
  if (m < 2) throw DomainError("fewer than two usable samples in the fit window");
  if (fit.truncated) fit.t_end = last_t;
  fit.samples = m;

  const double mm = double(m);
  const double stt_c = stt - st * st / mm;
  const double sty_c = sty - st * sy / mm;
  const double syy_c = syy - sy * sy / mm;
  const double slope = sty_c / stt_c;
  fit.sigma_fit = -slope;
  if (syy_c <= 1e-300 || syy_c <= 1e-24 * std::abs(syy)) {
    fit.r_squared = 1.0;
  } else {
    const double ss_res = std::max(syy_c - slope * sty_c, 0.0);
    fit.r_squared = std::clamp(1.0 - ss_res / syy_c, 0.0, 1.0);
  }
  return fit;
}

struct EnvelopeResult {
  bool pass = false;
  double min_margin = 0.0;  ///< min_k (M E0 e^{-sigma t_k} - E_k) / E0
  double worst_time = 0.0;
};

/// Checks E_h(t_k) <= bigM E_h(0) exp(-sigma t_k) at every sample, allowing
/// slack * E_h(0) for round-off.
inline EnvelopeResult envelope_check(const EnergyTrace& trace, double sigma, double bigM,
                                     double slack = 1e-9) {
  if (!(sigma >= 0.0) || !(bigM >= 1.0))
    throw DomainError("envelope_check needs sigma >= 0 and bigM >= 1");
  if (trace.energies.empty()) throw DomainError("empty energy trace");
  const double E0 = trace.energies.front();
  EnvelopeResult r;
  r.min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < trace.energies.size(); ++k) {
    const double t = trace.times[k] - trace.times.front();
    const double margin = (bigM * E0 * std::exp(-sigma * t) - trace.energies[k]) / E0;
    if (margin < r.min_margin) {
      r.min_margin = margin;
      r.worst_time = trace.times[k];
    }
  }
  r.pass = r.min_margin >= -slack;
  return r;
}

} // namespace piezoamp
