#pragma once

// Order-reduced finite-difference (ORFD) semi-discretization of the closed-loop beam.
//
// Nodes x_j = j h, j = 0..N+1, h = L/(N+1). The clamped node x_0 carries no unknown,
// so each field has N+1 unknowns. Odd derivatives live on the midpoints x_{j+1/2}:
// with the averaging operator S and difference operator D (both (N+1) x (N+1),
// mapping nodes 1..N+1 to midpoints 1/2..N+1/2) the mass and stiffness matrices are
//   M = S^T S,   A_h = D^T D,
// which produces the (1,2,1)/4 and (-1,2,-1)/h^2 stencils with the free-end rows
// (1,1)/4 and (-1,1)/h^2. The semi-discrete system is
//   (C1 (x) M) q'' + (C2 (x) A_h) q + (C3 (x) B) q' = 0,   q = (v, p),
// with B = e_{N+1} e_{N+1}^T / h injecting the boundary damping at the tip.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <sstream>
#include <vector>

#include "piezoamp/error.hpp"
#include "piezoamp/material.hpp"

namespace piezoamp {

template <class T>
using MatrixT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using VectorT = Eigen::Matrix<T, Eigen::Dynamic, 1>;

/// Nodal state at nodes 1..N+1. Flattened layout is (v, p, v_dot, p_dot).
struct StateVector {
  Eigen::VectorXd v;
  Eigen::VectorXd p;
  Eigen::VectorXd v_dot;
  Eigen::VectorXd p_dot;

  [[nodiscard]] Eigen::Index nodes() const { return v.size(); }

  [[nodiscard]] Eigen::VectorXd flatten() const {
    const Eigen::Index n = v.size();
    Eigen::VectorXd s(4 * n);
    s << v, p, v_dot, p_dot;
    return s;
  }

  static StateVector from_flat(const Eigen::VectorXd& s) {
    if (s.size() % 4 != 0) throw DomainError("flattened state length must be a multiple of 4");
    const Eigen::Index n = s.size() / 4;
    return {s.segment(0, n), s.segment(n, n), s.segment(2 * n, n), s.segment(3 * n, n)};
  }

  static StateVector zero(Eigen::Index n) {
    return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n),
            Eigen::VectorXd::Zero(n)};
  }
};

struct OrfdSystem {
  MaterialParams params;
  int N = 0;
  double h = 0.0;
  double xi1 = 0.0;
  double xi2 = 0.0;
  Eigen::Matrix2d C1;
  Eigen::Matrix2d C2;
  Eigen::Matrix2d C3;
  Eigen::MatrixXd M_mat;   ///< (N+1)x(N+1) mass matrix
  Eigen::MatrixXd Ah_mat;  ///< (N+1)x(N+1) central-difference matrix [1/m^2]
  Eigen::MatrixXd B_mat;   ///< (N+1)x(N+1) boundary matrix [1/m]
  Eigen::MatrixXd A_op;    ///< 4(N+1)x4(N+1) first-order operator

  [[nodiscard]] Eigen::Index nodes() const { return N + 1; }
  [[nodiscard]] Eigen::Index dim() const { return 4 * (N + 1); }
};

namespace detail {

template <class T>
MatrixT<T> mass_matrix(Eigen::Index n) {
  MatrixT<T> M = MatrixT<T>::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    M(i, i) = T(2);
    if (i + 1 < n) M(i, i + 1) = M(i + 1, i) = T(1);
  }
  M(n - 1, n - 1) = T(1);
  return M / T(4);
}

template <class T>
MatrixT<T> difference_matrix(Eigen::Index n, T h) {
  MatrixT<T> A = MatrixT<T>::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    A(i, i) = T(2);
    if (i + 1 < n) A(i, i + 1) = A(i + 1, i) = T(-1);
  }
  A(n - 1, n - 1) = T(1);
  return A / (h * h);
}

inline void check_state(const OrfdSystem& sys, const StateVector& s) {
  const Eigen::Index n = sys.nodes();
  if (s.v.size() != n || s.p.size() != n || s.v_dot.size() != n || s.p_dot.size() != n) {
    std::ostringstream os;
    os << "state dimension mismatch: expected " << n << " nodes per field";
    throw DomainError(os.str());
  }
}

} // namespace detail

/// Assembles M, A_h, B, the coefficient matrices and the first-order operator
///   A_op = [ 0                         I                        ]
///          [ -(C1^-1 C2) (x) (M^-1 A_h)  -(C1^-1 C3) (x) (M^-1 B) ].
/// M^-1 products come from one LDLT factorization of M.
inline OrfdSystem build_system(const MaterialParams& p, double xi1, double xi2, int N) {
  p.validate();
  if (N < 2) {
    std::ostringstream os;
    os << "ORFD requires N >= 2 interior nodes (got " << N << ")";
    throw DomainError(os.str());
  }
  if (!(xi1 >= 0.0) || !(xi2 >= 0.0) || !std::isfinite(xi1) || !std::isfinite(xi2))
    throw DomainError("feedback amplifiers must be finite and >= 0");

  OrfdSystem sys;
  sys.params = p;
  sys.N = N;
  sys.h = p.L / (N + 1);
  sys.xi1 = xi1;
  sys.xi2 = xi2;
  sys.C1 << p.rho, 0.0, 0.0, p.mu;
  sys.C2 << p.alpha, -p.gamma * p.beta, -p.gamma * p.beta, p.beta;
  sys.C3 << xi1, 0.0, 0.0, xi2;

  const Eigen::Index n = N + 1;
  sys.M_mat = detail::mass_matrix<double>(n);
  sys.Ah_mat = detail::difference_matrix<double>(n, sys.h);
  sys.B_mat = Eigen::MatrixXd::Zero(n, n);
  sys.B_mat(n - 1, n - 1) = 1.0 / sys.h;

  if (sys.C1.determinant() == 0.0) throw DomainError("singular material mass matrix C1");
  const Eigen::Matrix2d C1inv = sys.C1.inverse();
  const Eigen::Matrix2d K = C1inv * sys.C2;
  const Eigen::Matrix2d Dmp = C1inv * sys.C3;

  const Eigen::LDLT<Eigen::MatrixXd> mass(sys.M_mat);
  if (mass.info() != Eigen::Success) throw NumericalError("mass matrix factorization failed");
  const Eigen::MatrixXd MinvA = mass.solve(sys.Ah_mat);
  const Eigen::MatrixXd MinvB = mass.solve(sys.B_mat);

  sys.A_op = Eigen::MatrixXd::Zero(4 * n, 4 * n);
  sys.A_op.block(0, 2 * n, 2 * n, 2 * n).setIdentity();
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      sys.A_op.block((2 + a) * n, b * n, n, n) = -K(a, b) * MinvA;
      sys.A_op.block((2 + a) * n, (2 + b) * n, n, n) = -Dmp(a, b) * MinvB;
    }
  }
  return sys;
}

struct MidpointSamples {
  std::vector<double> average;     ///< (v_{j+1} + v_j) / 2
  std::vector<double> difference;  ///< (v_{j+1} - v_j) / h
};

/// Midpoint averages and scaled differences of consecutive samples.
inline MidpointSamples average_and_difference(std::span<const double> v, double h) {
  if (v.size() < 2) throw DomainError("average_and_difference needs at least two samples");
  MidpointSamples out;
  out.average.reserve(v.size() - 1);
  out.difference.reserve(v.size() - 1);
  for (std::size_t j = 0; j + 1 < v.size(); ++j) {
    out.average.push_back(0.5 * (v[j + 1] + v[j]));
    out.difference.push_back((v[j + 1] - v[j]) / h);
  }
  return out;
}

namespace detail {

// Prepends the clamped value v_0 = 0 to nodal samples 1..N+1.
inline std::vector<double> with_clamped_node(const Eigen::VectorXd& x) {
  std::vector<double> out(static_cast<std::size_t>(x.size()) + 1, 0.0);
  for (Eigen::Index i = 0; i < x.size(); ++i) out[static_cast<std::size_t>(i) + 1] = x[i];
  return out;
}

} // namespace detail

/// E_h = (h/2) <(C1 (x) M) q', q'> + (h/2) <(C2 (x) A_h) q, q>.
inline double discrete_energy(const OrfdSystem& sys, const StateVector& s) {
  detail::check_state(sys, s);
  const auto& M = sys.M_mat;
  const auto& A = sys.Ah_mat;
  const auto& p = sys.params;
  const double kinetic = p.rho * s.v_dot.dot(M * s.v_dot) + p.mu * s.p_dot.dot(M * s.p_dot);
  const Eigen::VectorXd Av = A * s.v;
  const Eigen::VectorXd Ap = A * s.p;
  const double potential = sys.C2(0, 0) * s.v.dot(Av) + 2.0 * sys.C2(0, 1) * s.v.dot(Ap) +
                           sys.C2(1, 1) * s.p.dot(Ap);
  return 0.5 * sys.h * (kinetic + potential);
}

/// Midpoint quadrature of F = int_0^L (rho v_t x v_x + mu p_t x p_x) dx using the
/// averaged velocities and differenced positions.
inline double discrete_F(const OrfdSystem& sys, const StateVector& s) {
  detail::check_state(sys, s);
  const double h = sys.h;
  const auto v = average_and_difference(detail::with_clamped_node(s.v), h);
  const auto p = average_and_difference(detail::with_clamped_node(s.p), h);
  const auto vd = average_and_difference(detail::with_clamped_node(s.v_dot), h);
  const auto pd = average_and_difference(detail::with_clamped_node(s.p_dot), h);
  double acc = 0.0;
  for (std::size_t j = 0; j < v.difference.size(); ++j) {
    const double x = (static_cast<double>(j) + 0.5) * h;
    acc += x * (sys.params.rho * vd.average[j] * v.difference[j] +
                sys.params.mu * pd.average[j] * p.difference[j]);
  }
  return h * acc;
}

/// Instantaneous boundary dissipation xi1 |v_dot_{N+1}|^2 + xi2 |p_dot_{N+1}|^2, so that
/// dE_h/dt = -boundary_dissipation along exact trajectories.
inline double boundary_dissipation(const OrfdSystem& sys, const StateVector& s) {
  detail::check_state(sys, s);
  const Eigen::Index last = sys.nodes() - 1;
  return sys.xi1 * s.v_dot[last] * s.v_dot[last] + sys.xi2 * s.p_dot[last] * s.p_dot[last];
}

/// The first-order operator in energy-normalized coordinates.
///
/// With Cholesky factors C1 (x) M = Rm^T Rm and C2 (x) A_h = Rk^T Rk, the change of
/// variables z = (Rk q, Rm q') turns A_op into the similar matrix
///   [ 0     G    ]      G = Rk Rm^-1,
///   [ -G^T  -Dhat ]     Dhat = Rm^-T (C3 (x) B) Rm^-1  (rank <= 2, PSD),
/// and E_h = (h/2) |z|^2. The conservative part is exactly skew-symmetric, which
/// keeps eigenvalues and propagators well conditioned despite the 1e9 spread
/// between the mechanical and electrical wave speeds.
template <class T>
struct EnergyForm {
  MatrixT<T> op;        ///< 4n x 4n similar copy of A_op
  MatrixT<T> R_mass;    ///< upper Cholesky factor of M
  MatrixT<T> R_stiff;   ///< upper Cholesky factor of A_h
  Eigen::Matrix<T, 2, 2> R_c2;  ///< upper Cholesky factor of C2
  T sqrt_rho = T(0);
  T sqrt_mu = T(0);
  T h = T(0);
  Eigen::Index n = 0;

  /// Maps a flattened (v, p, v_dot, p_dot) state to z.
  [[nodiscard]] VectorT<T> to_energy(const VectorT<T>& s) const {
    VectorT<T> z(4 * n);
    const VectorT<T> Rv = R_stiff * s.segment(0, n);
    const VectorT<T> Rp = R_stiff * s.segment(n, n);
    z.segment(0, n) = R_c2(0, 0) * Rv + R_c2(0, 1) * Rp;
    z.segment(n, n) = R_c2(1, 1) * Rp;
    z.segment(2 * n, n) = sqrt_rho * (R_mass * s.segment(2 * n, n));
    z.segment(3 * n, n) = sqrt_mu * (R_mass * s.segment(3 * n, n));
    return z;
  }

  /// Inverse of to_energy.
  [[nodiscard]] VectorT<T> from_energy(const VectorT<T>& z) const {
    VectorT<T> s(4 * n);
    const auto Rs = R_stiff.template triangularView<Eigen::Upper>();
    const auto Rm = R_mass.template triangularView<Eigen::Upper>();
    const VectorT<T> Rp = z.segment(n, n) / R_c2(1, 1);
    const VectorT<T> Rv = (z.segment(0, n) - R_c2(0, 1) * Rp) / R_c2(0, 0);
    s.segment(0, n) = Rs.solve(Rv);
    s.segment(n, n) = Rs.solve(Rp);
    s.segment(2 * n, n) = Rm.solve(VectorT<T>(z.segment(2 * n, n) / sqrt_rho));
    s.segment(3 * n, n) = Rm.solve(VectorT<T>(z.segment(3 * n, n) / sqrt_mu));
    return s;
  }

  [[nodiscard]] T energy(const VectorT<T>& z) const { return h / T(2) * z.squaredNorm(); }
};

template <class T>
EnergyForm<T> energy_form(const OrfdSystem& sys) {
  const auto& p = sys.params;
  const Eigen::Index n = sys.nodes();
  const T h = T(p.L) / T(sys.N + 1);

  EnergyForm<T> ef;
  ef.n = n;
  ef.h = h;
  ef.sqrt_rho = std::sqrt(T(p.rho));
  ef.sqrt_mu = std::sqrt(T(p.mu));

  const MatrixT<T> M = detail::mass_matrix<T>(n);
  const MatrixT<T> A = detail::difference_matrix<T>(n, h);
  Eigen::LLT<MatrixT<T>> llt_m(M);
  Eigen::LLT<MatrixT<T>> llt_a(A);
  if (llt_m.info() != Eigen::Success || llt_a.info() != Eigen::Success)
    throw NumericalError("Cholesky factorization of mass/stiffness failed");
  ef.R_mass = llt_m.matrixU();
  ef.R_stiff = llt_a.matrixU();

  Eigen::Matrix<T, 2, 2> C2;
  C2 << T(p.alpha), -T(p.gamma) * T(p.beta), -T(p.gamma) * T(p.beta), T(p.beta);
  Eigen::LLT<Eigen::Matrix<T, 2, 2>> llt_c2(C2);
  if (llt_c2.info() != Eigen::Success) throw NumericalError("C2 is not positive definite");
  ef.R_c2 = llt_c2.matrixU();

  const MatrixT<T> Rm_inv =
      ef.R_mass.template triangularView<Eigen::Upper>().solve(MatrixT<T>::Identity(n, n));
  const MatrixT<T> g = ef.R_stiff * Rm_inv;
  Eigen::Matrix<T, 2, 2> coupling = ef.R_c2;
  coupling.col(0) /= ef.sqrt_rho;
  coupling.col(1) /= ef.sqrt_mu;

  const VectorT<T> b = Rm_inv.row(n - 1).transpose();
  const MatrixT<T> tip = b * b.transpose() / h;

  ef.op = MatrixT<T>::Zero(4 * n, 4 * n);
  for (int a = 0; a < 2; ++a)
    for (int c = 0; c < 2; ++c) ef.op.block(a * n, (2 + c) * n, n, n) = coupling(a, c) * g;
  ef.op.block(2 * n, 0, 2 * n, 2 * n) = -ef.op.block(0, 2 * n, 2 * n, 2 * n).transpose();
  ef.op.block(2 * n, 2 * n, n, n) = -(T(sys.xi1) / T(p.rho)) * tip;
  ef.op.block(3 * n, 3 * n, n, n) = -(T(sys.xi2) / T(p.mu)) * tip;
  return ef;
}

} // namespace piezoamp
