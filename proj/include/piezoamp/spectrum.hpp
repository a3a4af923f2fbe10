#pragma once

// Spectrum of the first-order ORFD operator and sweeps of its spectral abscissa
// over the amplifier plane.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <limits>
#include <random>
#include <sstream>
#include <thread>
#include <vector>

#include "piezoamp/design.hpp"
#include "piezoamp/error.hpp"
#include "piezoamp/orfd.hpp"

namespace piezoamp {

using Complex = std::complex<double>;

/// Parlett-Reinsch diagonal balancing with power-of-two scalings (similarity, so
/// the spectrum is unchanged up to rounding). Returns the scaling vector d with
/// balanced = D^-1 A D.
template <class T>
VectorT<T> balance(MatrixT<T>& A) {
  const Eigen::Index n = A.rows();
  VectorT<T> d = VectorT<T>::Ones(n);
  const T radix = T(2);
  bool done = false;
  while (!done) {
    done = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      T c = 0, r = 0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(A(j, i));
        r += std::abs(A(i, j));
      }
      if (c == T(0) || r == T(0)) continue;
      T g = r / radix;
      T f = T(1);
      const T s = c + r;
      while (c < g) {
        f *= radix;
        c *= radix * radix;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= radix * radix;
      }
      if ((c + r) / f < T(0.95) * s) {
        done = false;
        d(i) *= f;
        A.row(i) /= f;
        A.col(i) *= f;
      }
    }
  }
  return d;
}

enum class EigenRoute {
  /// Energy-normalized similarity of A_op, balanced, Hessenberg + Francis QR in
  /// 80-bit extended precision.
  EnergyExtended,
  /// A_op itself, balanced, Hessenberg + Francis QR in double precision.
  BalancedOperator,
};

struct SpectrumOptions {
  EigenRoute route = EigenRoute::EnergyExtended;
  int residual_checks = 10;  ///< eigenpairs verified by inverse iteration (0 disables)
  unsigned seed = 12345;
};

struct SpectrumResult {
  std::vector<Complex> eigenvalues;
  double max_real = -std::numeric_limits<double>::infinity();
  double residual_max = 0.0;  ///< max ||A x - mu x|| / ||x|| over the checked pairs
  double op_norm = 0.0;       ///< 1-norm of A_op
  bool converged = true;
};

namespace detail {

template <class T>
std::vector<Complex> qr_eigenvalues(MatrixT<T> A, bool& converged) {
  balance(A);
  Eigen::EigenSolver<MatrixT<T>> es(A, false);
  converged = es.info() == Eigen::Success;
  std::vector<Complex> out;
  out.reserve(static_cast<std::size_t>(A.rows()));
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const auto& l = es.eigenvalues()[i];
    out.emplace_back(static_cast<double>(l.real()), static_cast<double>(l.imag()));
  }
  return out;
}

inline double one_norm(const Eigen::MatrixXd& A) { return A.cwiseAbs().colwise().sum().maxCoeff(); }

} // namespace detail

/// Recovers an eigenvector for mu by shifted inverse iteration on A and returns
/// ||A x - mu x|| / ||x||.
inline double eigen_residual(const Eigen::MatrixXd& A, Complex mu, int iterations = 3) {
  const Eigen::Index n = A.rows();
  const double scale = std::max(std::abs(mu), 1.0);
  const Complex shift = mu + Complex(1e-11, 1e-11) * scale;
  Eigen::MatrixXcd S = A.cast<Complex>();
  S.diagonal().array() -= shift;
  const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(S);
  Eigen::VectorXcd x = Eigen::VectorXcd::Ones(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = Complex(1.0, 0.5 * std::sin(double(i)));
  for (int it = 0; it < iterations; ++it) {
    x = lu.solve(x);
    const double nx = x.norm();
    if (!(nx > 0.0) || !std::isfinite(nx)) break;
    x /= nx;
  }
  const Eigen::VectorXcd r = A.cast<Complex>() * x - mu * x;
  return r.norm() / x.norm();
}

/// Full spectrum of sys.A_op.
inline SpectrumResult eigenvalues(const OrfdSystem& sys, const SpectrumOptions& opt = {}) {
  SpectrumResult res;
  res.op_norm = detail::one_norm(sys.A_op);
  bool converged = false;
  if (opt.route == EigenRoute::EnergyExtended) {
    res.eigenvalues = detail::qr_eigenvalues(energy_form<long double>(sys).op, converged);
  } else {
    res.eigenvalues = detail::qr_eigenvalues<double>(sys.A_op, converged);
  }
  res.converged = converged;
  if (!converged) {
    std::ostringstream os;
    os << "eigensolver did not converge (N = " << sys.N << ", xi1 = " << sys.xi1
       << ", xi2 = " << sys.xi2 << ")";
    throw NumericalError(os.str());
  }
  for (const auto& l : res.eigenvalues) res.max_real = std::max(res.max_real, l.real());

  if (opt.residual_checks > 0 && !res.eigenvalues.empty()) {
    std::mt19937 rng(opt.seed);
    std::uniform_int_distribution<std::size_t> pick(0, res.eigenvalues.size() - 1);
    for (int k = 0; k < opt.residual_checks; ++k) {
      const double r = eigen_residual(sys.A_op, res.eigenvalues[pick(rng)]);
      res.residual_max = std::max(res.residual_max, r);
    }
  }
  return res;
}

/// True when every eigenvalue with |Im| above tol * scale has its conjugate in the
/// list (within tol * scale), where scale is the largest modulus.
inline bool conjugate_closed(const std::vector<Complex>& eig, double tol) {
  double scale = 0.0;
  for (const auto& l : eig) scale = std::max(scale, std::abs(l));
  const double eps = tol * std::max(scale, 1.0);
  for (const auto& l : eig) {
    if (std::abs(l.imag()) <= eps) continue;
    const Complex c = std::conj(l);
    const bool found = std::any_of(eig.begin(), eig.end(),
                                   [&](const Complex& m) { return std::abs(m - c) <= eps; });
    if (!found) return false;
  }
  return true;
}

/// Power-iteration estimate of the largest eigenvalue modulus of A.
inline double spectral_radius_estimate(const Eigen::MatrixXd& A, int iterations = 200) {
  const Eigen::Index n = A.rows();
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = 1.0 + 0.1 * std::cos(3.0 * double(i));
  x.normalize();
  double est = 0.0;
  for (int it = 0; it < iterations; ++it) {
    // Two steps per iteration so complex-conjugate dominant pairs do not oscillate.
    Eigen::VectorXd y = A * (A * x);
    const double ny = y.norm();
    if (!(ny > 0.0) || !std::isfinite(ny)) break;
    est = std::sqrt(ny);
    x = y / ny;
  }
  return est;
}

/// max Re(mu_k) over a grid of amplifier pairs. max_real is row-major with rows
/// indexed by xi1 and columns by xi2.
struct SpectrumGrid {
  std::vector<double> xi1_values;
  std::vector<double> xi2_values;
  std::vector<double> max_real;
  std::vector<bool> in_design_box;
  std::vector<bool> failed;
  FeedbackDesign design;

  [[nodiscard]] std::size_t index(std::size_t i, std::size_t j) const {
    return i * xi2_values.size() + j;
  }
  [[nodiscard]] double at(std::size_t i, std::size_t j) const { return max_real[index(i, j)]; }
};

struct SweepOptions {
  int N = 80;
  double epsilon = 1.0;       ///< used for the design-box annotation
  unsigned threads = 0;       ///< 0: hardware concurrency
  SpectrumOptions spectrum{EigenRoute::EnergyExtended, 0, 12345};
};

/// Log-spaced grid of `count` points between 10^lo_exp and 10^hi_exp.
inline std::vector<double> log_grid(double lo_exp, double hi_exp, int count) {
  if (count < 1) throw DomainError("grid needs at least one point");
  std::vector<double> g(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double e = count == 1 ? lo_exp : lo_exp + (hi_exp - lo_exp) * i / (count - 1);
    g[static_cast<std::size_t>(i)] = std::pow(10.0, e);
  }
  return g;
}

/// Evaluates every cell independently; cells are handed to worker threads through
/// an atomic counter and written to their own slot, so the result does not depend
/// on scheduling. Eigensolver failures mark the cell as failed (max_real = NaN).
inline SpectrumGrid sweep(const MaterialParams& p, const std::vector<double>& xi1_grid,
                          const std::vector<double>& xi2_grid, const SweepOptions& opt = {}) {
  if (xi1_grid.empty() || xi2_grid.empty()) throw DomainError("sweep grids must be nonempty");
  const DerivedConstants d = derive_constants(p);

  SpectrumGrid grid;
  grid.xi1_values = xi1_grid;
  grid.xi2_values = xi2_grid;
  grid.design = amplifier_intervals(opt.epsilon, d, p);
  const std::size_t cells = xi1_grid.size() * xi2_grid.size();
  grid.max_real.assign(cells, std::numeric_limits<double>::quiet_NaN());
  grid.in_design_box.assign(cells, false);
  grid.failed.assign(cells, false);

  std::vector<char> failed(cells, 0);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < cells; k = next++) {
      const double x1 = xi1_grid[k / xi2_grid.size()];
      const double x2 = xi2_grid[k % xi2_grid.size()];
      try {
        const OrfdSystem sys = build_system(p, x1, x2, opt.N);
        grid.max_real[k] = eigenvalues(sys, opt.spectrum).max_real;
      } catch (const NumericalError&) {
        failed[k] = 1;
      }
    }
  };
  unsigned threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, cells));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  for (std::size_t k = 0; k < cells; ++k) {
    grid.failed[k] = failed[k] != 0;
    grid.in_design_box[k] = grid.design.c1.contains(xi1_grid[k / xi2_grid.size()]) &&
                            grid.design.c2.contains(xi2_grid[k % xi2_grid.size()]);
  }
  return grid;
}

/// Reference 7 x 6 grid of spectral abscissae for the preset material at N = 80.
///
/// Row labels run over the charge amplifier xi2 and column labels over the strain
/// amplifier xi1. With that reading the design box covers exactly the columns
/// inside (c1-, c1+) and the rows inside (c2-, c2+). cell_amplifiers() resolves a
/// (row, column) cell to (xi1, xi2).
struct ReferenceGrid {
  std::vector<double> row_labels{1e-7, 1e-5, 1e-3, 1e6, 1e9, 1e10, 1e11};
  std::vector<double> col_labels{1e5, 3.1622776601683795e5, 1e6, 3.1622776601683795e6, 1e7,
                                 3.1622776601683795e7};
  std::vector<std::vector<double>> abscissa{
      {-0.1, -0.1, -0.1, -0.1, -0.1, -0.1},
      {-10, -10, -10, -10, -10, -10},
      {-17, -53, -177, -421, -101.9, -32},
      {-17, -53, -177, -421, -101.9, -31},
      {-17, -53, -177, -421, -101, -30},
      {-17, -52, -100, -100, -97, -23},
      {-10, -10, -10, -10, -10, -9},
  };

  struct Amplifiers {
    double xi1;
    double xi2;
  };

  [[nodiscard]] Amplifiers cell_amplifiers(std::size_t row, std::size_t col) const {
    return {col_labels.at(col), row_labels.at(row)};
  }

  /// Locates a cell by its (row label, column label) pair.
  [[nodiscard]] Amplifiers cell_amplifiers_by_label(double row_label, double col_label) const {
    auto find = [](const std::vector<double>& v, double x) {
      for (std::size_t i = 0; i < v.size(); ++i)
        if (std::abs(std::log10(v[i]) - std::log10(x)) < 1e-9) return i;
      throw DomainError("label not present in the table");
    };
    return cell_amplifiers(find(row_labels, row_label), find(col_labels, col_label));
  }

  /// Amplifier axes for sweep(): xi1 over the columns, xi2 over the rows.
  [[nodiscard]] std::vector<double> xi1_axis() const { return col_labels; }
  [[nodiscard]] std::vector<double> xi2_axis() const { return row_labels; }
};

} // namespace piezoamp
