#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "piezoamp/orfd.hpp"
#include "piezoamp/simulation.hpp"

using namespace piezoamp;

TEST(Orfd, MassMatrixN2) {
  const OrfdSystem sys = build_system(table1_preset(), 0.0, 0.0, 2);
  Eigen::Matrix3d expected;
  expected << 2, 1, 0, 1, 2, 1, 0, 1, 1;
  EXPECT_TRUE(sys.M_mat.isApprox(expected / 4.0, 1e-15));
  EXPECT_DOUBLE_EQ(sys.h, 1.0 / 3.0);
}

TEST(Orfd, MatrixStructure) {
  const OrfdSystem sys = build_system(table1_preset(), 1e6, 1e9, 7);
  const Eigen::Index n = sys.nodes();
  EXPECT_TRUE(sys.M_mat.isApprox(sys.M_mat.transpose()));
  EXPECT_TRUE(sys.Ah_mat.isApprox(sys.Ah_mat.transpose()));
  EXPECT_EQ(Eigen::FullPivLU<Eigen::MatrixXd>(sys.B_mat).rank(), 1);
  EXPECT_DOUBLE_EQ(sys.Ah_mat(n - 1, n - 1), 1.0 / (sys.h * sys.h));
  EXPECT_DOUBLE_EQ(sys.Ah_mat(n - 1, n - 2), -1.0 / (sys.h * sys.h));
  EXPECT_TRUE(sys.A_op.topLeftCorner(2 * n, 2 * n).isZero(0.0));
  EXPECT_TRUE(sys.A_op.topRightCorner(2 * n, 2 * n).isIdentity(0.0));
  // Mechanical-velocity rows: M (v'') = -(alpha/rho) A v + (gamma beta/rho) A p - (xi1/rho) B v'.
  const auto& p = sys.params;
  const Eigen::MatrixXd MB = sys.M_mat * sys.A_op.block(2 * n, 0, n, n);
  EXPECT_TRUE(MB.isApprox(-(p.alpha / p.rho) * sys.Ah_mat, 1e-10));
  const Eigen::MatrixXd MD = sys.M_mat * sys.A_op.block(2 * n, 2 * n, n, n);
  EXPECT_TRUE(MD.isApprox(-(sys.xi1 / p.rho) * sys.B_mat, 1e-10));
  EXPECT_TRUE(sys.A_op.block(2 * n, 3 * n, n, n).isZero(0.0));
}

TEST(Orfd, RejectsBadInput) {
  EXPECT_THROW(build_system(table1_preset(), 1.0, 1.0, 1), DomainError);
  EXPECT_THROW(build_system(table1_preset(), -1.0, 1.0, 4), DomainError);
  MaterialParams bad;
  bad.beta = 0.0;
  EXPECT_THROW(build_system(bad, 1.0, 1.0, 4), DomainError);
}

TEST(Orfd, AverageAndDifference) {
  const std::vector<double> c{2.5, 2.5, 2.5, 2.5};
  const auto a = average_and_difference(c, 0.1);
  for (double x : a.average) EXPECT_DOUBLE_EQ(x, 2.5);
  for (double x : a.difference) EXPECT_DOUBLE_EQ(x, 0.0);

  const double h = 0.125;
  std::vector<double> ramp;
  for (int j = 0; j < 9; ++j) ramp.push_back(j * h);
  for (double x : average_and_difference(ramp, h).difference) EXPECT_NEAR(x, 1.0, 1e-14);

  const std::vector<double> tent{0.0, 1.0, 0.0};
  const auto t = average_and_difference(tent, 1.0 / 3.0);
  ASSERT_EQ(t.average.size(), 2u);
  EXPECT_DOUBLE_EQ(t.average[0], 0.5);
  EXPECT_DOUBLE_EQ(t.average[1], 0.5);
  EXPECT_NEAR(t.difference[0], 3.0, 1e-14);
  EXPECT_NEAR(t.difference[1], -3.0, 1e-14);
  EXPECT_THROW(average_and_difference(std::vector<double>{1.0}, 1.0), DomainError);
}

TEST(Orfd, EnergyBasics) {
  const OrfdSystem sys = build_system(table1_preset(), 1e6, 1e9, 10);
  EXPECT_EQ(discrete_energy(sys, StateVector::zero(sys.nodes())), 0.0);
  std::mt19937 rng(5);
  std::normal_distribution<double> g;
  StateVector s = StateVector::zero(sys.nodes());
  for (Eigen::Index i = 0; i < sys.nodes(); ++i) {
    s.v[i] = g(rng);
    s.p[i] = g(rng);
    s.v_dot[i] = g(rng);
    s.p_dot[i] = g(rng);
  }
  const double e = discrete_energy(sys, s);
  EXPECT_GT(e, 0.0);
  const StateVector s3 = StateVector::from_flat(3.0 * s.flatten());
  EXPECT_NEAR(discrete_energy(sys, s3), 9.0 * e, 1e-12 * e);
  EXPECT_THROW(discrete_energy(sys, StateVector::zero(3)), DomainError);

  // Energy-normalized coordinates carry the same energy.
  const auto ef = energy_form<long double>(sys);
  const auto z = ef.to_energy(s.flatten().cast<long double>());
  EXPECT_NEAR(double(ef.energy(z)), e, 1e-12 * e);
  const Eigen::VectorXd back = ef.from_energy(z).cast<double>();
  EXPECT_TRUE(back.isApprox(s.flatten(), 1e-12));
}

TEST(Orfd, EnergyFormIsSimilarToOperator) {
  MaterialParams p;
  p.rho = 2.0;
  p.mu = 1.0;
  p.alpha = 3.0;
  p.gamma = 0.5;
  p.beta = 1.5;
  const OrfdSystem sys = build_system(p, 0.7, 1.3, 5);
  const auto ef = energy_form<long double>(sys);
  // op = T A T^-1 with T = to_energy: check op T s = T A s on random s.
  std::mt19937 rng(9);
  std::normal_distribution<double> g;
  for (int k = 0; k < 5; ++k) {
    Eigen::VectorXd s(sys.dim());
    for (Eigen::Index i = 0; i < s.size(); ++i) s[i] = g(rng);
    const Eigen::VectorXd lhs = (ef.op * ef.to_energy(s.cast<long double>())).cast<double>();
    const Eigen::VectorXd rhs = ef.to_energy((sys.A_op * s).cast<long double>()).cast<double>();
    EXPECT_TRUE(lhs.isApprox(rhs, 1e-12));
  }
}

TEST(Orfd, HatEnergyMatchesContinuousEnergy) {
  const MaterialParams p = table1_preset();
  const int N = 80;
  const OrfdSystem sys = build_system(p, 1e6, 1e9, N);
  const StateVector s = hat_initial_condition(N, 0.5);
  const double a = std::floor(0.5 * (N + 1)) * sys.h;
  const double exact = oracle::hat_energy(p.alpha, p.gamma, p.beta, p.L, a);
  EXPECT_NEAR(discrete_energy(sys, s), exact, 0.02 * exact);
}

TEST(Orfd, FunctionalBounds) {
  const MaterialParams p = table1_preset();
  const DerivedConstants d = derive_constants(p);
  const OrfdSystem sys = build_system(p, 1e6, 1e9, 12);
  EXPECT_EQ(discrete_F(sys, hat_initial_condition(12, 0.5)), 0.0);
  std::mt19937 rng(17);
  std::normal_distribution<double> g;
  for (int k = 0; k < 200; ++k) {
    StateVector s = StateVector::zero(sys.nodes());
    for (Eigen::Index i = 0; i < sys.nodes(); ++i) {
      s.v[i] = g(rng);
      s.p[i] = g(rng) * 1e-3;
      s.v_dot[i] = g(rng) * 1e3;
      s.p_dot[i] = g(rng) * 1e6;
    }
    const double e = discrete_energy(sys, s);
    EXPECT_LE(std::abs(discrete_F(sys, s)), p.L * d.eta * e + 1e-6 * e);
  }
}

TEST(Orfd, BoundaryDissipation) {
  const OrfdSystem sys = build_system(table1_preset(), 2.0, 3.0, 4);
  StateVector s = StateVector::zero(sys.nodes());
  s.v_dot[4] = 5.0;
  s.p_dot[4] = -7.0;
  s.v_dot[1] = 100.0;
  EXPECT_DOUBLE_EQ(boundary_dissipation(sys, s), 2.0 * 25.0 + 3.0 * 49.0);
}
