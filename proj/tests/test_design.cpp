#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "piezoamp/design.hpp"

using namespace piezoamp;

namespace {

struct Preset : ::testing::Test {
  MaterialParams p = table1_preset();
  DerivedConstants d = derive_constants(p);
  double thr = 1.0 / (2.0 * d.eta);
};

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

} // namespace

TEST_F(Preset, F1Examples) {
  EXPECT_EQ(f1(0.0, 1.0, d, p), 0.0);
  EXPECT_GT(f1(p.rho / (2 * d.eta), 1.0, d, p), thr);
  const FeedbackDesign fd = amplifier_intervals(1.0, d, p);
  EXPECT_LT(rel(f1(fd.c1.hi, 1.0, d, p), thr), 1e-9);
  EXPECT_LT(rel(f1(fd.c1.lo, 1.0, d, p), thr), 1e-9);
}

TEST_F(Preset, F2Examples) {
  EXPECT_EQ(f2(0.0, 1.0, d, p), 0.0);
  EXPECT_GT(f2(p.mu / (2 * d.eta), 1.0, d, p), thr);
  const FeedbackDesign fd = amplifier_intervals(1.0, d, p);
  EXPECT_LT(rel(f2(fd.c2.lo, 1.0, d, p), thr), 1e-9);
  EXPECT_LT(rel(f2(fd.c2.hi, 1.0, d, p), thr), 1e-9);
}

TEST_F(Preset, H1H2Examples) {
  const Interval r = h1_roots(d, p);
  EXPECT_NEAR(h1(r.lo, d, p), 0.0, 1e-6);
  EXPECT_NEAR(h1(r.hi, d, p), 0.0, 1e-6);
  const double h1_star = h1(p.rho / (2 * d.eta), d, p);
  EXPECT_NEAR(h1_star, (4 * d.alpha1 * d.eta * d.eta - p.rho) / p.rho, 1e-12);
  EXPECT_NEAR(h1_star, 3.0, 1e-6);
  const double h2_star = h2(p.mu / (2 * d.eta), d, p);
  EXPECT_NEAR(h2_star, 4.2e-17, 0.05e-17);
  EXPECT_THROW(h1(0.0, d, p), DomainError);
  const Interval a = h2_asymptotes(d, p);
  EXPECT_THROW(h2(0.5 * a.lo, d, p), DomainError);
  EXPECT_THROW(h2(2.0 * a.hi, d, p), DomainError);
}

TEST_F(Preset, EpsilonBounds) {
  const Interval eb = epsilon_bounds(d, p);
  EXPECT_NEAR(eb.hi, 3.0, 1e-6);
  EXPECT_NEAR(eb.lo, 4.2e-17, 0.05e-17);
  EXPECT_LT(eb.lo, 1.0 / 3.0);
  EXPECT_GE(eb.hi, 3.0);
}

TEST(Design, EpsilonBoundsSanityForRandomMaterials) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> e(-2.0, 2.0);
  for (int k = 0; k < 500; ++k) {
    MaterialParams p;
    p.rho = std::pow(10.0, 3 + e(rng));
    p.mu = std::pow(10.0, -6 + e(rng));
    p.alpha = std::pow(10.0, 9 + e(rng));
    p.beta = std::pow(10.0, 12 + e(rng));
    p.gamma = std::sqrt(p.alpha / p.beta) * std::pow(10.0, -1 + e(rng) / 4);
    const DerivedConstants d = derive_constants(p);
    const Interval eb = epsilon_bounds(d, p);
    EXPECT_LT(eb.lo, 1.0 / 3.0);
    EXPECT_GE(eb.hi, 3.0 * (1 - 1e-12));
  }
}

TEST_F(Preset, PresetIntervals) {
  const FeedbackDesign fd = amplifier_intervals(1.0, d, p);
  EXPECT_LT(rel(fd.c1.lo, 7.17e5), 0.01);
  EXPECT_LT(rel(fd.c1.hi, 4.18e6), 0.01);
  EXPECT_LT(rel(fd.c2.lo, 1.02e-4), 0.01);
  EXPECT_LT(rel(fd.c2.hi, 9.78e9), 0.01);
  EXPECT_DOUBLE_EQ(fd.bigM, 3.0);
  EXPECT_NEAR(fd.sigma, d.sigma_max, 1e-12 * d.sigma_max);
  EXPECT_THROW(amplifier_intervals(5.0, d, p), DomainError);
  EXPECT_THROW(amplifier_intervals(0.0, d, p), DomainError);
}

TEST_F(Preset, LyapunovRate) {
  const LyapunovRate r = lyapunov_rate(1.0 / (2 * d.eta * p.L), d, p);
  EXPECT_NEAR(r.sigma, d.sigma_max, 1e-12 * d.sigma_max);
  EXPECT_NEAR(r.sigma, 102.04, 0.005 * 102.04);
  EXPECT_DOUBLE_EQ(r.bigM, 3.0);
  const LyapunovRate small = lyapunov_rate(1e-12, d, p);
  EXPECT_NEAR(small.sigma, 0.0, 1e-11);
  EXPECT_NEAR(small.bigM, 1.0, 1e-12);
  EXPECT_THROW(lyapunov_rate(0.0, d, p), DomainError);
  EXPECT_THROW(lyapunov_rate(1.0 / (d.eta * p.L), d, p), DomainError);
}

TEST_F(Preset, SigmaIsConcave) {
  std::mt19937 rng(11);
  const double top = 1.0 / (d.eta * p.L);
  std::uniform_real_distribution<double> u(1e-9 * top, top * (1 - 1e-9));
  for (int k = 0; k < 1000; ++k) {
    const double a = u(rng), b = u(rng);
    const double lhs = lyapunov_rate(a, d, p).sigma + lyapunov_rate(b, d, p).sigma;
    const double rhs = 2.0 * lyapunov_rate(0.5 * (a + b), d, p).sigma;
    EXPECT_LE(lhs, rhs * (1 + 1e-14));
  }
}

TEST_F(Preset, DeltaBudget) {
  EXPECT_GT(delta_budget(1e6, 1e9, 1.0, d, p).delta_max, 1.0 / (2 * d.eta * p.L));
  EXPECT_LT(delta_budget(1e-12, 1e9, 1.0, d, p).delta_max, 1e-6);
  const FeedbackDesign fd = amplifier_intervals(1.0, d, p);
  const double dm = delta_budget(fd.c1.hi, fd.xi2_star, 1.0, d, p).delta_max;
  EXPECT_LT(rel(dm, 1.0 / (2 * d.eta * p.L)), 1e-9);
  EXPECT_THROW(delta_budget(-1.0, 1.0, 1.0, d, p), DomainError);
}

TEST_F(Preset, VerifyDesign) {
  EXPECT_TRUE(verify_design(1e6, 1e9, 1.0, d, p).all_pass());
  const DesignReport bad = verify_design(1e4, 1e9, 1.0, d, p);
  EXPECT_FALSE(bad.all_pass());
  EXPECT_FALSE(bad.xi1_in_interval);
  EXPECT_FALSE(bad.f1_ok);
  EXPECT_TRUE(bad.xi2_in_interval);
  const DesignReport zero = verify_design(0.0, 0.0, 1.0, d, p);
  EXPECT_TRUE(zero.zero_amplifier);
  EXPECT_FALSE(zero.all_pass());
}

TEST_F(Preset, IntervalInequalityEquivalence) {
  const FeedbackDesign fd = amplifier_intervals(1.0, d, p);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> e(-8.0, 12.0);
  auto near_endpoint = [](double x, const Interval& i) {
    return rel(x, i.lo) < 1e-12 || rel(x, i.hi) < 1e-12;
  };
  for (int k = 0; k < 10000; ++k) {
    const double x = std::pow(10.0, e(rng));
    if (!near_endpoint(x, fd.c1)) {
      EXPECT_EQ(f1(x, 1.0, d, p) > thr, fd.c1.contains(x)) << x;
    }
    if (!near_endpoint(x, fd.c2)) {
      EXPECT_EQ(f2(x, 1.0, d, p) > thr, fd.c2.contains(x)) << x;
    }
  }
}

TEST_F(Preset, CriticalPointsFromGridSearch) {
  // rho/(2 eta) maximizes h1 and mu/(2 eta) minimizes h2.
  const Interval r = h1_roots(d, p);
  const double hmax = oracle::grid_argmax([&](double x) { return h1(x, d, p); },
                                          std::log10(r.lo), std::log10(r.hi), 60001);
  EXPECT_LT(rel(hmax, p.rho / (2 * d.eta)), 1e-3);
  const Interval a = h2_asymptotes(d, p);
  const double hmin = oracle::grid_argmax([&](double x) { return -h2(x, d, p); },
                                          std::log10(a.lo) + 1e-6, std::log10(a.hi) - 1e-6, 60001);
  EXPECT_LT(rel(hmin, p.mu / (2 * d.eta)), 1e-3);

  // They maximize f1 and f2 only at the matching end of the epsilon range; at
  // epsilon = 1 the f1 peak sits at sqrt(rho alpha1 / 2).
  const Interval eb = epsilon_bounds(d, p);
  const double top = eb.hi * (1 - 1e-9);
  const double xs1 = oracle::grid_argmax([&](double x) { return f1(x, top, d, p); }, 3, 9, 60001);
  EXPECT_LT(rel(xs1, p.rho / (2 * d.eta)), 1e-3);
  const double bottom = eb.lo * (1 + 1e-9);
  const double xs2 = oracle::grid_argmax([&](double x) { return f2(x, bottom, d, p); }, -8, 2, 60001);
  EXPECT_LT(rel(xs2, p.mu / (2 * d.eta)), 1e-3);
  const double xs1_eps1 = oracle::grid_argmax([&](double x) { return f1(x, 1.0, d, p); }, 3, 9, 60001);
  EXPECT_LT(rel(xs1_eps1, std::sqrt(p.rho * d.alpha1 / 2.0)), 1e-3);

  const double star1 = f1(p.rho / (2 * d.eta), top, d, p);
  for (int i = 0; i <= 2000; ++i) {
    const double x = std::pow(10.0, -8.0 + 20.0 * i / 2000);
    EXPECT_GE(star1 * (1 + 1e-12), f1(x, top, d, p));
  }
}

TEST_F(Preset, IntervalsDeformMonotonically) {
  const Interval eb = epsilon_bounds(d, p);
  for (double eps = 1e-16; 2 * eps < eb.hi; eps *= 3.7) {
    if (!(eps > eb.lo)) continue;
    const FeedbackDesign a = amplifier_intervals(eps, d, p);
    const FeedbackDesign b = amplifier_intervals(2 * eps, d, p);
    // c1 shrinks, c2 grows as epsilon increases.
    // c2- barely moves, so allow round-off in the comparison.
    const double tol = 1 + 1e-12;
    EXPECT_LE(a.c1.lo, b.c1.lo * tol) << eps;
    EXPECT_GE(a.c1.hi * tol, b.c1.hi) << eps;
    EXPECT_GE(a.c2.lo * tol, b.c2.lo) << eps;
    EXPECT_LE(a.c2.hi, b.c2.hi * tol) << eps;
  }
}
