// Designs amplifiers for the preset beam, checks a good and a bad pair, and
// compares the spectral abscissa of both.

#include <cstdio>

#include "piezoamp/piezoamp.hpp"

using namespace piezoamp;

int main() {
  const MaterialParams p = table1_preset();
  const DerivedConstants d = derive_constants(p);
  const FeedbackDesign fd = amplifier_intervals(1.0, d, p);

  std::printf("eta = %.6g s/m, sigma_max = %.6g 1/s\n", d.eta, d.sigma_max);
  std::printf("xi1 in (%.4g, %.4g), xi2 in (%.4g, %.4g)\n", fd.c1.lo, fd.c1.hi, fd.c2.lo, fd.c2.hi);

  for (auto [xi1, xi2] : {std::pair{1e6, 1e9}, std::pair{1e4, 1e9}}) {
    const DesignReport r = verify_design(xi1, xi2, 1.0, d, p);
    const SpectrumResult s = eigenvalues(build_system(p, xi1, xi2, 40), {EigenRoute::EnergyExtended, 0});
    std::printf("(%.0e, %.0e): %s, max Re = %.4g\n", xi1, xi2, r.all_pass() ? "admissible" : "rejected",
                s.max_real);
  }
}
