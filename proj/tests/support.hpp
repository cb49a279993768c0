#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "adnoise/potential.hpp"
#include "adnoise/units.hpp"

namespace adnoise::test {

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::abs(b); }

/// Reference adatom: m = 100 amu, U0 = 250 meV, z0 = 3.1 A, beta0 = 1.86 / A.
inline PotentialParams reference_potential() { return PotentialParams{}; }

/// Deeper, more harmonic well (beta0 z0 = 5).
inline PotentialParams deep_well() {
  PotentialParams p;
  p.beta0_per_A = 1.25;
  p.z0_A = 4.0;
  return p;
}

/// Levels of the reference adatom, solved once per test binary.
inline const LevelStructure& reference_levels() {
  static const LevelStructure lv = solve_bound_states(reference_potential(), MaterialParams{}, 10);
  return lv;
}

/// Three-level model in arbitrary units: omega0 = 1e12 / s, rates of order 1.
inline LevelStructure three_level_model(double delta_per_s, double d1 = 1.0, double d2 = 0.8, double d3 = 0.6,
                                        double gamma12 = 1.0, double gamma23 = 1.4) {
  const double w0 = 1.0e12;
  Eigen::MatrixXd rates = Eigen::MatrixXd::Zero(3, 3);
  rates(0, 1) = gamma12;
  rates(1, 2) = gamma23;
  return LevelStructure::from_model({0.0, w0, 2.0 * w0 - delta_per_s}, {d1, d2, d3}, rates);
}

/// Lowest eigenvalues of -hbar^2/2m d^2/dz^2 + U on a uniform grid over
/// [lo, hi] with Dirichlet ends, in meV.
inline std::vector<double> finite_difference_levels(const PotentialParams& p, double lo, double hi, int intervals,
                                                    int count) {
  const double h = (hi - lo) / intervals;
  const int n = intervals - 1;
  const double kin = units::kHbar2Over2AmuMeVA2 / p.mass_amu / (h * h);
  Eigen::VectorXd diag(n);
  Eigen::VectorXd off = Eigen::VectorXd::Constant(n - 1, -kin);
  for (int i = 0; i < n; ++i) diag[i] = 2.0 * kin + evaluate_potential(p, lo + (i + 1) * h);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
  return {es.eigenvalues().data(), es.eigenvalues().data() + count};
}

/// Richardson-extrapolated finite-difference levels (fourth order in h).
inline std::vector<double> extrapolated_levels(const PotentialParams& p, double lo, double hi, int intervals,
                                               int count) {
  const auto coarse = finite_difference_levels(p, lo, hi, intervals, count);
  const auto fine = finite_difference_levels(p, lo, hi, 2 * intervals, count);
  std::vector<double> out(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (4.0 * fine[i] - coarse[i]) / 3.0;
  return out;
}

}  // namespace adnoise::test
