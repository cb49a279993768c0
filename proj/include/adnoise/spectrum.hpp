#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "adnoise/master_equation.hpp"

namespace adnoise {

/// One relaxation mode contributing C (-lambda) / (lambda^2 + omega^2).
struct LorentzianPair {
  double lambda_per_s = 0.0;  // < 0
  double weight = 0.0;        // C_k in Debye^2
};

/// Exact noise spectrum S(omega) = sum_k C_k (-lambda_k) / (lambda_k^2 + omega^2),
/// in Debye^2 s. The steady mode is not stored.
struct SpectralDecomposition {
  std::vector<LorentzianPair> pairs;
  /// Total dipole D_i of each basis state; empty for model spectra.
  std::vector<double> dipoles;
  Provenance provenance;
  double mean_dipole = 0.0;
  /// Steady-state variance of D.
  double variance = 0.0;
  /// Number of Lanczos steps when the pairs are Ritz pairs of a Krylov
  /// projection; 0 for the exact eigendecomposition.
  std::size_t krylov_steps = 0;

  double white_noise() const;
  /// |sum_k C_k / 2 - Var(D)| / Var(D); 0 when both vanish.
  double sum_rule_residual() const;
};

/// Relative weights D(N) over patch sizes N = 1..n_max.
class PatchDistribution {
 public:
  enum class Form { Delta, OneOverN, Custom };

  static PatchDistribution delta(int n0);
  static PatchDistribution one_over_n(int n_max);
  /// weights[i] is the weight of N = i + 1.
  static PatchDistribution custom(std::vector<double> weights);

  Form form() const { return form_; }
  int n_max() const { return static_cast<int>(weights_.size()); }
  double weight(int n) const;
  const std::vector<double>& weights() const { return weights_; }

 private:
  PatchDistribution(Form form, std::vector<double> weights);
  Form form_;
  std::vector<double> weights_;
};

SpectralDecomposition lorentzian_weights(const EigenDecomposition& ed, const SymmetricBasis& basis,
                                         const LevelStructure& levels);

std::vector<double> evaluate_spectrum(const SpectralDecomposition& sd, const std::vector<double>& omegas);
double evaluate_spectrum(const SpectralDecomposition& sd, double omega);

/// Keep the k pairs with the largest zero-frequency contribution |C / lambda|.
SpectralDecomposition truncate_pairs(const SpectralDecomposition& sd, std::size_t k);

/// S(0) without diagonalizing: conjugate gradients on the symmetrized
/// generator with the ground state pinned, S(0) = 2 u.(-S)^+ u with
/// u = (D - <D>) o sqrt(rho). Works far beyond the dense cap.
double white_noise_level(const RateMatrix& rm, const SymmetricBasis& basis, const LevelStructure& levels);
/// S(omega) from the resolvent, -2 Re D.(M + i omega)^{-1} (D - <D>) rho, one
/// sparse LU per frequency. Exact, but the factorization cost grows quickly
/// beyond a few thousand states.
std::vector<double> resolvent_spectrum(const RateMatrix& rm, const SymmetricBasis& basis,
                                       const LevelStructure& levels, const std::vector<double>& omegas);
struct KrylovOptions {
  /// Stop when S on the monitored frequencies changes by less than this
  /// (relative) between checks.
  double tolerance = 1e-10;
  std::size_t max_steps = 800;
};
/// Gauss-quadrature approximation of the spectral measure by Lanczos on the
/// symmetrized generator started from u = (D - <D>) o sqrt(rho). The Ritz
/// pairs are returned as Lorentzians; the sum rule holds exactly. Convergence
/// is monitored at omega = 0 and on `omegas`. Throws ConvergenceError when
/// max_steps is reached first.
SpectralDecomposition lanczos_decomposition(const RateMatrix& rm, const SymmetricBasis& basis,
                                            const LevelStructure& levels, const std::vector<double>& omegas,
                                            const KrylovOptions& opts = {});
/// First-order model: a single Lorentzian with lambda = -N Gamma0 and
/// C = 2 (d1 - d2)^2 T, where T = exp(-omega12 / T).
SpectralDecomposition low_temperature_spectrum(int atoms, const LevelStructure& levels,
                                               const ThermalParams& thermal);

/// Coefficient of T^2 in S_N(0) for nearest-neighbour transitions among the
/// lowest three levels. Requires N >= 2.
double second_order_white_noise(int atoms, double beta_delta, double d1, double d2, double d3, double gamma12,
                                double gamma23);
double second_order_white_noise(int atoms, double delta_per_s, const LevelStructure& levels,
                                const ThermalParams& thermal);

/// S_tot(omega) = sum_N D(N) S_N(omega).
std::vector<double> aggregate_patches(const std::map<int, SpectralDecomposition>& spectra,
                                      const PatchDistribution& dist, const std::vector<double>& omegas);

/// N_max -> infinity limit of the 1/N-weighted sum of low-temperature
/// Lorentzians with amplitude `amplitude`.
double pink_noise_closed_form(double gamma0_per_s, double amplitude, double omega);
std::vector<double> pink_noise_closed_form(double gamma0_per_s, double amplitude,
                                           const std::vector<double>& omegas);

/// 2 (d1 - d2)^2 T, the low-temperature Lorentzian amplitude.
double default_pink_amplitude(const LevelStructure& levels, const ThermalParams& thermal);

/// Logarithmic grid from lo to hi inclusive.
std::vector<double> log_frequency_grid(double lo, double hi, int points_per_decade = 50);

/// d log S / d log omega at every grid point (central differences inside,
/// one-sided at the ends).
std::vector<double> local_log_slope(const std::vector<double>& omegas, const std::vector<double>& values);

/// Least-squares slope of log S against log omega over omega in [lo, hi].
double fit_log_slope(const std::vector<double>& omegas, const std::vector<double>& values, double lo,
                     double hi);

}  // namespace adnoise
