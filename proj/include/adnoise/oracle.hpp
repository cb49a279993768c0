#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "adnoise/master_equation.hpp"

namespace adnoise {

/// Settings for the stochastic spectrum estimate. Times are in seconds.
struct TrajectoryConfig {
  double duration_s = 0.0;
  double burn_in_s = 0.0;
  std::uint64_t seed = 0;
  int trajectories = 1;
  double sampling_dt_s = 0.0;
  /// Welch segment length in samples (Hann window, 50% overlap).
  std::size_t segment_length = 4096;
  int threads = 1;

  void validate() const;
};

struct GillespieResult {
  /// Positive bin frequencies 2 pi k / (L dt), k = 1 .. L/2.
  std::vector<double> omegas;
  std::vector<double> estimate;
  std::vector<double> stderr_;
  /// Fraction of post-burn-in time spent in each basis state, with its
  /// standard error across trajectories.
  std::vector<double> occupancy;
  std::vector<double> occupancy_stderr;
  std::uint64_t jumps = 0;
  std::vector<std::string> warnings;
};

/// Deterministic per-trajectory seeds: outputs of splitmix64 started at `seed`.
std::vector<std::uint64_t> derive_seeds(std::uint64_t seed, std::size_t count);

/// Direct-method jump simulation of the generator starting from the ground
/// state. D(t) is point-sampled every sampling_dt after burn-in and fed to a
/// Welch estimator whose bins estimate the two-sided spectrum S(omega).
GillespieResult gillespie_spectrum(const RateMatrix& rm, const SymmetricBasis& basis,
                                   const LevelStructure& levels, const TrajectoryConfig& cfg);

/// <D(tau) D(0)> - <D>^2 by propagating the symmetrized generator with
/// scaled-and-squared matrix exponentials.
std::vector<double> correlation_function(const RateMatrix& rm, const SymmetricBasis& basis,
                                         const LevelStructure& levels, const std::vector<double>& tau_grid);

/// Uniform grid with step 0.02 / (largest exit rate), extended until the
/// correlator has decayed below 1e-12 of its zero-lag value.
std::vector<double> auto_tau_grid(const RateMatrix& rm, const SymmetricBasis& basis,
                                  const LevelStructure& levels);

/// S(omega) = 2 int_0^inf c(tau) cos(omega tau) d tau with piecewise-linear
/// Filon quadrature and an exponential tail beyond the last grid point.
/// Throws ResolutionError when the tail decay rate kappa gives kappa * tau_max < 5.
std::vector<double> correlator_spectrum(const RateMatrix& rm, const SymmetricBasis& basis,
                                        const LevelStructure& levels, const std::vector<double>& tau_grid,
                                        const std::vector<double>& omegas);

/// Comparison of an estimate with error bars against an analytic curve.
struct OracleReport {
  std::string config;  // JSON text of the generating configuration
  std::vector<double> omegas;
  std::vector<double> estimate;
  std::vector<double> stderr_;
  std::vector<double> analytic;
  double max_sigma_deviation = 0.0;
  double fraction_within_3sigma = 0.0;
};

OracleReport compare_to_analytic(std::string config, std::vector<double> omegas, std::vector<double> estimate,
                                 std::vector<double> stderr_, std::vector<double> analytic);

}  // namespace adnoise
