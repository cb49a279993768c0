#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "adnoise/config.hpp"
#include "adnoise/master_equation.hpp"
#include "adnoise/spectrum.hpp"

namespace adnoise {

/// Solve the configured potential and keep at most cfg.levels levels.
LevelStructure solve_levels(const RunConfig& cfg);

/// Apply the thermal binding cut when the config asks for it.
LevelStructure levels_for_temperature(const LevelStructure& solved, const RunConfig& cfg, double temperature_ratio);

/// Everything computed for one (N, T/omega0) point.
struct PointResult {
  int atoms = 0;
  double temperature_ratio = 0.0;
  std::size_t dimension = 0;
  double gamma0_per_s = 0.0;
  double omega12_per_s = 0.0;
  /// S(0) from the decomposition or the iterative solve; always available.
  double white_noise = 0.0;
  /// Exact pairs under the dense cap; Ritz pairs from spectrum_on_grid above it.
  std::optional<SpectralDecomposition> decomposition;
};

PointResult run_point(const LevelStructure& levels, int atoms, double temperature_ratio,
                      const TransitionSet& transitions, std::size_t dimension_cap = kDefaultDimensionCap,
                      std::size_t dense_cap = kDefaultDenseCap, bool decompose_if_possible = true);

/// S(omega) on a grid given in units of Gamma0, from the decomposition or,
/// above the dense cap, from a Lanczos projection converged on that grid.
struct GridSpectrum {
  PointResult point;
  std::vector<double> omegas;
  std::vector<double> values;
};

GridSpectrum spectrum_on_grid(const LevelStructure& levels, int atoms, double temperature_ratio,
                              const TransitionSet& transitions, const std::vector<double>& omegas_over_gamma0,
                              std::size_t dimension_cap = kDefaultDimensionCap,
                              std::size_t dense_cap = kDefaultDenseCap);

/// The pair carrying the largest weight C_k.
const LorentzianPair& dominant_pair(const SpectralDecomposition& sd);

}  // namespace adnoise
