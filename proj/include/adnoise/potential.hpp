#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace adnoise {

/// Parameters of the exp-3 adatom-surface potential
///
///   U(z) = bt/(bt-3) * U0 * [ (3/bt) exp(bt (1 - z/z0)) - (z0/z)^3 ],  bt = beta0*z0.
struct PotentialParams {
  double U0_meV = 250.0;
  double z0_A = 3.1;
  double beta0_per_A = 1.86;
  double mass_amu = 100.0;
  double polarizability_A3 = 4.04;

  double beta_tilde() const { return beta0_per_A * z0_A; }

  /// Throws InvalidParameters unless every field is positive and beta_tilde > 4.
  void validate() const;
};

/// Substrate properties. The phonon rate needs a mass density, formed here
/// as bulk_density * bulk_atom_mass.
struct MaterialParams {
  double phonon_speed_m_per_s = 3240.0;
  double bulk_density_per_A3 = 0.0590;
  double bulk_atom_mass_amu = 196.967;
  double adatom_density_per_A2 = 1.0e-3;

  double mass_density_kg_per_m3() const;
  void validate() const;
};

struct SolverOptions {
  /// Grid points per harmonic oscillator length sqrt(hbar / (m omega0)).
  double points_per_oscillator_length = 320.0;
  /// Explicit spacing in Angstrom; overrides the above when > 0.
  double spacing_A = 0.0;
  std::size_t max_grid_points = 4'000'000;
};

/// Bound vibrational levels of one adatom. Level indices are 0-based here:
/// index 0 is the ground level.
struct LevelStructure {
  std::vector<double> energies_meV;
  std::vector<double> dipoles_debye;
  /// rates_per_s(mu, nu) for mu < nu is the single-adatom rate for the
  /// nu -> mu emission. Entries with mu >= nu are zero.
  Eigen::MatrixXd rates_per_s;
  /// Harmonic estimate of the fundamental frequency, closed form.
  double omega0_per_s = 0.0;
  /// Anharmonic shift omega0 - omega23 from the cubic expansion.
  double delta_per_s = 0.0;
  /// Energy above which states are not localized in the well.
  double threshold_meV = 0.0;

  std::size_t count() const { return energies_meV.size(); }
  double omega(std::size_t mu) const;
  /// omega_nu - omega_mu in 1/s.
  double transition_frequency(std::size_t mu, std::size_t nu) const;
  double rate(std::size_t mu, std::size_t nu) const;
  /// The numerically computed fundamental omega_12 (levels 0 -> 1).
  double fundamental_frequency() const { return transition_frequency(0, 1); }
  double fundamental_rate() const { return rate(0, 1); }
  /// Content hash used as provenance downstream.
  std::uint64_t hash() const;
  void validate() const;

  /// Build a level structure directly from angular frequencies (1/s), dipoles
  /// and an upper-triangular rate table. Used for model studies where the
  /// potential is not solved.
  static LevelStructure from_model(const std::vector<double>& omegas_per_s,
                                   const std::vector<double>& dipoles_debye,
                                   const Eigen::MatrixXd& rates_per_s);
};

struct GridDiagnostics {
  double z_min_A = 0.0;
  double z_max_A = 0.0;
  double spacing_A = 0.0;
  std::size_t points = 0;
  double barrier_meV = 0.0;
};

/// Full solver output, including the wavefunctions on the grid (columns,
/// normalized so that sum psi^2 * h = 1).
struct BoundStateSolution {
  LevelStructure levels;
  std::vector<double> grid_A;
  Eigen::MatrixXd wavefunctions;
  GridDiagnostics grid;
};

double evaluate_potential(const PotentialParams& p, double z_A);
/// Analytic dU/dz in meV/A.
double potential_derivative(const PotentialParams& p, double z_A);

/// Harmonic frequency sqrt(U''(z0)/m), in 1/s.
double harmonic_frequency(const PotentialParams& p);
/// omega0 - omega23 from the cubic expansion of U about z0, in 1/s.
double anharmonic_shift(const PotentialParams& p);
/// Harmonic closed form of the fundamental phonon rate, omega0^4 m / (4 pi c^3 rho).
double harmonic_fundamental_rate(const PotentialParams& p, const MaterialParams& mat);

/// Position of the local maximum of U between the surface and z0.
double barrier_position(const PotentialParams& p);

BoundStateSolution solve_bound_states_detailed(const PotentialParams& p, const MaterialParams& mat,
                                               std::size_t max_levels,
                                               const SolverOptions& opts = {});
LevelStructure solve_bound_states(const PotentialParams& p, const MaterialParams& mat,
                                  std::size_t max_levels, const SolverOptions& opts = {});

/// sqrt(R) * 2 pi c / omega0. Values >= 1 indicate the correlated regime.
double coverage_parameter(const PotentialParams& p, const MaterialParams& mat);

/// Keep the first `count` levels.
LevelStructure truncate_levels(const LevelStructure& levels, std::size_t count);
/// Drop levels whose binding margin (threshold - E) is below k_B T, with
/// k_B T = temperature_ratio * hbar * omega_12. At least two levels survive
/// or InsufficientLevels is thrown.
LevelStructure retain_thermally_bound(const LevelStructure& levels, double temperature_ratio);

}  // namespace adnoise
