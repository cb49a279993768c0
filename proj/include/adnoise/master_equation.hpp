#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "adnoise/potential.hpp"
#include "adnoise/symmetric_basis.hpp"

namespace adnoise {

inline constexpr std::size_t kDefaultDenseCap = 8'000;

/// Temperature in units of the fundamental level spacing. A ratio of 0 means
/// absolute zero (no absorption); only the rate matrix and the stochastic
/// oracle accept it.
struct ThermalParams {
  double temperature_ratio = 0.1;

  /// exp(-omega0 / T)
  double boltzmann_factor() const;
  /// beta in seconds for the given fundamental frequency; +inf at T = 0.
  double beta(double omega0_per_s) const;
  bool is_zero() const { return temperature_ratio == 0.0; }
  void validate() const;
};

/// Which level pairs (mu < nu) may exchange phonons.
class TransitionSet {
 public:
  enum class Kind { AllPairs, NearestNeighbor, Custom };

  static TransitionSet all_pairs() { return TransitionSet(Kind::AllPairs, {}); }
  static TransitionSet nearest_neighbor() { return TransitionSet(Kind::NearestNeighbor, {}); }
  /// Explicit list of (mu, nu) pairs; may be empty, which build_rate_matrix rejects.
  static TransitionSet custom(std::vector<std::pair<int, int>> pairs) {
    return TransitionSet(Kind::Custom, std::move(pairs));
  }

  Kind kind() const { return kind_; }
  bool empty() const { return kind_ == Kind::Custom && pairs_.empty(); }
  bool allows(int mu, int nu) const;

 private:
  TransitionSet(Kind kind, std::vector<std::pair<int, int>> pairs)
      : kind_(kind), pairs_(std::move(pairs)) {}
  Kind kind_;
  std::vector<std::pair<int, int>> pairs_;
};

/// Which collective jump produced an off-diagonal generator entry.
struct Transition {
  std::size_t from = 0;
  std::size_t to = 0;
  int lower = 0;  // mu
  int upper = 0;  // nu
  bool emission = true;
  double rate = 0.0;
};

/// Where a generator came from; carried through to the spectral output.
struct Provenance {
  int atoms = 0;
  int levels = 0;
  double temperature_ratio = 0.0;
  std::uint64_t levels_hash = 0;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct RateMatrixOptions {
  /// Largest dimension decompose() will densify.
  std::size_t dense_cap = kDefaultDenseCap;
};

/// Classical generator over symmetric populations, d rho / dt = M rho, with
/// columns summing to zero.
struct RateMatrix {
  Eigen::SparseMatrix<double> entries;
  /// Energy of each basis state as an angular frequency sum_mu m_mu omega_mu,
  /// measured from the ground state.
  Eigen::VectorXd state_energies_per_s;
  /// Inverse temperature in seconds; +inf at T = 0.
  double beta_s = std::numeric_limits<double>::infinity();
  std::vector<Transition> transitions;
  Provenance provenance;

  std::size_t dimension() const { return static_cast<std::size_t>(entries.rows()); }
  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(entries); }
};

/// Relaxation modes of a detailed-balance generator. The decomposition is
/// carried out on the symmetric matrix S = P^{-1/2} M P^{1/2} (P = diag of
/// the steady state), so M = A^{-1} diag(lambda) A with
///   A^{-1} = P^{1/2} V   (right vectors as columns)
///   A      = V^T P^{-1/2} (left vectors as rows).
struct EigenDecomposition {
  /// Sorted descending; entry `steady_index` (always 0) is the zero mode.
  Eigen::VectorXd eigenvalues;
  /// Orthonormal eigenvectors V of the symmetrized generator.
  Eigen::MatrixXd symmetric_vectors;
  /// sqrt of the steady-state populations.
  Eigen::VectorXd sqrt_weights;
  std::size_t steady_index = 0;
  Provenance provenance;

  std::size_t dimension() const { return static_cast<std::size_t>(eigenvalues.size()); }
  Eigen::MatrixXd right_vectors() const;
  Eigen::MatrixXd left_vectors() const;
};

RateMatrix build_rate_matrix(const SymmetricBasis& basis, const LevelStructure& levels,
                             const ThermalParams& thermal,
                             const TransitionSet& transition_set = TransitionSet::all_pairs());

/// Boltzmann weights exp(-beta E_i) / Z over the basis, evaluated in the log
/// domain.
Eigen::VectorXd boltzmann_distribution(const RateMatrix& rm);

/// Unique stationary distribution from the kernel of M. Small chains use sparse
/// LU with one balance row replaced by normalization; large ones pin the ground
/// population and iterate with BiCGSTAB. Throws ReducibilityError when the
/// chain has more than one closed communicating class.
Eigen::VectorXd steady_state(const RateMatrix& rm);

/// Number of closed communicating classes of the jump graph.
std::size_t closed_class_count(const RateMatrix& rm);

/// Largest relative violation of M_ij exp(-beta E_j) = M_ji exp(-beta E_i)
/// over connected pairs.
double detailed_balance_residual(const RateMatrix& rm);

EigenDecomposition decompose(const RateMatrix& rm, const RateMatrixOptions& opts = {});

}  // namespace adnoise
