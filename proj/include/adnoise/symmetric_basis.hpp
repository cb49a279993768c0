#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace adnoise {

struct LevelStructure;

inline constexpr std::size_t kDefaultDimensionCap = 200'000;

/// Permutation-symmetric state of N adatoms over M levels, stored as the
/// occupation count of each level (index 0 = ground level).
class SymmetricState {
 public:
  SymmetricState() = default;
  explicit SymmetricState(std::vector<int> occupations);

  std::span<const int> occupations() const { return occupations_; }
  int operator[](std::size_t level) const { return occupations_[level]; }
  std::size_t levels() const { return occupations_.size(); }
  int atoms() const;

  friend bool operator==(const SymmetricState&, const SymmetricState&) = default;

 private:
  std::vector<int> occupations_;
};

/// Number of weak compositions of `atoms` into `levels` parts, C(N+M-1, N).
/// Saturates at UINT64_MAX.
std::uint64_t symmetric_dimension(int atoms, int levels);

/// All symmetric states in reverse-lexicographic order, so that the
/// ground-dominated states come first: (N,0,..), (N-1,1,0,..), ...
class SymmetricBasis {
 public:
  SymmetricBasis(int atoms, int levels, std::size_t dimension_cap = kDefaultDimensionCap);

  int atoms() const { return atoms_; }
  int levels() const { return levels_; }
  std::size_t size() const { return states_.size(); }
  const SymmetricState& operator[](std::size_t i) const { return states_[i]; }
  const std::vector<SymmetricState>& states() const { return states_; }

  /// Ordinal of a state, computed combinatorially in O(M).
  std::size_t index(const SymmetricState& s) const;

 private:
  int atoms_;
  int levels_;
  std::vector<SymmetricState> states_;
};

SymmetricBasis enumerate_basis(int atoms, int levels, std::size_t dimension_cap = kDefaultDimensionCap);

/// Result of a collective jump: the target state and its matrix element.
struct JumpResult {
  SymmetricState state;
  double amplitude = 0.0;
};

/// L^{mu nu} with mu < nu: moves one atom from level nu down to level mu with
/// amplitude sqrt((m_mu + 1) m_nu). Returns the input and amplitude 0 when
/// m_nu = 0.
JumpResult apply_lowering(const SymmetricState& s, int mu, int nu);

/// Adjoint of apply_lowering: moves one atom from mu up to nu with amplitude
/// sqrt(m_mu (m_nu + 1)).
JumpResult apply_raising(const SymmetricState& s, int mu, int nu);

/// Total dipole sum_mu m_mu d_mu in Debye.
double state_dipole(const SymmetricState& s, const LevelStructure& levels);

}  // namespace adnoise
