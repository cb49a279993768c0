#include "adnoise/symmetric_basis.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/core.h>

#include "adnoise/errors.hpp"
#include "adnoise/potential.hpp"

namespace adnoise {

namespace {

std::uint64_t saturating_binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // r * (n - k + i) / i stays exact because r*(n-k+i) is divisible by i.
    const std::uint64_t factor = n - k + i;
    const std::uint64_t g = std::gcd(r, i);
    const std::uint64_t rr = r / g;
    const std::uint64_t ff = factor / (i / g);
    if (rr != 0 && ff > kMax / rr) return kMax;
    r = rr * ff;
  }
  return r;
}

void check_levels(const SymmetricState& s, int mu, int nu) {
  const auto m = static_cast<int>(s.levels());
  if (mu < 0 || nu < 0 || mu >= m || nu >= m || mu >= nu) {
    throw DomainError(fmt::format("invalid level pair ({}, {}) for {} levels; need 0 <= mu < nu < M",
                                  mu, nu, m));
  }
}

}  // namespace

SymmetricState::SymmetricState(std::vector<int> occupations) : occupations_(std::move(occupations)) {
  for (int m : occupations_) {
    if (m < 0) throw DomainError("occupation counts must be non-negative");
  }
}

int SymmetricState::atoms() const { return std::accumulate(occupations_.begin(), occupations_.end(), 0); }

std::uint64_t symmetric_dimension(int atoms, int levels) {
  if (atoms < 0 || levels < 1) return 0;
  return saturating_binomial(static_cast<std::uint64_t>(atoms + levels - 1),
                             static_cast<std::uint64_t>(atoms));
}

SymmetricBasis::SymmetricBasis(int atoms, int levels, std::size_t dimension_cap)
    : atoms_(atoms), levels_(levels) {
  if (atoms < 1) throw DomainError(fmt::format("need at least one adatom, got N={}", atoms));
  if (levels < 2) throw DomainError(fmt::format("need at least two levels, got M={}", levels));
  const std::uint64_t dim = symmetric_dimension(atoms, levels);
  if (dim > dimension_cap) {
    throw CapacityError(fmt::format(
        "symmetric basis for N={}, M={} has {} states, above the dimension cap of {}; reduce N or M",
        atoms, levels, dim, dimension_cap));
  }
  states_.reserve(static_cast<std::size_t>(dim));

  // Odometer over weak compositions in reverse-lexicographic order.
  std::vector<int> occ(static_cast<std::size_t>(levels), 0);
  occ[0] = atoms;
  while (true) {
    states_.emplace_back(occ);
    // Rightmost position (excluding the last) that can give one atom to the right.
    int pos = levels - 2;
    while (pos >= 0 && occ[static_cast<std::size_t>(pos)] == 0) --pos;
    if (pos < 0) break;
    const auto p = static_cast<std::size_t>(pos);
    const int tail = occ.back();
    occ.back() = 0;
    --occ[p];
    occ[p + 1] = tail + 1;
  }
}

std::size_t SymmetricBasis::index(const SymmetricState& s) const {
  if (static_cast<int>(s.levels()) != levels_ || s.atoms() != atoms_) {
    throw DomainError(fmt::format("state with {} atoms over {} levels is not in the N={}, M={} basis",
                                  s.atoms(), s.levels(), atoms_, levels_));
  }
  // States preceding s: for each position i, those agreeing on 0..i-1 and
  // holding more atoms at i. Summing compositions of the remainder gives
  // C(rem - s_i - 1 + M - i - 1, M - i - 1) by the hockey-stick identity.
  std::uint64_t rank = 0;
  int rem = atoms_;
  for (int i = 0; i < levels_ - 1; ++i) {
    const int si = s[static_cast<std::size_t>(i)];
    if (si < rem) rank += symmetric_dimension(rem - si - 1, levels_ - i);
    rem -= si;
  }
  return static_cast<std::size_t>(rank);
}

SymmetricBasis enumerate_basis(int atoms, int levels, std::size_t dimension_cap) {
  return SymmetricBasis(atoms, levels, dimension_cap);
}

JumpResult apply_lowering(const SymmetricState& s, int mu, int nu) {
  check_levels(s, mu, nu);
  const int m_mu = s[static_cast<std::size_t>(mu)];
  const int m_nu = s[static_cast<std::size_t>(nu)];
  if (m_nu == 0) return {s, 0.0};
  std::vector<int> occ(s.occupations().begin(), s.occupations().end());
  ++occ[static_cast<std::size_t>(mu)];
  --occ[static_cast<std::size_t>(nu)];
  return {SymmetricState(std::move(occ)), std::sqrt(static_cast<double>(m_mu + 1) * m_nu)};
}

JumpResult apply_raising(const SymmetricState& s, int mu, int nu) {
  check_levels(s, mu, nu);
  const int m_mu = s[static_cast<std::size_t>(mu)];
  const int m_nu = s[static_cast<std::size_t>(nu)];
  if (m_mu == 0) return {s, 0.0};
  std::vector<int> occ(s.occupations().begin(), s.occupations().end());
  --occ[static_cast<std::size_t>(mu)];
  ++occ[static_cast<std::size_t>(nu)];
  return {SymmetricState(std::move(occ)), std::sqrt(static_cast<double>(m_mu) * (m_nu + 1))};
}

double state_dipole(const SymmetricState& s, const LevelStructure& levels) {
  if (s.levels() != levels.count()) {
    throw DomainError(fmt::format("state has {} levels but the level structure has {}", s.levels(),
                                  levels.count()));
  }
  double total = 0.0;
  for (std::size_t mu = 0; mu < s.levels(); ++mu) total += s[mu] * levels.dipoles_debye[mu];
  return total;
}

}  // namespace adnoise
