#include "adnoise/pipeline.hpp"

#include <algorithm>

#include "adnoise/errors.hpp"

namespace adnoise {

LevelStructure solve_levels(const RunConfig& cfg) {
  return solve_bound_states(cfg.potential, cfg.material, static_cast<std::size_t>(cfg.levels), cfg.solver);
}

LevelStructure levels_for_temperature(const LevelStructure& solved, const RunConfig& cfg, double temperature_ratio) {
  if (!cfg.truncate_thermal) return solved;
  return retain_thermally_bound(solved, temperature_ratio);
}

PointResult run_point(const LevelStructure& levels, int atoms, double temperature_ratio,
                      const TransitionSet& transitions, std::size_t dimension_cap, std::size_t dense_cap,
                      bool decompose_if_possible) {
  const SymmetricBasis basis(atoms, static_cast<int>(levels.count()), dimension_cap);
  const ThermalParams thermal{temperature_ratio};
  const RateMatrix rm = build_rate_matrix(basis, levels, thermal, transitions);

  PointResult out;
  out.atoms = atoms;
  out.temperature_ratio = temperature_ratio;
  out.dimension = basis.size();
  out.gamma0_per_s = levels.fundamental_rate();
  out.omega12_per_s = levels.fundamental_frequency();
  if (decompose_if_possible && basis.size() <= dense_cap) {
    const EigenDecomposition ed = decompose(rm, RateMatrixOptions{dense_cap});
    out.decomposition = lorentzian_weights(ed, basis, levels);
    out.white_noise = out.decomposition->white_noise();
  } else {
    out.white_noise = white_noise_level(rm, basis, levels);
  }
  return out;
}

GridSpectrum spectrum_on_grid(const LevelStructure& levels, int atoms, double temperature_ratio,
                              const TransitionSet& transitions, const std::vector<double>& omegas_over_gamma0,
                              std::size_t dimension_cap, std::size_t dense_cap) {
  GridSpectrum out;
  out.omegas = omegas_over_gamma0;
  for (double& w : out.omegas) w *= levels.fundamental_rate();
  const SymmetricBasis basis(atoms, static_cast<int>(levels.count()), dimension_cap);
  if (basis.size() <= dense_cap) {
    out.point = run_point(levels, atoms, temperature_ratio, transitions, dimension_cap, dense_cap, true);
    out.values = evaluate_spectrum(*out.point.decomposition, out.omegas);
    return out;
  }
  const RateMatrix rm = build_rate_matrix(basis, levels, ThermalParams{temperature_ratio}, transitions);
  out.point.atoms = atoms;
  out.point.temperature_ratio = temperature_ratio;
  out.point.dimension = basis.size();
  out.point.gamma0_per_s = levels.fundamental_rate();
  out.point.omega12_per_s = levels.fundamental_frequency();
  out.point.decomposition = lanczos_decomposition(rm, basis, levels, out.omegas);
  out.point.white_noise = out.point.decomposition->white_noise();
  out.values = evaluate_spectrum(*out.point.decomposition, out.omegas);
  return out;
}

const LorentzianPair& dominant_pair(const SpectralDecomposition& sd) {
  if (sd.pairs.empty()) throw DomainError("decomposition has no Lorentzian pairs");
  return *std::max_element(sd.pairs.begin(), sd.pairs.end(),
                           [](const LorentzianPair& a, const LorentzianPair& b) { return a.weight < b.weight; });
}

}  // namespace adnoise
