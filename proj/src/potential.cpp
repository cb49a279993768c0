#include "adnoise/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/core.h>
#include <lapacke.h>

#include "adnoise/errors.hpp"
#include "adnoise/hash.hpp"
#include "adnoise/units.hpp"

namespace adnoise {

namespace {

constexpr double kDipolePrefactor = 0.47;

// Finds a root of f on [lo, hi] given a sign change.
template <class F>
double bisect(F&& f, double lo, double hi, int iterations = 200) {
  double flo = f(lo);
  for (int i = 0; i < iterations; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fmid = f(mid);
    if ((fmid < 0) == (flo < 0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-15 * std::abs(hi)) break;
  }
  return 0.5 * (lo + hi);
}

// hbar^2 / m in meV*A^2
double hbar2_over_mass(const PotentialParams& p) {
  return 2.0 * units::kHbar2Over2AmuMeVA2 / p.mass_amu;
}

}  // namespace

void PotentialParams::validate() const {
  if (!(U0_meV > 0) || !(z0_A > 0) || !(beta0_per_A > 0) || !(mass_amu > 0)) {
    throw InvalidParameters(
        fmt::format("potential parameters must be positive (U0={}, z0={}, beta0={}, mass={})",
                    U0_meV, z0_A, beta0_per_A, mass_amu));
  }
  if (!(polarizability_A3 > 0)) {
    throw InvalidParameters(fmt::format("polarizability must be positive, got {}", polarizability_A3));
  }
  if (!(beta_tilde() > 4.0)) {
    throw InvalidParameters(fmt::format(
        "beta0*z0 = {} must exceed 4 for a real harmonic frequency", beta_tilde()));
  }
}

double MaterialParams::mass_density_kg_per_m3() const {
  return bulk_density_per_A3 * 1e30 * bulk_atom_mass_amu * units::kAmuKg;
}

void MaterialParams::validate() const {
  if (!(phonon_speed_m_per_s > 0) || !(bulk_density_per_A3 > 0) || !(bulk_atom_mass_amu > 0)) {
    throw InvalidParameters("material phonon speed, bulk density and bulk atom mass must be positive");
  }
  if (!(adatom_density_per_A2 >= 0)) {
    throw InvalidParameters("adatom density must be non-negative");
  }
}

double LevelStructure::omega(std::size_t mu) const {
  if (mu >= count()) throw DomainError(fmt::format("level index {} out of range [0, {})", mu, count()));
  return units::mev_to_angular(energies_meV[mu]);
}

double LevelStructure::transition_frequency(std::size_t mu, std::size_t nu) const {
  if (mu >= count() || nu >= count()) {
    throw DomainError(fmt::format("transition ({}, {}) out of range for {} levels", mu, nu, count()));
  }
  return units::mev_to_angular(energies_meV[nu] - energies_meV[mu]);
}

double LevelStructure::rate(std::size_t mu, std::size_t nu) const {
  if (mu >= nu || nu >= count()) {
    throw DomainError(fmt::format("rate index ({}, {}) requires mu < nu < {}", mu, nu, count()));
  }
  return rates_per_s(static_cast<Eigen::Index>(mu), static_cast<Eigen::Index>(nu));
}

std::uint64_t LevelStructure::hash() const {
  Fnv1a h;
  for (double e : energies_meV) h.add(e);
  for (double d : dipoles_debye) h.add(d);
  for (Eigen::Index i = 0; i < rates_per_s.size(); ++i) h.add(rates_per_s.data()[i]);
  return h.value();
}

void LevelStructure::validate() const {
  const auto m = count();
  if (m < 2) throw InsufficientLevels(fmt::format("need at least 2 levels, have {}", m));
  if (dipoles_debye.size() != m || rates_per_s.rows() != static_cast<Eigen::Index>(m) ||
      rates_per_s.cols() != static_cast<Eigen::Index>(m)) {
    throw DomainError("level structure arrays have inconsistent sizes");
  }
  for (std::size_t i = 1; i < m; ++i) {
    if (!(energies_meV[i] > energies_meV[i - 1])) {
      throw DomainError("level energies must be strictly increasing");
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!(dipoles_debye[i] > 0)) throw DomainError("level dipoles must be positive");
    for (std::size_t j = 0; j < m; ++j) {
      const double r = rates_per_s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (!(r >= 0) || !std::isfinite(r)) throw DomainError("rates must be finite and non-negative");
    }
  }
}

LevelStructure LevelStructure::from_model(const std::vector<double>& omegas_per_s,
                                          const std::vector<double>& dipoles_debye,
                                          const Eigen::MatrixXd& rates_per_s) {
  LevelStructure out;
  out.energies_meV.reserve(omegas_per_s.size());
  for (double w : omegas_per_s) out.energies_meV.push_back(units::angular_to_mev(w));
  out.dipoles_debye = dipoles_debye;
  out.rates_per_s = rates_per_s.triangularView<Eigen::StrictlyUpper>();
  out.threshold_meV = std::numeric_limits<double>::infinity();
  out.validate();
  out.omega0_per_s = out.fundamental_frequency();
  out.delta_per_s =
      out.count() >= 3 ? out.fundamental_frequency() - out.transition_frequency(1, 2) : 0.0;
  return out;
}

double evaluate_potential(const PotentialParams& p, double z_A) {
  if (!(z_A > 0)) throw DomainError(fmt::format("distance must be positive, got {}", z_A));
  const double bt = p.beta_tilde();
  const double ratio = p.z0_A / z_A;
  return bt / (bt - 3.0) * p.U0_meV *
         (3.0 / bt * std::exp(bt * (1.0 - z_A / p.z0_A)) - ratio * ratio * ratio);
}

double potential_derivative(const PotentialParams& p, double z_A) {
  if (!(z_A > 0)) throw DomainError(fmt::format("distance must be positive, got {}", z_A));
  const double bt = p.beta_tilde();
  const double ratio = p.z0_A / z_A;
  return bt / (bt - 3.0) * p.U0_meV *
         (-3.0 / p.z0_A * std::exp(bt * (1.0 - z_A / p.z0_A)) +
          3.0 * ratio * ratio * ratio / z_A);
}

double harmonic_frequency(const PotentialParams& p) {
  p.validate();
  const double bt = p.beta_tilde();
  // curvature at z0 in meV/A^2
  const double k = 3.0 * p.U0_meV * (bt * bt - 4.0 * bt) / (p.z0_A * p.z0_A * (bt - 3.0));
  const double hbar_omega = std::sqrt(hbar2_over_mass(p) * k);
  return units::mev_to_angular(hbar_omega);
}

double anharmonic_shift(const PotentialParams& p) {
  p.validate();
  const double bt = p.beta_tilde();
  const double num = (bt * bt - 20.0) * (bt * bt - 20.0);
  const double den = p.z0_A * p.z0_A * (bt - 4.0) * (bt - 4.0);
  const double hbar_delta = 5.0 / 24.0 * hbar2_over_mass(p) * num / den;
  return units::mev_to_angular(hbar_delta);
}

double harmonic_fundamental_rate(const PotentialParams& p, const MaterialParams& mat) {
  mat.validate();
  const double w0 = harmonic_frequency(p);
  const double c = mat.phonon_speed_m_per_s;
  return std::pow(w0, 4) * p.mass_amu * units::kAmuKg /
         (4.0 * units::kPi * c * c * c * mat.mass_density_kg_per_m3());
}

double barrier_position(const PotentialParams& p) {
  p.validate();
  const double bt = p.beta_tilde();
  // dU/dz = 0  <=>  bt (1 - x) + 4 ln x = 0 with x = z/z0. Besides x = 1 there
  // is exactly one root in (0, 4/bt), where the expression peaks.
  auto g = [bt](double x) { return bt * (1.0 - x) + 4.0 * std::log(x); };
  return p.z0_A * bisect(g, 1e-300, 4.0 / bt);
}

BoundStateSolution solve_bound_states_detailed(const PotentialParams& p, const MaterialParams& mat,
                                               std::size_t max_levels, const SolverOptions& opts) {
  p.validate();
  mat.validate();
  if (max_levels < 2) throw DomainError("max_levels must be at least 2");

  const double z_barrier = barrier_position(p);
  const double u_barrier = evaluate_potential(p, z_barrier);
  double z_min = z_barrier;
  if (u_barrier > 10.0 * p.U0_meV) {
    z_min = bisect([&](double z) { return evaluate_potential(p, z) - 10.0 * p.U0_meV; }, z_barrier,
                   p.z0_A);
  }
  double z_hi = 2.0 * p.z0_A;
  const double tail = -1e-4 * p.U0_meV;
  while (evaluate_potential(p, z_hi) < tail) z_hi *= 2.0;
  const double z_max = bisect([&](double z) { return evaluate_potential(p, z) - tail; }, p.z0_A, z_hi);

  const double hbar_omega0 = units::angular_to_mev(harmonic_frequency(p));
  const double osc_length = std::sqrt(hbar2_over_mass(p) / hbar_omega0);
  const double h = opts.spacing_A > 0 ? opts.spacing_A : osc_length / opts.points_per_oscillator_length;
  const auto intervals = static_cast<std::size_t>(std::floor((z_max - z_min) / h));
  if (intervals < 3) throw InvalidParameters("grid spacing too coarse for the potential well");
  const std::size_t n = intervals - 1;
  if (n > opts.max_grid_points) {
    throw CapacityError(fmt::format("bound-state grid needs {} points, above the cap of {}", n,
                                    opts.max_grid_points));
  }

  GridDiagnostics diag{z_min, z_max, h, n, u_barrier};
  std::vector<double> grid(n);
  std::vector<double> d(n);
  std::vector<double> e(n > 1 ? n - 1 : 1);
  const double t = units::kHbar2Over2AmuMeVA2 / p.mass_amu / (h * h);
  for (std::size_t i = 0; i < n; ++i) {
    grid[i] = z_min + static_cast<double>(i + 1) * h;
    d[i] = evaluate_potential(p, grid[i]) + 2.0 * t;
  }
  std::fill(e.begin(), e.end(), -t);

  const auto want = static_cast<lapack_int>(std::min(max_levels, n));
  std::vector<double> w(n);
  Eigen::MatrixXd vecs(static_cast<Eigen::Index>(n), want);
  std::vector<lapack_int> ifail(n);
  lapack_int found = 0;
  const double abstol = 2.0 * LAPACKE_dlamch('S');
  const lapack_int info = LAPACKE_dstevx(LAPACK_COL_MAJOR, 'V', 'I', static_cast<lapack_int>(n), d.data(),
                                         e.data(), 0.0, 0.0, 1, want, abstol, &found, w.data(),
                                         vecs.data(), static_cast<lapack_int>(n), ifail.data());
  if (info != 0 || found != want) {
    throw ConvergenceError(fmt::format(
        "tridiagonal eigensolve failed (info={}, found {}/{}) on grid [{:.4f}, {:.4f}] A, "
        "h={:.3e} A, {} points",
        info, found, want, z_min, z_max, h, n));
  }

  const double threshold = std::min(0.0, u_barrier);
  std::size_t bound = 0;
  while (bound < static_cast<std::size_t>(found) && w[bound] < threshold) ++bound;
  if (bound < 2) {
    throw InsufficientLevels(fmt::format(
        "only {} bound level(s) below {:.4g} meV (U0={} meV, mass={} amu)", bound, threshold,
        p.U0_meV, p.mass_amu));
  }

  const auto m = static_cast<Eigen::Index>(bound);
  const auto npts = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd psi = vecs.leftCols(m) / std::sqrt(h);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double peak = psi.col(k).cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < npts; ++i) {
      if (std::abs(psi(i, k)) > 1e-3 * peak) {
        if (psi(i, k) < 0) psi.col(k) *= -1.0;
        break;
      }
    }
  }

  Eigen::VectorXd inv_z4(npts);
  Eigen::VectorXd force(npts);
  for (Eigen::Index i = 0; i < npts; ++i) {
    const double z = grid[static_cast<std::size_t>(i)];
    inv_z4(i) = 1.0 / (z * z * z * z);
    force(i) = potential_derivative(p, z);
  }

  LevelStructure lv;
  lv.energies_meV.assign(w.begin(), w.begin() + m);
  lv.threshold_meV = threshold;
  const double dipole_scale = kDipolePrefactor * std::sqrt(units::kBohrRadiusA) *
                              std::pow(p.polarizability_A3, 1.5) * units::kDebyePerEAngstrom;
  lv.dipoles_debye.resize(bound);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double expect = psi.col(k).cwiseAbs2().dot(inv_z4) * h;
    lv.dipoles_debye[static_cast<std::size_t>(k)] = dipole_scale * expect;
  }

  const double c = mat.phonon_speed_m_per_s;
  const double rate_den = 2.0 * units::kPi * units::kHbarJs * c * c * c * mat.mass_density_kg_per_m3();
  lv.rates_per_s = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = a + 1; b < m; ++b) {
      const double elem = psi.col(a).cwiseProduct(psi.col(b)).dot(force) * h * units::kForceMeVPerAToN;
      const double omega = units::mev_to_angular(lv.energies_meV[static_cast<std::size_t>(b)] -
                                                 lv.energies_meV[static_cast<std::size_t>(a)]);
      lv.rates_per_s(a, b) = elem * elem * omega / rate_den;
    }
  }
  lv.omega0_per_s = harmonic_frequency(p);
  lv.delta_per_s = anharmonic_shift(p);
  lv.validate();

  return BoundStateSolution{std::move(lv), std::move(grid), std::move(psi), diag};
}

LevelStructure solve_bound_states(const PotentialParams& p, const MaterialParams& mat,
                                  std::size_t max_levels, const SolverOptions& opts) {
  return solve_bound_states_detailed(p, mat, max_levels, opts).levels;
}

double coverage_parameter(const PotentialParams& p, const MaterialParams& mat) {
  mat.validate();
  const double wavelength_A = 2.0 * units::kPi * mat.phonon_speed_m_per_s / harmonic_frequency(p) /
                              units::kAngstromM;
  return std::sqrt(mat.adatom_density_per_A2) * wavelength_A;
}

LevelStructure truncate_levels(const LevelStructure& levels, std::size_t count) {
  if (count < 2) throw DomainError("cannot truncate below 2 levels");
  if (count >= levels.count()) return levels;
  LevelStructure out = levels;
  out.energies_meV.resize(count);
  out.dipoles_debye.resize(count);
  const auto m = static_cast<Eigen::Index>(count);
  out.rates_per_s = levels.rates_per_s.topLeftCorner(m, m);
  return out;
}

LevelStructure retain_thermally_bound(const LevelStructure& levels, double temperature_ratio) {
  if (!(temperature_ratio >= 0)) throw DomainError("temperature ratio must be non-negative");
  const double kt_mev = temperature_ratio * units::angular_to_mev(levels.fundamental_frequency());
  std::size_t keep = 0;
  while (keep < levels.count() && levels.threshold_meV - levels.energies_meV[keep] >= kt_mev) ++keep;
  if (keep < 2) {
    throw InsufficientLevels(fmt::format(
        "only {} level(s) stay bound by a margin of k_B T = {:.4g} meV", keep, kt_mev));
  }
  return truncate_levels(levels, keep);
}

}  // namespace adnoise
