#include "adnoise/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <fmt/core.h>

#include "adnoise/errors.hpp"
#include "adnoise/units.hpp"

namespace adnoise {

namespace {

constexpr double kPinkSeriesCutoff = 1e-3;

std::vector<double> basis_dipoles(const SymmetricBasis& basis, const LevelStructure& levels) {
  std::vector<double> d(basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i) d[i] = state_dipole(basis[i], levels);
  return d;
}

void check_omega(double omega) {
  if (!std::isfinite(omega)) throw DomainError("frequencies must be finite");
}

// -S = -P^{-1/2} M P^{1/2} as a full sparse symmetric matrix, together with
// the start vector u = (D - <D>) o sqrt(rho).
struct SymmetrizedProblem {
  Eigen::SparseMatrix<double> neg_s;
  Eigen::VectorXd sqrt_rho;
  Eigen::VectorXd u;
  std::vector<double> dipoles;
  double mean = 0.0;
  double variance = 0.0;
};

SymmetrizedProblem symmetrize(const RateMatrix& rm, const SymmetricBasis& basis, const LevelStructure& levels) {
  if (rm.dimension() != basis.size()) throw DomainError("rate matrix and basis dimensions differ");
  const auto n = static_cast<Eigen::Index>(basis.size());
  SymmetrizedProblem sp;
  sp.dipoles = basis_dipoles(basis, levels);
  const Eigen::Map<const Eigen::VectorXd> d(sp.dipoles.data(), n);
  const Eigen::VectorXd rho = boltzmann_distribution(rm);
  sp.sqrt_rho = rho.cwiseSqrt();
  sp.mean = d.dot(rho);
  sp.u = (d.array() - sp.mean).matrix().cwiseProduct(sp.sqrt_rho);
  sp.variance = sp.u.squaredNorm();
  if (sp.variance == 0.0) return sp;

  const double residual = detailed_balance_residual(rm);
  if (residual > 1e-8) {
    throw NumericalError(fmt::format("detailed balance violated (residual {:.3e}); cannot symmetrize", residual));
  }
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(rm.entries.nonZeros()));
  for (int j = 0; j < rm.entries.outerSize(); ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(rm.entries, j); it; ++it) {
      const auto i = static_cast<int>(it.row());
      const double v = i == j ? it.value() : std::sqrt(it.value() * rm.entries.coeff(j, i));
      triplets.emplace_back(i, j, -v);
    }
  }
  sp.neg_s.resize(n, n);
  sp.neg_s.setFromTriplets(triplets.begin(), triplets.end());
  return sp;
}

}  // namespace

double SpectralDecomposition::white_noise() const {
  double s = 0.0;
  for (const auto& p : pairs) s += p.weight / -p.lambda_per_s;
  return s;
}

double SpectralDecomposition::sum_rule_residual() const {
  double half = 0.0;
  for (const auto& p : pairs) half += 0.5 * p.weight;
  const double scale = std::max(std::abs(variance), std::abs(half));
  return scale > 0 ? std::abs(half - variance) / scale : 0.0;
}

PatchDistribution::PatchDistribution(Form form, std::vector<double> weights)
    : form_(form), weights_(std::move(weights)) {
  if (weights_.empty()) throw DomainError("patch distribution needs at least one patch size");
  bool positive = false;
  for (double w : weights_) {
    if (!(w >= 0) || !std::isfinite(w)) throw DomainError("patch weights must be finite and non-negative");
    positive = positive || w > 0;
  }
  if (!positive) throw DomainError("patch distribution needs at least one positive weight");
}

PatchDistribution PatchDistribution::delta(int n0) {
  if (n0 < 1) throw DomainError(fmt::format("patch size must be >= 1, got {}", n0));
  std::vector<double> w(static_cast<std::size_t>(n0), 0.0);
  w.back() = 1.0;
  return PatchDistribution(Form::Delta, std::move(w));
}

PatchDistribution PatchDistribution::one_over_n(int n_max) {
  if (n_max < 1) throw DomainError(fmt::format("N_max must be >= 1, got {}", n_max));
  std::vector<double> w(static_cast<std::size_t>(n_max));
  for (int n = 1; n <= n_max; ++n) w[static_cast<std::size_t>(n - 1)] = 1.0 / n;
  return PatchDistribution(Form::OneOverN, std::move(w));
}

PatchDistribution PatchDistribution::custom(std::vector<double> weights) {
  return PatchDistribution(Form::Custom, std::move(weights));
}

double PatchDistribution::weight(int n) const {
  if (n < 1 || n > n_max()) return 0.0;
  return weights_[static_cast<std::size_t>(n - 1)];
}

SpectralDecomposition lorentzian_weights(const EigenDecomposition& ed, const SymmetricBasis& basis,
                                         const LevelStructure& levels) {
  const Provenance& pv = ed.provenance;
  if (pv.atoms != basis.atoms() || pv.levels != basis.levels() || pv.levels_hash != levels.hash() ||
      ed.dimension() != basis.size()) {
    throw DomainError(fmt::format(
        "decomposition (N={}, M={}, levels {:016x}) does not match basis (N={}, M={}) and levels {:016x}",
        pv.atoms, pv.levels, pv.levels_hash, basis.atoms(), basis.levels(), levels.hash()));
  }

  SpectralDecomposition sd;
  sd.provenance = pv;
  sd.dipoles = basis_dipoles(basis, levels);
  const auto n = static_cast<Eigen::Index>(basis.size());
  const Eigen::Map<const Eigen::VectorXd> d(sd.dipoles.data(), n);
  const Eigen::VectorXd rho = ed.sqrt_weights.cwiseAbs2();
  sd.mean_dipole = d.dot(rho);
  const Eigen::VectorXd centered = d.array() - sd.mean_dipole;
  sd.variance = centered.cwiseAbs2().dot(rho);

  // C_k = 2 sum_ij D_i A^-1_ik A_kj D_j rho_j collapses to 2 u_k^2 with
  // u = V^T (D o sqrt(rho)); centering D only removes the steady component.
  const Eigen::VectorXd u = ed.symmetric_vectors.transpose() * centered.cwiseProduct(ed.sqrt_weights);
  sd.pairs.reserve(static_cast<std::size_t>(n - 1));
  for (Eigen::Index k = 0; k < n; ++k) {
    if (static_cast<std::size_t>(k) == ed.steady_index) continue;
    sd.pairs.push_back({ed.eigenvalues(k), 2.0 * u(k) * u(k)});
  }
  return sd;
}

double evaluate_spectrum(const SpectralDecomposition& sd, double omega) {
  check_omega(omega);
  const double w2 = omega * omega;
  double s = 0.0;
  for (const auto& p : sd.pairs) s += p.weight * -p.lambda_per_s / (p.lambda_per_s * p.lambda_per_s + w2);
  return s;
}

std::vector<double> evaluate_spectrum(const SpectralDecomposition& sd, const std::vector<double>& omegas) {
  std::vector<double> out(omegas.size());
  std::transform(omegas.begin(), omegas.end(), out.begin(),
                 [&](double w) { return evaluate_spectrum(sd, w); });
  return out;
}

SpectralDecomposition truncate_pairs(const SpectralDecomposition& sd, std::size_t k) {
  SpectralDecomposition out = sd;
  std::stable_sort(out.pairs.begin(), out.pairs.end(), [](const LorentzianPair& a, const LorentzianPair& b) {
    return std::abs(a.weight / a.lambda_per_s) > std::abs(b.weight / b.lambda_per_s);
  });
  if (out.pairs.size() > k) out.pairs.resize(k);
  return out;
}

double white_noise_level(const RateMatrix& rm, const SymmetricBasis& basis, const LevelStructure& levels) {
  const SymmetrizedProblem sp = symmetrize(rm, basis, levels);
  const auto n = sp.neg_s.rows();
  if (sp.variance == 0.0 || n < 2) return 0.0;

  // -S is positive semidefinite with kernel sqrt(rho). Pinning state 0 leaves
  // a definite system, and u is orthogonal to the kernel, so u.y is unchanged.
  const Eigen::SparseMatrix<double> a = sp.neg_s.bottomRightCorner(n - 1, n - 1);
  const Eigen::VectorXd b = sp.u.tail(n - 1);
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(1e-14);
  cg.setMaxIterations(static_cast<Eigen::Index>(std::max<Eigen::Index>(1000, 10 * n)));
  cg.compute(a);
  const Eigen::VectorXd y = cg.solve(b);
  if (cg.info() != Eigen::Success && !(cg.error() < 1e-10)) {
    throw ConvergenceError(fmt::format("conjugate gradients for S(0) stopped after {} iterations at residual {:.3e}",
                                       cg.iterations(), cg.error()));
  }
  return 2.0 * b.dot(y);
}

std::vector<double> resolvent_spectrum(const RateMatrix& rm, const SymmetricBasis& basis,
                                       const LevelStructure& levels, const std::vector<double>& omegas) {
  using Complex = std::complex<double>;
  if (rm.dimension() != basis.size()) throw DomainError("rate matrix and basis dimensions differ");
  const auto n = static_cast<Eigen::Index>(basis.size());
  const std::vector<double> dv = basis_dipoles(basis, levels);
  const Eigen::Map<const Eigen::VectorXd> d(dv.data(), n);
  const Eigen::VectorXd rho = boltzmann_distribution(rm);
  const Eigen::VectorXcd y = (d.array() - d.dot(rho)).matrix().cwiseProduct(rho).cast<Complex>();

  Eigen::SparseMatrix<Complex> a = rm.entries.cast<Complex>();
  for (Eigen::Index i = 0; i < n; ++i) a.coeffRef(i, i) += 0.0;  // make every diagonal slot explicit
  a.makeCompressed();
  std::vector<Complex*> diag(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) diag[static_cast<std::size_t>(i)] = &a.coeffRef(i, i);
  std::vector<Complex> base(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) base[static_cast<std::size_t>(i)] = *diag[static_cast<std::size_t>(i)];

  Eigen::SparseLU<Eigen::SparseMatrix<Complex>, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(a);
  std::vector<double> out(omegas.size());
  for (std::size_t q = 0; q < omegas.size(); ++q) {
    const double w = omegas[q];
    if (!std::isfinite(w) || w < 0) throw DomainError("frequencies must be finite and >= 0");
    if (w == 0.0) {
      out[q] = white_noise_level(rm, basis, levels);
      continue;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      *diag[static_cast<std::size_t>(i)] = base[static_cast<std::size_t>(i)] + Complex(0.0, w);
    }
    lu.factorize(a);
    if (lu.info() != Eigen::Success) {
      throw NumericalError(fmt::format("sparse LU of M + i omega failed at omega={}: {}", w, lu.lastErrorMessage()));
    }
    const Eigen::VectorXcd x = lu.solve(y);
    out[q] = -2.0 * (d.cast<Complex>().dot(x)).real();
  }
  return out;
}

SpectralDecomposition lanczos_decomposition(const RateMatrix& rm, const SymmetricBasis& basis,
                                            const LevelStructure& levels, const std::vector<double>& omegas,
                                            const KrylovOptions& opts) {
  for (double w : omegas) check_omega(w);
  const SymmetrizedProblem sp = symmetrize(rm, basis, levels);
  SpectralDecomposition sd;
  sd.provenance = rm.provenance;
  sd.dipoles = sp.dipoles;
  sd.mean_dipole = sp.mean;
  sd.variance = sp.variance;
  if (sp.variance == 0.0) return sd;

  const auto n = sp.neg_s.rows();
  const auto max_steps = static_cast<Eigen::Index>(std::min<std::size_t>(opts.max_steps, static_cast<std::size_t>(n)));
  std::vector<double> monitor{0.0};
  monitor.insert(monitor.end(), omegas.begin(), omegas.end());

  Eigen::MatrixXd q(n, max_steps);
  std::vector<double> alpha, beta;
  Eigen::VectorXd theta, first;
  std::vector<double> previous;
  Eigen::VectorXd v = sp.u / std::sqrt(sp.variance);
  double scale = 0.0;
  bool converged = false;

  auto ritz = [&](Eigen::Index k) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    const Eigen::Map<const Eigen::VectorXd> diag(alpha.data(), k);
    const Eigen::Map<const Eigen::VectorXd> off(beta.data(), k - 1);
    es.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
    theta = es.eigenvalues();
    first = es.eigenvectors().row(0).transpose();
  };
  auto evaluate = [&]() {
    std::vector<double> out(monitor.size(), 0.0);
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
      const double c = 2.0 * sp.variance * first[k] * first[k];
      for (std::size_t i = 0; i < monitor.size(); ++i) {
        out[i] += c * theta[k] / (theta[k] * theta[k] + monitor[i] * monitor[i]);
      }
    }
    return out;
  };

  Eigen::Index steps = 0;
  for (Eigen::Index j = 0; j < max_steps; ++j) {
    q.col(j) = v;
    Eigen::VectorXd w = sp.neg_s * v;
    if (j > 0) w -= beta.back() * q.col(j - 1);
    alpha.push_back(v.dot(w));
    w -= alpha.back() * v;
    // Full reorthogonalization, twice, plus removal of the steady direction.
    for (int pass = 0; pass < 2; ++pass) {
      w -= q.leftCols(j + 1) * (q.leftCols(j + 1).transpose() * w);
      w -= sp.sqrt_rho.dot(w) * sp.sqrt_rho;
    }
    const double b = w.norm();
    scale = std::max(scale, std::abs(alpha.back()) + b);
    steps = j + 1;
    const bool exhausted = b <= 1e-13 * scale;
    if (exhausted || steps % 10 == 0 || steps == max_steps) {
      ritz(steps);
      const std::vector<double> now = evaluate();
      if (exhausted) {
        converged = true;
        break;
      }
      if (!previous.empty()) {
        double change = 0.0;
        for (std::size_t i = 0; i < now.size(); ++i) change = std::max(change, std::abs(now[i] - previous[i]) / now[i]);
        if (change < opts.tolerance) {
          converged = true;
          break;
        }
      }
      previous = now;
    }
    beta.push_back(b);
    v = w / b;
  }
  if (!converged) {
    throw ConvergenceError(fmt::format("Lanczos spectrum not converged to {:.1e} after {} steps (dimension {})",
                                       opts.tolerance, steps, n));
  }
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    if (!(theta[k] > 0)) throw NumericalError(fmt::format("non-positive Ritz value {:.3e}", theta[k]));
    sd.pairs.push_back({-theta[k], 2.0 * sp.variance * first[k] * first[k]});
  }
  sd.krylov_steps = static_cast<std::size_t>(steps);
  return sd;
}

SpectralDecomposition low_temperature_spectrum(int atoms, const LevelStructure& levels,
                                               const ThermalParams& thermal) {
  if (atoms < 1) throw DomainError(fmt::format("need at least one adatom, got N={}", atoms));
  if (levels.count() < 2) throw InsufficientLevels("the low-temperature model needs two levels");
  SpectralDecomposition sd;
  sd.provenance = Provenance{atoms, static_cast<int>(levels.count()), thermal.temperature_ratio, levels.hash()};
  const double c = default_pink_amplitude(levels, thermal);
  sd.pairs.push_back({-atoms * levels.fundamental_rate(), c});
  sd.variance = 0.5 * c;
  return sd;
}

double second_order_white_noise(int atoms, double beta_delta, double d1, double d2, double d3, double gamma12,
                                double gamma23) {
  if (atoms < 2) {
    throw DomainError(fmt::format("the second-order coefficient diverges at N=1; need N >= 2, got N={}", atoms));
  }
  if (!(gamma12 > 0) || !(gamma23 > 0)) throw DomainError("rates must be positive");
  const double n = atoms;
  const double d12 = d1 - d2;
  const double d13 = d1 - d3;
  return 2.0 * d12 * d12 * (3.0 * n - 1.0) / ((n - 1.0) * n * gamma12) +
         2.0 * d13 * (2.0 * d12 / (n * gamma12) + d13 / gamma23) * std::exp(beta_delta);
}

double second_order_white_noise(int atoms, double delta_per_s, const LevelStructure& levels,
                                const ThermalParams& thermal) {
  if (levels.count() < 3) throw InsufficientLevels("the second-order coefficient needs three levels");
  const double beta = thermal.beta(levels.fundamental_frequency());
  if (std::isinf(beta)) throw DomainError("the second-order coefficient needs T > 0");
  const auto& d = levels.dipoles_debye;
  return second_order_white_noise(atoms, beta * delta_per_s, d[0], d[1], d[2], levels.rate(0, 1),
                                  levels.rate(1, 2));
}

std::vector<double> aggregate_patches(const std::map<int, SpectralDecomposition>& spectra,
                                      const PatchDistribution& dist, const std::vector<double>& omegas) {
  std::vector<double> total(omegas.size(), 0.0);
  for (int n = 1; n <= dist.n_max(); ++n) {
    const double w = dist.weight(n);
    if (w == 0.0) continue;
    const auto it = spectra.find(n);
    if (it == spectra.end()) throw DomainError(fmt::format("no spectrum for patch size N={}", n));
    for (std::size_t i = 0; i < omegas.size(); ++i) total[i] += w * evaluate_spectrum(it->second, omegas[i]);
  }
  return total;
}

double pink_noise_closed_form(double gamma0_per_s, double amplitude, double omega) {
  if (!(gamma0_per_s > 0)) throw DomainError("Gamma0 must be positive");
  if (!(omega >= 0) || !std::isfinite(omega)) throw DomainError(fmt::format("omega must be >= 0, got {}", omega));
  const double x = omega / gamma0_per_s;
  if (x < kPinkSeriesCutoff) {
    const double x2 = x * x;
    const double pi2 = units::kPi * units::kPi;
    return amplitude / gamma0_per_s * (pi2 / 6.0 - pi2 * pi2 * x2 / 90.0 + pi2 * pi2 * pi2 * x2 * x2 / 945.0);
  }
  return 0.5 * amplitude * (-gamma0_per_s / (omega * omega) + units::kPi / (std::tanh(units::kPi * x) * omega));
}

std::vector<double> pink_noise_closed_form(double gamma0_per_s, double amplitude,
                                           const std::vector<double>& omegas) {
  std::vector<double> out(omegas.size());
  for (std::size_t i = 0; i < omegas.size(); ++i) out[i] = pink_noise_closed_form(gamma0_per_s, amplitude, omegas[i]);
  return out;
}

double default_pink_amplitude(const LevelStructure& levels, const ThermalParams& thermal) {
  if (levels.count() < 2) throw InsufficientLevels("need two levels");
  const double d12 = levels.dipoles_debye[0] - levels.dipoles_debye[1];
  return 2.0 * d12 * d12 * thermal.boltzmann_factor();
}

std::vector<double> log_frequency_grid(double lo, double hi, int points_per_decade) {
  if (!(lo > 0) || !(hi > lo) || !std::isfinite(hi)) {
    throw ConfigError(fmt::format("frequency grid needs 0 < min < max, got [{}, {}]", lo, hi));
  }
  if (points_per_decade < 1) throw ConfigError("points per decade must be >= 1");
  const double decades = std::log10(hi / lo);
  const auto steps = std::max<long>(1, std::lround(std::ceil(decades * points_per_decade - 1e-9)));
  std::vector<double> grid(static_cast<std::size_t>(steps + 1));
  const double llo = std::log10(lo);
  const double lhi = std::log10(hi);
  for (long i = 0; i <= steps; ++i) {
    grid[static_cast<std::size_t>(i)] = std::pow(10.0, llo + (lhi - llo) * static_cast<double>(i) / steps);
  }
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

std::vector<double> local_log_slope(const std::vector<double>& omegas, const std::vector<double>& values) {
  if (omegas.size() != values.size()) throw DomainError("grid and values differ in length");
  const std::size_t n = omegas.size();
  std::vector<double> slope(n, 0.0);
  if (n < 2) return slope;
  auto s = [&](std::size_t a, std::size_t b) {
    return (std::log(values[b]) - std::log(values[a])) / (std::log(omegas[b]) - std::log(omegas[a]));
  };
  slope[0] = s(0, 1);
  slope[n - 1] = s(n - 2, n - 1);
  for (std::size_t i = 1; i + 1 < n; ++i) slope[i] = s(i - 1, i + 1);
  return slope;
}

double fit_log_slope(const std::vector<double>& omegas, const std::vector<double>& values, double lo,
                     double hi) {
  if (omegas.size() != values.size()) throw DomainError("grid and values differ in length");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    if (omegas[i] < lo || omegas[i] > hi) continue;
    const double x = std::log(omegas[i]);
    const double y = std::log(values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  if (count < 2) throw DomainError(fmt::format("fewer than two grid points in [{}, {}]", lo, hi));
  const double c = static_cast<double>(count);
  return (c * sxy - sx * sy) / (c * sxx - sx * sx);
}

}  // namespace adnoise
