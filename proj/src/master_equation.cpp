#include "adnoise/master_equation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <fmt/core.h>
#include <lapacke.h>

#include "adnoise/errors.hpp"

namespace adnoise {

namespace {

constexpr double kSymmetrizationTolerance = 1e-8;
constexpr double kZeroModeTolerance = 1e-9;

// Tarjan's algorithm, iterative. Edges follow the jump direction j -> i for
// every positive off-diagonal entry M_ij.
std::vector<int> strongly_connected_components(const Eigen::SparseMatrix<double>& m, int& count) {
  const auto n = static_cast<int>(m.cols());
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, j); it; ++it) {
      if (it.row() != j && it.value() > 0) adj[static_cast<std::size_t>(j)].push_back(static_cast<int>(it.row()));
    }
  }
  std::vector<int> index(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n), 0),
      comp(static_cast<std::size_t>(n), -1);
  std::vector<char> on_stack(static_cast<std::size_t>(n), 0);
  std::vector<int> stack;
  std::vector<std::pair<int, std::size_t>> call;
  int next = 0;
  count = 0;
  for (int root = 0; root < n; ++root) {
    if (index[static_cast<std::size_t>(root)] >= 0) continue;
    call.emplace_back(root, 0);
    while (!call.empty()) {
      auto& [v, edge] = call.back();
      const auto vs = static_cast<std::size_t>(v);
      if (edge == 0 && index[vs] < 0) {
        index[vs] = low[vs] = next++;
        stack.push_back(v);
        on_stack[vs] = 1;
      }
      if (edge < adj[vs].size()) {
        const int w = adj[vs][edge++];
        const auto ws = static_cast<std::size_t>(w);
        if (index[ws] < 0) {
          call.emplace_back(w, 0);
        } else if (on_stack[ws]) {
          low[vs] = std::min(low[vs], index[ws]);
        }
        continue;
      }
      if (low[vs] == index[vs]) {
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[static_cast<std::size_t>(w)] = 0;
          comp[static_cast<std::size_t>(w)] = count;
        } while (w != v);
        ++count;
      }
      const int finished = v;
      call.pop_back();
      if (!call.empty()) {
        const auto parent = static_cast<std::size_t>(call.back().first);
        low[parent] = std::min(low[parent], low[static_cast<std::size_t>(finished)]);
      }
    }
  }
  return comp;
}

Eigen::VectorXd log_boltzmann(const RateMatrix& rm) {
  const Eigen::Index n = rm.state_energies_per_s.size();
  Eigen::VectorXd logw(n);
  if (std::isinf(rm.beta_s)) {
    for (Eigen::Index i = 0; i < n; ++i) {
      logw(i) = rm.state_energies_per_s(i) == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
    }
  } else {
    logw = -rm.beta_s * rm.state_energies_per_s;
  }
  const double top = logw.maxCoeff();
  double z = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) z += std::exp(logw(i) - top);
  logw.array() -= top + std::log(z);
  return logw;
}

}  // namespace

double ThermalParams::boltzmann_factor() const {
  validate();
  return is_zero() ? 0.0 : std::exp(-1.0 / temperature_ratio);
}

double ThermalParams::beta(double omega0_per_s) const {
  validate();
  if (!(omega0_per_s > 0)) throw DomainError("fundamental frequency must be positive");
  return is_zero() ? std::numeric_limits<double>::infinity() : 1.0 / (temperature_ratio * omega0_per_s);
}

void ThermalParams::validate() const {
  if (!(temperature_ratio >= 0) || !std::isfinite(temperature_ratio)) {
    throw DomainError(fmt::format("temperature ratio T/omega0 must be finite and >= 0, got {}",
                                  temperature_ratio));
  }
}

bool TransitionSet::allows(int mu, int nu) const {
  if (mu >= nu) return false;
  switch (kind_) {
    case Kind::AllPairs:
      return true;
    case Kind::NearestNeighbor:
      return nu == mu + 1;
    case Kind::Custom:
      return std::find(pairs_.begin(), pairs_.end(), std::pair{mu, nu}) != pairs_.end();
  }
  return false;
}

Eigen::MatrixXd EigenDecomposition::right_vectors() const {
  return sqrt_weights.asDiagonal() * symmetric_vectors;
}

Eigen::MatrixXd EigenDecomposition::left_vectors() const {
  return symmetric_vectors.transpose() * sqrt_weights.cwiseInverse().asDiagonal();
}

RateMatrix build_rate_matrix(const SymmetricBasis& basis, const LevelStructure& levels,
                             const ThermalParams& thermal, const TransitionSet& transition_set) {
  levels.validate();
  thermal.validate();
  if (static_cast<std::size_t>(basis.levels()) != levels.count()) {
    throw DomainError(fmt::format("basis has M={} levels but the level structure has {}",
                                  basis.levels(), levels.count()));
  }
  if (transition_set.empty()) throw DomainError("transition set is empty");

  const int m_levels = basis.levels();
  const double beta = thermal.beta(levels.fundamental_frequency());

  RateMatrix rm;
  rm.beta_s = beta;
  rm.provenance = Provenance{basis.atoms(), basis.levels(), thermal.temperature_ratio, levels.hash()};

  const auto n = basis.size();
  rm.state_energies_per_s.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    double e = 0.0;
    for (int mu = 1; mu < m_levels; ++mu) {
      e += basis[i][static_cast<std::size_t>(mu)] * levels.transition_frequency(0, static_cast<std::size_t>(mu));
    }
    rm.state_energies_per_s(static_cast<Eigen::Index>(i)) = e;
  }

  struct Channel {
    int mu, nu;
    double emit;    // F
    double absorb;  // F exp(-beta omega)
  };
  std::vector<Channel> channels;
  for (int mu = 0; mu < m_levels; ++mu) {
    for (int nu = mu + 1; nu < m_levels; ++nu) {
      if (!transition_set.allows(mu, nu)) continue;
      const double g = levels.rate(static_cast<std::size_t>(mu), static_cast<std::size_t>(nu));
      if (g == 0.0) continue;
      const double bw = beta * levels.transition_frequency(static_cast<std::size_t>(mu), static_cast<std::size_t>(nu));
      const double boltz = std::isinf(bw) ? 0.0 : std::exp(-bw);
      const double f = std::isinf(bw) ? g : g / -std::expm1(-bw);
      channels.push_back({mu, nu, f, f * boltz});
    }
  }

  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<double> diag(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const SymmetricState& s = basis[j];
    for (const Channel& c : channels) {
      const int m_mu = s[static_cast<std::size_t>(c.mu)];
      const int m_nu = s[static_cast<std::size_t>(c.nu)];
      if (m_nu > 0) {
        const double r = c.emit * m_nu * (m_mu + 1);
        const std::size_t i = basis.index(apply_lowering(s, c.mu, c.nu).state);
        triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), r);
        diag[j] -= r;
        rm.transitions.push_back({j, i, c.mu, c.nu, true, r});
      }
      if (m_mu > 0 && c.absorb > 0.0) {
        const double r = c.absorb * m_mu * (m_nu + 1);
        const std::size_t i = basis.index(apply_raising(s, c.mu, c.nu).state);
        triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), r);
        diag[j] -= r;
        rm.transitions.push_back({j, i, c.mu, c.nu, false, r});
      }
    }
  }
  for (std::size_t j = 0; j < n; ++j) triplets.emplace_back(static_cast<int>(j), static_cast<int>(j), diag[j]);
  rm.entries.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  rm.entries.setFromTriplets(triplets.begin(), triplets.end());
  rm.entries.makeCompressed();
  return rm;
}

// Eigen's vectorized exp clamps its argument, so exp(-inf) would come back
// as a denormal rather than zero.
Eigen::VectorXd boltzmann_distribution(const RateMatrix& rm) {
  return log_boltzmann(rm).unaryExpr([](double x) { return std::exp(x); });
}

std::size_t closed_class_count(const RateMatrix& rm) {
  int count = 0;
  const std::vector<int> comp = strongly_connected_components(rm.entries, count);
  std::vector<char> leaks(static_cast<std::size_t>(count), 0);
  for (int j = 0; j < rm.entries.outerSize(); ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(rm.entries, j); it; ++it) {
      if (it.row() == j || !(it.value() > 0)) continue;
      const int cj = comp[static_cast<std::size_t>(j)];
      if (comp[static_cast<std::size_t>(it.row())] != cj) leaks[static_cast<std::size_t>(cj)] = 1;
    }
  }
  return static_cast<std::size_t>(std::count(leaks.begin(), leaks.end(), 0));
}

namespace {

constexpr Eigen::Index kDirectSteadyStateLimit = 2000;

// Rows of M sum to the zero vector, so one balance equation is redundant.
Eigen::VectorXd direct_balance(const RateMatrix& rm) {
  const auto n = static_cast<Eigen::Index>(rm.dimension());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(rm.entries.nonZeros() + n));
  for (int j = 0; j < rm.entries.outerSize(); ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(rm.entries, j); it; ++it) {
      if (it.row() != 0) triplets.emplace_back(static_cast<int>(it.row()), j, it.value());
    }
    triplets.emplace_back(0, j, 1.0);
  }
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(triplets.begin(), triplets.end());
  a.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) {
    throw NumericalError(fmt::format("sparse LU of the balance equations failed: {}", lu.lastErrorMessage()));
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(0) = 1.0;
  return lu.solve(rhs);
}

// Fix the ground population to one and solve the remaining rows with
// BiCGSTAB. Returns an empty vector if the iteration does not settle.
Eigen::VectorXd iterative_balance(const RateMatrix& rm) {
  const auto n = static_cast<Eigen::Index>(rm.dimension());
  const Eigen::SparseMatrix<double> a = rm.entries.bottomRightCorner(n - 1, n - 1);
  const Eigen::VectorXd b = -Eigen::VectorXd(rm.entries.col(0)).tail(n - 1);
  Eigen::BiCGSTAB<Eigen::SparseMatrix<double>> solver;
  solver.setTolerance(1e-15);
  solver.setMaxIterations(std::max<Eigen::Index>(1000, 4 * n));
  solver.compute(a);
  if (solver.info() != Eigen::Success) return {};
  // Start from zero: excited populations can be tens of decades below the
  // ground one, and any O(1) guess swamps them.
  const Eigen::VectorXd tail = solver.solve(b);
  if (!tail.allFinite() || (solver.info() != Eigen::Success && !(solver.error() < 1e-12))) return {};
  Eigen::VectorXd rho(n);
  rho(0) = 1.0;
  rho.tail(n - 1) = tail;
  return rho;
}

}  // namespace

Eigen::VectorXd steady_state(const RateMatrix& rm) {
  const auto n = static_cast<Eigen::Index>(rm.dimension());
  if (n == 0) throw DomainError("empty rate matrix");
  const std::size_t closed = closed_class_count(rm);
  if (closed != 1) {
    throw ReducibilityError(fmt::format(
        "generator has {} closed communicating classes; the steady state is not unique", closed));
  }
  if (n == 1) return Eigen::VectorXd::Ones(1);

  Eigen::VectorXd rho = n > kDirectSteadyStateLimit ? iterative_balance(rm) : Eigen::VectorXd();
  if (rho.size() == 0) rho = direct_balance(rm);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (rho(i) < 0) {
      if (rho(i) < -1e-12) {
        throw NumericalError(fmt::format("steady state has negative population {} at state {}", rho(i), i));
      }
      rho(i) = 0.0;
    }
  }
  rho /= rho.sum();
  return rho;
}

double detailed_balance_residual(const RateMatrix& rm) {
  const Eigen::SparseMatrix<double>& m = rm.entries;
  double worst = 0.0;
  for (int j = 0; j < m.outerSize(); ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, j); it; ++it) {
      const auto i = static_cast<int>(it.row());
      if (i >= j) continue;  // visit each unordered pair once (i < j)
      const double forward = it.value();  // j -> i
      const double backward = m.coeff(j, i);  // i -> j
      if (forward == 0.0 && backward == 0.0) continue;
      // Expect forward * exp(-beta E_j) == backward * exp(-beta E_i).
      const double de = rm.state_energies_per_s(i) - rm.state_energies_per_s(j);
      double lhs, rhs;
      if (std::isinf(rm.beta_s)) {
        worst = std::max(worst, (forward > 0) != (backward > 0) ? 1.0 : 0.0);
        continue;
      }
      if (de >= 0) {
        lhs = forward;
        rhs = backward * std::exp(-rm.beta_s * de);
      } else {
        lhs = forward * std::exp(rm.beta_s * de);
        rhs = backward;
      }
      const double scale = std::max(lhs, rhs);
      if (scale > 0) worst = std::max(worst, std::abs(lhs - rhs) / scale);
    }
  }
  return worst;
}

EigenDecomposition decompose(const RateMatrix& rm, const RateMatrixOptions& opts) {
  const std::size_t n = rm.dimension();
  if (n == 0) throw DomainError("empty rate matrix");
  if (n > opts.dense_cap) {
    throw CapacityError(fmt::format(
        "dense eigendecomposition of dimension {} exceeds the cap of {}; reduce N or M", n, opts.dense_cap));
  }
  if (std::isinf(rm.beta_s)) {
    throw NumericalError("zero-temperature generators have no detailed-balance symmetrization");
  }
  const double residual = detailed_balance_residual(rm);
  if (!(residual <= kSymmetrizationTolerance)) {
    throw NumericalError(fmt::format(
        "detailed balance violated (relative residual {:.3e}); cannot symmetrize the generator", residual));
  }
  if (closed_class_count(rm) != 1) {
    throw ReducibilityError("generator is reducible; relaxation modes are not unique");
  }

  const auto dim = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(dim, dim);
  for (int j = 0; j < rm.entries.outerSize(); ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(rm.entries, j); it; ++it) {
      const auto i = it.row();
      if (i == j) {
        s(i, j) = it.value();
      } else if (i < j) {
        const double sym = std::sqrt(it.value()) * std::sqrt(rm.entries.coeff(j, i));
        s(i, j) = sym;
        s(j, i) = sym;
      }
    }
  }
  double norm = s.cwiseAbs().colwise().sum().maxCoeff();

  Eigen::VectorXd w(dim);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', static_cast<lapack_int>(dim), s.data(),
                                         static_cast<lapack_int>(dim), w.data());
  if (info != 0) {
    throw ConvergenceError(fmt::format("symmetric eigensolve failed (info={}) for dimension {}, ||S||_1={:.3e}",
                                       info, n, norm));
  }

  EigenDecomposition ed;
  ed.provenance = rm.provenance;
  ed.eigenvalues = w.reverse();
  ed.symmetric_vectors = s.rowwise().reverse();
  ed.steady_index = 0;
  ed.sqrt_weights = log_boltzmann(rm).unaryExpr([](double x) { return std::exp(0.5 * x); });

  const double scale = std::abs(ed.eigenvalues(dim - 1));
  Eigen::Index zeros = 0;
  for (Eigen::Index k = 0; k < dim; ++k) {
    if (std::abs(ed.eigenvalues(k)) < kZeroModeTolerance * scale) ++zeros;
  }
  if (dim > 1 && zeros != 1) {
    throw ReducibilityError(fmt::format("found {} zero eigenvalues (tolerance {:.1e} * {:.3e}); expected one",
                                        zeros, kZeroModeTolerance, scale));
  }
  if (dim > 1 && ed.eigenvalues(1) >= 0) {
    throw NumericalError(fmt::format("non-steady eigenvalue {} is not negative", ed.eigenvalues(1)));
  }
  ed.eigenvalues(0) = 0.0;
  if (ed.symmetric_vectors.col(0).dot(ed.sqrt_weights) < 0) ed.symmetric_vectors.col(0) *= -1.0;
  const double mismatch = (ed.symmetric_vectors.col(0) - ed.sqrt_weights).norm();
  if (mismatch > 1e-6) {
    throw NumericalError(fmt::format("zero mode deviates from sqrt(Boltzmann) by {:.3e}", mismatch));
  }
  return ed;
}

}  // namespace adnoise
