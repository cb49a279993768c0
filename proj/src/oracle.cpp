#include "adnoise/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <random>
#include <thread>

#include <fftw3.h>
#include <fmt/core.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "adnoise/errors.hpp"
#include "adnoise/units.hpp"

namespace adnoise {

namespace {

constexpr double kMinDecades = 5.0;  // required kappa * tau_max

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

struct JumpTable {
  std::vector<std::size_t> offset;  // per state, into target/cumulative
  std::vector<std::size_t> target;
  std::vector<double> cumulative;
  std::vector<double> exit_rate;
};

JumpTable jump_table(const RateMatrix& rm) {
  JumpTable t;
  const auto n = rm.dimension();
  t.offset.assign(n + 1, 0);
  t.exit_rate.assign(n, 0.0);
  for (int j = 0; j < rm.entries.outerSize(); ++j) {
    double acc = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(rm.entries, j); it; ++it) {
      if (it.row() == j || !(it.value() > 0)) continue;
      acc += it.value();
      t.target.push_back(static_cast<std::size_t>(it.row()));
      t.cumulative.push_back(acc);
    }
    t.exit_rate[static_cast<std::size_t>(j)] = acc;
    t.offset[static_cast<std::size_t>(j) + 1] = t.target.size();
  }
  return t;
}

struct FftwPlan {
  std::size_t length;
  fftw_plan plan = nullptr;
  FftwPlan(std::size_t l) : length(l) {
    double* in = fftw_alloc_real(l);
    fftw_complex* out = fftw_alloc_complex(l / 2 + 1);
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(l), in, out, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
  }
  ~FftwPlan() { fftw_destroy_plan(plan); }
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;
};

struct TrajectoryOutput {
  std::vector<double> periodogram;  // averaged over segments
  std::vector<double> occupancy;
  std::uint64_t jumps = 0;
};

TrajectoryOutput run_trajectory(const JumpTable& table, const std::vector<double>& dipoles,
                                const TrajectoryConfig& cfg, std::uint64_t seed, const FftwPlan& plan,
                                const std::vector<double>& window, double window_power) {
  std::mt19937_64 rng(seed);
  const std::size_t n_states = dipoles.size();
  const auto samples = static_cast<std::size_t>(std::floor((cfg.duration_s - cfg.burn_in_s) / cfg.sampling_dt_s));
  std::vector<double> series(samples);
  TrajectoryOutput out;
  out.occupancy.assign(n_states, 0.0);

  std::size_t state = 0;  // ground state (N, 0, ..., 0)
  double t = 0.0;
  auto next_jump = [&]() {
    const double rate = table.exit_rate[state];
    if (rate == 0.0) return std::numeric_limits<double>::infinity();
    return t + -std::log1p(-uniform01(rng)) / rate;
  };
  double t_next = next_jump();
  auto jump = [&]() {
    const std::size_t lo = table.offset[state];
    const std::size_t hi = table.offset[state + 1];
    const double pick = uniform01(rng) * table.exit_rate[state];
    std::size_t k = lo;
    while (k + 1 < hi && table.cumulative[k] <= pick) ++k;
    t = t_next;
    state = table.target[k];
    ++out.jumps;
    t_next = next_jump();
  };

  while (t_next <= cfg.burn_in_s) jump();
  double last = cfg.burn_in_s;
  const double t_end = cfg.burn_in_s + static_cast<double>(samples) * cfg.sampling_dt_s;
  for (std::size_t i = 0; i < samples; ++i) {
    const double ts = cfg.burn_in_s + static_cast<double>(i) * cfg.sampling_dt_s;
    while (t_next <= ts) {
      out.occupancy[state] += t_next - last;
      last = t_next;
      jump();
    }
    series[i] = dipoles[state];
  }
  while (t_next <= t_end) {
    out.occupancy[state] += t_next - last;
    last = t_next;
    jump();
  }
  out.occupancy[state] += t_end - last;
  for (double& o : out.occupancy) o /= t_end - cfg.burn_in_s;

  const std::size_t l = plan.length;
  const std::size_t hop = l / 2;
  const std::size_t bins = l / 2;
  out.periodogram.assign(bins, 0.0);
  double* in = fftw_alloc_real(l);
  fftw_complex* spec = fftw_alloc_complex(l / 2 + 1);
  std::size_t segments = 0;
  for (std::size_t start = 0; start + l <= samples; start += hop) {
    double mean = 0.0;
    for (std::size_t i = 0; i < l; ++i) mean += series[start + i];
    mean /= static_cast<double>(l);
    for (std::size_t i = 0; i < l; ++i) in[i] = (series[start + i] - mean) * window[i];
    fftw_execute_dft_r2c(plan.plan, in, spec);
    for (std::size_t k = 1; k <= bins; ++k) {
      out.periodogram[k - 1] += spec[k][0] * spec[k][0] + spec[k][1] * spec[k][1];
    }
    ++segments;
  }
  fftw_free(in);
  fftw_free(spec);
  const double scale = cfg.sampling_dt_s / (window_power * static_cast<double>(segments));
  for (double& p : out.periodogram) p *= scale;
  return out;
}

void mean_and_stderr(const std::vector<std::vector<double>>& rows, std::vector<double>& mean,
                     std::vector<double>& err) {
  const std::size_t n = rows.size();
  const std::size_t m = rows.front().size();
  mean.assign(m, 0.0);
  err.assign(m, 0.0);
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < m; ++k) mean[k] += r[k];
  }
  for (double& v : mean) v /= static_cast<double>(n);
  if (n < 2) return;
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < m; ++k) err[k] += (r[k] - mean[k]) * (r[k] - mean[k]);
  }
  for (double& v : err) v = std::sqrt(v / static_cast<double>(n - 1) / static_cast<double>(n));
}

struct SymmetricSetup {
  Eigen::MatrixXd s;
  Eigen::VectorXd u;  // (D - <D>) o sqrt(rho)
};

SymmetricSetup symmetric_setup(const RateMatrix& rm, const SymmetricBasis& basis, const LevelStructure& levels) {
  if (rm.dimension() != basis.size()) throw DomainError("rate matrix and basis dimensions differ");
  if (std::isinf(rm.beta_s)) throw NumericalError("the correlator route needs T > 0");
  const double residual = detailed_balance_residual(rm);
  if (residual > 1e-8) {
    throw NumericalError(fmt::format("detailed balance violated (residual {:.3e}); cannot symmetrize", residual));
  }
  const auto n = static_cast<Eigen::Index>(basis.size());
  SymmetricSetup out;
  out.s = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < rm.entries.outerSize(); ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(rm.entries, j); it; ++it) {
      if (it.row() == j) {
        out.s(j, j) = it.value();
      } else {
        out.s(it.row(), j) = std::sqrt(it.value()) * std::sqrt(rm.entries.coeff(j, it.row()));
      }
    }
  }
  const Eigen::VectorXd rho = boltzmann_distribution(rm);
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i) d(i) = state_dipole(basis[static_cast<std::size_t>(i)], levels);
  const double mean = d.dot(rho);
  out.u = (d.array() - mean).matrix().cwiseProduct(rho.cwiseSqrt());
  return out;
}

}  // namespace

void TrajectoryConfig::validate() const {
  if (!(duration_s > burn_in_s) || !(burn_in_s >= 0)) {
    throw ConfigError(fmt::format("need duration > burn_in >= 0, got duration={} burn_in={}", duration_s, burn_in_s));
  }
  if (trajectories < 1) throw ConfigError("need at least one trajectory");
  if (!(sampling_dt_s > 0)) throw ConfigError("sampling_dt must be positive");
  if (segment_length < 4 || segment_length % 2 != 0) throw ConfigError("segment length must be even and >= 4");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

std::vector<std::uint64_t> derive_seeds(std::uint64_t seed, std::size_t count) {
  std::vector<std::uint64_t> seeds(count);
  std::uint64_t state = seed;
  for (auto& s : seeds) s = splitmix64(state);
  return seeds;
}

GillespieResult gillespie_spectrum(const RateMatrix& rm, const SymmetricBasis& basis,
                                   const LevelStructure& levels, const TrajectoryConfig& cfg) {
  cfg.validate();
  if (rm.dimension() != basis.size()) throw DomainError("rate matrix and basis dimensions differ");
  const auto samples = static_cast<std::size_t>(std::floor((cfg.duration_s - cfg.burn_in_s) / cfg.sampling_dt_s));
  if (samples < cfg.segment_length) {
    throw ConfigError(fmt::format("{} samples after burn-in are fewer than one Welch segment of {}", samples,
                                  cfg.segment_length));
  }

  const JumpTable table = jump_table(rm);
  std::vector<double> dipoles(basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i) dipoles[i] = state_dipole(basis[i], levels);

  const std::size_t l = cfg.segment_length;
  std::vector<double> window(l);
  double power = 0.0;
  for (std::size_t i = 0; i < l; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * units::kPi * static_cast<double>(i) / static_cast<double>(l));
    power += window[i] * window[i];
  }
  const FftwPlan plan(l);

  const auto n_traj = static_cast<std::size_t>(cfg.trajectories);
  const std::vector<std::uint64_t> seeds = derive_seeds(cfg.seed, n_traj);
  std::vector<TrajectoryOutput> outputs(n_traj);
  std::size_t next = 0;
  std::mutex mu;
  auto worker = [&]() {
    while (true) {
      std::size_t i;
      {
        std::lock_guard lock(mu);
        if (next == n_traj) return;
        i = next++;
      }
      outputs[i] = run_trajectory(table, dipoles, cfg, seeds[i], plan, window, power);
    }
  };
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), n_traj);
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < n_threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  GillespieResult res;
  res.omegas.resize(l / 2);
  for (std::size_t k = 1; k <= l / 2; ++k) {
    res.omegas[k - 1] = 2.0 * units::kPi * static_cast<double>(k) / (static_cast<double>(l) * cfg.sampling_dt_s);
  }
  std::vector<std::vector<double>> spectra, occupancies;
  for (auto& o : outputs) {
    res.jumps += o.jumps;
    spectra.push_back(std::move(o.periodogram));
    occupancies.push_back(std::move(o.occupancy));
  }
  mean_and_stderr(spectra, res.estimate, res.stderr_);
  mean_and_stderr(occupancies, res.occupancy, res.occupancy_stderr);

  try {
    const Eigen::VectorXd rho = steady_state(rm);
    const double floor = 10.0 / static_cast<double>(std::max<std::uint64_t>(res.jumps, 1));
    std::size_t unvisited = 0;
    for (std::size_t i = 0; i < basis.size(); ++i) {
      if (res.occupancy[i] == 0.0 && rho(static_cast<Eigen::Index>(i)) > floor) ++unvisited;
    }
    if (unvisited > 0) {
      res.warnings.push_back(fmt::format(
          "{} states with steady-state weight above {:.3e} were never visited; the run may not be ergodic",
          unvisited, floor));
    }
  } catch (const ReducibilityError& e) {
    res.warnings.push_back(e.what());
  }
  return res;
}

std::vector<double> correlation_function(const RateMatrix& rm, const SymmetricBasis& basis,
                                         const LevelStructure& levels, const std::vector<double>& tau_grid) {
  if (tau_grid.empty()) return {};
  if (tau_grid.front() < 0) throw DomainError("tau grid must start at or after 0");
  for (std::size_t i = 1; i < tau_grid.size(); ++i) {
    if (!(tau_grid[i] > tau_grid[i - 1])) throw DomainError("tau grid must be strictly increasing");
  }
  const SymmetricSetup setup = symmetric_setup(rm, basis, levels);
  std::map<double, Eigen::MatrixXd> cache;
  auto propagator = [&](double h) -> const Eigen::MatrixXd& {
    auto it = cache.find(h);
    if (it == cache.end()) it = cache.emplace(h, Eigen::MatrixXd((setup.s * h).exp())).first;
    return it->second;
  };
  std::vector<double> c(tau_grid.size());
  Eigen::VectorXd v = tau_grid.front() > 0 ? Eigen::VectorXd(propagator(tau_grid.front()) * setup.u) : setup.u;
  c[0] = setup.u.dot(v);
  for (std::size_t i = 1; i < tau_grid.size(); ++i) {
    v = propagator(tau_grid[i] - tau_grid[i - 1]) * v;
    c[i] = setup.u.dot(v);
  }
  return c;
}

std::vector<double> auto_tau_grid(const RateMatrix& rm, const SymmetricBasis& basis,
                                  const LevelStructure& levels) {
  const SymmetricSetup setup = symmetric_setup(rm, basis, levels);
  const double r_max = (-setup.s.diagonal()).maxCoeff();
  if (!(r_max > 0)) throw DomainError("generator has no transitions");
  const double h = 0.02 / r_max;
  const Eigen::MatrixXd step = (setup.s * h).exp();
  const double c0 = setup.u.squaredNorm();
  std::vector<double> grid{0.0};
  if (c0 == 0.0) {
    grid.push_back(h);
    return grid;
  }
  constexpr std::size_t kMaxPoints = 4'000'000;
  Eigen::VectorXd v = setup.u;
  while (grid.size() < kMaxPoints) {
    v = step * v;
    grid.push_back(static_cast<double>(grid.size()) * h);
    if (setup.u.dot(v) < 1e-12 * c0) break;
  }
  return grid;
}

std::vector<double> correlator_spectrum(const RateMatrix& rm, const SymmetricBasis& basis,
                                        const LevelStructure& levels, const std::vector<double>& tau_grid,
                                        const std::vector<double>& omegas) {
  if (tau_grid.size() < 3 || tau_grid.front() != 0.0) {
    throw DomainError("tau grid needs at least three points starting at 0");
  }
  const std::vector<double> c = correlation_function(rm, basis, levels, tau_grid);
  const std::size_t n = c.size();
  const double tau_max = tau_grid.back();
  const double c0 = c.front();

  // Tail: c(tau) ~ c_N exp(-kappa (tau - tau_N)) beyond the grid.
  double kappa = 0.0;
  const bool decayed = c0 == 0.0 || std::abs(c[n - 1]) < 1e-12 * c0;
  if (!decayed) {
    const std::size_t back = std::max<std::size_t>(1, n / 20);
    const double ratio = c[n - 1] / c[n - 1 - back];
    kappa = ratio > 0 ? -std::log(ratio) / (tau_max - tau_grid[n - 1 - back]) : 0.0;
    if (!(kappa > 0) || kappa * tau_max < kMinDecades) {
      const double needed = kappa > 0 ? kMinDecades / kappa : std::numeric_limits<double>::infinity();
      throw ResolutionError(fmt::format(
          "tau grid ends at {:.4e} s but the correlator still holds {:.3e} of its zero-lag value; "
          "tau_max must be at least {:.4e} s",
          tau_max, c[n - 1] / c0, needed));
    }
  }

  std::vector<double> out(omegas.size());
  for (std::size_t q = 0; q < omegas.size(); ++q) {
    const double w = omegas[q];
    if (!std::isfinite(w) || w < 0) throw DomainError("frequencies must be finite and >= 0");
    double integral = 0.0;
    if (w == 0.0) {
      for (std::size_t i = 1; i < n; ++i) integral += 0.5 * (c[i] + c[i - 1]) * (tau_grid[i] - tau_grid[i - 1]);
      if (!decayed) integral += c[n - 1] / kappa;
    } else {
      integral = c[n - 1] * std::sin(w * tau_max) / w;
      for (std::size_t i = 1; i < n; ++i) {
        const double a = tau_grid[i - 1];
        const double b = tau_grid[i];
        const double slope = (c[i] - c[i - 1]) / (b - a);
        integral -= 2.0 * slope * std::sin(0.5 * w * (a + b)) * std::sin(0.5 * w * (b - a)) / (w * w);
      }
      if (!decayed) {
        integral += c[n - 1] * (kappa * std::cos(w * tau_max) - w * std::sin(w * tau_max)) / (kappa * kappa + w * w);
      }
    }
    out[q] = 2.0 * integral;
  }
  return out;
}

OracleReport compare_to_analytic(std::string config, std::vector<double> omegas, std::vector<double> estimate,
                                 std::vector<double> stderr_, std::vector<double> analytic) {
  if (omegas.size() != estimate.size() || estimate.size() != stderr_.size() || stderr_.size() != analytic.size()) {
    throw DomainError("oracle report columns differ in length");
  }
  OracleReport r{std::move(config), std::move(omegas), std::move(estimate), std::move(stderr_), std::move(analytic),
                 0.0, 0.0};
  std::size_t within = 0;
  for (std::size_t i = 0; i < r.estimate.size(); ++i) {
    const double diff = std::abs(r.estimate[i] - r.analytic[i]);
    const double sigma = diff == 0.0 ? 0.0 : diff / r.stderr_[i];
    r.max_sigma_deviation = std::max(r.max_sigma_deviation, sigma);
    if (sigma <= 3.0) ++within;
  }
  r.fraction_within_3sigma =
      r.estimate.empty() ? 1.0 : static_cast<double>(within) / static_cast<double>(r.estimate.size());
  return r;
}

}  // namespace adnoise
