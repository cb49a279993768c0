// Acceptance suite: one PASS/FAIL line per criterion.
//
// Usage: adnoise_acceptance [--expected-failures 2,4]
//
// The exit status is 0 when every criterion either passes or is listed as an
// expected failure, so known gaps stay visible without hiding regressions.
// An expected failure that starts passing also makes the run fail, so that
// the list gets updated.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <fmt/core.h>

#include "adnoise/errors.hpp"
#include "adnoise/oracle.hpp"
#include "adnoise/pipeline.hpp"
#include "adnoise/potential.hpp"
#include "adnoise/spectrum.hpp"
#include "adnoise/units.hpp"

using namespace adnoise;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

const LevelStructure& reference_levels() {
  static const LevelStructure lv = solve_bound_states(PotentialParams{}, MaterialParams{}, 10);
  return lv;
}

SpectralDecomposition exact(const LevelStructure& lv, int atoms, double ratio,
                            const TransitionSet& ts = TransitionSet::all_pairs()) {
  const SymmetricBasis basis(atoms, static_cast<int>(lv.count()));
  const RateMatrix rm = build_rate_matrix(basis, lv, ThermalParams{ratio}, ts);
  return lorentzian_weights(decompose(rm), basis, lv);
}

double sparse_white_noise(const LevelStructure& lv, int atoms, double ratio) {
  const SymmetricBasis basis(atoms, static_cast<int>(lv.count()));
  return white_noise_level(build_rate_matrix(basis, lv, ThermalParams{ratio}), basis, lv);
}

const std::vector<double> kTemperatures{0.1, 0.2, 0.5, 1.0};

// Dense decompositions above this size dominate the one-minute budget.
constexpr std::uint64_t kStructureDimLimit = 1500;

Outcome exact_structure() {
  const auto t0 = Clock::now();
  int tested = 0, skipped = 0, bad_count = 0;
  double worst = 0;
  for (int m = 2; m <= 10; ++m) {
    const LevelStructure lv = truncate_levels(reference_levels(), static_cast<std::size_t>(m));
    for (int n = 1; n <= 8; ++n) {
      const std::uint64_t dim = symmetric_dimension(n, m);
      if (dim > kStructureDimLimit) {
        skipped += static_cast<int>(kTemperatures.size());
        continue;
      }
      for (double t : kTemperatures) {
        const SpectralDecomposition sd = exact(lv, n, t);
        ++tested;
        if (sd.pairs.size() != dim - 1) ++bad_count;
        worst = std::max(worst, sd.sum_rule_residual());
      }
    }
  }
  const double elapsed = seconds_since(t0);
  return {bad_count == 0 && worst < 1e-8 && elapsed < 60,
          fmt::format("{} points (dim <= {}, {} larger skipped), pair-count mismatches {}, worst sum-rule "
                      "residual {:.2e}, {:.1f} s",
                      tested, kStructureDimLimit, skipped, bad_count, worst, elapsed)};
}

Outcome low_temperature_limit() {
  const LevelStructure lv = truncate_levels(reference_levels(), 2);
  const double ratio = 0.2;  // beta omega0 = 5
  const double g = lv.fundamental_rate();
  double worst_s = 0, worst_l = 0;
  std::string per_n;
  for (int n = 1; n <= 8; ++n) {
    const SpectralDecomposition sd = exact(lv, n, ratio);
    const double model = low_temperature_spectrum(n, lv, ThermalParams{ratio}).white_noise();
    const double ds = sd.white_noise() / model - 1;
    const double dl = -dominant_pair(sd).lambda_per_s / (n * g) - 1;
    worst_s = std::max(worst_s, std::abs(ds));
    worst_l = std::max(worst_l, std::abs(dl));
    per_n += fmt::format(" N={}:{:+.2f}%/{:+.2f}%", n, 100 * ds, 100 * dl);
  }
  return {worst_s < 0.02 && worst_l < 0.01,
          fmt::format("max |dS(0)| {:.2f}% (tol 2%), max |dlambda| {:.2f}% (tol 1%);{}", 100 * worst_s,
                      100 * worst_l, per_n)};
}

Outcome inverse_square_scaling() {
  const LevelStructure& lv = reference_levels();
  std::vector<double> ns, per_atom;
  for (int n = 2; n <= 8; ++n) {
    ns.push_back(n);
    per_atom.push_back(sparse_white_noise(lv, n, 0.1) / n);
  }
  const double slope = fit_log_slope(ns, per_atom, 2, 8);
  return {std::abs(slope + 2.0) <= 0.1, fmt::format("slope {:.4f} (target -2.0 +/- 0.1), M={}", slope, lv.count())};
}

Outcome superradiant_suppression() {
  const LevelStructure& lv = reference_levels();
  auto series = [&](double ratio) {
    std::vector<double> s;
    for (int n = 1; n <= 8; ++n) s.push_back(sparse_white_noise(lv, n, ratio));
    return s;
  };
  const auto cold = series(0.1);
  const auto hot = series(1.0);
  bool decreasing = true, increasing = true;
  for (std::size_t i = 1; i < cold.size(); ++i) {
    decreasing = decreasing && cold[i] < cold[i - 1];
    increasing = increasing && hot[i] > hot[i - 1];
  }
  const auto peak = std::max_element(hot.begin(), hot.end()) - hot.begin() + 1;
  std::string hot_str;
  for (double v : hot) hot_str += fmt::format(" {:.3e}", v);
  return {decreasing && increasing,
          fmt::format("T=0.1 decreasing: {}; T=1 increasing: {} (S_N(0) peaks at N={};{})", decreasing ? "yes" : "no",
                      increasing ? "yes" : "no", peak, hot_str)};
}

// Smallest k whose top-k truncation stays within eps of the exact spectrum.
std::size_t pairs_needed(const SpectralDecomposition& sd, const std::vector<double>& grid,
                         const std::vector<double>& full, double eps) {
  for (std::size_t k = 1; k <= sd.pairs.size(); ++k) {
    const auto approx = evaluate_spectrum(truncate_pairs(sd, k), grid);
    double worst = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) worst = std::max(worst, rel(approx[i], full[i]));
    if (worst < eps) return k;
  }
  return sd.pairs.size();
}

Outcome truncation_convergence() {
  const LevelStructure& lv = reference_levels();
  const double g = lv.fundamental_rate();
  const auto grid = log_frequency_grid(1e-2 * g, 1e2 * g, 50);
  const SpectralDecomposition cold = exact(lv, 3, 0.2);
  const SpectralDecomposition hot = exact(lv, 3, 1.0);
  const auto full_cold = evaluate_spectrum(cold, grid);
  const auto full_hot = evaluate_spectrum(hot, grid);

  const auto top4 = evaluate_spectrum(truncate_pairs(cold, 4), grid);
  double worst = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) worst = std::max(worst, rel(top4[i], full_cold[i]));

  bool never_slower = true, sometimes_faster = false;
  std::string counts;
  for (double eps : {0.2, 0.1, 0.05}) {
    const auto kc = pairs_needed(cold, grid, full_cold, eps);
    const auto kh = pairs_needed(hot, grid, full_hot, eps);
    never_slower = never_slower && kh <= kc;
    sometimes_faster = sometimes_faster || kh < kc;
    counts += fmt::format(" eps={:g}: {} vs {}", eps, kc, kh);
  }
  return {worst < 0.05 && never_slower && sometimes_faster,
          fmt::format("top-4 max error {:.2f}% at T=0.2 (tol 5%); pairs needed T=0.2 vs T=1:{}", 100 * worst, counts)};
}

Outcome pink_noise() {
  const auto t0 = Clock::now();
  const LevelStructure& lv = reference_levels();
  const ThermalParams th{0.1};
  const double g = lv.fundamental_rate();
  const double amp = default_pink_amplitude(lv, th);
  std::map<int, SpectralDecomposition> spectra;
  for (int n = 1; n <= 200; ++n) spectra.emplace(n, low_temperature_spectrum(n, lv, th));
  const auto grid = log_frequency_grid(1e-2 * g, 1e5 * g, 50);

  const auto wide = aggregate_patches(spectra, PatchDistribution::one_over_n(200), grid);
  const double slope200 = fit_log_slope(grid, wide, 2 * g, 40 * g);
  const auto narrow = aggregate_patches(spectra, PatchDistribution::one_over_n(10), grid);
  const double slope10 = fit_log_slope(grid, narrow, 2 * g, 40 * g);
  const double tail10 = local_log_slope(grid, narrow).back();

  const double pi = units::kPi;
  const double zero_err = rel(pink_noise_closed_form(g, amp, 0.0), amp * pi * pi / (6 * g));
  double partial = 0;
  for (int n = 10'000'000; n >= 1; --n) partial += amp * g / (double(n) * n * g * g + g * g);
  const double sum_err = rel(partial, pink_noise_closed_form(g, amp, g));

  const bool ok = std::abs(slope200 + 1) <= 0.1 && slope10 < -1 && slope10 > -2 && std::abs(tail10 + 2) < 0.01 &&
                  zero_err < 1e-6 && sum_err < 1e-5;
  return {ok, fmt::format("slope N_max=200 {:.4f}; N_max=10 band {:.4f}, at 1e5 Gamma0 {:.4f}; closed form "
                          "omega->0 error {:.1e}; partial sums at Gamma0 error {:.1e}; {:.2f} s",
                          slope200, slope10, tail10, zero_err, sum_err, seconds_since(t0))};
}

// Fig.-style model: d = (1, .8, .6), Gamma12 = 1, Gamma23 = 1.4, omega0 = 1e12 / s.
LevelStructure c2_model(double delta_per_s) {
  const double w0 = 1.0e12;
  Eigen::MatrixXd rates = Eigen::MatrixXd::Zero(3, 3);
  rates(0, 1) = 1.0;
  rates(1, 2) = 1.4;
  return LevelStructure::from_model({0.0, w0, 2.0 * w0 - delta_per_s}, {1.0, 0.8, 0.6}, rates);
}

// Least-squares coefficients c0..c3 of S(0) = sum c_k T^k.
Eigen::Vector4d cubic_fit(const std::vector<double>& ts, const std::vector<double>& s) {
  const auto n = static_cast<Eigen::Index>(ts.size());
  const double scale = ts.back();
  Eigen::MatrixXd a(n, 4);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = ts[static_cast<std::size_t>(i)] / scale;
    for (int k = 0; k < 4; ++k) a(i, k) = std::pow(x, k);
    b(i) = s[static_cast<std::size_t>(i)];
  }
  Eigen::Vector4d c = a.colPivHouseholderQr().solve(b);
  for (int k = 0; k < 4; ++k) c[k] /= std::pow(scale, k);
  return c;
}

Outcome second_order_coefficient() {
  const double w0 = 1.0e12;
  std::vector<double> ts;
  for (int i = 0; i <= 15; ++i) ts.push_back(std::pow(10.0, -3.0 + 1.5 * i / 15));
  double worst = 0;
  std::string worst_at;
  for (double bd : {0.0, 0.5, 1.0}) {
    for (int n = 2; n <= 6; ++n) {
      std::vector<double> s;
      for (double t : ts) {
        const double ratio = -1.0 / std::log(t);
        const double delta = bd * ratio * w0;  // keeps beta * delta fixed
        const LevelStructure lv = c2_model(delta);
        s.push_back(exact(lv, n, ratio, TransitionSet::nearest_neighbor()).white_noise());
      }
      const double c2 = cubic_fit(ts, s)[2];
      const double expect = second_order_white_noise(n, bd, 1.0, 0.8, 0.6, 1.0, 1.4);
      const double err = rel(c2, expect);
      if (err > worst) {
        worst = err;
        worst_at = fmt::format("N={} beta*delta={:g}", n, bd);
      }
    }
  }
  bool plateau = true;
  std::string changes;
  for (double bd : {0.0, 0.5, 1.0}) {
    const double c20 = second_order_white_noise(20, bd, 1.0, 0.8, 0.6, 1.0, 1.4);
    const double c40 = second_order_white_noise(40, bd, 1.0, 0.8, 0.6, 1.0, 1.4);
    const double change = std::abs(c40 - c20) / c20;
    plateau = plateau && change < 0.05;
    changes += fmt::format(" {:g}:{:.2f}%", bd, 100 * change);
  }
  return {worst < 0.1 && plateau,
          fmt::format("worst fit deviation {:.2f}% at {} (tol 10%); C2 change N=20->40 by beta*delta:{} (tol 5%)",
                      100 * worst, worst_at, changes)};
}

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  const LevelStructure lv = truncate_levels(reference_levels(), 3);
  const SymmetricBasis basis(3, 3);
  const RateMatrix rm = build_rate_matrix(basis, lv, ThermalParams{0.5});
  const SpectralDecomposition sd = lorentzian_weights(decompose(rm), basis, lv);
  const double g = lv.fundamental_rate();

  TrajectoryConfig cfg;
  cfg.duration_s = 1000 / g;
  cfg.burn_in_s = 20 / g;
  cfg.sampling_dt_s = 0.01 / g;
  cfg.segment_length = 16384;
  cfg.trajectories = 200;
  cfg.seed = 20240531;
  cfg.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const GillespieResult gr = gillespie_spectrum(rm, basis, lv, cfg);
  std::vector<double> om, est, err;
  for (std::size_t i = 0; i < gr.omegas.size(); ++i) {
    if (gr.omegas[i] < 0.1 * g || gr.omegas[i] > 10 * g) continue;
    om.push_back(gr.omegas[i]);
    est.push_back(gr.estimate[i]);
    err.push_back(gr.stderr_[i]);
  }
  const auto analytic = evaluate_spectrum(sd, om);
  const OracleReport rep = compare_to_analytic("", om, est, err, analytic);

  const auto grid = log_frequency_grid(1e-2 * g, 1e2 * g, 20);
  const auto corr = correlator_spectrum(rm, basis, lv, auto_tau_grid(rm, basis, lv), grid);
  const auto direct = evaluate_spectrum(sd, grid);
  double worst = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) worst = std::max(worst, rel(corr[i], direct[i]));
  const double elapsed = seconds_since(t0);
  return {rep.fraction_within_3sigma >= 0.95 && worst < 5e-3 && elapsed < 300,
          fmt::format("Gillespie: {:.1f}% of {} bins in [0.1, 10] Gamma0 within 3 sigma; correlator max deviation "
                      "{:.2e}; {:.1f} s",
                      100 * rep.fraction_within_3sigma, om.size(), worst, elapsed)};
}

Outcome steady_state_balance() {
  double worst_rho = 0, worst_db = 0;
  int points = 0;
  for (int m = 2; m <= 10; ++m) {
    const LevelStructure lv = truncate_levels(reference_levels(), static_cast<std::size_t>(m));
    for (int n = 1; n <= 8; ++n) {
      const SymmetricBasis basis(n, m);
      for (double t : kTemperatures) {
        const RateMatrix rm = build_rate_matrix(basis, lv, ThermalParams{t});
        worst_rho = std::max(worst_rho, (steady_state(rm) - boltzmann_distribution(rm)).cwiseAbs().maxCoeff());
        worst_db = std::max(worst_db, detailed_balance_residual(rm));
        ++points;
      }
    }
  }
  return {worst_rho < 1e-10 && worst_db < 1e-12,
          fmt::format("{} points; max |rho_ss - Boltzmann| {:.2e}; max detailed-balance residual {:.2e}", points,
                      worst_rho, worst_db)};
}

Outcome potential_solver() {
  PotentialParams p;
  p.beta0_per_A = 1.25;
  p.z0_A = 4.0;
  const MaterialParams mat;
  const LevelStructure lv = solve_bound_states(p, mat, 10);
  const double w_err = rel(lv.fundamental_frequency(), harmonic_frequency(p));
  const double d_err = rel(lv.fundamental_frequency() - lv.transition_frequency(1, 2), anharmonic_shift(p));
  SolverOptions fine;
  fine.points_per_oscillator_length = 2 * SolverOptions{}.points_per_oscillator_length;
  const LevelStructure lf = solve_bound_states(p, mat, 10, fine);
  double drift = 0;
  for (std::size_t i = 0; i < std::min(lv.count(), lf.count()); ++i) {
    drift = std::max(drift, std::abs(lv.energies_meV[i] - lf.energies_meV[i]) / p.U0_meV);
  }
  return {w_err < 0.05 && d_err < 0.25 && drift < 1e-6 && lv.count() == lf.count(),
          fmt::format("beta0*z0=5: omega12 vs harmonic {:.2f}% (tol 5%); shift vs cubic formula {:.1f}% (tol 25%); "
                      "refinement drift {:.2e} U0 (tol 1e-6)",
                      100 * w_err, 100 * d_err, drift)};
}

std::set<int> parse_list(const std::string& s) {
  std::set<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.insert(std::stoi(item));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expected;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--expected-failures" && i + 1 < argc) {
      expected = parse_list(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--expected-failures 2,4]\n", argv[0]);
      return 2;
    }
  }

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"exact-solution structure", exact_structure},
      {"low-temperature limit", low_temperature_limit},
      {"N^-2 scaling of S_N(0)/N", inverse_square_scaling},
      {"superradiant suppression", superradiant_suppression},
      {"truncation convergence", truncation_convergence},
      {"1/f emergence", pink_noise},
      {"second-order coefficient", second_order_coefficient},
      {"oracle equivalence", oracle_equivalence},
      {"steady state and detailed balance", steady_state_balance},
      {"potential solver", potential_solver},
  };

  int unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, fmt::format("error: {}", e.what())};
    }
    const bool xfail = expected.count(id) > 0;
    std::string tag = o.pass ? "PASS" : "FAIL";
    if (xfail) tag += o.pass ? " (expected failure now passes)" : " (expected)";
    std::printf("criterion %2d %-4s %s: %s\n", id, tag.c_str(), criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
    if (o.pass == xfail) ++unexpected;
  }
  return unexpected == 0 ? 0 : 1;
}
