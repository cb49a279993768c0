#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include <doctest.h>

#include "adnoise/errors.hpp"
#include "adnoise/oracle.hpp"
#include "adnoise/spectrum.hpp"
#include "support.hpp"

using namespace adnoise;
using adnoise::test::rel_diff;

namespace {

LevelStructure telegraph_levels() {
  Eigen::MatrixXd rates = Eigen::MatrixXd::Zero(2, 2);
  rates(0, 1) = 1.0;
  return LevelStructure::from_model({0.0, 1e12}, {1.0, 0.6}, rates);
}

TrajectoryConfig short_run(std::uint64_t seed, int trajectories) {
  TrajectoryConfig cfg;
  cfg.duration_s = 1000.0;
  cfg.burn_in_s = 20.0;
  cfg.seed = seed;
  cfg.trajectories = trajectories;
  cfg.sampling_dt_s = 0.02;
  cfg.segment_length = 4096;
  return cfg;
}

double fraction_within(const GillespieResult& g, const std::vector<double>& analytic, double lo, double hi) {
  std::size_t in = 0, total = 0;
  for (std::size_t i = 0; i < g.omegas.size(); ++i) {
    if (g.omegas[i] < lo || g.omegas[i] > hi) continue;
    ++total;
    if (std::abs(g.estimate[i] - analytic[i]) <= 3 * g.stderr_[i]) ++in;
  }
  return static_cast<double>(in) / static_cast<double>(total);
}

}  // namespace

TEST_CASE("seed derivation") {
  const auto a = derive_seeds(42, 100);
  CHECK(a == derive_seeds(42, 100));
  CHECK(std::set<std::uint64_t>(a.begin(), a.end()).size() == 100);
  CHECK(derive_seeds(43, 1)[0] != a[0]);
  // First splitmix64 output for state 0.
  CHECK(derive_seeds(0, 1)[0] == 0xe220a8397b1dcdafULL);
}

TEST_CASE("trajectory config validation") {
  TrajectoryConfig cfg = short_run(1, 1);
  CHECK_NOTHROW(cfg.validate());
  cfg.burn_in_s = cfg.duration_s;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = short_run(1, 0);
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = short_run(1, 1);
  cfg.segment_length = 7;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("telegraph noise") {
  const LevelStructure lv = telegraph_levels();
  const SymmetricBasis basis(1, 2);
  const RateMatrix rm = build_rate_matrix(basis, lv, ThermalParams{0.5});
  const SpectralDecomposition sd = lorentzian_weights(decompose(rm), basis, lv);
  const GillespieResult g = gillespie_spectrum(rm, basis, lv, short_run(11, 32));
  REQUIRE(g.omegas.size() == 2048);
  CHECK(g.omegas[0] == doctest::Approx(2 * units::kPi / (4096 * 0.02)));
  CHECK(g.warnings.empty());
  const auto analytic = evaluate_spectrum(sd, g.omegas);
  CHECK(fraction_within(g, analytic, 0.1, 10.0) >= 0.95);

  const Eigen::VectorXd rho = steady_state(rm);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(std::abs(g.occupancy[i] - rho[static_cast<Eigen::Index>(i)]) < 4 * g.occupancy_stderr[i]);
  }
}

TEST_CASE("occupancy of a three-level ensemble") {
  const LevelStructure lv = test::three_level_model(1e11);
  const SymmetricBasis basis(2, 3);
  const RateMatrix rm = build_rate_matrix(basis, lv, ThermalParams{0.7});
  const GillespieResult g = gillespie_spectrum(rm, basis, lv, short_run(5, 24));
  const Eigen::VectorXd rho = steady_state(rm);
  CHECK(std::accumulate(g.occupancy.begin(), g.occupancy.end(), 0.0) == doctest::Approx(1.0));
  for (std::size_t i = 0; i < basis.size(); ++i) {
    CHECK(std::abs(g.occupancy[i] - rho[static_cast<Eigen::Index>(i)]) < 4 * g.occupancy_stderr[i] + 1e-3);
  }
}

TEST_CASE("zero temperature stays in the ground state") {
  const LevelStructure lv = telegraph_levels();
  const SymmetricBasis basis(2, 2);
  const RateMatrix rm = build_rate_matrix(basis, lv, ThermalParams{0.0});
  const GillespieResult g = gillespie_spectrum(rm, basis, lv, short_run(3, 2));
  CHECK(g.jumps == 0);
  CHECK(g.occupancy[0] == 1.0);
  for (double v : g.estimate) CHECK(v == 0.0);
}

TEST_CASE("reproducibility") {
  const LevelStructure lv = test::three_level_model(1e11);
  const SymmetricBasis basis(2, 3);
  const RateMatrix rm = build_rate_matrix(basis, lv, ThermalParams{0.5});
  TrajectoryConfig cfg = short_run(99, 4);
  const GillespieResult a = gillespie_spectrum(rm, basis, lv, cfg);
  const GillespieResult b = gillespie_spectrum(rm, basis, lv, cfg);
  cfg.threads = 3;
  const GillespieResult c = gillespie_spectrum(rm, basis, lv, cfg);
  CHECK(a.estimate == b.estimate);
  CHECK(a.estimate == c.estimate);
  CHECK(a.jumps == c.jumps);
  cfg.seed = 100;
  CHECK(gillespie_spectrum(rm, basis, lv, cfg).estimate != a.estimate);
}

TEST_CASE("error bars shrink with more trajectories") {
  const LevelStructure lv = telegraph_levels();
  const SymmetricBasis basis(1, 2);
  const RateMatrix rm = build_rate_matrix(basis, lv, ThermalParams{0.5});
  const GillespieResult few = gillespie_spectrum(rm, basis, lv, short_run(21, 16));
  const GillespieResult many = gillespie_spectrum(rm, basis, lv, short_run(21, 64));
  double ratio = 0;
  for (std::size_t i = 0; i < few.stderr_.size(); ++i) ratio += few.stderr_[i] / many.stderr_[i];
  ratio /= static_cast<double>(few.stderr_.size());
  CHECK(ratio == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("reducible chains are reported") {
  const LevelStructure lv = test::three_level_model(1e11);
  const SymmetricBasis basis(2, 3);
  const RateMatrix rm = build_rate_matrix(basis, lv, ThermalParams{0.5}, TransitionSet::custom({{0, 1}}));
  const GillespieResult g = gillespie_spectrum(rm, basis, lv, short_run(1, 1));
  CHECK_FALSE(g.warnings.empty());
}

TEST_CASE("correlator") {
  const LevelStructure lv = truncate_levels(test::reference_levels(), 3);
  const SymmetricBasis basis(3, 3);
  const RateMatrix rm = build_rate_matrix(basis, lv, ThermalParams{0.5});
  const SpectralDecomposition sd = lorentzian_weights(decompose(rm), basis, lv);

  const auto tau = auto_tau_grid(rm, basis, lv);
  const auto c = correlation_function(rm, basis, lv, tau);
  CHECK(rel_diff(c[0], sd.variance) < 1e-10);
  CHECK(std::abs(c.back()) < 1e-12 * c[0]);
  for (std::size_t i = 1; i < c.size(); ++i) CHECK(c[i] <= c[i - 1] * (1 + 1e-12));

  // Direct sum over modes at a few lags.
  for (std::size_t i : {std::size_t{1}, c.size() / 10, c.size() / 3}) {
    double ref = 0;
    for (const auto& p : sd.pairs) ref += 0.5 * p.weight * std::exp(p.lambda_per_s * tau[i]);
    CHECK(rel_diff(c[i], ref) < 1e-8);
  }

  const double g = lv.fundamental_rate();
  const auto grid = log_frequency_grid(1e-2 * g, 1e2 * g, 10);
  const auto spectrum = correlator_spectrum(rm, basis, lv, tau, grid);
  const auto exact = evaluate_spectrum(sd, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(rel_diff(spectrum[i], exact[i]) < 5e-3);

  std::vector<double> short_tau(50);
  for (std::size_t i = 0; i < short_tau.size(); ++i) short_tau[i] = tau[i];
  try {
    correlator_spectrum(rm, basis, lv, short_tau, grid);
    FAIL("expected a resolution error");
  } catch (const ResolutionError& e) {
    CHECK(std::string(e.what()).find("tau_max must be at least") != std::string::npos);
  }
  CHECK_THROWS_AS(correlation_function(rm, basis, lv, {0.0, 2.0, 1.0}), DomainError);
  CHECK_THROWS_AS(correlation_function(build_rate_matrix(basis, lv, ThermalParams{0.0}), basis, lv, tau),
                  NumericalError);
}

TEST_CASE("oracle report") {
  const OracleReport r = compare_to_analytic("{}", {1, 2, 3, 4}, {1.0, 2.0, 3.0, 4.0}, {0.1, 0.1, 0.1, 0.1},
                                             {1.0, 2.05, 3.5, 4.0});
  CHECK(r.max_sigma_deviation == doctest::Approx(5.0));
  CHECK(r.fraction_within_3sigma == doctest::Approx(0.75));
  CHECK_THROWS_AS(compare_to_analytic("{}", {1}, {1, 2}, {1}, {1}), DomainError);
}
