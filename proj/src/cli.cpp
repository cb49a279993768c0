#include "adnoise/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "adnoise/errors.hpp"
#include "adnoise/oracle.hpp"
#include "adnoise/pipeline.hpp"
#include "adnoise/report.hpp"
#include "adnoise/units.hpp"

namespace adnoise {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Runs fn(0..count-1) on a small pool. The lowest-index failure is rethrown
// so the reported error does not depend on scheduling.
template <typename F>
void parallel_for(std::size_t count, int threads, F&& fn) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), count);
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

OutputMeta meta_for(const RunConfig& cfg, const CommandOptions& opts) {
  return OutputMeta{config_hash(cfg), opts.seed};
}

std::vector<double> frequency_grid(const RunConfig& cfg, double gamma0) {
  std::vector<double> g = log_frequency_grid(cfg.frequency_grid.min_over_gamma0, cfg.frequency_grid.max_over_gamma0,
                                             cfg.frequency_grid.points_per_decade);
  for (double& w : g) w *= gamma0;
  return g;
}

std::vector<double> scaled(const std::vector<double>& v, double factor) {
  std::vector<double> out(v);
  for (double& x : out) x *= factor;
  return out;
}

std::string point_tag(int atoms, double ratio) { return fmt::format("N{}_T{}", atoms, ratio_tag(ratio)); }

// Columns {k, lambda_per_s, C_k, weight_rank}; rank 1 has the largest |C/lambda|.
void write_pairs_csv(const fs::path& path, const OutputMeta& meta, const SpectralDecomposition& sd) {
  const std::size_t n = sd.pairs.size();
  std::vector<std::size_t> order(n);
  for (std::size_t k = 0; k < n; ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(sd.pairs[a].weight / sd.pairs[a].lambda_per_s) >
           std::abs(sd.pairs[b].weight / sd.pairs[b].lambda_per_s);
  });
  std::vector<double> k_col(n), l_col(n), c_col(n), rank_col(n);
  for (std::size_t r = 0; r < n; ++r) rank_col[order[r]] = static_cast<double>(r + 1);
  for (std::size_t k = 0; k < n; ++k) {
    k_col[k] = static_cast<double>(k + 1);
    l_col[k] = sd.pairs[k].lambda_per_s;
    c_col[k] = sd.pairs[k].weight;
  }
  write_csv(path, meta, {"k", "lambda_per_s", "C_k", "weight_rank"}, {k_col, l_col, c_col, rank_col});
}

std::vector<int> top_k_list(const RunConfig& cfg, const CommandOptions& opts) {
  if (opts.top_k) return {*opts.top_k};
  return cfg.top_k;
}

}  // namespace

int cmd_levels(const RunConfig& cfg, const CommandOptions& opts, std::ostream& log) {
  const BoundStateSolution sol =
      solve_bound_states_detailed(cfg.potential, cfg.material, static_cast<std::size_t>(cfg.levels), cfg.solver);
  const LevelStructure& lv = sol.levels;
  const double coverage = coverage_parameter(cfg.potential, cfg.material);
  const bool correlated = coverage >= 1.0;

  std::string table = fmt::format("{:>3} {:>14} {:>14} {:>12} {:>14}\n", "mu", "E_meV", "omega_mu_meV", "d_debye",
                                  "Gamma_up_per_s");
  for (std::size_t mu = 0; mu < lv.count(); ++mu) {
    const double up = mu + 1 < lv.count() ? lv.rate(mu, mu + 1) : 0.0;
    table += fmt::format("{:>3} {:>14.6f} {:>14.6f} {:>12.6e} {:>14.6e}\n", mu + 1, lv.energies_meV[mu],
                         lv.energies_meV[mu] - lv.energies_meV[0], lv.dipoles_debye[mu], up);
  }
  table += fmt::format("omega0 (harmonic) = {:.6e} 1/s ({:.6f} meV)\n", lv.omega0_per_s,
                       units::angular_to_mev(lv.omega0_per_s));
  table += fmt::format("omega12 (numeric) = {:.6e} 1/s ({:.6f} meV)\n", lv.fundamental_frequency(),
                       units::angular_to_mev(lv.fundamental_frequency()));
  table += fmt::format("delta = {:.6e} 1/s\n", lv.delta_per_s);
  table += fmt::format("coverage C = {:.6f}{}\n", coverage, correlated ? "  [correlated regime: C >= 1]" : "");

  const fs::path dir = opts.out_dir;
  const OutputMeta meta = meta_for(cfg, opts);
  json body = {{"levels", to_json(lv)},
               {"coverage", coverage},
               {"correlated_regime", correlated},
               {"beta_tilde", cfg.potential.beta_tilde()},
               {"harmonic_rate_per_s", harmonic_fundamental_rate(cfg.potential, cfg.material)},
               {"grid",
                {{"z_min_A", sol.grid.z_min_A},
                 {"z_max_A", sol.grid.z_max_A},
                 {"spacing_A", sol.grid.spacing_A},
                 {"points", sol.grid.points},
                 {"barrier_meV", sol.grid.barrier_meV}}}};
  write_json(dir / "levels.json", meta, body);
  {
    std::ofstream txt(dir / "levels.txt");
    txt << meta.csv_comment() << "\n" << table;
  }
  log << table;
  return 0;
}

int cmd_spectrum(const RunConfig& cfg, const CommandOptions& opts, std::ostream& log) {
  const LevelStructure solved = solve_levels(cfg);
  const TransitionSet transitions = cfg.transitions();
  const OutputMeta meta = meta_for(cfg, opts);
  const fs::path dir = opts.out_dir;
  const std::vector<int> ks = top_k_list(cfg, opts);

  std::vector<LevelStructure> per_t;
  for (double t : cfg.temperature_ratios) per_t.push_back(levels_for_temperature(solved, cfg, t));

  struct Point {
    std::size_t t_index;
    int atoms;
    PointResult result;
  };
  std::vector<Point> points;
  for (std::size_t ti = 0; ti < cfg.temperature_ratios.size(); ++ti) {
    for (int n : cfg.atoms) points.push_back({ti, n, {}});
  }

  parallel_for(points.size(), opts.threads, [&](std::size_t i) {
    Point& p = points[i];
    const double t = cfg.temperature_ratios[p.t_index];
    const LevelStructure& lv = per_t[p.t_index];
    const GridSpectrum gs = spectrum_on_grid(lv, p.atoms, t, transitions, frequency_grid(cfg, 1.0),
                                             cfg.dimension_cap, cfg.dense_cap);
    p.result = gs.point;
    const double g0 = p.result.gamma0_per_s;
    const std::vector<double>& omegas = gs.omegas;
    const std::string tag = point_tag(p.atoms, t);
    json decomposition = {{"pairs", nullptr}, {"white_noise", p.result.white_noise}};
    if (p.result.decomposition) {
      const SpectralDecomposition& sd = *p.result.decomposition;
      decomposition = to_json(sd);
      write_pairs_csv(dir / fmt::format("pairs_{}.csv", tag), meta, sd);
      for (int k : ks) {
        const SpectralDecomposition top = truncate_pairs(sd, static_cast<std::size_t>(k));
        write_csv(dir / fmt::format("spectrum_{}_top{}.csv", tag, k), meta,
                  {"omega_per_s", "omega_over_Gamma0", "S_debye2_s"},
                  {omegas, scaled(omegas, 1.0 / g0), evaluate_spectrum(top, omegas)});
      }
    }
    decomposition["dimension"] = p.result.dimension;
    decomposition["gamma0_per_s"] = g0;
    decomposition["omega12_per_s"] = p.result.omega12_per_s;
    write_json(dir / fmt::format("decomposition_{}.json", tag), meta, decomposition);
    write_csv(dir / fmt::format("spectrum_{}.csv", tag), meta, {"omega_per_s", "omega_over_Gamma0", "S_debye2_s"},
              {omegas, scaled(omegas, 1.0 / g0), gs.values});
  });

  for (std::size_t ti = 0; ti < cfg.temperature_ratios.size(); ++ti) {
    const double t = cfg.temperature_ratios[ti];
    std::vector<double> n_col, dim_col, s0, s0n, lowt;
    for (const Point& p : points) {
      if (p.t_index != ti) continue;
      n_col.push_back(p.atoms);
      dim_col.push_back(static_cast<double>(p.result.dimension));
      s0.push_back(p.result.white_noise);
      s0n.push_back(p.result.white_noise / p.atoms);
      lowt.push_back(low_temperature_spectrum(p.atoms, per_t[ti], ThermalParams{t}).white_noise());
      log << fmt::format("T/omega0={} N={} dim={} S(0)={:.6e} Debye^2 s\n", ratio_tag(t), p.atoms, p.result.dimension,
                         p.result.white_noise);
    }
    write_csv(dir / fmt::format("white_noise_T{}.csv", ratio_tag(t)), meta,
              {"N", "dimension", "S0_debye2_s", "S0_per_N_debye2_s", "S0_low_temperature_debye2_s"},
              {n_col, dim_col, s0, s0n, lowt});
  }
  return 0;
}

int cmd_pink(const RunConfig& cfg, const CommandOptions& opts, std::ostream& log) {
  const LevelStructure solved = solve_levels(cfg);
  const TransitionSet transitions = cfg.transitions();
  const PatchDistribution dist = cfg.patch.distribution();
  const OutputMeta meta = meta_for(cfg, opts);
  const fs::path dir = opts.out_dir;
  const std::vector<double> grid = frequency_grid(cfg, 1.0);

  for (double t : cfg.temperature_ratios) {
    const LevelStructure lv = levels_for_temperature(solved, cfg, t);
    const ThermalParams thermal{t};
    const double g0 = lv.fundamental_rate();
    const double amplitude = cfg.patch.amplitude_debye2.value_or(default_pink_amplitude(lv, thermal));
    const std::vector<double> omegas = scaled(grid, g0);

    std::vector<int> sizes;
    for (int n = 1; n <= dist.n_max(); ++n) {
      if (dist.weight(n) > 0) sizes.push_back(n);
    }
    std::vector<double> total(omegas.size(), 0.0);
    if (cfg.patch.model == PatchModel::LowTemperature) {
      std::map<int, SpectralDecomposition> spectra;
      for (int n : sizes) {
        SpectralDecomposition sd = low_temperature_spectrum(n, lv, thermal);
        sd.pairs.front().weight = amplitude;
        spectra.emplace(n, std::move(sd));
      }
      total = aggregate_patches(spectra, dist, omegas);
    } else {
      std::vector<std::vector<double>> per_n(sizes.size());
      parallel_for(sizes.size(), opts.threads, [&](std::size_t i) {
        per_n[i] = spectrum_on_grid(lv, sizes[i], t, transitions, grid, cfg.dimension_cap, cfg.dense_cap).values;
      });
      for (std::size_t i = 0; i < sizes.size(); ++i) {
        for (std::size_t q = 0; q < omegas.size(); ++q) total[q] += dist.weight(sizes[i]) * per_n[i][q];
      }
    }
    const std::vector<double> closed = pink_noise_closed_form(g0, amplitude, omegas);
    const std::string tag = ratio_tag(t);
    const std::vector<std::string> header{"omega_per_s", "omega_over_Gamma0", "S_debye2_s", "local_slope"};
    write_csv(dir / fmt::format("pink_finite_T{}.csv", tag), meta, header,
              {omegas, grid, total, local_log_slope(omegas, total)});
    write_csv(dir / fmt::format("pink_closed_form_T{}.csv", tag), meta, header,
              {omegas, grid, closed, local_log_slope(omegas, closed)});

    json summary = {{"temperature_ratio", t},
                    {"gamma0_per_s", g0},
                    {"amplitude_debye2", amplitude},
                    {"n_max", dist.n_max()},
                    {"model", cfg.patch.model == PatchModel::Exact ? "exact" : "low_temperature"},
                    {"closed_form_zero_frequency", pink_noise_closed_form(g0, amplitude, 0.0)}};
    if (grid.front() <= 2.0 && grid.back() >= 40.0) {
      summary["finite_slope_2_40"] = fit_log_slope(grid, total, 2.0, 40.0);
      summary["closed_form_slope_2_40"] = fit_log_slope(grid, closed, 2.0, 40.0);
    }
    write_json(dir / fmt::format("pink_summary_T{}.json", tag), meta, summary);
    log << fmt::format("T/omega0={} N_max={} amplitude={:.6e} Debye^2\n", tag, dist.n_max(), amplitude);
  }
  return 0;
}

namespace {

struct Check {
  std::string name;
  bool passed = true;
  double value = 0.0;
  double threshold = 0.0;
  bool lower_is_better = true;
  std::string detail;
};

class CheckList {
 public:
  void record(const std::string& name, double value, double threshold, bool lower_is_better = true) {
    auto [c, fresh] = slot(name, threshold, lower_is_better);
    const bool ok = !std::isnan(value) && (lower_is_better ? value <= threshold : value >= threshold);
    const bool worse = lower_is_better ? value > c.value : value < c.value;
    if (fresh || worse || std::isnan(value)) c.value = value;
    c.passed = c.passed && ok;
  }
  void fail(const std::string& name, double threshold, const std::string& detail, bool lower_is_better = true) {
    Check& c = slot(name, threshold, lower_is_better).first;
    c.passed = false;
    if (c.detail.empty()) c.detail = detail;
  }
  const std::vector<Check>& results() const { return checks_; }

 private:
  std::pair<Check&, bool> slot(const std::string& name, double threshold, bool lower_is_better) {
    for (auto& c : checks_) {
      if (c.name == name) return {c, false};
    }
    checks_.push_back({name, true, std::numeric_limits<double>::quiet_NaN(), threshold, lower_is_better, {}});
    return {checks_.back(), true};
  }
  std::vector<Check> checks_;
};

void inject_fault(RateMatrix& rm, const std::string& fault) {
  if (fault.empty()) return;
  if (fault != "rate_matrix") throw ConfigError(fmt::format("unknown fault '{}'; known faults: rate_matrix", fault));
  // Scale one jump rate and rebalance its column: still a generator, but no
  // longer in detailed balance.
  for (int j = 0; j < rm.entries.outerSize(); ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(rm.entries, j); it; ++it) {
      if (it.row() == j || it.value() <= 0) continue;
      const double extra = 0.5 * it.value();
      it.valueRef() += extra;
      rm.entries.coeffRef(j, j) -= extra;
      return;
    }
  }
}

}  // namespace

int cmd_validate(const RunConfig& cfg, const CommandOptions& opts, std::ostream& log) {
  CheckList checks;
  const OutputMeta meta = meta_for(cfg, opts);
  const LevelStructure solved = solve_levels(cfg);

  // Grid refinement of the bound-state solver.
  try {
    SolverOptions fine = cfg.solver;
    fine.points_per_oscillator_length *= 2.0;
    const LevelStructure finer = solve_bound_states(cfg.potential, cfg.material, solved.count(), fine);
    double worst = 0.0;
    for (std::size_t mu = 0; mu < std::min(solved.count(), finer.count()); ++mu) {
      worst = std::max(worst, std::abs(finer.energies_meV[mu] - solved.energies_meV[mu]) / cfg.potential.U0_meV);
    }
    checks.record("potential_refinement", worst, 1e-6);
  } catch (const std::exception& e) {
    checks.fail("potential_refinement", 1e-6, e.what());
  }

  // Generator, steady state and decomposition invariants on a small grid.
  for (int m : {2, 3}) {
    if (static_cast<std::size_t>(m) > solved.count()) continue;
    const LevelStructure lv = truncate_levels(solved, static_cast<std::size_t>(m));
    for (int n = 1; n <= 4; ++n) {
      const SymmetricBasis basis(n, m);
      for (double t : {0.2, 0.5, 1.0}) {
        const std::string where = fmt::format("N={} M={} T/omega0={}", n, m, t);
        RateMatrix rm = build_rate_matrix(basis, lv, ThermalParams{t});
        inject_fault(rm, opts.fault_inject);
        const Eigen::MatrixXd dense = rm.dense();
        const double scale = dense.cwiseAbs().maxCoeff();
        checks.record("generator_columns", dense.colwise().sum().cwiseAbs().maxCoeff() / scale, 1e-12);
        checks.record("detailed_balance", detailed_balance_residual(rm), 1e-12);
        try {
          const Eigen::VectorXd rho = steady_state(rm);
          checks.record("steady_state_boltzmann", (rho - boltzmann_distribution(rm)).cwiseAbs().maxCoeff(), 1e-10);
        } catch (const std::exception& e) {
          checks.fail("steady_state_boltzmann", 1e-10, where + ": " + e.what());
        }
        try {
          const EigenDecomposition ed = decompose(rm);
          const SpectralDecomposition sd = lorentzian_weights(ed, basis, lv);
          checks.record("lorentzian_count",
                        std::abs(static_cast<double>(sd.pairs.size()) - static_cast<double>(basis.size() - 1)), 0.0);
          checks.record("sum_rule", sd.sum_rule_residual(), 1e-8);
          const Eigen::MatrixXd r = ed.right_vectors();
          const double norm = dense.norm();
          double residual = 0.0;
          for (Eigen::Index k = 0; k < r.cols(); ++k) {
            const Eigen::VectorXd col = r.col(k);
            residual = std::max(residual, (dense * col - ed.eigenvalues(k) * col).norm() / (norm * col.norm()));
          }
          checks.record("eigen_residual", residual, 1e-8);
          const auto n_dim = static_cast<Eigen::Index>(basis.size());
          checks.record("biorthonormality",
                        (ed.left_vectors() * r - Eigen::MatrixXd::Identity(n_dim, n_dim)).cwiseAbs().maxCoeff(), 1e-8);
          const double g0 = lv.fundamental_rate();
          double min_s = std::numeric_limits<double>::infinity();
          for (double x : log_frequency_grid(1e-3, 1e3, 10)) min_s = std::min(min_s, evaluate_spectrum(sd, x * g0));
          checks.record("spectrum_positive", min_s, 0.0, false);
          const double sparse = white_noise_level(rm, basis, lv);
          checks.record("white_noise_routes", std::abs(sparse - sd.white_noise()) / sd.white_noise(), 1e-8);
        } catch (const std::exception& e) {
          for (const char* name : {"lorentzian_count", "sum_rule", "eigen_residual", "biorthonormality",
                                   "white_noise_routes"}) {
            checks.fail(name, 1e-8, where + ": " + e.what());
          }
          checks.fail("spectrum_positive", 0.0, where + ": " + e.what(), false);
        }
      }
    }
  }

  // Correlator route against the Lorentzian sum.
  const OracleConfig& oc = cfg.oracle;
  try {
    const LevelStructure lv = truncate_levels(solved, static_cast<std::size_t>(oc.levels));
    const SymmetricBasis basis(oc.atoms, oc.levels);
    RateMatrix rm = build_rate_matrix(basis, lv, ThermalParams{oc.temperature_ratio});
    inject_fault(rm, opts.fault_inject);
    const SpectralDecomposition sd = lorentzian_weights(decompose(rm), basis, lv);
    const double g0 = lv.fundamental_rate();
    const std::vector<double> omegas = scaled(log_frequency_grid(0.1, 10.0, 10), g0);
    const std::vector<double> corr = correlator_spectrum(rm, basis, lv, auto_tau_grid(rm, basis, lv), omegas);
    double worst = 0.0;
    for (std::size_t i = 0; i < omegas.size(); ++i) {
      const double exact = evaluate_spectrum(sd, omegas[i]);
      worst = std::max(worst, std::abs(corr[i] - exact) / exact);
    }
    checks.record("correlator_agreement", worst, 5e-3);
  } catch (const std::exception& e) {
    checks.fail("correlator_agreement", 5e-3, e.what());
  }

  // Stochastic oracle on the two-level telegraph.
  try {
    const LevelStructure lv = truncate_levels(solved, 2);
    const SymmetricBasis basis(1, 2);
    RateMatrix rm = build_rate_matrix(basis, lv, ThermalParams{oc.temperature_ratio});
    inject_fault(rm, opts.fault_inject);
    const SpectralDecomposition sd = lorentzian_weights(decompose(rm), basis, lv);
    const double g0 = lv.fundamental_rate();
    TrajectoryConfig tc;
    tc.duration_s = 1000.0 / g0;
    tc.burn_in_s = 20.0 / g0;
    tc.sampling_dt_s = 0.02 / g0;
    tc.segment_length = 4096;
    tc.trajectories = 64;
    tc.seed = opts.seed;
    tc.threads = opts.threads;
    const GillespieResult gr = gillespie_spectrum(rm, basis, lv, tc);
    std::vector<double> w, est, err, exact;
    for (std::size_t i = 0; i < gr.omegas.size(); ++i) {
      if (gr.omegas[i] < 0.1 * g0 || gr.omegas[i] > 10.0 * g0) continue;
      w.push_back(gr.omegas[i]);
      est.push_back(gr.estimate[i]);
      err.push_back(gr.stderr_[i]);
      exact.push_back(evaluate_spectrum(sd, gr.omegas[i]));
    }
    const OracleReport rep = compare_to_analytic("", w, est, err, exact);
    checks.record("gillespie_telegraph", rep.fraction_within_3sigma, 0.95, false);

    TrajectoryConfig small = tc;
    small.trajectories = 4;
    small.duration_s = 200.0 / g0;
    small.segment_length = 1024;
    small.threads = 1;
    const GillespieResult a = gillespie_spectrum(rm, basis, lv, small);
    small.threads = 2;
    const GillespieResult b = gillespie_spectrum(rm, basis, lv, small);
    checks.record("gillespie_reproducible", a.estimate == b.estimate && a.jumps == b.jumps ? 0.0 : 1.0, 0.0);
  } catch (const std::exception& e) {
    checks.fail("gillespie_telegraph", 0.95, e.what(), false);
    checks.fail("gillespie_reproducible", 0.0, e.what());
  }

  // 1/N patch sum against its closed form.
  {
    double partial = 0.0;
    for (int n = 1000000; n >= 1; --n) partial += 1.0 / (static_cast<double>(n) * n + 1.0);
    const double closed = pink_noise_closed_form(1.0, 1.0, 1.0);
    checks.record("pink_partial_sum", std::abs(partial - closed) / closed, 1e-5);
  }

  json list = json::array();
  json failed = json::array();
  bool all = true;
  for (const Check& c : checks.results()) {
    list.push_back({{"name", c.name},
                    {"passed", c.passed},
                    {"value", c.value},
                    {"threshold", c.threshold},
                    {"comparison", c.lower_is_better ? "<=" : ">="},
                    {"detail", c.detail}});
    if (!c.passed) failed.push_back(c.name);
    all = all && c.passed;
    log << fmt::format("{:<24} {:<4} value={:.3e} {} {:.1e}{}\n", c.name, c.passed ? "PASS" : "FAIL", c.value,
                       c.lower_is_better ? "<=" : ">=", c.threshold, c.detail.empty() ? "" : "  (" + c.detail + ")");
  }
  json body = {{"passed", all}, {"failed", failed}, {"checks", list}};
  if (!opts.fault_inject.empty()) body["fault_inject"] = opts.fault_inject;
  write_json(opts.out_dir / "validation.json", meta, body);
  log << (all ? "validation passed\n" : fmt::format("validation FAILED: {}\n", failed.dump()));
  return all ? 0 : 1;
}

int cmd_sweep(const RunConfig& cfg, const CommandOptions& opts, std::ostream& log) {
  const LevelStructure solved = solve_levels(cfg);
  const TransitionSet transitions = cfg.transitions();
  const OutputMeta meta = meta_for(cfg, opts);
  const fs::path dir = opts.out_dir / "sweep";
  const std::string hash = meta.to_json().at("config_hash").get<std::string>();

  struct Point {
    int atoms;
    double ratio;
    json record;
    bool resumed = false;
  };
  std::vector<Point> points;
  for (double t : cfg.temperature_ratios) {
    for (int n : cfg.atoms) points.push_back({n, t, {}});
  }

  parallel_for(points.size(), opts.threads, [&](std::size_t i) {
    Point& p = points[i];
    const fs::path file = dir / fmt::format("point_{}.json", point_tag(p.atoms, p.ratio));
    if (fs::exists(file)) {
      std::ifstream in(file);
      const json old = json::parse(in, nullptr, false);
      if (!old.is_discarded() && old.contains("meta") && old["meta"].value("config_hash", "") == hash) {
        p.record = old.at("point");
        p.resumed = true;
        return;
      }
    }
    const LevelStructure lv = levels_for_temperature(solved, cfg, p.ratio);
    const PointResult r = run_point(lv, p.atoms, p.ratio, transitions, cfg.dimension_cap, cfg.dense_cap, true);
    json rec = {{"atoms", p.atoms},
                {"temperature_ratio", p.ratio},
                {"levels", lv.count()},
                {"dimension", r.dimension},
                {"gamma0_per_s", r.gamma0_per_s},
                {"omega12_per_s", r.omega12_per_s},
                {"white_noise", r.white_noise},
                {"white_noise_per_atom", r.white_noise / p.atoms},
                {"white_noise_low_temperature",
                 low_temperature_spectrum(p.atoms, lv, ThermalParams{p.ratio}).white_noise()}};
    if (r.decomposition) {
      const LorentzianPair& dom = dominant_pair(*r.decomposition);
      rec["pairs"] = r.decomposition->pairs.size();
      rec["dominant_lambda_per_s"] = dom.lambda_per_s;
      rec["dominant_weight"] = dom.weight;
      rec["sum_rule_residual"] = r.decomposition->sum_rule_residual();
    }
    p.record = rec;
    write_json(file, meta, {{"point", rec}});
  });

  std::vector<double> n_col, t_col, dim_col, s0, s0n, dom;
  std::size_t resumed = 0;
  for (const Point& p : points) {
    n_col.push_back(p.atoms);
    t_col.push_back(p.ratio);
    dim_col.push_back(p.record.at("dimension").get<double>());
    s0.push_back(p.record.at("white_noise").get<double>());
    s0n.push_back(p.record.at("white_noise_per_atom").get<double>());
    dom.push_back(p.record.value("dominant_lambda_per_s", std::numeric_limits<double>::quiet_NaN()));
    resumed += p.resumed ? 1 : 0;
  }
  write_csv(opts.out_dir / "sweep_summary.csv", meta,
            {"N", "temperature_ratio", "dimension", "S0_debye2_s", "S0_per_N_debye2_s", "dominant_lambda_per_s"},
            {n_col, t_col, dim_col, s0, s0n, dom});
  log << fmt::format("sweep: {} points ({} resumed)\n", points.size(), resumed);
  return 0;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Noise spectra of correlated adatom fluctuators"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  CommandOptions opts;
  int top_k = 0;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--out", out_dir, "Output directory (default: $ADNOISE_OUT, then the config)");
  app.add_option("--seed", opts.seed, "Seed for the stochastic oracle");
  app.add_option("--threads", opts.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--top-k", top_k, "Emit truncated spectra with the k heaviest pairs")->check(CLI::PositiveNumber);
  app.add_option("--fault-inject", opts.fault_inject, "Corrupt an input on purpose (rate_matrix)");

  const std::vector<std::pair<const char*, const char*>> commands{
      {"levels", "Bound levels, dipoles and rates"},
      {"spectrum", "Lorentzian decomposition and spectra for each (N, T)"},
      {"pink", "Patch-aggregated spectrum and its 1/N closed form"},
      {"validate", "Run the invariant and oracle checks"},
      {"sweep", "Resumable parallel sweep over (N, T)"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 3;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    cfg.validate();
    if (top_k > 0) opts.top_k = top_k;
    if (!out_dir.empty()) {
      opts.out_dir = out_dir;
    } else if (const char* env = std::getenv("ADNOISE_OUT"); env && *env) {
      opts.out_dir = env;
    } else {
      opts.out_dir = cfg.output_directory;
    }
    fs::create_directories(opts.out_dir);

    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "levels") return cmd_levels(cfg, opts, out);
    if (cmd == "spectrum") return cmd_spectrum(cfg, opts, out);
    if (cmd == "pink") return cmd_pink(cfg, opts, out);
    if (cmd == "validate") return cmd_validate(cfg, opts, out);
    return cmd_sweep(cfg, opts, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace adnoise
