#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "adnoise/master_equation.hpp"
#include "adnoise/potential.hpp"
#include "adnoise/spectrum.hpp"

namespace adnoise {

struct FrequencyGridConfig {
  /// Bounds in units of the fundamental rate Gamma0.
  double min_over_gamma0 = 1e-2;
  double max_over_gamma0 = 1e3;
  int points_per_decade = 50;
};

enum class PatchModel { LowTemperature, Exact };

struct PatchConfig {
  PatchDistribution::Form form = PatchDistribution::Form::OneOverN;
  int n_max = 10;
  int n0 = 1;
  std::vector<double> weights;
  PatchModel model = PatchModel::LowTemperature;
  /// Lorentzian amplitude in Debye^2; defaults to 2 (d1 - d2)^2 T.
  std::optional<double> amplitude_debye2;

  PatchDistribution distribution() const;
};

struct OracleConfig {
  int atoms = 3;
  int levels = 3;
  double temperature_ratio = 0.5;
  int trajectories = 200;
  double duration_over_gamma0 = 1000.0;
  double burn_in_over_gamma0 = 20.0;
  double sampling_dt_over_gamma0 = 0.01;
  std::size_t segment_length = 16384;
};

struct RunConfig {
  PotentialParams potential;
  MaterialParams material;
  SolverOptions solver;
  std::vector<double> temperature_ratios{0.1, 0.4, 1.0};
  std::vector<int> atoms{1, 2, 4, 8};
  int levels = 10;
  /// Drop levels bound by less than k_B T.
  bool truncate_thermal = true;
  std::string transition_set = "all_pairs";
  PatchConfig patch;
  FrequencyGridConfig frequency_grid;
  std::vector<int> top_k{1, 2, 4};
  std::size_t dimension_cap = kDefaultDimensionCap;
  std::size_t dense_cap = kDefaultDenseCap;
  OracleConfig oracle;
  std::string output_directory = "adnoise_out";

  TransitionSet transitions() const;
  void validate() const;
};

/// Parse a JSON document. Unknown keys are rejected so that a mistyped unit
/// suffix cannot be silently ignored. Throws ConfigError.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

/// FNV-1a of the canonical JSON form.
std::uint64_t config_hash(const RunConfig& cfg);

}  // namespace adnoise
