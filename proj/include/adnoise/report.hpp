#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "adnoise/oracle.hpp"
#include "adnoise/potential.hpp"
#include "adnoise/spectrum.hpp"

namespace adnoise {

/// Library version string embedded in every output.
std::string version();

/// Provenance block written into every output file.
struct OutputMeta {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  /// "# adnoise <version> config_hash=<hex> seed=<n>"
  std::string csv_comment() const;
};

nlohmann::json to_json(const LevelStructure& levels);
LevelStructure levels_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SpectralDecomposition& sd);
nlohmann::json to_json(const OracleReport& report);

/// Full-precision number formatting shared by all CSV writers.
std::string format_double(double v);

/// Write a CSV file with a provenance comment line and a header row.
void write_csv(const std::filesystem::path& path, const OutputMeta& meta, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& columns);

/// Pretty-printed JSON with a "meta" block added.
void write_json(const std::filesystem::path& path, const OutputMeta& meta, nlohmann::json body);

/// Filename-friendly rendering of a temperature ratio, e.g. 0.1 -> "0.1".
std::string ratio_tag(double ratio);

}  // namespace adnoise
