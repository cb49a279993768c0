#include "adnoise/report.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/core.h>

#include "adnoise/errors.hpp"

#ifndef ADNOISE_VERSION
#define ADNOISE_VERSION "0.0.0"
#endif

namespace adnoise {

namespace {

using nlohmann::json;

json number(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}

void write_atomically(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".part";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError(fmt::format("cannot write {}", tmp.string()));
    out << text;
    if (!out) throw ConfigError(fmt::format("failed while writing {}", tmp.string()));
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

std::string version() { return ADNOISE_VERSION; }

json OutputMeta::to_json() const {
  return {{"version", version()}, {"config_hash", fmt::format("{:016x}", config_hash)}, {"seed", seed}};
}

std::string OutputMeta::csv_comment() const {
  return fmt::format("# adnoise {} config_hash={:016x} seed={}", version(), config_hash, seed);
}

json to_json(const LevelStructure& levels) {
  json rates = json::array();
  for (Eigen::Index i = 0; i < levels.rates_per_s.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < levels.rates_per_s.cols(); ++j) row.push_back(levels.rates_per_s(i, j));
    rates.push_back(row);
  }
  json j = {{"energies_meV", levels.energies_meV},
            {"dipoles_debye", levels.dipoles_debye},
            {"rates_per_s", rates},
            {"omega0", levels.omega0_per_s},
            {"delta", levels.delta_per_s},
            {"threshold_meV", number(levels.threshold_meV)}};
  if (levels.count() >= 2) {
    j["omega12_per_s"] = levels.fundamental_frequency();
    j["gamma0_per_s"] = levels.fundamental_rate();
  }
  return j;
}

LevelStructure levels_from_json(const json& j) {
  try {
    LevelStructure lv;
    lv.energies_meV = j.at("energies_meV").get<std::vector<double>>();
    lv.dipoles_debye = j.at("dipoles_debye").get<std::vector<double>>();
    const auto rows = j.at("rates_per_s").get<std::vector<std::vector<double>>>();
    const auto m = static_cast<Eigen::Index>(rows.size());
    lv.rates_per_s = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
      if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(a)].size()) != m) {
        throw ConfigError("rates_per_s must be square");
      }
      for (Eigen::Index b = 0; b < m; ++b) lv.rates_per_s(a, b) = rows[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
    }
    lv.omega0_per_s = j.value("omega0", 0.0);
    lv.delta_per_s = j.value("delta", 0.0);
    const json& t = j.contains("threshold_meV") ? j.at("threshold_meV") : json("inf");
    lv.threshold_meV = t.is_number() ? t.get<double>() : std::numeric_limits<double>::infinity();
    lv.validate();
    return lv;
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("malformed level structure: {}", e.what()));
  }
}

json to_json(const SpectralDecomposition& sd) {
  json pairs = json::array();
  for (std::size_t k = 0; k < sd.pairs.size(); ++k) {
    pairs.push_back({{"k", k + 1}, {"lambda_per_s", sd.pairs[k].lambda_per_s}, {"C_k", sd.pairs[k].weight}});
  }
  return {{"provenance",
           {{"atoms", sd.provenance.atoms},
            {"levels", sd.provenance.levels},
            {"temperature_ratio", sd.provenance.temperature_ratio},
            {"levels_hash", fmt::format("{:016x}", sd.provenance.levels_hash)}}},
          {"pairs", pairs},
          {"dipoles", sd.dipoles},
          {"mean_dipole", sd.mean_dipole},
          {"variance", sd.variance},
          {"white_noise", sd.white_noise()}};
}

json to_json(const OracleReport& report) {
  json config = json::object();
  if (!report.config.empty()) config = json::parse(report.config);
  return {{"config", config},
          {"omega", report.omegas},
          {"estimate", report.estimate},
          {"stderr", report.stderr_},
          {"analytic", report.analytic},
          {"max_sigma_deviation", report.max_sigma_deviation},
          {"fraction_within_3sigma", report.fraction_within_3sigma}};
}

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

void write_csv(const std::filesystem::path& path, const OutputMeta& meta, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& columns) {
  if (header.size() != columns.size()) throw DomainError("CSV header and columns differ in count");
  const std::size_t rows = columns.empty() ? 0 : columns.front().size();
  for (const auto& c : columns) {
    if (c.size() != rows) throw DomainError("CSV columns differ in length");
  }
  std::string text = meta.csv_comment() + "\n";
  for (std::size_t i = 0; i < header.size(); ++i) text += (i ? "," : "") + header[i];
  text += "\n";
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) text += ",";
      text += format_double(columns[c][r]);
    }
    text += "\n";
  }
  write_atomically(path, text);
}

void write_json(const std::filesystem::path& path, const OutputMeta& meta, json body) {
  body["meta"] = meta.to_json();
  write_atomically(path, body.dump(2) + "\n");
}

std::string ratio_tag(double ratio) { return fmt::format("{:g}", ratio); }

}  // namespace adnoise
