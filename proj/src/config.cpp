#include "adnoise/config.hpp"

#include <fstream>
#include <set>

#include <fmt/core.h>

#include "adnoise/errors.hpp"
#include "adnoise/hash.hpp"

namespace adnoise {

namespace {

using nlohmann::json;

// Reads typed fields from one JSON object and rejects keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(fmt::format("{} must be an object", label()));
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(fmt::format("{}.{}: {}", label(), key, e.what()));
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) throw ConfigError(fmt::format("unknown key '{}' in {}", key, label()));
    }
  }

  std::string label() const { return path_.empty() ? "config" : path_; }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

const char* form_name(PatchDistribution::Form f) {
  switch (f) {
    case PatchDistribution::Form::Delta:
      return "delta";
    case PatchDistribution::Form::OneOverN:
      return "one_over_n";
    case PatchDistribution::Form::Custom:
      return "custom";
  }
  return "";
}

}  // namespace

PatchDistribution PatchConfig::distribution() const {
  switch (form) {
    case PatchDistribution::Form::Delta:
      return PatchDistribution::delta(n0);
    case PatchDistribution::Form::OneOverN:
      return PatchDistribution::one_over_n(n_max);
    case PatchDistribution::Form::Custom:
      return PatchDistribution::custom(weights);
  }
  throw ConfigError("unknown patch distribution");
}

TransitionSet RunConfig::transitions() const {
  if (transition_set == "all_pairs") return TransitionSet::all_pairs();
  if (transition_set == "nearest_neighbor") return TransitionSet::nearest_neighbor();
  throw ConfigError(fmt::format("transition_set must be all_pairs or nearest_neighbor, got '{}'", transition_set));
}

void RunConfig::validate() const {
  try {
    potential.validate();
    material.validate();
    for (double t : temperature_ratios) ThermalParams{t}.validate();
    patch.distribution();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  transitions();
  if (temperature_ratios.empty()) throw ConfigError("temperature_ratios is empty");
  for (double t : temperature_ratios) {
    if (!(t > 0)) throw ConfigError(fmt::format("temperature ratios must be positive, got {}", t));
  }
  if (atoms.empty()) throw ConfigError("atoms is empty");
  for (int n : atoms) {
    if (n < 1) throw ConfigError(fmt::format("patch sizes must be >= 1, got {}", n));
  }
  if (levels < 2) throw ConfigError(fmt::format("levels must be >= 2, got {}", levels));
  if (!(frequency_grid.min_over_gamma0 > 0) || !(frequency_grid.max_over_gamma0 > frequency_grid.min_over_gamma0)) {
    throw ConfigError("frequency_grid needs 0 < min_over_gamma0 < max_over_gamma0");
  }
  if (frequency_grid.points_per_decade < 1) throw ConfigError("points_per_decade must be >= 1");
  for (int k : top_k) {
    if (k < 1) throw ConfigError("top_k entries must be >= 1");
  }
  if (oracle.atoms < 1 || oracle.levels < 2 || !(oracle.temperature_ratio > 0) || oracle.trajectories < 1 ||
      !(oracle.duration_over_gamma0 > oracle.burn_in_over_gamma0) || !(oracle.burn_in_over_gamma0 >= 0) ||
      !(oracle.sampling_dt_over_gamma0 > 0) || oracle.segment_length < 4 || oracle.segment_length % 2 != 0) {
    throw ConfigError("invalid oracle settings");
  }
  if (patch.amplitude_debye2 && !(*patch.amplitude_debye2 >= 0)) {
    throw ConfigError("pink amplitude must be >= 0");
  }
}

RunConfig parse_config(const json& doc) {
  RunConfig cfg;
  ObjectReader root(doc, "");
  if (const json* p = root.child("potential")) {
    ObjectReader r(*p, "potential");
    r.read("U0_meV", cfg.potential.U0_meV);
    r.read("z0_A", cfg.potential.z0_A);
    r.read("beta0_per_A", cfg.potential.beta0_per_A);
    r.read("mass_amu", cfg.potential.mass_amu);
    r.read("polarizability_A3", cfg.potential.polarizability_A3);
    r.finish();
  }
  if (const json* m = root.child("material")) {
    ObjectReader r(*m, "material");
    r.read("phonon_speed_m_per_s", cfg.material.phonon_speed_m_per_s);
    r.read("bulk_density_per_A3", cfg.material.bulk_density_per_A3);
    r.read("bulk_atom_mass_amu", cfg.material.bulk_atom_mass_amu);
    r.read("adatom_density_per_A2", cfg.material.adatom_density_per_A2);
    r.finish();
  }
  if (const json* s = root.child("solver")) {
    ObjectReader r(*s, "solver");
    r.read("points_per_oscillator_length", cfg.solver.points_per_oscillator_length);
    r.read("spacing_A", cfg.solver.spacing_A);
    r.read("max_grid_points", cfg.solver.max_grid_points);
    r.finish();
  }
  root.read("temperature_ratios", cfg.temperature_ratios);
  root.read("atoms", cfg.atoms);
  root.read("levels", cfg.levels);
  root.read("truncate_thermal", cfg.truncate_thermal);
  root.read("transition_set", cfg.transition_set);
  if (const json* p = root.child("patch_distribution")) {
    ObjectReader r(*p, "patch_distribution");
    std::string form = "one_over_n";
    std::string model = "low_temperature";
    double amplitude = -1.0;
    r.read("form", form);
    r.read("n_max", cfg.patch.n_max);
    r.read("n0", cfg.patch.n0);
    r.read("weights", cfg.patch.weights);
    r.read("model", model);
    r.read("amplitude_debye2", amplitude);
    r.finish();
    if (form == "delta") {
      cfg.patch.form = PatchDistribution::Form::Delta;
    } else if (form == "one_over_n") {
      cfg.patch.form = PatchDistribution::Form::OneOverN;
    } else if (form == "custom") {
      cfg.patch.form = PatchDistribution::Form::Custom;
    } else {
      throw ConfigError(fmt::format("patch_distribution.form must be delta, one_over_n or custom, got '{}'", form));
    }
    if (model == "low_temperature") {
      cfg.patch.model = PatchModel::LowTemperature;
    } else if (model == "exact") {
      cfg.patch.model = PatchModel::Exact;
    } else {
      throw ConfigError(fmt::format("patch_distribution.model must be low_temperature or exact, got '{}'", model));
    }
    if (p->contains("amplitude_debye2")) cfg.patch.amplitude_debye2 = amplitude;
  }
  if (const json* f = root.child("frequency_grid")) {
    ObjectReader r(*f, "frequency_grid");
    r.read("min_over_gamma0", cfg.frequency_grid.min_over_gamma0);
    r.read("max_over_gamma0", cfg.frequency_grid.max_over_gamma0);
    r.read("points_per_decade", cfg.frequency_grid.points_per_decade);
    r.finish();
  }
  root.read("top_k", cfg.top_k);
  root.read("dimension_cap", cfg.dimension_cap);
  root.read("dense_cap", cfg.dense_cap);
  if (const json* o = root.child("oracle")) {
    ObjectReader r(*o, "oracle");
    r.read("atoms", cfg.oracle.atoms);
    r.read("levels", cfg.oracle.levels);
    r.read("temperature_ratio", cfg.oracle.temperature_ratio);
    r.read("trajectories", cfg.oracle.trajectories);
    r.read("duration_over_gamma0", cfg.oracle.duration_over_gamma0);
    r.read("burn_in_over_gamma0", cfg.oracle.burn_in_over_gamma0);
    r.read("sampling_dt_over_gamma0", cfg.oracle.sampling_dt_over_gamma0);
    r.read("segment_length", cfg.oracle.segment_length);
    r.finish();
  }
  if (const json* o = root.child("outputs")) {
    ObjectReader r(*o, "outputs");
    r.read("directory", cfg.output_directory);
    r.finish();
  }
  root.finish();
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file {}", path.string()));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return parse_config(doc);
}

json to_json(const RunConfig& cfg) {
  json j;
  j["potential"] = {{"U0_meV", cfg.potential.U0_meV},
                    {"z0_A", cfg.potential.z0_A},
                    {"beta0_per_A", cfg.potential.beta0_per_A},
                    {"mass_amu", cfg.potential.mass_amu},
                    {"polarizability_A3", cfg.potential.polarizability_A3}};
  j["material"] = {{"phonon_speed_m_per_s", cfg.material.phonon_speed_m_per_s},
                   {"bulk_density_per_A3", cfg.material.bulk_density_per_A3},
                   {"bulk_atom_mass_amu", cfg.material.bulk_atom_mass_amu},
                   {"adatom_density_per_A2", cfg.material.adatom_density_per_A2}};
  j["solver"] = {{"points_per_oscillator_length", cfg.solver.points_per_oscillator_length},
                 {"spacing_A", cfg.solver.spacing_A},
                 {"max_grid_points", cfg.solver.max_grid_points}};
  j["temperature_ratios"] = cfg.temperature_ratios;
  j["atoms"] = cfg.atoms;
  j["levels"] = cfg.levels;
  j["truncate_thermal"] = cfg.truncate_thermal;
  j["transition_set"] = cfg.transition_set;
  json patch = {{"form", form_name(cfg.patch.form)},
                {"n_max", cfg.patch.n_max},
                {"n0", cfg.patch.n0},
                {"weights", cfg.patch.weights},
                {"model", cfg.patch.model == PatchModel::Exact ? "exact" : "low_temperature"}};
  if (cfg.patch.amplitude_debye2) patch["amplitude_debye2"] = *cfg.patch.amplitude_debye2;
  j["patch_distribution"] = patch;
  j["frequency_grid"] = {{"min_over_gamma0", cfg.frequency_grid.min_over_gamma0},
                         {"max_over_gamma0", cfg.frequency_grid.max_over_gamma0},
                         {"points_per_decade", cfg.frequency_grid.points_per_decade}};
  j["top_k"] = cfg.top_k;
  j["dimension_cap"] = cfg.dimension_cap;
  j["dense_cap"] = cfg.dense_cap;
  j["oracle"] = {{"atoms", cfg.oracle.atoms},
                 {"levels", cfg.oracle.levels},
                 {"temperature_ratio", cfg.oracle.temperature_ratio},
                 {"trajectories", cfg.oracle.trajectories},
                 {"duration_over_gamma0", cfg.oracle.duration_over_gamma0},
                 {"burn_in_over_gamma0", cfg.oracle.burn_in_over_gamma0},
                 {"sampling_dt_over_gamma0", cfg.oracle.sampling_dt_over_gamma0},
                 {"segment_length", cfg.oracle.segment_length}};
  j["outputs"] = {{"directory", cfg.output_directory}};
  return j;
}

std::uint64_t config_hash(const RunConfig& cfg) {
  json j = to_json(cfg);
  j.erase("outputs");  // where results go does not change them
  Fnv1a h;
  h.add(j.dump());
  return h.value();
}

}  // namespace adnoise
