#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "adnoise/cli.hpp"
#include "adnoise/config.hpp"
#include "adnoise/errors.hpp"
#include "adnoise/report.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace adnoise;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("adnoise_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

json small_config() {
  return json{{"atoms", {1, 2}},
              {"levels", 3},
              {"temperature_ratios", {0.5}},
              {"top_k", {1}},
              {"frequency_grid", {{"points_per_decade", 5}}},
              {"patch_distribution", {{"form", "one_over_n"}, {"n_max", 2}}}};
}

fs::path write_config(const fs::path& dir, const json& doc) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << doc.dump(2);
  return p;
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "adnoise");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("config parsing") {
  const RunConfig def = parse_config(json::object());
  CHECK(def.levels == 10);
  CHECK(def.potential.U0_meV == 250.0);

  const RunConfig cfg = parse_config(small_config());
  CHECK(cfg.atoms == std::vector<int>{1, 2});
  CHECK(cfg.levels == 3);
  CHECK(cfg.frequency_grid.points_per_decade == 5);
  CHECK(cfg.patch.n_max == 2);

  CHECK_THROWS_AS(parse_config(json{{"atomz", {1}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"potential", {{"U0_eV", 0.25}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"levels", "ten"}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"transition_set", "everything"}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json::array()), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/adnoise.json"), ConfigError);
}

TEST_CASE("config round trip and hash") {
  const RunConfig cfg = parse_config(small_config());
  const RunConfig again = parse_config(to_json(cfg));
  CHECK(to_json(again) == to_json(cfg));
  CHECK(config_hash(again) == config_hash(cfg));

  RunConfig moved = cfg;
  moved.output_directory = "elsewhere";
  CHECK(config_hash(moved) == config_hash(cfg));

  RunConfig changed = cfg;
  changed.potential.U0_meV = 251;
  CHECK(config_hash(changed) != config_hash(cfg));
}

TEST_CASE("report helpers") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(ratio_tag(0.1) == "0.1");
  CHECK(ratio_tag(1.0) == "1");

  const OutputMeta meta{0xabcULL, 7};
  CHECK(meta.csv_comment() == "# adnoise " + version() + " config_hash=0000000000000abc seed=7");

  const LevelStructure& lv = test::reference_levels();
  const LevelStructure back = levels_from_json(to_json(lv));
  CHECK(back.energies_meV == lv.energies_meV);
  CHECK(back.dipoles_debye == lv.dipoles_debye);
  CHECK(back.rates_per_s == lv.rates_per_s);
  CHECK(back.hash() == lv.hash());

  TempDir dir("report");
  write_csv(dir.path / "a.csv", meta, {"x", "y"}, {{1.0, 2.0}, {3.0, 4.0}});
  CHECK(slurp(dir.path / "a.csv") == meta.csv_comment() + "\nx,y\n1,3\n2,4\n");
  CHECK_FALSE(fs::exists(dir.path / "a.csv.part"));
  CHECK_THROWS_AS(write_csv(dir.path / "b.csv", meta, {"x"}, {{1.0}, {2.0}}), DomainError);
}

TEST_CASE("cli levels") {
  TempDir dir("levels");
  const Run r = run({"levels", "--out", dir.path.string()});
  CHECK(r.code == 0);
  const json j = json::parse(slurp(dir.path / "levels.json"));
  CHECK(j["meta"]["version"] == version());
  CHECK(j["levels"]["energies_meV"].size() == 10);
  CHECK(j["correlated_regime"] == true);
}

TEST_CASE("cli spectrum, pink and sweep") {
  TempDir dir("spectrum");
  const fs::path cfg = write_config(dir.path, small_config());
  const fs::path a = dir.path / "a";
  const fs::path b = dir.path / "b";
  REQUIRE(run({"spectrum", "--config", cfg.string(), "--out", a.string()}).code == 0);
  REQUIRE(run({"spectrum", "--config", cfg.string(), "--out", b.string()}).code == 0);
  for (const char* name : {"spectrum_N2_T0.5.csv", "pairs_N2_T0.5.csv", "spectrum_N2_T0.5_top1.csv",
                           "white_noise_T0.5.csv", "decomposition_N1_T0.5.json"}) {
    CAPTURE(name);
    REQUIRE(fs::exists(a / name));
    CHECK(slurp(a / name) == slurp(b / name));
  }
  CHECK(slurp(a / "spectrum_N1_T0.5.csv").rfind("# adnoise ", 0) == 0);

  REQUIRE(run({"pink", "--config", cfg.string(), "--out", a.string()}).code == 0);
  CHECK(fs::exists(a / "pink_finite_T0.5.csv"));
  CHECK(fs::exists(a / "pink_closed_form_T0.5.csv"));

  const Run first = run({"sweep", "--config", cfg.string(), "--out", a.string()});
  CHECK(first.code == 0);
  CHECK(first.out.find("(0 resumed)") != std::string::npos);
  const Run second = run({"sweep", "--config", cfg.string(), "--out", a.string()});
  CHECK(second.code == 0);
  CHECK(second.out.find("(2 resumed)") != std::string::npos);
  CHECK(fs::exists(a / "sweep_summary.csv"));
}

TEST_CASE("cli delta distribution reproduces a single patch") {
  TempDir dir("delta");
  json doc = small_config();
  doc["patch_distribution"] = {{"form", "delta"}, {"n0", 2}, {"model", "exact"}};
  const fs::path cfg = write_config(dir.path, doc);
  REQUIRE(run({"spectrum", "--config", cfg.string(), "--out", dir.path.string()}).code == 0);
  REQUIRE(run({"pink", "--config", cfg.string(), "--out", dir.path.string()}).code == 0);

  auto column = [](const fs::path& p, std::size_t col) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    std::vector<double> out;
    while (std::getline(in, line)) {
      std::stringstream ss(line);
      std::string cell;
      for (std::size_t i = 0; i <= col; ++i) std::getline(ss, cell, ',');
      out.push_back(std::stod(cell));
    }
    return out;
  };
  const auto single = column(dir.path / "spectrum_N2_T0.5.csv", 2);
  const auto agg = column(dir.path / "pink_finite_T0.5.csv", 2);
  REQUIRE(single.size() == agg.size());
  for (std::size_t i = 0; i < single.size(); ++i) CHECK(agg[i] == doctest::Approx(single[i]).epsilon(1e-12));
}

TEST_CASE("cli exit codes") {
  TempDir dir("codes");
  CHECK(run({"--version"}).code == 0);
  CHECK(run({"--help"}).code == 0);
  CHECK(run({}).code == 3);
  CHECK(run({"frobnicate"}).code == 3);
  CHECK(run({"levels", "--config", (dir.path / "missing.json").string()}).code == 3);

  const fs::path bad = write_config(dir.path, json{{"levels", 3}, {"colour", "blue"}});
  CHECK(run({"levels", "--config", bad.string(), "--out", dir.path.string()}).code == 3);

  json shallow = small_config();
  shallow["potential"] = {{"U0_meV", 1.0}, {"mass_amu", 1.0}};
  const fs::path sh = write_config(dir.path, shallow);
  const Run r = run({"levels", "--config", sh.string(), "--out", dir.path.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("bound level") != std::string::npos);

  json capped = small_config();
  capped["dimension_cap"] = 2;
  const fs::path cp = write_config(dir.path, capped);
  CHECK(run({"spectrum", "--config", cp.string(), "--out", dir.path.string()}).code == 3);
}

TEST_CASE("cli validate and fault injection") {
  TempDir dir("validate");
  const Run ok = run({"validate", "--out", dir.path.string()});
  CHECK(ok.code == 0);
  const json v = json::parse(slurp(dir.path / "validation.json"));
  CHECK(v["passed"] == true);

  const Run bad = run({"validate", "--fault-inject", "rate_matrix", "--out", dir.path.string()});
  CHECK(bad.code == 1);
  const json f = json::parse(slurp(dir.path / "validation.json"));
  CHECK(f["passed"] == false);
  bool db_failed = false;
  for (const auto& c : f["checks"]) {
    if (c["name"] == "detailed_balance") db_failed = c["passed"] == false;
  }
  CHECK(db_failed);

  CHECK(run({"validate", "--fault-inject", "nonsense", "--out", dir.path.string()}).code == 3);
}

TEST_CASE("output directory from the environment") {
  TempDir dir("env");
  const fs::path target = dir.path / "from_env";
  ::setenv("ADNOISE_OUT", target.c_str(), 1);
  const Run r = run({"levels"});
  ::unsetenv("ADNOISE_OUT");
  CHECK(r.code == 0);
  CHECK(fs::exists(target / "levels.json"));
}
