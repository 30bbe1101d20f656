#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "kinokit/scenario.hpp"

using namespace kinokit;

namespace {

const char* kMinimal = R"(seed: 7
params:
  gamma: 0
  s: 0.25
checks:
  - da_equivalence
)";

std::string error_of(const std::string& text, bool json = false) {
  try {
    parse_scenario(text, json);
  } catch (const ScenarioError& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Scenario small_sweep(std::vector<std::string> ids) {
  Scenario sc = parse_scenario(kMinimal);
  sc.checks.clear();
  for (auto& id : ids) sc.checks.push_back({id, {}});
  sc.sweep.v0_magnitudes = {2, 8, 32};
  sc.sweep.radii = {0.25, 1, 4};
  sc.sweep.directions = 256;
  sc.mc_samples = 256;
  return sc;
}

}  // namespace

TEST_CASE("minimal config fills defaults") {
  const auto sc = parse_scenario(kMinimal);
  CHECK(sc.seed == 7);
  CHECK(sc.params.d == 3);
  CHECK(sc.params.kernel_mode == KernelMode::model);
  CHECK(sc.profile.hash() == Profile::maxwellian(3).hash());
  CHECK(sc.sweep.v0_magnitudes == std::vector<double>{2, 4, 8, 16, 32, 64});
  REQUIRE(sc.checks.size() == 1);
  CHECK(sc.checks[0].id == "da_equivalence");
  CHECK(sc.config().grid.seed == 7);
}

TEST_CASE("invariant violations are rejected") {
  CHECK(error_of("seed: 1\nparams: {d: 3, gamma: -4, s: 0.25}\n").find("gamma > -d") != std::string::npos);
  CHECK(error_of("params: {gamma: 0, s: 0.25}\n").find("seed: required") != std::string::npos);
  CHECK(error_of("seed: 1\nparams: {s: 0.25}\nchecks: [nondeg9]\n").find("unknown check id") != std::string::npos);
  CHECK(error_of("seed: 1\nparams: {s: 0.25}\nchecks: [{id: A0, overrides: {beta: 1}}]\n").find("no override") !=
        std::string::npos);
  CHECK(error_of("seed: 1\nparams: {s: 0.25}\nsweep: {v0_magnitudes: [4, 2]}\n").find("ascending") !=
        std::string::npos);
  CHECK(error_of("seed: 1\nparams: {s: 0.25}\nchecks: [cone, cone]\n").find("duplicate") != std::string::npos);
  // several problems are listed together
  const auto many = error_of("seed: 1\nparams: {s: 2, gamma: -5}\nmc_samples: 0\n");
  CHECK(many.find("0 < s < 1") != std::string::npos);
  CHECK(many.find("mc_samples") != std::string::npos);
}

TEST_CASE("parse and field errors carry line numbers") {
  CHECK(error_of("seed: 1\nparams: [1, 2\n").find("parse error at line") != std::string::npos);
  const auto e = error_of("seed: 1\nparams:\n  s: 0.25\n  colour: red\n");
  CHECK(e.find("unknown key 'colour' (line 4)") != std::string::npos);
  CHECK(error_of("seed: 1\nparams: {s: quarter}\n").find("params.s: expected a number (line 2)") != std::string::npos);
}

TEST_CASE("canonical round trip") {
  Scenario sc = parse_scenario(kMinimal);
  sc.profile = Profile(3);
  sc.profile.add({0.75, 0.5, Vec{0.1, 0.0, -0.2}});
  sc.profile.add({0.25, 2.0, Vec{}});
  sc.profile.set_bump({Vec{0.0, 0.3, 0.0}, 0.5, 0.01, 2});
  sc.params.gamma = -0.1;
  sc.params.s = 1.0 / 3.0;
  sc.checks.push_back({"A0", {{"alpha", 0.3}}});
  sc.seed = 18446744073709551557ULL;
  const std::string text = save_scenario(sc);
  const Scenario back = parse_scenario(text);
  CHECK(save_scenario(back) == text);
  CHECK(back.params.s == sc.params.s);
  CHECK(back.seed == sc.seed);
  CHECK(back.profile.hash() == sc.profile.hash());
  CHECK(scenario_digest(back) == scenario_digest(sc));
}

TEST_CASE("JSON input matches YAML input") {
  const auto y = parse_scenario(kMinimal);
  const auto j = parse_scenario(R"({"seed": 7, "params": {"gamma": 0, "s": 0.25}, "checks": ["da_equivalence"]})", true);
  CHECK(save_scenario(j) == save_scenario(y));
  CHECK(error_of("{\"seed\": 7,", true).find("parse error") != std::string::npos);
}

TEST_CASE("empty check list gives an empty passing report") {
  Scenario sc = parse_scenario("seed: 1\nparams: {s: 0.25}\n");
  const auto rep = run_scenario(sc);
  CHECK(rep.entries.empty());
  CHECK(rep.exit_code() == 0);
  const auto dir = std::filesystem::temp_directory_path() / "kinokit_empty_report";
  std::filesystem::remove_all(dir);
  emit_report(rep, dir);
  CHECK(slurp(dir / "report.csv") == "check_id,v0,r,name,value,pass\n");
  const auto j = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(j["results"].empty());
  CHECK(j["summary"]["checks"] == 0);
}

TEST_CASE("one record per check, one CSV row per constant") {
  Scenario sc = small_sweep({"da_equivalence"});
  const auto rep = run_scenario(sc);
  REQUIRE(rep.entries.size() == 1);
  const auto j = nlohmann::json::parse(report_json(rep));
  REQUIRE(j["results"].size() == 1);
  CHECK(j["results"][0]["check_id"] == "da_equivalence");
  std::istringstream csv(report_csv(rep));
  std::string line;
  std::size_t constant_rows = 0;
  std::getline(csv, line);
  while (std::getline(csv, line))
    if (line.rfind("da_equivalence,,,", 0) == 0 && line.find("fit.") == std::string::npos) ++constant_rows;
  CHECK(constant_rows == rep.entries[0].result.constants.size());
  CHECK(rep.exit_code() == 0);
}

TEST_CASE("sweep checks carry fitted exponents") {
  const auto rep = run_scenario(small_sweep({"bounded1", "cone_transformed", "nondeg1"}));
  for (const auto& e : rep.entries) {
    INFO(e.result.check_id);
    CHECK_FALSE(e.result.fits.empty());
    CHECK(series_csv(e.result).find(",v0,") != std::string::npos);
  }
  // sorted by id
  CHECK(rep.entries.front().result.check_id == "bounded1");
  CHECK(rep.entries.back().result.check_id == "nondeg1");
}

TEST_CASE("report is independent of the worker count") {
  const auto sc = small_sweep({"measure_condition", "bounded2", "da_equivalence"});
  const auto a = report_json(run_scenario(sc, 1));
  const auto b = report_json(run_scenario(sc, 4));
  CHECK(a == b);
}

TEST_CASE("failing checks and the hydro gate set the exit code") {
  Scenario sc = small_sweep({"nondeg1"});
  sc.profile = Profile::zero(3);
  const auto rep = run_scenario(sc);
  CHECK_FALSE(rep.hydro_ok);
  CHECK_FALSE(rep.entries[0].result.pass);
  CHECK(rep.exit_code() == 1);
}

TEST_CASE("emit format selection") {
  CHECK(emit_format_from_string("json") == EmitFormat::json);
  CHECK_THROWS_AS(emit_format_from_string("xml"), std::invalid_argument);
  const auto rep = run_scenario(small_sweep({"da_equivalence"}));
  const auto dir = std::filesystem::temp_directory_path() / "kinokit_csv_only";
  std::filesystem::remove_all(dir);
  emit_report(rep, dir, EmitFormat::csv);
  CHECK_FALSE(std::filesystem::exists(dir / "report.json"));
  CHECK(std::filesystem::exists(dir / "report.csv"));
  CHECK(std::filesystem::exists(dir / "series_da_equivalence.csv"));
}
