#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "kinokit/verifier.hpp"

namespace kinokit {

inline constexpr const char* kToolVersion = "kinokit 1.0.0";

/// Configuration problem; the message lists every violation found.
class ScenarioError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct CheckSelection {
  std::string id;
  CheckOverrides overrides;
};

struct Scenario {
  ModelParams params;
  Profile profile = Profile::maxwellian(3);
  HydroBounds hydro_bounds;
  std::vector<CheckSelection> checks;
  SweepGrid sweep;
  QuadratureSpec quadrature;
  Tolerances tolerances;
  double tolerance_scale = 1.0;
  std::size_t mc_samples = 4096;
  std::uint64_t seed = 42;

  /// Verification settings with the seed and tolerance scale applied.
  VerifyConfig config() const;
  /// Empty when the scenario is valid.
  std::vector<std::string> violations() const;
};

/// Parses YAML text (JSON when `json` is set). Throws ScenarioError.
Scenario parse_scenario(const std::string& text, bool json = false);
/// Reads a file; a .json extension selects the JSON reader.
Scenario load_scenario(const std::filesystem::path& path);
/// Canonical YAML; parse_scenario(save_scenario(x)) reproduces x exactly.
std::string save_scenario(const Scenario& sc);
/// Hex digest of the canonical form.
std::string scenario_digest(const Scenario& sc);

struct ReportEntry {
  CheckResult result;
  double wall_seconds = 0.0;
};

struct Report {
  std::string tool_version = kToolVersion;
  std::string scenario_digest;
  HydroQuantities hydro;
  bool hydro_ok = true;
  std::vector<ReportEntry> entries;  ///< sorted by check id, then sweep coordinates

  bool all_pass() const;
  /// 0 when everything passes, 1 otherwise.
  int exit_code() const;
};

/// Runs the selected checks with `workers` threads (0 keeps the process default).
Report run_scenario(const Scenario& sc, int workers = 0);

/// Full report as JSON text. Wall-clock times are only included when asked for.
std::string report_json(const Report& r, bool with_timing = false);
/// Flat table check_id,v0,r,name,value,pass.
std::string report_csv(const Report& r);
/// Plot table series,x_axis,x,value for one record.
std::string series_csv(const CheckResult& r);

enum class EmitFormat { all, json, csv };
EmitFormat emit_format_from_string(const std::string& s);

/// Writes report.json and/or report.csv plus series_<check_id>.csv into `dir`,
/// and timing.json with the wall-clock times. Returns the written paths.
std::vector<std::filesystem::path> emit_report(const Report& r, const std::filesystem::path& dir,
                                               EmitFormat fmt = EmitFormat::all);

}  // namespace kinokit
