#pragma once

#include <optional>
#include <string>

#include <json.hpp>

namespace qpk::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
// "Ran fine, alarm raised" gets its own code so shell pipelines can branch
// on detection.
inline constexpr int kExitAlarm = 2;

inline constexpr const char* kToolName = "qpk-sim";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kReportVersion = 1;

// Flag overlays applied on top of the config file (flags win).
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> shots;
  std::optional<std::string> attack;
  std::optional<double> alpha;
};

// Bundled default configs, one per subcommand.
nlohmann::json default_config(const std::string& subcommand);

// Schema validation: required keys present, types sane, unknown keys rejected.
void validate_config(const std::string& subcommand, const nlohmann::json& config);

// Runners. Each returns the machine-readable report and fills the flat
// comma-separated table; they throw on config errors. simulate optionally
// hands back the public transcript document.
nlohmann::json run_simulate(const nlohmann::json& config, std::string* csv,
                            nlohmann::json* transcript_out = nullptr);
nlohmann::json run_attack_sweep(const nlohmann::json& config, std::string* csv);
nlohmann::json run_verify_theorem(const nlohmann::json& config, std::string* csv);
nlohmann::json run_oracle_check(const nlohmann::json& config, std::string* csv);
nlohmann::json run_calibrate(const nlohmann::json& config, std::string* csv);

// Checks a report against the emitted schema (version fields, subcommand,
// echoed config, results shape).
void validate_report(const nlohmann::json& report);

// Writes report.json and table.csv (and, for simulate, transcript.json).
void write_outputs(const nlohmann::json& report, const std::string& csv,
                   const std::string& out_dir);

// Full subcommand entry point used by the binary: loads the config (bundled
// default when path is empty), applies overrides, runs, writes outputs into
// out_dir, and returns the process exit code.
int run_subcommand(const std::string& subcommand, const std::string& config_path,
                   const std::string& out_dir, const Overrides& overrides);

}  // namespace qpk::cli
