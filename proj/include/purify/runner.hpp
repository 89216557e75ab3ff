#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "purify/json_io.hpp"

namespace purify {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitVerification = 3;
inline constexpr int kExitReplay = 4;

inline constexpr const char* kConfigSchema = "purify.config/1";
inline constexpr const char* kReportSchema = "purify.report/1";

#ifndef PURIFY_VERSION
#define PURIFY_VERSION "dev"
#endif
inline constexpr const char* kVersion = PURIFY_VERSION;

enum class ExperimentKind { Mech, Simulate, Verify, Classify, Fragility, Sweep };

std::string_view experiment_kind_name(ExperimentKind k);
ExperimentKind parse_experiment_kind(std::string_view name);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Mech;
  std::string name;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  std::string out;  // output directory; empty means none
  Json body;        // the whole document, seed and jobs resolved

  // Checks the schema id, kind, name and seed. Kind-specific fields are
  // validated by run() before any computation.
  static ExperimentConfig from_json(const Json& j);
  void set_seed(std::uint64_t s);
  void set_jobs(unsigned j);
};

ExperimentConfig load_config(const std::filesystem::path& p);

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct CsvTable {
  std::string file;
  std::string text;
};

struct ReportBundle {
  Json report;  // schema, version, name, kind, seed, config, status, checks, payload, timing
  std::string summary;
  std::vector<CsvTable> tables;
  std::vector<Check> checks;

  bool passed() const;
};

// Raises ConfigError for anything wrong with the config, before computing.
ReportBundle run(const ExperimentConfig& cfg);

// Writes report.json, summary.txt and the CSV tables. Each file goes to a
// temporary name first and is renamed into place.
void write_bundle(const ReportBundle& b, const std::filesystem::path& dir);

// The bundle does not come from this build.
class IncompatibleBundle : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

struct ReplayResult {
  bool match = false;
  std::string first_divergence;  // JSON pointer of the first differing value
  std::string detail;
  ReportBundle rerun;
};

// Reruns the recorded config (or `cfg` when given) and compares status,
// checks and payload bit for bit.
ReplayResult replay(const Json& recorded, const std::optional<ExperimentConfig>& cfg = std::nullopt);

// Empty when equal. Doubles compare by bit pattern.
std::optional<std::string> first_divergence(const Json& a, const Json& b,
                                            const std::string& path = "");

}  // namespace purify
