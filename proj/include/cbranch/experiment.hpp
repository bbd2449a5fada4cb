#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cbranch/colored_branching.hpp"
#include "cbranch/galton_watson.hpp"
#include "cbranch/measures.hpp"

namespace cbranch {

inline constexpr const char* kArtifactVersion = "1.0.0";

enum class ExperimentKind { kRate, kLdp, kMcMillan, kDimension, kBlock, kGw };

std::string to_string(ExperimentKind kind);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kRate;
  std::uint64_t seed = 0;
  std::optional<OffspringCountLaw> offspring;
  std::optional<ColorStructureLaw> law;
  std::optional<MeasureVec> nu;
  std::optional<MeasureVec> mu;
  std::optional<MeasureVec> theta;
  /// Covering filter for dimension runs: TV ball around filter_nu.
  std::optional<MeasureVec> filter_nu;
  double filter_radius = 0.1;
  std::vector<double> radii;
  std::size_t depth = 40;
  std::size_t trials = 100;
  double eps = 0.1;
  // block runs
  std::size_t order = 8;
  std::size_t levels = 1;
  double half_width = 0.125;
  double vertex_radius = 0.125;
  std::size_t blocks = 400;
  std::size_t steer_trials = 10;
  bool order_search = false;
  /// The parsed document with command-line overrides applied.
  nlohmann::json echo;
};

struct ValidationResult {
  std::optional<ExperimentConfig> config;
  std::vector<std::string> violations;
  bool ok() const { return config.has_value(); }
};

/// Parses and checks a JSON config. Every problem found is listed; malformed
/// text yields a single parse error with line and column.
ValidationResult validate_config(std::string_view raw);

/// FNV-1a 64 of the compact dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& echo);

/// Applies the seed and trial overrides to both the typed fields and the echo.
void apply_overrides(ExperimentConfig& config, std::optional<std::uint64_t> seed,
                     std::optional<std::size_t> trials);

/// Runs the experiment and writes its CSV files, summary.json and
/// metadata.json into `out`. `threads` only affects wall time. Throws
/// NumericGuard when a guard trips and DomainError on bad parameters.
nlohmann::json run_experiment(const ExperimentConfig& config, const std::filesystem::path& out,
                              std::size_t threads = 1);

/// 12 significant digits; inf and nan spelled out.
std::string format_number(double x);

// Command entry points. Return the process exit code: 0 success,
// 1 configuration error, 2 numeric guard.
int command_run(const std::filesystem::path& config_path, std::optional<std::uint64_t> seed,
                const std::filesystem::path& out, std::optional<std::size_t> trials, std::size_t threads,
                std::ostream& log, std::ostream& err);
int command_validate(const std::filesystem::path& config_path, std::ostream& log, std::ostream& err);
int command_report(const std::filesystem::path& dir, std::ostream& log, std::ostream& err);

}  // namespace cbranch
