#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chmix/ch_solver.hpp"
#include "chmix/errors.hpp"
#include "chmix/linear_solver.hpp"
#include "chmix/mixing_rates.hpp"
#include "chmix/thresholds.hpp"

namespace chmix {

enum class ExperimentKind { simulate, dtime, mixrate, thresholds, sweep, calibrate };

const char* to_string(ExperimentKind kind);
std::optional<ExperimentKind> parse_kind(const std::string& text);

/// Every problem found in a config text; what() lists them one per line.
class ConfigErrors : public ConfigError {
 public:
  explicit ConfigErrors(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  std::vector<std::string> issues_;
};

struct RawEntry {
  std::string section;
  std::string key;
  std::string value;
  int line = 0;  ///< 0 for entries set programmatically
};

/// The config text as written: [section] headers and key = value lines.
/// '#' starts a comment.
struct RawConfig {
  std::vector<std::string> sections;  ///< headers in order of appearance
  std::vector<RawEntry> entries;

  /// Parses syntax only; throws ConfigErrors for malformed lines, unknown
  /// sections and duplicate keys.
  static RawConfig parse(const std::string& text);

  const RawEntry* find(const std::string& section, const std::string& key) const;
  /// Replaces or appends an entry (line 0) and adds the section if missing.
  void set(const std::string& section, const std::string& key, const std::string& value);
  bool has_section(const std::string& section) const;
  std::string text() const;
};

struct InitSpec {
  double noise_amplitude = 0.1;  ///< uniform noise in [-a, a]
  double cbar = 0.0;
  std::string restore;  ///< checkpoint path; replaces the noise when set
};

struct DtimeSpec {
  LinParams params;
  DissipationTimeOptions options;
  std::vector<double> s_samples;  ///< empty: default_s_samples
};

struct MixrateSpec {
  RateKind kind = RateKind::strong;
  double horizon = 2.0;
  RateOptions options;
  double gamma = 0.01;  ///< diffusivity used for t*
  TStarConstants constants;
};

struct ThresholdSpec {
  ThresholdInputs inputs;
  bool grad_u_sup_given = false;
  std::optional<double> tau2;     ///< estimated from [linear] when absent
  std::optional<double> c2_norm;  ///< measured from [flow] when absent
  double C_dim = 1.0;
};

struct SweepSpec {
  std::string parameter;  ///< "section.key"
  std::vector<std::string> values;
  ExperimentKind child_kind = ExperimentKind::simulate;
};

enum class CalibrationTarget { C_beta_mu, C_dim, C_cal, C_d, C1 };
const char* to_string(CalibrationTarget target);

struct CalibrateSpec {
  CalibrationTarget target = CalibrationTarget::C_cal;
  std::vector<double> amplitudes{0.5, 1.0, 2.0};
  double horizon = 0.5;  ///< comparison window for C_d
};

struct RunConfig {
  ExperimentKind kind = ExperimentKind::simulate;
  std::filesystem::path out_dir = "chmix_out";
  std::optional<std::uint64_t> seed;
  int threads = 1;

  CHParams ch;  ///< carries grid, flow, snapshot and checkpoint times
  InitSpec init;
  DtimeSpec dtime;
  MixrateSpec mixrate;
  ThresholdSpec thresholds;
  SweepSpec sweep;
  CalibrateSpec calibrate;

  RawConfig raw;  ///< source entries, kept for sweep expansion and overrides
};

/// Parses and validates; throws ConfigErrors listing every problem with its
/// line number.
RunConfig parse_config(const std::string& text);
RunConfig parse_config_file(const std::filesystem::path& path);
/// Validates an already tokenized config.
RunConfig build_config(const RawConfig& raw);

/// Effective settings (defaults filled) relevant to the config's kind, as
/// "section.key" = value pairs.
std::vector<std::pair<std::string, std::string>> config_echo(const RunConfig& cfg);

struct SweepChild {
  std::string label;  ///< e.g. "00_flow.amplitude_0.5"
  RunConfig config;
};

/// One child per sweep value, with the parameter overridden, kind set to the
/// child kind and output directory <out>/<index>_<parameter>_<value>.
std::vector<SweepChild> expand_sweep(const RunConfig& cfg);

}  // namespace chmix
