#pragma once

#include <filesystem>
#include <string>

#include "chmix/config.hpp"
#include "chmix/io.hpp"

namespace chmix {

inline constexpr const char* kVersion = "0.1.0";

struct RunResult {
  Manifest manifest;    ///< also written to <out>/manifest.txt
  std::string summary;  ///< human-readable table for the CLI
  std::filesystem::path out_dir;
};

/// Runs the configured experiment and writes its artifacts under cfg.out_dir:
///   simulate    timeseries.csv, snapshots/, checkpoints/
///   dtime       norm_curve.csv
///   mixrate     rate.csv, rate_raw.csv
///   thresholds  (manifest only)
///   sweep       one subdirectory per child, sweep.csv
///   calibrate   calibration.csv
/// plus manifest.txt. A failing run leaves manifest.txt with status = failed
/// and a FAILED marker holding the error chain, then rethrows.
RunResult run_experiment(const RunConfig& cfg);

/// Two aligned columns.
std::string format_table(const std::vector<std::pair<std::string, std::string>>& rows);

}  // namespace chmix
