#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "chmix/ch_solver.hpp"
#include "chmix/spectral.hpp"

namespace chmix {

inline constexpr const char* kTimeseriesHeader =
    "t,l2_var,h1,hm1,fe_chem,fe_int,fe_total,mean,max_abs_c";

/// 17 significant digits, shortest form that round-trips.
std::string format_double(double v);

void write_timeseries(const std::vector<TimeSeriesRecord>& records,
                      const std::filesystem::path& path);
std::vector<TimeSeriesRecord> read_timeseries(const std::filesystem::path& path);

/// Generic numeric CSV with a header row.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

// Snapshot: "CHSN", u16 version = 1, u16 dim, u32 n, n^dim little-endian
// doubles (x fastest), f64 time footer.

inline constexpr std::uint16_t kSnapshotVersion = 1;

struct SnapshotData {
  int dim = 2;
  int n = 0;
  double t = 0.0;
  std::vector<double> values;
};

void write_snapshot(const SpectralField& field, double t, const std::filesystem::path& path);
SnapshotData read_snapshot(const std::filesystem::path& path);

// Checkpoint: "CHCK", u16 version, u16 dim, u32 n, f64 t, u64 mode count,
// (re, im) pairs of the stored half spectrum, u64 FNV-1a checksum of
// everything before it. Restores are bit-identical.

inline constexpr std::uint16_t kCheckpointVersion = 1;

/// Refuses non-finite states with NumericError.
void write_checkpoint(const CHState& state, const std::filesystem::path& path);
CHState read_checkpoint(const std::filesystem::path& path);

/// Ordered key = value text, written atomically (temporary file + rename).
class Manifest {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);
  void set(const std::string& key, bool value);
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  const std::string* find(const std::string& key) const;
  std::string text() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Writes text to path through a temporary sibling and a rename.
void write_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace chmix
