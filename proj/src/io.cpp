#include "chmix/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "chmix/errors.hpp"

namespace chmix {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "binary formats assume little-endian");

namespace {

class Writer {
 public:
  template <class T>
  void put(T v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.append(p, sizeof(T));
  }
  void raw(const char* p, std::size_t n) { buf_.append(p, n); }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(std::string bytes, std::string path) : buf_(std::move(bytes)), path_(std::move(path)) {}
  template <class T>
  T get(const char* what) {
    if (pos_ + sizeof(T) > buf_.size()) fail(std::string("truncated while reading ") + what);
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::size_t pos() const { return pos_; }
  std::size_t size() const { return buf_.size(); }
  const std::string& bytes() const { return buf_; }
  [[noreturn]] void fail(const std::string& msg) const {
    throw IoError(path_ + ": " + msg + " at byte offset " + std::to_string(pos_));
  }

 private:
  std::string buf_;
  std::string path_;
  std::size_t pos_ = 0;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) throw IoError("read failed for " + path.string());
  return os.str();
}

void spit(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::uint64_t fnv1a(const char* p, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(p[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_double(row[i]);
    }
    out += '\n';
  }
  write_atomic(path, out);
}

void write_timeseries(const std::vector<TimeSeriesRecord>& records, const fs::path& path) {
  std::vector<std::vector<double>> rows;
  rows.reserve(records.size());
  for (const auto& r : records)
    rows.push_back({r.t, r.l2_var, r.h1, r.hm1, r.fe_chem, r.fe_int, r.fe_total, r.mean,
                    r.max_abs_c});
  std::vector<std::string> header;
  std::stringstream hs(kTimeseriesHeader);
  for (std::string col; std::getline(hs, col, ',');) header.push_back(col);
  write_csv(path, header, rows);
}

std::vector<TimeSeriesRecord> read_timeseries(const fs::path& path) {
  std::istringstream in(slurp(path));
  std::string line;
  if (!std::getline(in, line) || line != kTimeseriesHeader)
    throw IoError(path.string() + ": missing or unexpected timeseries header");
  std::vector<TimeSeriesRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> v;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) {
      char* end = nullptr;
      const double d = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0')
        throw IoError(path.string() + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      v.push_back(d);
    }
    if (v.size() != 9)
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected 9 columns");
    out.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]});
  }
  return out;
}

void write_snapshot(const SpectralField& field, double t, const fs::path& path) {
  const auto values = to_physical(field);
  Writer w;
  w.raw("CHSN", 4);
  w.put<std::uint16_t>(kSnapshotVersion);
  w.put<std::uint16_t>(static_cast<std::uint16_t>(field.grid().dim()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(field.grid().n()));
  for (double v : values) w.put<double>(v);
  w.put<double>(t);
  write_atomic(path, w.bytes());
}

SnapshotData read_snapshot(const fs::path& path) {
  Reader r(slurp(path), path.string());
  char magic[4];
  for (char& c : magic) c = r.get<char>("magic");
  if (std::memcmp(magic, "CHSN", 4) != 0) r.fail("bad snapshot magic");
  const auto version = r.get<std::uint16_t>("version");
  if (version != kSnapshotVersion)
    r.fail("unsupported snapshot version " + std::to_string(version));
  SnapshotData s;
  s.dim = r.get<std::uint16_t>("dim");
  s.n = static_cast<int>(r.get<std::uint32_t>("n"));
  if (s.dim != 2 && s.dim != 3) r.fail("bad dimension " + std::to_string(s.dim));
  if (s.n < 1 || s.n > (1 << 14)) r.fail("bad grid size " + std::to_string(s.n));
  std::size_t count = 1;
  for (int i = 0; i < s.dim; ++i) count *= static_cast<std::size_t>(s.n);
  if (r.size() - r.pos() != (count + 1) * sizeof(double))
    r.fail("payload size does not match header");
  s.values.resize(count);
  for (auto& v : s.values) v = r.get<double>("values");
  s.t = r.get<double>("time footer");
  return s;
}

void write_checkpoint(const CHState& state, const fs::path& path) {
  if (!state.c.all_finite() || !std::isfinite(state.t))
    throw NumericError("refusing to checkpoint a non-finite state");
  const auto& g = state.c.grid();
  Writer w;
  w.raw("CHCK", 4);
  w.put<std::uint16_t>(kCheckpointVersion);
  w.put<std::uint16_t>(static_cast<std::uint16_t>(g.dim()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(g.n()));
  w.put<double>(state.t);
  w.put<std::uint64_t>(g.num_modes());
  for (const Complex& c : state.c.coeffs()) {
    w.put<double>(c.real());
    w.put<double>(c.imag());
  }
  const auto sum = fnv1a(w.bytes().data(), w.bytes().size());
  w.put<std::uint64_t>(sum);
  write_atomic(path, w.bytes());
}

CHState read_checkpoint(const fs::path& path) {
  Reader r(slurp(path), path.string());
  char magic[4];
  for (char& c : magic) c = r.get<char>("magic");
  if (std::memcmp(magic, "CHCK", 4) != 0) r.fail("bad checkpoint magic");
  const auto version = r.get<std::uint16_t>("version");
  if (version != kCheckpointVersion)
    r.fail("checkpoint version mismatch: file has " + std::to_string(version) + ", expected " +
           std::to_string(kCheckpointVersion));
  const int dim = r.get<std::uint16_t>("dim");
  const int n = static_cast<int>(r.get<std::uint32_t>("n"));
  const double t = r.get<double>("time");
  const auto modes = r.get<std::uint64_t>("mode count");
  TorusGrid grid = [&] {
    try {
      return TorusGrid(dim, n);
    } catch (const Error& e) {
      r.fail(std::string("corrupt header: ") + e.what());
    }
  }();
  if (modes != grid.num_modes()) r.fail("corrupt header: mode count does not match grid");
  if (r.size() - r.pos() != modes * 2 * sizeof(double) + sizeof(std::uint64_t))
    r.fail("corrupt or truncated checkpoint payload");
  std::vector<Complex> coeffs(modes);
  for (auto& c : coeffs) {
    const double re = r.get<double>("coefficients");
    const double im = r.get<double>("coefficients");
    c = Complex(re, im);
  }
  const std::size_t body = r.pos();
  const auto stored = r.get<std::uint64_t>("checksum");
  if (stored != fnv1a(r.bytes().data(), body)) r.fail("checkpoint checksum mismatch");
  CHState s{t, SpectralField(grid, std::move(coeffs))};
  if (!s.c.all_finite() || !std::isfinite(t)) r.fail("checkpoint holds non-finite values");
  return s;
}

void Manifest::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries_)
    if (k == key) {
      v = value;
      return;
    }
  entries_.emplace_back(key, value);
}
void Manifest::set(const std::string& key, double value) { set(key, format_double(value)); }
void Manifest::set(const std::string& key, long long value) { set(key, std::to_string(value)); }
void Manifest::set(const std::string& key, bool value) {
  set(key, std::string(value ? "true" : "false"));
}

const std::string* Manifest::find(const std::string& key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return &v;
  return nullptr;
}

std::string Manifest::text() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    std::string flat = v;
    for (char& c : flat)
      if (c == '\n') c = ' ';
    out += k + " = " + flat + "\n";
  }
  return out;
}

void Manifest::write(const fs::path& path) const { write_atomic(path, text()); }

void write_atomic(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  fs::path tmp = path;
  tmp += ".tmp";
  spit(tmp, text);
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

}  // namespace chmix
