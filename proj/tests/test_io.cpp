#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>

#include "chmix/errors.hpp"
#include "chmix/io.hpp"
#include "doctest.h"

using namespace chmix;
namespace fs = std::filesystem;

namespace {
fs::path scratch(const std::string& name) {
  const char* base = std::getenv("CHMIX_TEST_TMP");
  fs::path dir = fs::path(base ? base : fs::temp_directory_path().string()) / "io";
  fs::create_directories(dir);
  return dir / name;
}
}  // namespace

TEST_CASE("format_double round trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345678.9}) CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("timeseries CSV round trip") {
  std::vector<TimeSeriesRecord> recs(3);
  for (int i = 0; i < 3; ++i) {
    recs[i].t = 0.1 * i;
    recs[i].l2_var = 1.0 / (i + 1);
    recs[i].fe_total = -0.2 * i;
  }
  const auto p = scratch("ts.csv");
  write_timeseries(recs, p);
  std::ifstream in(p);
  std::string header;
  std::getline(in, header);
  CHECK(header == kTimeseriesHeader);
  const auto back = read_timeseries(p);
  REQUIRE(back.size() == 3);
  CHECK(back[2].l2_var == recs[2].l2_var);
  CHECK(back[1].t == recs[1].t);
}

TEST_CASE("zero snapshot on 8^2") {
  TorusGrid g(2, 8);
  const auto p = scratch("zero.chsn");
  write_snapshot(SpectralField(g), 0.25, p);
  CHECK(fs::file_size(p) == 4 + 2 + 2 + 4 + 64 * 8 + 8);
  const auto s = read_snapshot(p);
  CHECK(s.dim == 2);
  CHECK(s.n == 8);
  CHECK(s.t == 0.25);
  REQUIRE(s.values.size() == 64);
  for (double v : s.values) CHECK(v == 0.0);
}

TEST_CASE("snapshot values are physical, x fastest") {
  TorusGrid g(2, 8);
  auto f = from_function(g, [](double x, double y, double) { return x + 10 * y; });
  const auto p = scratch("ramp.chsn");
  write_snapshot(f, 1.0, p);
  const auto s = read_snapshot(p);
  const auto phys = to_physical(f);
  for (std::size_t i = 0; i < phys.size(); ++i) CHECK(s.values[i] == phys[i]);
}

TEST_CASE("checkpoint round trip is exact") {
  TorusGrid g(2, 16);
  CHState st{0.75, random_noise_field(g, 3, 0.1, 0.05)};
  const auto p = scratch("a.chk");
  write_checkpoint(st, p);
  const auto back = read_checkpoint(p);
  CHECK(back.t == st.t);
  bool same = true;
  for (std::size_t i = 0; i < g.num_modes(); ++i)
    same = same && back.c.coeffs()[i] == st.c.coeffs()[i];
  CHECK(same);
}

TEST_CASE("damaged checkpoints are rejected") {
  TorusGrid g(2, 16);
  CHState st{0.5, random_noise_field(g, 3, 0.1)};
  const auto p = scratch("b.chk");
  write_checkpoint(st, p);
  const auto size = fs::file_size(p);
  fs::resize_file(p, size - 20);
  CHECK_THROWS_AS(read_checkpoint(p), IoError);

  write_checkpoint(st, p);
  {
    std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(100);
    f.put('\x7f');
  }
  CHECK_THROWS_AS(read_checkpoint(p), IoError);

  write_checkpoint(st, p);
  {
    std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(4);
    f.put('\x09');
  }
  CHECK_THROWS_AS(read_checkpoint(p), IoError);
}

TEST_CASE("non-finite state is not checkpointed") {
  TorusGrid g(2, 8);
  CHState st{0.0, SpectralField(g)};
  st.c.coeffs()[3] = Complex(std::numeric_limits<double>::quiet_NaN(), 0.0);
  CHECK_THROWS_AS(write_checkpoint(st, scratch("nan.chk")), NumericError);
}

TEST_CASE("manifest") {
  Manifest m;
  m.set("a", 1.5);
  m.set("b", std::string("x"));
  m.set("a", 2LL);
  m.set("c", true);
  CHECK(m.entries().size() == 3);
  CHECK(*m.find("a") == "2");
  CHECK(m.find("z") == nullptr);
  const auto p = scratch("sub/manifest.txt");
  m.write(p);
  std::ifstream in(p);
  std::string all((std::istreambuf_iterator<char>(in)), {});
  CHECK(all == m.text());
}
