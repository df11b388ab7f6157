#include <algorithm>
#include <string>

#include "chmix/config.hpp"
#include "doctest.h"

using namespace chmix;

namespace {
std::string echo_value(const RunConfig& cfg, const std::string& key) {
  for (const auto& [k, v] : config_echo(cfg))
    if (k == key) return v;
  return "<missing>";
}

bool mentions(const ConfigErrors& e, const std::string& text) {
  return std::any_of(e.issues().begin(), e.issues().end(),
                     [&](const std::string& i) { return i.find(text) != std::string::npos; });
}
}  // namespace

TEST_CASE("minimal simulate config echoes its defaults") {
  const auto cfg = parse_config("[run]\nkind = simulate\n[ch]\n");
  CHECK(cfg.kind == ExperimentKind::simulate);
  CHECK(echo_value(cfg, "ch.gamma") == "0.01");
  CHECK(echo_value(cfg, "grid.n") == "64");
  CHECK(echo_value(cfg, "grid.dim") == "2");
  CHECK(echo_value(cfg, "flow.type") == "zero");
  CHECK(echo_value(cfg, "run.seed") == "0");
  CHECK(echo_value(cfg, "ch.dt_kind") == "cfl");
}

TEST_CASE("negative gamma is reported with its line") {
  try {
    parse_config("[run]\nkind = simulate\n[ch]\ngamma = -1\n");
    FAIL("expected ConfigErrors");
  } catch (const ConfigErrors& e) {
    CHECK(mentions(e, "line 4"));
    CHECK(mentions(e, "gamma"));
  }
}

TEST_CASE("all problems are collected") {
  try {
    parse_config("[run]\nkind = simulate\n[ch]\nbogus = 1\nt_end = x\n[grid]\nn = 12\n");
    FAIL("expected ConfigErrors");
  } catch (const ConfigErrors& e) {
    CHECK(e.issues().size() >= 3);
    CHECK(mentions(e, "line 4"));
    CHECK(mentions(e, "line 5"));
    CHECK(mentions(e, "line 7"));
  }
}

TEST_CASE("syntax errors") {
  CHECK_THROWS_AS(parse_config("[run]\nkind simulate\n"), ConfigErrors);
  CHECK_THROWS_AS(parse_config("[nowhere]\n"), ConfigErrors);
  CHECK_THROWS_AS(parse_config("[run]\nkind = simulate\nkind = dtime\n"), ConfigErrors);
  CHECK_THROWS_AS(parse_config("[ch]\ngamma = 0.1\n"), ConfigErrors);
}

TEST_CASE("comments and whitespace") {
  const auto cfg = parse_config("# header\n[run]  \n kind = dtime # trailing\n[linear]\nalpha=1\n");
  CHECK(cfg.kind == ExperimentKind::dtime);
  CHECK(cfg.dtime.params.alpha == 1);
}

TEST_CASE("flow keys must match the flow type") {
  CHECK_THROWS_AS(parse_config("[run]\nkind = simulate\n[ch]\n[flow]\ntype = zero\namplitude = 1\n"),
                  ConfigErrors);
  const auto cfg = parse_config(
      "[run]\nkind = simulate\n[ch]\n[flow]\ntype = steady_shear\namplitude = 2\ndirection = "
      "vertical\n");
  const auto& s = std::get<SteadyShear>(cfg.ch.flow.variant());
  CHECK(s.amplitude == 2.0);
  CHECK(s.direction == ShearDirection::vertical);
}

TEST_CASE("randomized flows need a seed") {
  const std::string base =
      "[run]\nkind = simulate\n[ch]\n[flow]\ntype = alternating_shear\namplitude = 2\n";
  CHECK_THROWS_AS(parse_config(base), ConfigErrors);
  CHECK_NOTHROW(parse_config(base + "phase_seed = 3\n"));
  const auto cfg = parse_config("[run]\nkind = simulate\nseed = 11\n[ch]\n[flow]\ntype = "
                                "alternating_shear\n");
  CHECK(std::get<AlternatingShear>(cfg.ch.flow.variant()).phase_seed == 11);
}

TEST_CASE("cellular flow is two-dimensional") {
  CHECK_THROWS_AS(parse_config("[run]\nkind = simulate\n[ch]\n[grid]\ndim = 3\nn = 8\n[flow]\ntype "
                               "= cellular\n"),
                  ConfigErrors);
}

TEST_CASE("snapshot times must lie within the run") {
  CHECK_THROWS_AS(
      parse_config("[run]\nkind = simulate\nsnapshot_times = 0.5, 2\n[ch]\nt_end = 1\n"),
      ConfigErrors);
  const auto cfg =
      parse_config("[run]\nkind = simulate\nsnapshot_times = 0.5, 1\n[ch]\nt_end = 1\n");
  CHECK(cfg.ch.snapshot_times.size() == 2);
}

TEST_CASE("sweep expands into children") {
  const auto cfg = parse_config(
      "[run]\nkind = sweep\nout = sw\n[sweep]\nparameter = flow.amplitude\nvalues = 0.5, 1, 2\nkind "
      "= simulate\n[ch]\nt_end = 0.1\n[flow]\ntype = steady_shear\n");
  const auto kids = expand_sweep(cfg);
  REQUIRE(kids.size() == 3);
  CHECK(kids[0].label == "00_flow.amplitude_0.5");
  CHECK(kids[2].label == "02_flow.amplitude_2");
  CHECK(kids[1].config.out_dir == std::filesystem::path("sw") / "01_flow.amplitude_1");
  CHECK(kids[1].config.kind == ExperimentKind::simulate);
  CHECK(std::get<SteadyShear>(kids[2].config.ch.flow.variant()).amplitude == 2.0);
}

TEST_CASE("sweep values are validated up front") {
  CHECK_THROWS_AS(parse_config("[run]\nkind = sweep\n[sweep]\nparameter = ch.gamma\nvalues = 0.1, "
                               "-1\nkind = simulate\n[ch]\n"),
                  ConfigErrors);
  CHECK_THROWS_AS(parse_config("[run]\nkind = sweep\n[sweep]\nparameter = ch.nothing\nvalues = "
                               "1\nkind = simulate\n[ch]\n"),
                  ConfigErrors);
}

TEST_CASE("overrides through the raw table") {
  auto cfg = parse_config("[run]\nkind = simulate\n[ch]\ngamma = 0.02\n");
  auto raw = cfg.raw;
  raw.set("ch", "gamma", "0.03");
  raw.set("grid", "n", "32");
  const auto again = build_config(raw);
  CHECK(again.ch.gamma == 0.03);
  CHECK(again.ch.grid.n() == 32);
}
