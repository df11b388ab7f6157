#include "chmix/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <type_traits>
#include <variant>

#include "chmix/io.hpp"

namespace chmix {

namespace {

const std::vector<std::string> kSections = {"run",     "grid",       "ch",    "flow",     "linear",
                                            "mixrate", "thresholds", "sweep", "calibrate"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// thrown by value parsers and range checks; the caller adds the location
struct ValueError {
  std::string message;
};

double to_double(const std::string& v) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || !std::isfinite(d))
    throw ValueError{"expected a finite number, got '" + v + "'"};
  return d;
}

long long to_int(const std::string& v) {
  char* end = nullptr;
  errno = 0;
  const long long i = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0' || errno == ERANGE)
    throw ValueError{"expected an integer, got '" + v + "'"};
  return i;
}

std::uint64_t to_u64(const std::string& v) {
  char* end = nullptr;
  errno = 0;
  const unsigned long long u = std::strtoull(v.c_str(), &end, 0);
  if (v.empty() || v[0] == '-' || *end != '\0' || errno == ERANGE)
    throw ValueError{"expected a non-negative 64-bit integer, got '" + v + "'"};
  return u;
}

std::vector<std::string> to_list(const std::string& v) {
  std::string body = trim(v);
  if (!body.empty() && body.front() == '[') {
    if (body.back() != ']') throw ValueError{"unterminated list '" + v + "'"};
    body = body.substr(1, body.size() - 2);
  }
  std::vector<std::string> out;
  if (trim(body).empty()) return out;
  std::stringstream ss(body);
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    if (item.empty()) throw ValueError{"empty list item in '" + v + "'"};
    out.push_back(item);
  }
  return out;
}

std::vector<double> to_double_list(const std::string& v) {
  std::vector<double> out;
  for (const auto& item : to_list(v)) out.push_back(to_double(item));
  return out;
}

double positive(const std::string& key, double x) {
  if (!(x > 0.0)) throw ValueError{key + " must be positive"};
  return x;
}

double non_negative(const std::string& key, double x) {
  if (!(x >= 0.0)) throw ValueError{key + " must be non-negative"};
  return x;
}

int int_at_least(const std::string& key, long long x, long long lo) {
  if (x < lo || x > (1LL << 30))
    throw ValueError{key + " must be an integer >= " + std::to_string(lo)};
  return static_cast<int>(x);
}

std::vector<double> times_list(const std::string& key, const std::string& v) {
  auto out = to_double_list(v);
  for (double t : out)
    if (t < 0.0) throw ValueError{key + " entries must be non-negative"};
  std::sort(out.begin(), out.end());
  return out;
}

StepKind to_step_kind(const std::string& v) {
  if (v == "fixed") return StepKind::fixed;
  if (v == "cfl") return StepKind::cfl;
  throw ValueError{"dt_kind must be 'fixed' or 'cfl', got '" + v + "'"};
}

struct StepDraft {
  std::optional<StepKind> kind;
  std::optional<double> dt, c_adv, dt_max;

  TimeStepPolicy apply(TimeStepPolicy p) const {
    if (kind) p.kind = *kind;
    if (dt) p.dt = *dt;
    if (c_adv) p.c_adv = *c_adv;
    if (dt_max) p.dt_max = *dt_max;
    return p;
  }
};

struct FlowDraft {
  std::string type = "zero";
  std::map<std::string, int> given;  // key -> line
  double amplitude = 1.0;
  ShearDirection direction = ShearDirection::horizontal;
  int wavenumber = 1;
  double phase = 0.0;
  double switch_period = 1.0;
  std::optional<std::uint64_t> phase_seed;
  int cells = 1;
};

struct Draft {
  RunConfig cfg;
  FlowDraft flow;
  StepDraft ch_dt, lin_dt;
  int dim = 2;
  int n = 64;
};

using Apply = std::function<void(Draft&, const std::string& value)>;

struct KeySpec {
  const char* section;
  const char* key;
  Apply apply;
};

#define KEY(sec, name, ...) \
  KeySpec { sec, name, [](Draft & d, const std::string& v) __VA_ARGS__ }

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = {
      KEY("run", "kind",
          {
            const auto k = parse_kind(v);
            if (!k) throw ValueError{"unknown experiment kind '" + v + "'"};
            d.cfg.kind = *k;
          }),
      KEY("run", "out",
          {
            if (v.empty()) throw ValueError{"out must not be empty"};
            d.cfg.out_dir = v;
          }),
      KEY("run", "seed", { d.cfg.seed = to_u64(v); }),
      KEY("run", "threads", { d.cfg.threads = int_at_least("threads", to_int(v), 1); }),
      KEY("run", "snapshot_times", { d.cfg.ch.snapshot_times = times_list("snapshot_times", v); }),
      KEY("run", "checkpoint_times",
          { d.cfg.ch.checkpoint_times = times_list("checkpoint_times", v); }),

      KEY("grid", "dim",
          {
            const auto i = to_int(v);
            if (i != 2 && i != 3) throw ValueError{"dim must be 2 or 3"};
            d.dim = static_cast<int>(i);
          }),
      KEY("grid", "n",
          {
            const int i = int_at_least("n", to_int(v), 8);
            if (i & (i - 1)) throw ValueError{"n must be a power of two >= 8"};
            d.n = i;
          }),

      KEY("ch", "gamma", { d.cfg.ch.gamma = positive("gamma", to_double(v)); }),
      KEY("ch", "mobility", { d.cfg.ch.mobility = positive("mobility", to_double(v)); }),
      KEY("ch", "t_end", { d.cfg.ch.t_end = positive("t_end", to_double(v)); }),
      KEY("ch", "sample_interval",
          { d.cfg.ch.sample_interval = positive("sample_interval", to_double(v)); }),
      KEY("ch", "dt_kind", { d.ch_dt.kind = to_step_kind(v); }),
      KEY("ch", "dt", { d.ch_dt.dt = positive("dt", to_double(v)); }),
      KEY("ch", "c_adv", { d.ch_dt.c_adv = positive("c_adv", to_double(v)); }),
      KEY("ch", "dt_max", { d.ch_dt.dt_max = positive("dt_max", to_double(v)); }),
      KEY("ch", "noise_amplitude",
          { d.cfg.init.noise_amplitude = non_negative("noise_amplitude", to_double(v)); }),
      KEY("ch", "cbar", { d.cfg.init.cbar = to_double(v); }),
      KEY("ch", "restore",
          {
            if (v.empty()) throw ValueError{"restore must name a checkpoint file"};
            d.cfg.init.restore = v;
          }),

      KEY("flow", "type",
          {
            if (v != "zero" && v != "steady_shear" && v != "alternating_shear" && v != "cellular")
              throw ValueError{"unknown flow type '" + v +
                               "' (zero, steady_shear, alternating_shear, cellular)"};
            d.flow.type = v;
          }),
      KEY("flow", "amplitude", { d.flow.amplitude = non_negative("amplitude", to_double(v)); }),
      KEY("flow", "direction",
          {
            if (v == "horizontal")
              d.flow.direction = ShearDirection::horizontal;
            else if (v == "vertical")
              d.flow.direction = ShearDirection::vertical;
            else
              throw ValueError{"direction must be 'horizontal' or 'vertical'"};
          }),
      KEY("flow", "wavenumber",
          { d.flow.wavenumber = int_at_least("wavenumber", to_int(v), 1); }),
      KEY("flow", "phase", { d.flow.phase = to_double(v); }),
      KEY("flow", "switch_period",
          { d.flow.switch_period = positive("switch_period", to_double(v)); }),
      KEY("flow", "phase_seed", { d.flow.phase_seed = to_u64(v); }),
      KEY("flow", "cells", { d.flow.cells = int_at_least("cells", to_int(v), 1); }),

      KEY("linear", "alpha",
          {
            const auto a = to_int(v);
            if (a != 1 && a != 2) throw ValueError{"alpha must be 1 or 2"};
            d.cfg.dtime.params.alpha = static_cast<int>(a);
          }),
      KEY("linear", "gamma", { d.cfg.dtime.params.gamma = positive("gamma", to_double(v)); }),
      KEY("linear", "dt_kind", { d.lin_dt.kind = to_step_kind(v); }),
      KEY("linear", "dt", { d.lin_dt.dt = positive("dt", to_double(v)); }),
      KEY("linear", "c_adv", { d.lin_dt.c_adv = positive("c_adv", to_double(v)); }),
      KEY("linear", "dt_max", { d.lin_dt.dt_max = positive("dt_max", to_double(v)); }),
      KEY("linear", "tol", { d.cfg.dtime.options.tol = positive("tol", to_double(v)); }),
      KEY("linear", "norm_tol",
          { d.cfg.dtime.options.norm_tol = positive("norm_tol", to_double(v)); }),
      KEY("linear", "restarts",
          { d.cfg.dtime.options.restarts = int_at_least("restarts", to_int(v), 2); }),
      KEY("linear", "s_samples", { d.cfg.dtime.s_samples = times_list("s_samples", v); }),

      KEY("mixrate", "kind",
          {
            if (v == "weak")
              d.cfg.mixrate.kind = RateKind::weak;
            else if (v == "strong")
              d.cfg.mixrate.kind = RateKind::strong;
            else
              throw ValueError{"kind must be 'weak' or 'strong'"};
          }),
      KEY("mixrate", "horizon", { d.cfg.mixrate.horizon = positive("horizon", to_double(v)); }),
      KEY("mixrate", "time_points",
          { d.cfg.mixrate.options.time_points = int_at_least("time_points", to_int(v), 8); }),
      KEY("mixrate", "test_modes",
          { d.cfg.mixrate.options.test_modes = int_at_least("test_modes", to_int(v), 1); }),
      KEY("mixrate", "s_samples",
          {
            auto s = times_list("s_samples", v);
            if (s.empty()) throw ValueError{"s_samples must not be empty"};
            d.cfg.mixrate.options.s_samples = std::move(s);
          }),
      KEY("mixrate", "conservation_budget",
          {
            d.cfg.mixrate.options.conservation_budget =
                positive("conservation_budget", to_double(v));
          }),
      KEY("mixrate", "gamma", { d.cfg.mixrate.gamma = positive("gamma", to_double(v)); }),
      KEY("mixrate", "C1", { d.cfg.mixrate.constants.C1 = positive("C1", to_double(v)); }),
      KEY("mixrate", "C2", { d.cfg.mixrate.constants.C2 = positive("C2", to_double(v)); }),

      KEY("thresholds", "B", { d.cfg.thresholds.inputs.B = non_negative("B", to_double(v)); }),
      KEY("thresholds", "cbar", { d.cfg.thresholds.inputs.cbar = to_double(v); }),
      KEY("thresholds", "beta",
          {
            const double b = to_double(v);
            if (!(b > 1.0 && b <= 2.0)) throw ValueError{"beta must lie in (1, 2]"};
            d.cfg.thresholds.inputs.beta = b;
          }),
      KEY("thresholds", "mu", { d.cfg.thresholds.inputs.mu = positive("mu", to_double(v)); }),
      KEY("thresholds", "gamma",
          { d.cfg.thresholds.inputs.gamma = positive("gamma", to_double(v)); }),
      KEY("thresholds", "C_beta_mu",
          { d.cfg.thresholds.inputs.C_beta_mu = positive("C_beta_mu", to_double(v)); }),
      KEY("thresholds", "grad_u_sup",
          {
            d.cfg.thresholds.inputs.grad_u_sup = non_negative("grad_u_sup", to_double(v));
            d.cfg.thresholds.grad_u_sup_given = true;
          }),
      KEY("thresholds", "tau2", { d.cfg.thresholds.tau2 = non_negative("tau2", to_double(v)); }),
      KEY("thresholds", "c2_norm",
          { d.cfg.thresholds.c2_norm = non_negative("c2_norm", to_double(v)); }),
      KEY("thresholds", "C_dim", { d.cfg.thresholds.C_dim = positive("C_dim", to_double(v)); }),

      KEY("sweep", "parameter", { d.cfg.sweep.parameter = v; }),
      KEY("sweep", "values",
          {
            auto vals = to_list(v);
            if (vals.empty()) throw ValueError{"values must not be empty"};
            d.cfg.sweep.values = std::move(vals);
          }),
      KEY("sweep", "kind",
          {
            const auto k = parse_kind(v);
            if (!k || *k == ExperimentKind::sweep)
              throw ValueError{"sweep kind must be simulate, dtime, mixrate, thresholds or "
                               "calibrate"};
            d.cfg.sweep.child_kind = *k;
          }),

      KEY("calibrate", "target",
          {
            static const std::map<std::string, CalibrationTarget> names = {
                {"C_beta_mu", CalibrationTarget::C_beta_mu}, {"C_dim", CalibrationTarget::C_dim},
                {"C_cal", CalibrationTarget::C_cal},         {"C_d", CalibrationTarget::C_d},
                {"C1", CalibrationTarget::C1}};
            const auto it = names.find(v);
            if (it == names.end())
              throw ValueError{"target must be one of C_beta_mu, C_dim, C_cal, C_d, C1"};
            d.cfg.calibrate.target = it->second;
          }),
      KEY("calibrate", "amplitudes",
          {
            auto a = to_double_list(v);
            if (a.empty()) throw ValueError{"amplitudes must not be empty"};
            for (double x : a) positive("amplitudes entries", x);
            d.cfg.calibrate.amplitudes = std::move(a);
          }),
      KEY("calibrate", "horizon",
          { d.cfg.calibrate.horizon = positive("horizon", to_double(v)); }),
  };
  return table;
}

#undef KEY

const KeySpec* lookup(const std::string& section, const std::string& key) {
  for (const auto& k : key_table())
    if (section == k.section && key == k.key) return &k;
  return nullptr;
}

std::string where(const RawEntry& e) {
  return e.line > 0 ? "line " + std::to_string(e.line) : e.section + "." + e.key;
}

const std::map<std::string, std::vector<std::string>>& flow_keys() {
  static const std::map<std::string, std::vector<std::string>> keys = {
      {"zero", {}},
      {"steady_shear", {"amplitude", "direction", "wavenumber", "phase"}},
      {"alternating_shear", {"amplitude", "switch_period", "phase_seed"}},
      {"cellular", {"amplitude", "cells"}},
  };
  return keys;
}

const char* section_for(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::simulate: return "ch";
    case ExperimentKind::dtime: return "linear";
    case ExperimentKind::mixrate: return "mixrate";
    case ExperimentKind::thresholds: return "thresholds";
    case ExperimentKind::sweep: return "sweep";
    case ExperimentKind::calibrate: return "calibrate";
  }
  return "run";
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' ||
                           c == '_' || c == '+')
                              ? c
                              : '_';
  return out;
}

}  // namespace

const char* to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::simulate: return "simulate";
    case ExperimentKind::dtime: return "dtime";
    case ExperimentKind::mixrate: return "mixrate";
    case ExperimentKind::thresholds: return "thresholds";
    case ExperimentKind::sweep: return "sweep";
    case ExperimentKind::calibrate: return "calibrate";
  }
  return "?";
}

std::optional<ExperimentKind> parse_kind(const std::string& text) {
  for (auto k : {ExperimentKind::simulate, ExperimentKind::dtime, ExperimentKind::mixrate,
                 ExperimentKind::thresholds, ExperimentKind::sweep, ExperimentKind::calibrate})
    if (text == to_string(k)) return k;
  return std::nullopt;
}

const char* to_string(CalibrationTarget target) {
  switch (target) {
    case CalibrationTarget::C_beta_mu: return "C_beta_mu";
    case CalibrationTarget::C_dim: return "C_dim";
    case CalibrationTarget::C_cal: return "C_cal";
    case CalibrationTarget::C_d: return "C_d";
    case CalibrationTarget::C1: return "C1";
  }
  return "?";
}

static std::string join_issues(const std::vector<std::string>& issues) {
  std::string out;
  for (const auto& i : issues) out += (out.empty() ? "" : "\n") + i;
  return out;
}

ConfigErrors::ConfigErrors(std::vector<std::string> issues)
    : ConfigError(join_issues(issues)), issues_(std::move(issues)) {}

RawConfig RawConfig::parse(const std::string& text) {
  RawConfig raw;
  std::vector<std::string> errors;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string at = "line " + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') {
        errors.push_back(at + "malformed section header '" + line + "'");
        continue;
      }
      section = trim(line.substr(1, line.size() - 2));
      if (std::find(kSections.begin(), kSections.end(), section) == kSections.end()) {
        errors.push_back(at + "unknown section [" + section + "]");
      } else if (raw.has_section(section)) {
        errors.push_back(at + "duplicate section [" + section + "]");
      } else {
        raw.sections.push_back(section);
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back(at + "expected 'key = value', got '" + line + "'");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) {
      errors.push_back(at + "key '" + key + "' appears before any [section]");
      continue;
    }
    if (key.empty()) {
      errors.push_back(at + "missing key name");
      continue;
    }
    if (const RawEntry* prev = raw.find(section, key)) {
      errors.push_back(at + "duplicate key '" + key + "' (first set on line " +
                       std::to_string(prev->line) + ")");
      continue;
    }
    raw.entries.push_back({section, key, value, lineno});
  }
  if (!errors.empty()) throw ConfigErrors(std::move(errors));
  return raw;
}

const RawEntry* RawConfig::find(const std::string& section, const std::string& key) const {
  for (const auto& e : entries)
    if (e.section == section && e.key == key) return &e;
  return nullptr;
}

bool RawConfig::has_section(const std::string& section) const {
  return std::find(sections.begin(), sections.end(), section) != sections.end();
}

void RawConfig::set(const std::string& section, const std::string& key, const std::string& value) {
  if (!has_section(section)) sections.push_back(section);
  for (auto& e : entries)
    if (e.section == section && e.key == key) {
      e.value = value;
      e.line = 0;
      return;
    }
  entries.push_back({section, key, value, 0});
}

std::string RawConfig::text() const {
  std::string out;
  for (const auto& s : sections) {
    out += "[" + s + "]\n";
    for (const auto& e : entries)
      if (e.section == s) out += e.key + " = " + e.value + "\n";
  }
  return out;
}

RunConfig build_config(const RawConfig& raw) {
  std::vector<std::string> errors;
  Draft d;

  // first pass: which kind and seed, so later checks can depend on them
  for (const auto& e : raw.entries) {
    const KeySpec* spec = lookup(e.section, e.key);
    if (!spec) {
      errors.push_back(where(e) + ": unknown key '" + e.key + "' in [" + e.section + "]");
      continue;
    }
    try {
      spec->apply(d, e.value);
    } catch (const ValueError& v) {
      errors.push_back(where(e) + ": " + v.message);
    }
    if (e.section == "flow" && e.key != "type") d.flow.given[e.key] = e.line;
  }

  RunConfig& cfg = d.cfg;
  cfg.raw = raw;

  if (!raw.has_section("run")) errors.push_back("missing section [run]");
  if (!raw.find("run", "kind")) errors.push_back("missing key 'kind' in [run]");
  const char* needed = section_for(cfg.kind);
  if (raw.find("run", "kind") && !raw.has_section(needed))
    errors.push_back(std::string("missing section [") + needed + "] required by kind " +
                     to_string(cfg.kind));

  // grid
  TorusGrid grid(2, 8);
  try {
    grid = TorusGrid(d.dim, d.n);
  } catch (const Error& e) {
    errors.push_back(std::string("grid: ") + e.what());
  }

  // flow
  FlowSpec flow;
  {
    const auto& allowed = flow_keys().at(d.flow.type);
    for (const auto& [key, line] : d.flow.given)
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
        errors.push_back((line > 0 ? "line " + std::to_string(line) : "flow." + key) + ": key '" +
                         key + "' does not apply to flow type " + d.flow.type);
    if (d.flow.type == "steady_shear") {
      flow = SteadyShear{d.flow.direction, d.flow.wavenumber, d.flow.phase, d.flow.amplitude};
    } else if (d.flow.type == "alternating_shear") {
      std::uint64_t s = 0;
      if (d.flow.phase_seed)
        s = *d.flow.phase_seed;
      else if (cfg.seed)
        s = *cfg.seed;
      else
        errors.push_back(
            "seed is required for the randomized flow alternating_shear (set run.seed or "
            "flow.phase_seed)");
      flow = AlternatingShear{d.flow.amplitude, d.flow.switch_period, s};
    } else if (d.flow.type == "cellular") {
      if (d.dim != 2) errors.push_back("flow type cellular requires dim = 2");
      flow = CellularFlow{d.flow.amplitude, d.flow.cells};
    }
  }

  // simulate
  cfg.ch.grid = grid;
  cfg.ch.flow = flow;
  cfg.ch.seed = cfg.seed.value_or(0);
  cfg.ch.dt_policy = d.ch_dt.apply(default_ch_step_policy(cfg.ch.gamma));
  if (cfg.kind == ExperimentKind::simulate || cfg.kind == ExperimentKind::calibrate) {
    try {
      cfg.ch.dt_policy.validate();
      cfg.ch.validate();
    } catch (const ConfigError& e) {
      errors.push_back(std::string("[ch] ") + e.what());
    }
    for (double t : cfg.ch.snapshot_times)
      if (t > cfg.ch.t_end)
        errors.push_back("snapshot time " + format_double(t) + " exceeds t_end");
  }

  // dtime
  cfg.dtime.params.grid = grid;
  cfg.dtime.params.flow = flow;
  cfg.dtime.params.dt_policy = d.lin_dt.apply(cfg.dtime.params.dt_policy);
  cfg.dtime.options.threads = cfg.threads;
  if (cfg.kind == ExperimentKind::dtime ||
      (cfg.kind == ExperimentKind::thresholds && !cfg.thresholds.tau2)) {
    try {
      cfg.dtime.params.validate();
    } catch (const ConfigError& e) {
      errors.push_back(std::string("[linear] ") + e.what());
    }
  }

  cfg.mixrate.options.threads = cfg.threads;
  cfg.thresholds.inputs.dim = d.dim;

  if (cfg.kind == ExperimentKind::sweep) {
    const auto dot = cfg.sweep.parameter.find('.');
    if (cfg.sweep.parameter.empty()) {
      errors.push_back("[sweep] parameter is required");
    } else if (dot == std::string::npos ||
               !lookup(cfg.sweep.parameter.substr(0, dot), cfg.sweep.parameter.substr(dot + 1))) {
      errors.push_back("[sweep] parameter '" + cfg.sweep.parameter +
                       "' does not name a known section.key");
    } else if (cfg.sweep.parameter.substr(0, dot) == "run" ||
               cfg.sweep.parameter.substr(0, dot) == "sweep") {
      errors.push_back("[sweep] parameter cannot be in [run] or [sweep]");
    }
    if (cfg.sweep.values.empty()) errors.push_back("[sweep] values is required");
    if (errors.empty()) {
      try {
        (void)expand_sweep(cfg);
      } catch (const ConfigErrors& e) {
        for (const auto& i : e.issues()) errors.push_back(i);
      }
    }
  }

  if (!errors.empty()) throw ConfigErrors(std::move(errors));
  return cfg;
}

RunConfig parse_config(const std::string& text) { return build_config(RawConfig::parse(text)); }

RunConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str());
}

std::vector<SweepChild> expand_sweep(const RunConfig& cfg) {
  if (cfg.kind != ExperimentKind::sweep) throw ConfigError("config kind is not sweep");
  const auto dot = cfg.sweep.parameter.find('.');
  const std::string section = cfg.sweep.parameter.substr(0, dot);
  const std::string key = cfg.sweep.parameter.substr(dot + 1);
  std::vector<SweepChild> children;
  std::vector<std::string> errors;
  for (std::size_t i = 0; i < cfg.sweep.values.size(); ++i) {
    const std::string& value = cfg.sweep.values[i];
    char idx[16];
    std::snprintf(idx, sizeof idx, "%02zu", i);
    const std::string label = std::string(idx) + "_" + cfg.sweep.parameter + "_" + sanitize(value);
    RawConfig raw = cfg.raw;
    raw.set(section, key, value);
    raw.set("run", "kind", to_string(cfg.sweep.child_kind));
    raw.set("run", "out", (cfg.out_dir / label).string());
    raw.sections.erase(std::remove(raw.sections.begin(), raw.sections.end(), "sweep"),
                       raw.sections.end());
    raw.entries.erase(std::remove_if(raw.entries.begin(), raw.entries.end(),
                                     [](const RawEntry& e) { return e.section == "sweep"; }),
                      raw.entries.end());
    try {
      children.push_back({label, build_config(raw)});
    } catch (const ConfigErrors& e) {
      for (const auto& issue : e.issues())
        errors.push_back("sweep value '" + value + "': " + issue);
    }
  }
  if (!errors.empty()) throw ConfigErrors(std::move(errors));
  return children;
}

namespace {

std::string list_text(const std::vector<double>& v) {
  std::string out;
  for (double x : v) out += (out.empty() ? "" : ", ") + format_double(x);
  return out;
}

std::string step_text(StepKind k) { return k == StepKind::fixed ? "fixed" : "cfl"; }

void echo_flow(std::vector<std::pair<std::string, std::string>>& out, const FlowSpec& flow) {
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, ZeroFlow>) {
          out.emplace_back("flow.type", "zero");
        } else if constexpr (std::is_same_v<T, SteadyShear>) {
          out.emplace_back("flow.type", "steady_shear");
          out.emplace_back("flow.amplitude", format_double(f.amplitude));
          out.emplace_back("flow.direction", f.direction == ShearDirection::horizontal
                                                 ? "horizontal"
                                                 : "vertical");
          out.emplace_back("flow.wavenumber", std::to_string(f.wavenumber));
          out.emplace_back("flow.phase", format_double(f.phase));
        } else if constexpr (std::is_same_v<T, AlternatingShear>) {
          out.emplace_back("flow.type", "alternating_shear");
          out.emplace_back("flow.amplitude", format_double(f.amplitude));
          out.emplace_back("flow.switch_period", format_double(f.switch_period));
          out.emplace_back("flow.phase_seed", std::to_string(f.phase_seed));
        } else if constexpr (std::is_same_v<T, CellularFlow>) {
          out.emplace_back("flow.type", "cellular");
          out.emplace_back("flow.amplitude", format_double(f.amplitude));
          out.emplace_back("flow.cells", std::to_string(f.cells_per_side));
        } else {
          out.emplace_back("flow.type", flow.describe());
        }
      },
      flow.variant());
}

}  // namespace

std::vector<std::pair<std::string, std::string>> config_echo(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  auto put = [&](const std::string& k, const std::string& v) { out.emplace_back(k, v); };
  auto num = [&](const std::string& k, double v) { put(k, format_double(v)); };

  put("run.kind", to_string(cfg.kind));
  put("run.out", cfg.out_dir.string());
  put("run.seed", std::to_string(cfg.seed.value_or(0)));
  put("run.threads", std::to_string(cfg.threads));
  put("grid.dim", std::to_string(cfg.ch.grid.dim()));
  put("grid.n", std::to_string(cfg.ch.grid.n()));
  echo_flow(out, cfg.ch.flow);

  switch (cfg.kind) {
    case ExperimentKind::simulate:
    case ExperimentKind::calibrate: {
      const auto& p = cfg.ch;
      put("run.snapshot_times", list_text(p.snapshot_times));
      put("run.checkpoint_times", list_text(p.checkpoint_times));
      num("ch.gamma", p.gamma);
      num("ch.mobility", p.mobility);
      num("ch.t_end", p.t_end);
      num("ch.sample_interval", p.sample_interval);
      put("ch.dt_kind", step_text(p.dt_policy.kind));
      num("ch.dt", p.dt_policy.dt);
      num("ch.c_adv", p.dt_policy.c_adv);
      num("ch.dt_max", p.dt_policy.dt_max);
      num("ch.noise_amplitude", cfg.init.noise_amplitude);
      num("ch.cbar", cfg.init.cbar);
      if (!cfg.init.restore.empty()) put("ch.restore", cfg.init.restore);
      if (cfg.kind == ExperimentKind::simulate) break;
      put("calibrate.target", to_string(cfg.calibrate.target));
      put("calibrate.amplitudes", list_text(cfg.calibrate.amplitudes));
      num("calibrate.horizon", cfg.calibrate.horizon);
      [[fallthrough]];
    }
    case ExperimentKind::dtime: {
      const auto& p = cfg.dtime.params;
      put("linear.alpha", std::to_string(p.alpha));
      num("linear.gamma", p.gamma);
      put("linear.dt_kind", step_text(p.dt_policy.kind));
      num("linear.dt", p.dt_policy.dt);
      num("linear.c_adv", p.dt_policy.c_adv);
      num("linear.dt_max", p.dt_policy.dt_max);
      num("linear.tol", cfg.dtime.options.tol);
      num("linear.norm_tol", cfg.dtime.options.norm_tol);
      put("linear.restarts", std::to_string(cfg.dtime.options.restarts));
      put("linear.s_samples",
          cfg.dtime.s_samples.empty() ? "default" : list_text(cfg.dtime.s_samples));
      if (cfg.kind == ExperimentKind::dtime) break;
      [[fallthrough]];
    }
    case ExperimentKind::mixrate: {
      const auto& m = cfg.mixrate;
      put("mixrate.kind", to_string(m.kind));
      num("mixrate.horizon", m.horizon);
      put("mixrate.time_points", std::to_string(m.options.time_points));
      put("mixrate.test_modes", std::to_string(m.options.test_modes));
      put("mixrate.s_samples", list_text(m.options.s_samples));
      num("mixrate.conservation_budget", m.options.conservation_budget);
      num("mixrate.gamma", m.gamma);
      num("mixrate.C1", m.constants.C1);
      num("mixrate.C2", m.constants.C2);
      if (cfg.kind == ExperimentKind::mixrate) break;
      [[fallthrough]];
    }
    case ExperimentKind::thresholds: {
      const auto& t = cfg.thresholds;
      num("thresholds.B", t.inputs.B);
      num("thresholds.cbar", t.inputs.cbar);
      num("thresholds.beta", t.inputs.beta);
      num("thresholds.mu", t.inputs.mu);
      num("thresholds.gamma", t.inputs.gamma);
      num("thresholds.C_beta_mu", t.inputs.C_beta_mu);
      put("thresholds.grad_u_sup",
          t.grad_u_sup_given ? format_double(t.inputs.grad_u_sup) : "measured");
      put("thresholds.tau2", t.tau2 ? format_double(*t.tau2) : "estimated");
      put("thresholds.c2_norm", t.c2_norm ? format_double(*t.c2_norm) : "measured");
      num("thresholds.C_dim", t.C_dim);
      break;
    }
    case ExperimentKind::sweep:
      put("sweep.parameter", cfg.sweep.parameter);
      {
        std::string vals;
        for (const auto& v : cfg.sweep.values) vals += (vals.empty() ? "" : ", ") + v;
        put("sweep.values", vals);
      }
      put("sweep.kind", to_string(cfg.sweep.child_kind));
      break;
  }
  return out;
}

}  // namespace chmix
