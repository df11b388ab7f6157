#include "chmix.h"

#include <algorithm>
#include <cmath>
#include <new>
#include <string>

#include "chmix/config.hpp"
#include "chmix/errors.hpp"
#include "chmix/io.hpp"
#include "chmix/runner.hpp"

using namespace chmix;

struct chmix_config {
  RunConfig cfg;
  std::string echo;
  std::string kind;
};

struct chmix_result {
  RunResult res;
  std::string manifest_text;
};

namespace {

thread_local std::string g_last_error;

chmix_status fail(chmix_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <class F>
chmix_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return CHMIX_OK;
  } catch (const ConfigError& e) {
    return fail(CHMIX_ERR_CONFIG, e.what());
  } catch (const NumericError& e) {
    return fail(CHMIX_ERR_NUMERIC, e.what());
  } catch (const IoError& e) {
    return fail(CHMIX_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(CHMIX_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(CHMIX_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(CHMIX_ERR_INTERNAL, "unknown error");
  }
}

#define CHMIX_REQUIRE(cond, msg) \
  if (!(cond)) return fail(CHMIX_ERR_ARGUMENT, msg)

void refresh(chmix_config* c) {
  c->echo.clear();
  for (const auto& [k, v] : config_echo(c->cfg)) c->echo += k + " = " + v + "\n";
  c->kind = to_string(c->cfg.kind);
}

chmix_status apply_override(chmix_config* cfg, const std::string& section, const std::string& key,
                            const std::string& value) {
  CHMIX_REQUIRE(cfg, "config handle is null");
  return guarded([&] {
    RawConfig raw = cfg->cfg.raw;
    raw.set(section, key, value);
    cfg->cfg = build_config(raw);
    refresh(cfg);
  });
}

ThresholdInputs to_inputs(const chmix_threshold_inputs& in) {
  ThresholdInputs t;
  t.B = in.B;
  t.cbar = in.cbar;
  t.beta = in.beta;
  t.mu = in.mu;
  t.gamma = in.gamma;
  t.C_beta_mu = in.C_beta_mu;
  t.grad_u_sup = in.grad_u_sup;
  t.dim = in.dim;
  return t;
}

}  // namespace

extern "C" {

const char* chmix_version(void) { return kVersion; }

const char* chmix_last_error(void) { return g_last_error.c_str(); }

const char* chmix_status_name(chmix_status status) {
  switch (status) {
    case CHMIX_OK: return "ok";
    case CHMIX_ERR_CONFIG: return "configuration error";
    case CHMIX_ERR_NUMERIC: return "numerical failure";
    case CHMIX_ERR_IO: return "I/O error";
    case CHMIX_ERR_ARGUMENT: return "invalid argument";
    case CHMIX_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

chmix_status chmix_config_from_text(const char* text, chmix_config** out) {
  CHMIX_REQUIRE(text && out, "text and out must be non-null");
  *out = nullptr;
  return guarded([&] {
    auto* c = new chmix_config{parse_config(text), {}, {}};
    refresh(c);
    *out = c;
  });
}

chmix_status chmix_config_from_file(const char* path, chmix_config** out) {
  CHMIX_REQUIRE(path && out, "path and out must be non-null");
  *out = nullptr;
  return guarded([&] {
    auto* c = new chmix_config{parse_config_file(path), {}, {}};
    refresh(c);
    *out = c;
  });
}

void chmix_config_free(chmix_config* cfg) { delete cfg; }

chmix_status chmix_config_set(chmix_config* cfg, const char* section, const char* key,
                              const char* value) {
  CHMIX_REQUIRE(section && key && value, "section, key and value must be non-null");
  return apply_override(cfg, section, key, value);
}

chmix_status chmix_config_set_kind(chmix_config* cfg, const char* kind) {
  CHMIX_REQUIRE(kind, "kind must be non-null");
  return apply_override(cfg, "run", "kind", kind);
}

chmix_status chmix_config_set_out_dir(chmix_config* cfg, const char* dir) {
  CHMIX_REQUIRE(dir && *dir, "output directory must be a non-empty string");
  return apply_override(cfg, "run", "out", dir);
}

chmix_status chmix_config_set_seed(chmix_config* cfg, uint64_t seed) {
  return apply_override(cfg, "run", "seed", std::to_string(seed));
}

chmix_status chmix_config_set_threads(chmix_config* cfg, int threads) {
  CHMIX_REQUIRE(threads >= 1, "threads must be >= 1");
  return apply_override(cfg, "run", "threads", std::to_string(threads));
}

chmix_status chmix_config_set_snapshot_times(chmix_config* cfg, const double* times,
                                             size_t count) {
  CHMIX_REQUIRE(times || count == 0, "times must be non-null when count > 0");
  std::string list;
  for (size_t i = 0; i < count; ++i) list += (i ? ", " : "") + format_double(times[i]);
  return apply_override(cfg, "run", "snapshot_times", list);
}

chmix_status chmix_config_kind(const chmix_config* cfg, const char** kind) {
  CHMIX_REQUIRE(cfg && kind, "cfg and kind must be non-null");
  *kind = cfg->kind.c_str();
  return CHMIX_OK;
}

chmix_status chmix_config_echo(const chmix_config* cfg, const char** text) {
  CHMIX_REQUIRE(cfg && text, "cfg and text must be non-null");
  *text = cfg->echo.c_str();
  return CHMIX_OK;
}

chmix_status chmix_run(const chmix_config* cfg, chmix_result** out) {
  CHMIX_REQUIRE(cfg && out, "cfg and out must be non-null");
  *out = nullptr;
  return guarded([&] {
    auto* r = new chmix_result{run_experiment(cfg->cfg), {}};
    r->manifest_text = r->res.manifest.text();
    *out = r;
  });
}

void chmix_result_free(chmix_result* res) { delete res; }

chmix_status chmix_result_summary(const chmix_result* res, const char** text) {
  CHMIX_REQUIRE(res && text, "res and text must be non-null");
  *text = res->res.summary.c_str();
  return CHMIX_OK;
}

chmix_status chmix_result_manifest(const chmix_result* res, const char** text) {
  CHMIX_REQUIRE(res && text, "res and text must be non-null");
  *text = res->manifest_text.c_str();
  return CHMIX_OK;
}

chmix_status chmix_result_get(const chmix_result* res, const char* key, const char** value) {
  CHMIX_REQUIRE(res && key && value, "res, key and value must be non-null");
  const std::string* v = res->res.manifest.find(key);
  if (!v) return fail(CHMIX_ERR_ARGUMENT, std::string("no manifest key '") + key + "'");
  *value = v->c_str();
  return CHMIX_OK;
}

size_t chmix_result_count(const chmix_result* res) {
  return res ? res->res.manifest.entries().size() : 0;
}

chmix_status chmix_result_entry(const chmix_result* res, size_t index, const char** key,
                                const char** value) {
  CHMIX_REQUIRE(res && key && value, "res, key and value must be non-null");
  const auto& e = res->res.manifest.entries();
  CHMIX_REQUIRE(index < e.size(), "entry index out of range");
  *key = e[index].first.c_str();
  *value = e[index].second.c_str();
  return CHMIX_OK;
}

void chmix_threshold_inputs_default(chmix_threshold_inputs* in) {
  if (!in) return;
  const ThresholdInputs d;
  *in = {d.B, d.cbar, d.beta, d.mu, d.gamma, d.C_beta_mu, d.grad_u_sup, d.dim};
}

chmix_status chmix_threshold_T0(const chmix_threshold_inputs* in, double* prime, double* value) {
  CHMIX_REQUIRE(in && prime && value, "in, prime and value must be non-null");
  return guarded([&] {
    const auto r = compute_T0(to_inputs(*in));
    *prime = r.prime;
    *value = r.value;
  });
}

chmix_status chmix_threshold_T1(const chmix_threshold_inputs* in, double* prime, double* value) {
  CHMIX_REQUIRE(in && prime && value, "in, prime and value must be non-null");
  return guarded([&] {
    const auto r = compute_T1(to_inputs(*in));
    *prime = r.prime;
    *value = r.value;
  });
}

chmix_status chmix_lower_bound_tau2(double c2_norm, double gamma, double C_dim, double* out) {
  CHMIX_REQUIRE(out, "out must be non-null");
  return guarded([&] { *out = lower_bound_tau2(c2_norm, gamma, C_dim); });
}

chmix_status chmix_hypothesis_check(const chmix_threshold_inputs* in, double tau2,
                                    int estimate_dim, int* applies, double* margin) {
  CHMIX_REQUIRE(in && applies && margin, "in, applies and margin must be non-null");
  return guarded([&] {
    const auto r = hypothesis_check(to_inputs(*in), tau2, estimate_dim);
    *applies = r.theorem_applies ? 1 : 0;
    *margin = r.margin;
  });
}

chmix_status chmix_flow_free_dissipation_time(int alpha, double gamma, double* out) {
  CHMIX_REQUIRE(out, "out must be non-null");
  CHMIX_REQUIRE(alpha == 1 || alpha == 2, "alpha must be 1 or 2");
  CHMIX_REQUIRE(gamma > 0.0, "gamma must be positive");
  *out = flow_free_dissipation_time(alpha, gamma);
  return CHMIX_OK;
}

chmix_status chmix_dissipation_time(const chmix_config* cfg, double* tau_star, double* t_lo,
                                    double* t_hi) {
  CHMIX_REQUIRE(cfg && tau_star, "cfg and tau_star must be non-null");
  return guarded([&] {
    const auto& d = cfg->cfg.dtime;
    d.params.validate();
    const auto s = d.s_samples.empty() ? default_s_samples(d.params) : d.s_samples;
    const auto est = dissipation_time(d.params, s, d.options);
    *tau_star = est.tau_star;
    if (t_lo) *t_lo = est.t_lo;
    if (t_hi) *t_hi = est.t_hi;
  });
}

chmix_status chmix_t_star(chmix_rate_fn h, void* user, chmix_rate_kind kind, double gamma,
                          double c2_norm, int dim, double C1, double C2, double* t_star,
                          double* residual) {
  CHMIX_REQUIRE(h && t_star, "h and t_star must be non-null");
  CHMIX_REQUIRE(kind == CHMIX_RATE_WEAK || kind == CHMIX_RATE_STRONG, "unknown rate kind");
  return guarded([&] {
    const auto r = solve_t_star([&](double t) { return h(t, user); },
                                kind == CHMIX_RATE_WEAK ? RateKind::weak : RateKind::strong, gamma,
                                c2_norm, dim, {C1, C2});
    *t_star = r.t_star;
    if (residual) *residual = r.residual;
  });
}

chmix_status chmix_t_star_fit(int power, double a, double b, chmix_rate_kind kind, double gamma,
                              double c2_norm, int dim, double C1, double C2, double* t_star,
                              double* residual) {
  CHMIX_REQUIRE(t_star, "t_star must be non-null");
  CHMIX_REQUIRE(a > 0.0 && b > 0.0, "a and b must be positive");
  RateFit fit;
  fit.form = power ? FitForm::power : FitForm::exponential;
  fit.a = a;
  fit.b = b;
  CHMIX_REQUIRE(kind == CHMIX_RATE_WEAK || kind == CHMIX_RATE_STRONG, "unknown rate kind");
  return guarded([&] {
    const auto r =
        solve_t_star(fit, kind == CHMIX_RATE_WEAK ? RateKind::weak : RateKind::strong, gamma,
                     c2_norm, dim, {C1, C2});
    *t_star = r.t_star;
    if (residual) *residual = r.residual;
  });
}

chmix_status chmix_snapshot_read(const char* path, int* dim, int* n, double* t, double* values,
                                 size_t capacity, size_t* count) {
  CHMIX_REQUIRE(path && count, "path and count must be non-null");
  SnapshotData s;
  const chmix_status st = guarded([&] { s = read_snapshot(path); });
  if (st != CHMIX_OK) return st;
  *count = s.values.size();
  if (dim) *dim = s.dim;
  if (n) *n = s.n;
  if (t) *t = s.t;
  if (values) {
    CHMIX_REQUIRE(capacity >= s.values.size(), "capacity is smaller than the snapshot");
    std::copy(s.values.begin(), s.values.end(), values);
  }
  return CHMIX_OK;
}

}  // extern "C"
