// chmix command-line front end; talks to the library through chmix.h only.

#include <cstdio>
#include <cstdlib>
#include <string>

#include "CLI11.hpp"
#include "chmix.h"

namespace {

int exit_code(chmix_status s) {
  switch (s) {
    case CHMIX_OK: return 0;
    case CHMIX_ERR_CONFIG:
    case CHMIX_ERR_ARGUMENT: return 1;
    case CHMIX_ERR_NUMERIC:
    case CHMIX_ERR_INTERNAL: return 2;
    case CHMIX_ERR_IO: return 3;
  }
  return 2;
}

int report(chmix_status s) {
  std::fprintf(stderr, "chmix: %s:\n%s\n", chmix_status_name(s), chmix_last_error());
  return exit_code(s);
}

struct Options {
  std::string config;
  std::string out;
  std::string seed;
  int threads = 0;
  std::string snapshot_times;
};

int run(const std::string& kind, const Options& opt) {
  chmix_config* cfg = nullptr;
  chmix_status s = chmix_config_from_file(opt.config.c_str(), &cfg);
  if (s != CHMIX_OK) return report(s);

  auto apply = [&](chmix_status st) {
    if (st != CHMIX_OK && s == CHMIX_OK) s = st;
  };
  apply(chmix_config_set_kind(cfg, kind.c_str()));
  if (!opt.out.empty()) apply(chmix_config_set_out_dir(cfg, opt.out.c_str()));
  if (!opt.seed.empty()) apply(chmix_config_set(cfg, "run", "seed", opt.seed.c_str()));
  int threads = opt.threads;
  if (threads <= 0) {
    if (const char* env = std::getenv("CHMIX_THREADS")) threads = std::atoi(env);
  }
  if (threads > 0) apply(chmix_config_set_threads(cfg, threads));
  if (!opt.snapshot_times.empty())
    apply(chmix_config_set(cfg, "run", "snapshot_times", opt.snapshot_times.c_str()));
  if (s != CHMIX_OK) {
    const int code = report(s);
    chmix_config_free(cfg);
    return code;
  }

  chmix_result* res = nullptr;
  s = chmix_run(cfg, &res);
  chmix_config_free(cfg);
  if (s != CHMIX_OK) return report(s);
  const char* summary = nullptr;
  chmix_result_summary(res, &summary);
  std::fputs(summary, stdout);
  chmix_result_free(res);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pseudo-spectral lab for the stirred Cahn-Hilliard equation"};
  app.set_version_flag("--version", std::string(chmix_version()));
  app.require_subcommand(1);

  Options opt;
  std::string chosen;
  const char* kinds[][2] = {
      {"simulate", "Integrate the stirred Cahn-Hilliard equation"},
      {"dtime", "Estimate the dissipation time of a flow"},
      {"mixrate", "Measure a weak or strong mixing rate function"},
      {"thresholds", "Evaluate thresholds and the hypothesis check"},
      {"sweep", "Run one child experiment per parameter value"},
      {"calibrate", "Fit an unspecified constant over a flow family"},
  };
  for (auto& k : kinds) {
    auto* sub = app.add_subcommand(k[0], k[1]);
    sub->add_option("--config", opt.config, "Run configuration file")->required();
    sub->add_option("--out", opt.out, "Output directory");
    sub->add_option("--seed", opt.seed, "64-bit seed");
    sub->add_option("--threads", opt.threads, "Worker threads (default: CHMIX_THREADS or 1)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--snapshot-times", opt.snapshot_times,
                    "Comma-separated snapshot times");
    sub->callback([&chosen, name = std::string(k[0])] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  return run(chosen, opt);
}
