// Command-line front end. Talks to the library only through blaq.h.
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "blaq/blaq.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAssert = 1;
constexpr int kExitConfig = 2;

int exit_code_for(blaq_status s) {
  switch (s) {
    case BLAQ_ERR_CONFIG:
    case BLAQ_ERR_FORMAT:
    case BLAQ_ERR_IO:
    case BLAQ_ERR_INVALID_ARGUMENT:
      return kExitConfig;
    default:
      return kExitAssert;
  }
}

int report(blaq_status s, const char* what) {
  std::fprintf(stderr, "blaq: %s: %s: %s\n", what, blaq_status_name(s), blaq_last_error());
  return exit_code_for(s);
}

// "--key value" and "--key=value" pairs left over after CLI11 parsing.
bool split_overrides(const std::vector<std::string>& args, std::vector<std::pair<std::string, std::string>>& out) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--", 0) != 0 || a.size() < 3) {
      std::fprintf(stderr, "blaq: unexpected argument '%s'\n", a.c_str());
      return false;
    }
    auto eq = a.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(a.substr(2, eq - 2), a.substr(eq + 1));
    } else if (i + 1 < args.size()) {
      out.emplace_back(a.substr(2), args[++i]);
    } else {
      std::fprintf(stderr, "blaq: option '%s' needs a value\n", a.c_str());
      return false;
    }
  }
  return true;
}

int run_subcommand(const std::string& experiment, const std::string& config, const std::vector<std::string>& extras,
                   bool quiet) {
  std::vector<std::pair<std::string, std::string>> overrides;
  if (!split_overrides(extras, overrides)) return kExitConfig;

  blaq_run* run = nullptr;
  blaq_status s = blaq_run_create(experiment.c_str(), &run);
  if (s != BLAQ_OK) return report(s, "create");
  struct Guard {
    blaq_run* r;
    ~Guard() { blaq_run_destroy(r); }
  } guard{run};

  if (!config.empty() && (s = blaq_run_load_config(run, config.c_str())) != BLAQ_OK) return report(s, "config");
  for (const auto& [k, v] : overrides)
    if ((s = blaq_run_set(run, k.c_str(), v.c_str())) != BLAQ_OK) return report(s, "override");
  if ((s = blaq_run_execute(run)) != BLAQ_OK) return report(s, experiment.c_str());

  size_t total = 0, failed = 0;
  blaq_run_check_count(run, &total, &failed);
  for (size_t i = 0; i < total; ++i) {
    const char* name = nullptr;
    const char* detail = nullptr;
    int passed = 0;
    blaq_run_check(run, i, &name, &passed, &detail);
    if (!quiet || !passed) std::printf("%s %s: %s\n", passed ? "PASS" : "FAIL", name, detail);
  }
  int ok = 0;
  blaq_run_verdict(run, &ok);
  return ok ? kExitOk : kExitAssert;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loss-aware weight quantization lab: LAQ and BLAQ optimizers, zig-zag diagnostics, MNIST and theory checks"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Only print failed checks");
  app.set_version_flag("--version", std::string(blaq_version()));

  struct Sub {
    const char* name;
    const char* help;
    std::string config;
    CLI::App* app = nullptr;
  };
  std::vector<Sub> subs = {
      {"toy2d", "Two-dimensional quadratic trajectories", {}},
      {"toy-pow32", "c|w|^(3/2) oscillation counterexample", {}},
      {"train-mnist", "Four-layer MLP on MNIST", {}},
      {"theory-check", "Random diagonal quadratic suite for the convergence bounds", {}},
  };
  for (auto& s : subs) {
    s.app = app.add_subcommand(s.name, s.help);
    s.app->add_option("--config", s.config, "JSON configuration file");
    s.app->allow_extras();
    s.app->footer("Any configuration key can be overridden with --key value.");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }
  for (auto& s : subs)
    if (s.app->parsed()) return run_subcommand(s.name, s.config, s.app->remaining(), quiet);
  return kExitConfig;
}
