#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qpk/cli_runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"qpk-sim: continuous-variable quantum-public-key protocol simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  qpk::cli::Overrides overrides;
  std::uint64_t seed = 0;
  int shots = 0;
  std::string attack;
  double alpha = 0.0;

  const char* env_out = std::getenv("QPK_OUT_DIR");
  out_dir = env_out ? env_out : "qpk-out";

  for (const auto& name : {"simulate", "attack-sweep", "verify-theorem", "oracle-check",
                           "calibrate"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "Config file (JSON); bundled defaults if omitted");
    sub->add_option("--out", out_dir, "Output directory (default: $QPK_OUT_DIR or ./qpk-out)");
    sub->add_option("--seed", seed, "Root seed override");
    sub->add_option("--shots", shots, "Shots per symbol override");
    sub->add_option("--attack", attack,
                    "Attack spec override, e.g. BeamsplitterTap:eta=0.8,theta_E=0.3");
    sub->add_option("--alpha", alpha, "Detection significance override");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (sub->count("--seed")) overrides.seed = seed;
    if (sub->count("--shots")) overrides.shots = shots;
    if (sub->count("--attack")) overrides.attack = attack;
    if (sub->count("--alpha")) overrides.alpha = alpha;
    const int code = qpk::cli::run_subcommand(name, config_path, out_dir, overrides);
    if (code == qpk::cli::kExitAlarm) {
      std::cerr << "detection alarm raised (exit 2); see " << out_dir << "/report.json\n";
    } else {
      std::cout << "reports written to " << out_dir << "\n";
    }
    return code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return qpk::cli::kExitError;
  }
}
