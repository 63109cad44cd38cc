#pragma once
// Command-line front end: resolves chip and workload configs, runs policy
// comparisons and sensitivity sweeps, and writes report files.
//
// Exit codes: 0 success, 2 configuration or flag validation error, 3
// simulation-time invariant violation.

#include <string>
#include <vector>

namespace npupg {

// Everything one run needs, after flags and any manifest file are merged.
struct RunManifest {
  std::string chip = "npu-d";        // preset name or config path
  std::string workload = "llm-decode";
  std::vector<std::string> policies = {"nopg", "comppg", "hw", "hwsw", "ideal"};
  std::string out_dir = "out";
  // Sensitivity axes (sweep); single implicit cell when empty.
  std::vector<double> leak_off_axis;
  std::vector<double> delay_mult_axis;
  std::vector<std::string> chip_axis;
  // Point overrides applied to the loaded chip bundle.
  double delay_mult = 1.0;
  std::vector<std::string> bet_overrides;  // "kind=cycles"
  double duty_cycle = -1;  // <0 keeps the config value
  double pue = -1;
  int jobs = 1;
};

int cli_main(int argc, const char* const* argv);

// Where bare config names are resolved: $NPUPG_CONFIG_DIR or "configs".
std::string config_dir();

}  // namespace npupg
