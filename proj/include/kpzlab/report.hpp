#ifndef KPZLAB_REPORT_HPP
#define KPZLAB_REPORT_HPP

#include <string>

#include "kpzlab/config.hpp"

namespace kpzlab {

// Exit-code contract shared by every subcommand:
//   0 pass, 1 check failure, 2 usage/config error.
inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailure = 1;
inline constexpr int kExitConfigError = 2;

std::string format_g17(double v);

int cmd_verify_tiny(const ExperimentConfig& cfg, bool corrupt_derivative = false);
int cmd_ensemble(const ExperimentConfig& cfg);
int cmd_wasserstein(const ExperimentConfig& cfg);
int cmd_flat_limit(const ExperimentConfig& cfg);
int cmd_report(const std::string& run_dir);

} // namespace kpzlab

#endif
