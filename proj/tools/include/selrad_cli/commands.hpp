#pragma once

#include <string>
#include <vector>

#include "selrad_cli/config.hpp"

namespace selrad::cli {

struct RunOptions {
  std::string out_dir = ".";
  unsigned jobs = 1;
};

/// Ensemble-averaged emission traces, one CSV and JSON sidecar per protocol.
std::vector<std::string> cmd_trace(const ExperimentConfig& config, const RunOptions& options);

/// Long-format table over (N, C1, protocol) with fitted and extracted decay rates.
std::vector<std::string> cmd_sweep(const ExperimentConfig& config, const RunOptions& options);

/// Eigenstate-population histograms for every protocol.
std::vector<std::string> cmd_histogram(const ExperimentConfig& config, const RunOptions& options);

}  // namespace selrad::cli
