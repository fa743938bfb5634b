#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "selrad/ensemble.hpp"
#include "selrad/params.hpp"

namespace selrad::cli {

/// Invalid configuration document or override; the message carries the location.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fully resolved experiment description. Lengths in the document are in units of the
/// wavelength; the fields here are in the natural units of the core library.
struct ExperimentConfig {
  PhysicalParams physics;
  /// Document-level values (wavelength units) kept verbatim for exact round trips.
  std::string dipole_name = "x";
  std::optional<double> decay_length_lambda;
  std::optional<double> z_ref_lambda;
  /// Target averaged C1; when set, g0 is calibrated for every atom number.
  std::optional<double> c1_target;
  C1Weighting c1_weighting = C1Weighting::Density;
  std::size_t calibration_probes = 200;

  CloudSpec cloud;
  std::vector<Protocol> protocols;

  double t_end = 8.0;
  std::size_t time_points = 401;

  EnsembleOptions ensemble;

  std::vector<int> sweep_n;
  std::vector<double> sweep_c1;
  TimeWindow fit_window{0.0, 2.0};
  bool fit_skip_first_sample = true;

  std::string output_prefix = "selrad";
  std::size_t per_config_traces = 0;

  /// Soft warnings from parameter validation (e.g. bad-cavity condition).
  std::vector<std::string> warnings;

  std::vector<double> time_grid() const;
};

/// Parses the JSON document, applies `key.path=value` overrides, validates every field,
/// and rejects unknown keys. Throws ConfigError with "line N" or "--set ..." positions.
ExperimentConfig load_config(const std::string& text, const std::vector<std::string>& overrides,
                             const std::string& source_name = "config");

ExperimentConfig load_config_file(const std::string& path, const std::vector<std::string>& overrides);

/// Canonical JSON of the resolved configuration (every default spelled out). Loading this
/// document again yields an identical configuration.
nlohmann::ordered_json resolved_json(const ExperimentConfig& config);

}  // namespace selrad::cli
