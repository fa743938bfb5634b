#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "selrad/analysis.hpp"
#include "selrad/coupling.hpp"
#include "selrad/dynamics.hpp"
#include "selrad/params.hpp"

namespace selrad {

/// Anisotropic Gaussian atom cloud. All lengths are in units of the wavelength lambda0.
struct CloudSpec {
  Vec3 rms_sizes = Vec3(0.5, 2.3, 0.1);
  Vec3 center = Vec3(0.0, 0.0, 0.47);
  int n_atoms = 50;
  double min_separation = 0.05;
  /// Optional dielectric surface plane z = surface_z; atoms are kept above it.
  std::optional<double> surface_z = 0.0;

  void validate() const;
};

/// Stable per-configuration seed derived from (master_seed, index).
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index);

inline constexpr int kMaxRedraws = 1000;

/// Draws N positions (returned in units of 1/k0, i.e. scaled by 2 pi / k0) and redraws
/// any atom closer than min_separation to an accepted one. Throws NumericalError when an
/// atom exhausts its redraw budget ("cloud too dense").
AtomEnsemble sample_positions(const CloudSpec& cloud, std::uint64_t seed, double k0 = 1.0);

enum class ProtocolKind { SteadyState, TimedDicke, Pulse };
enum class PulseShape { Gaussian, Square };

/// State-preparation protocol before the drive is switched off at t = 0.
struct Protocol {
  ProtocolKind kind = ProtocolKind::SteadyState;
  PulseShape shape = PulseShape::Gaussian;
  /// Gaussian FWHM in 1/gamma0 (6 ns at gamma0 = 2 pi x 5.2 MHz).
  double fwhm = 0.196;
  /// Square-pulse length in 1/gamma0.
  double duration = 6.0;
  double amplitude = 0.01;
  std::string label;

  std::string name() const;
  /// Envelope f(t) and the switch-off time for Pulse protocols.
  PulseEnvelope envelope() const;
  double pulse_end() const;
};

/// Everything produced for one atom configuration.
struct ConfigRecord {
  std::uint64_t seed = 0;
  AtomEnsemble atoms;
  double c1_mean = 0.0;
  double c1_density_mean = 0.0;
  StateVector sigma0;
  ModalAmplitudes amplitudes;
  RVector decay_rates;
  EmissionTrace trace;
  std::optional<DecayRates> rates_t0;
  IntegratedEmission integrated;
  double condition_estimate = 1.0;
};

/// sample -> build M and drive -> prepare state -> decompose -> trace and rates.
ConfigRecord run_configuration(const CloudSpec& cloud, const PhysicalParams& params, const Protocol& protocol,
                               std::span<const double> time_grid, std::uint64_t seed);

struct ConfigSummary {
  std::uint64_t index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double c1_mean = 0.0;
  double c1_density_mean = 0.0;
  double gamma_th0 = 0.0;  // NaN if a channel is extinct
  double theta0 = 0.0;     // NaN if a channel is extinct
  double p_cav = 0.0;
  double p_free = 0.0;
  double min_decay_rate = 0.0;
  double condition_estimate = 0.0;
};

struct EnsembleOptions {
  std::size_t n_configs = 100;
  std::uint64_t master_seed = 1;
  unsigned jobs = 1;
  std::size_t hist_bins = 60;
  double hist_lo = 1e-3;
  double hist_hi = 1e2;
  /// Maximum tolerated fraction of failed configurations.
  double max_failed_fraction = 0.01;
};

struct EnsembleStats {
  std::vector<double> times;
  std::vector<double> mean_cav, mean_free, mean_total;
  std::vector<double> se_cav, se_free, se_total;
  std::vector<double> mean_rdot_cav, mean_rdot_free;
  /// theta(t) of the averaged rates; NaN where a channel is extinct.
  std::vector<double> theta_t;
  std::optional<DecayRates> rates_t0;
  PopulationHistogram histogram;
  std::vector<ConfigSummary> configs;
  std::size_t n_configs = 0;
  std::size_t n_failed = 0;
  std::uint64_t master_seed = 0;
  double mean_c1 = 0.0;
  double mean_c1_density = 0.0;
  double mean_p_cav = 0.0;
  double mean_p_free = 0.0;
  double mean_population0 = 0.0;
};

/// Seeded Monte Carlo average over configurations. Results are independent of `jobs`:
/// configurations are reduced in index order. Throws NumericalError if more than
/// max_failed_fraction of the configurations fail.
EnsembleStats ensemble_average(const CloudSpec& cloud, const PhysicalParams& params, const Protocol& protocol,
                               std::span<const double> time_grid, const EnsembleOptions& options);

enum class C1Weighting { Density, Coupling };

struct CalibrationOptions {
  std::size_t probe_configs = 200;
  std::uint64_t seed = 1;
  C1Weighting weighting = C1Weighting::Density;
};

struct CalibrationResult {
  double g0 = 0.0;
  double achieved_c1 = 0.0;
};

/// g0 such that the probe-averaged C1 equals `target_c1`. C1 is exactly quadratic in
/// g0 at fixed positions, so the root is obtained by rescaling a unit-g0 probe average.
CalibrationResult calibrate_g0(const CloudSpec& cloud, const PhysicalParams& params, double target_c1,
                               const CalibrationOptions& options);

std::vector<double> linear_time_grid(double t_end, std::size_t points);

struct SweepSpec {
  std::vector<int> n_values;
  std::vector<double> c1_values;
  std::vector<Protocol> protocols;
};

struct SweepRow {
  int n_atoms = 0;
  double c1_target = 0.0;
  std::string protocol;
  double g0 = 0.0;
  double c1_achieved = 0.0;
  std::optional<FitResult> fit;
  std::string fit_error;
  std::optional<DecayRates> rates_t0;
  double fom_ratio = 0.0;
  double fom_estimate = 0.0;
  // Linear fits over the C1 axis at fixed (N, protocol); NaN with fewer than two points.
  double exp_slope = 0.0;
  double exp_intercept = 0.0;  // Gamma_exp^0
  double th_slope = 0.0;
  double th_intercept = 0.0;   // Gamma_th at C1 -> 0
  double gamma_c_extracted = 0.0;  // Gamma_exp - Gamma_exp^0
  double gamma_f_extracted = 0.0;  // Gamma_exp^0 / theta
  EnsembleStats stats;
};

struct SweepOptions {
  EnsembleOptions ensemble;
  CalibrationOptions calibration;
  TimeWindow fit_window{0.0, 2.0};
  /// Start the fit one grid step after switch-off when true (default policy).
  bool skip_first_sample = true;
};

/// Exponential fit of the averaged cavity trace (total trace when R_c vanishes).
FitResult fit_ensemble_trace(const EnsembleStats& stats, TimeWindow window, bool skip_first_sample,
                             bool* used_total = nullptr);

/// Ensemble average at every (N, C1, protocol) grid point plus C1-axis extrapolations.
std::vector<SweepRow> sweep(const SweepSpec& spec, const CloudSpec& cloud, const PhysicalParams& params,
                            std::span<const double> time_grid, const SweepOptions& options);

}  // namespace selrad
