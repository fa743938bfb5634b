#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "selrad/coupling.hpp"
#include "selrad/dynamics.hpp"

namespace selrad {

/// Instantaneous decay-rate observables built from R_c, R_f and their derivatives.
///
///   Gamma = -dR/dt / R,  Gamma_c = -dR_c/dt / R,  Gamma_f = -dR_f/dt / R,
///   Gamma_th = -dR_c/dt / R_c = Gamma_c + Gamma_f theta,
///   theta = (dR_c/dt / R_c) / (dR_f/dt / R_f).
struct DecayRates {
  double gamma_total = 0.0;
  double gamma_c = 0.0;
  double gamma_f = 0.0;
  double theta = 0.0;
  double gamma_th = 0.0;
  double eval_time = 0.0;
};

/// Rates at state `sigma` (the state reached at time t). Throws NumericalError
/// ("channel extinct") when R_c or R_f is below 1e-14 gamma0 |sigma|^2.
DecayRates decay_rates_at(const StateVector& sigma, const CouplingMatrix& m, double t);

/// Same observables from precomputed (e.g. ensemble-averaged) rates and derivatives;
/// `scale` sets the extinction threshold 1e-14 * scale.
DecayRates decay_rates_from(const EmissionRates& r, const RateDerivatives& d, double t, double scale);

/// Fit of I(t) = i0 exp(-gamma_exp t) + b.
struct FitResult {
  double i0 = 0.0;
  double gamma_exp = 0.0;
  double b = 0.0;
  std::pair<double, double> window{0.0, 0.0};
  double rms_residual = 0.0;
  /// Half-spread of gamma_exp over fit windows whose start is shifted by 0, 1, 2 samples.
  double gamma_exp_err = 0.0;
  int iterations = 0;
};

struct TimeWindow {
  double t_start = 0.0;
  double t_end = 0.0;
};

/// Levenberg-Marquardt fit of an exponential with constant offset over samples with
/// t in [t_start, t_end]. Needs at least 10 samples (8 for the fit, 2 for window shifts).
FitResult fit_exponential(std::span<const double> times, std::span<const double> values,
                          TimeWindow window);

/// Normalized |w_xi|^2 mass over log-spaced bins of Gamma_xi / gamma0.
struct PopulationHistogram {
  std::vector<double> bin_edges;
  std::vector<double> weights;
  std::size_t n_configs = 0;
  std::size_t n_excluded = 0;

  std::vector<double> bin_centers() const;  // geometric centers
  /// Mass in bins whose upper edge is <= rate (rate must be a bin edge for exactness).
  double mass_below(double rate) const;
};

/// Order-preserving accumulator for histograms; each configuration contributes unit mass.
/// Rates outside [lo, hi] are clamped into the edge bins; nonpositive rates are excluded.
class HistogramAccumulator {
 public:
  HistogramAccumulator(std::size_t bins = 60, double lo = 1e-3, double hi = 1e2);

  void add(const ModalAmplitudes& w, const RVector& decay_rates, double gamma0 = 1.0);
  void merge(const HistogramAccumulator& other);
  PopulationHistogram result() const;

 private:
  std::size_t bin_of(double x) const;

  std::vector<double> edges_;
  std::vector<double> mass_;
  std::size_t n_configs_ = 0;
  std::size_t n_excluded_ = 0;
};

struct AmplitudeSet {
  ModalAmplitudes w;
  RVector decay_rates;
};

PopulationHistogram population_histogram(std::span<const AmplitudeSet> sets, std::size_t bins = 60,
                                         double lo = 1e-3, double hi = 1e2, double gamma0 = 1.0);

/// Time-integrated channel emission and the N C1 / theta estimate.
struct FigureOfMerit {
  double p_c = 0.0;
  double p_f = 0.0;
  double ratio = 0.0;
  double estimate = 0.0;
};

/// Trapezoid quadrature of R_c and R_f plus an exponential tail from the slope over the
/// final decade. Throws NumericalError ("horizon too short") unless R(t_end) < 1e-6 R(0).
FigureOfMerit figure_of_merit(const EmissionTrace& trace, std::size_t n_atoms, double c1, double theta0);

}  // namespace selrad
