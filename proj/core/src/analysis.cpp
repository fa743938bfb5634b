#include "selrad/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "selrad/errors.hpp"

namespace selrad {

DecayRates decay_rates_from(const EmissionRates& r, const RateDerivatives& d, double t, double scale) {
  const double floor = 1e-14 * scale;
  if (!(r.cav > floor) || !(r.free > floor)) {
    std::ostringstream os;
    os << "decay_rates: channel extinct (R_c = " << r.cav << ", R_f = " << r.free << ")";
    throw NumericalError(os.str());
  }
  const double total = r.cav + r.free;
  DecayRates out;
  out.eval_time = t;
  out.gamma_c = -d.cav / total;
  out.gamma_f = -d.free / total;
  out.gamma_total = out.gamma_c + out.gamma_f;
  out.gamma_th = -d.cav / r.cav;
  out.theta = (d.cav / r.cav) / (d.free / r.free);
  return out;
}

DecayRates decay_rates_at(const StateVector& sigma, const CouplingMatrix& m, double t) {
  const EmissionRates r = emission_rates(sigma, m);
  const RateDerivatives d = emission_rate_derivatives(sigma, m);
  return decay_rates_from(r, d, t, m.gamma0 * sigma.sigma.squaredNorm());
}

// --- histogram --------------------------------------------------------------

HistogramAccumulator::HistogramAccumulator(std::size_t bins, double lo, double hi) {
  if (bins == 0 || !(lo > 0.0) || !(hi > lo)) {
    throw ParameterError("histogram: need bins >= 1 and 0 < lo < hi");
  }
  edges_.resize(bins + 1);
  const double span = std::log(hi / lo);
  for (std::size_t k = 0; k <= bins; ++k) {
    edges_[k] = lo * std::exp(span * static_cast<double>(k) / static_cast<double>(bins));
  }
  edges_.front() = lo;
  edges_.back() = hi;
  mass_.assign(bins, 0.0);
}

std::size_t HistogramAccumulator::bin_of(double x) const {
  const std::size_t bins = mass_.size();
  const double lo = edges_.front();
  const double hi = edges_.back();
  x = std::clamp(x, lo, hi);
  const double pos = std::log(x / lo) / std::log(hi / lo) * static_cast<double>(bins);
  auto k = static_cast<std::size_t>(std::max(0.0, std::floor(pos)));
  return std::min(k, bins - 1);
}

void HistogramAccumulator::add(const ModalAmplitudes& w, const RVector& decay_rates, double gamma0) {
  if (w.w.size() != decay_rates.size()) {
    throw ParameterError("histogram: amplitude and rate vectors differ in length");
  }
  double total = 0.0;
  for (Eigen::Index k = 0; k < w.w.size(); ++k) {
    if (decay_rates(k) > 0.0) total += std::norm(w.w(k));
  }
  for (Eigen::Index k = 0; k < w.w.size(); ++k) {
    if (!(decay_rates(k) > 0.0)) ++n_excluded_;
  }
  ++n_configs_;
  if (!(total > 0.0)) return;
  for (Eigen::Index k = 0; k < w.w.size(); ++k) {
    if (decay_rates(k) > 0.0) {
      mass_[bin_of(decay_rates(k) / gamma0)] += std::norm(w.w(k)) / total;
    }
  }
}

void HistogramAccumulator::merge(const HistogramAccumulator& other) {
  if (other.edges_ != edges_) {
    throw ParameterError("histogram: cannot merge different binnings");
  }
  for (std::size_t k = 0; k < mass_.size(); ++k) mass_[k] += other.mass_[k];
  n_configs_ += other.n_configs_;
  n_excluded_ += other.n_excluded_;
}

PopulationHistogram HistogramAccumulator::result() const {
  PopulationHistogram out;
  out.bin_edges = edges_;
  out.n_configs = n_configs_;
  out.n_excluded = n_excluded_;
  const double total = std::accumulate(mass_.begin(), mass_.end(), 0.0);
  out.weights.resize(mass_.size(), 0.0);
  if (total > 0.0) {
    for (std::size_t k = 0; k < mass_.size(); ++k) out.weights[k] = mass_[k] / total;
  }
  return out;
}

std::vector<double> PopulationHistogram::bin_centers() const {
  std::vector<double> c;
  for (std::size_t k = 0; k + 1 < bin_edges.size(); ++k) {
    c.push_back(std::sqrt(bin_edges[k] * bin_edges[k + 1]));
  }
  return c;
}

double PopulationHistogram::mass_below(double rate) const {
  double m = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (bin_edges[k + 1] <= rate * (1.0 + 1e-12)) m += weights[k];
  }
  return m;
}

PopulationHistogram population_histogram(std::span<const AmplitudeSet> sets, std::size_t bins,
                                         double lo, double hi, double gamma0) {
  if (sets.empty()) {
    throw ParameterError("population_histogram: no amplitude sets");
  }
  HistogramAccumulator acc(bins, lo, hi);
  for (const auto& s : sets) acc.add(s.w, s.decay_rates, gamma0);
  return acc.result();
}

// --- figure of merit ---------------------------------------------------------

namespace {

// Least-squares slope of log(y) against t over [first, last]; 0 if undefined.
double log_slope(const std::vector<double>& t, const std::vector<double>& y, std::size_t first,
                 std::size_t last) {
  double st = 0, sy = 0, stt = 0, sty = 0;
  std::size_t n = 0;
  for (std::size_t k = first; k <= last; ++k) {
    if (!(y[k] > 0.0)) continue;
    const double ly = std::log(y[k]);
    st += t[k];
    sy += ly;
    stt += t[k] * t[k];
    sty += t[k] * ly;
    ++n;
  }
  if (n < 2) return 0.0;
  const double dn = static_cast<double>(n);
  const double den = dn * stt - st * st;
  return den != 0.0 ? (dn * sty - st * sy) / den : 0.0;
}

}  // namespace

FigureOfMerit figure_of_merit(const EmissionTrace& trace, std::size_t n_atoms, double c1, double theta0) {
  const std::size_t n = trace.size();
  if (n < 3) {
    throw ParameterError("figure_of_merit: trace needs at least 3 samples");
  }
  const double r0 = trace.r_total.front();
  const double rend = trace.r_total.back();
  if (!(r0 > 0.0) || !(rend < 1e-6 * r0)) {
    std::ostringstream os;
    os << "figure_of_merit: horizon too short (R(t_end)/R(0) = " << rend / r0 << ")";
    throw NumericalError(os.str(), rend / r0);
  }

  auto trapezoid = [&](const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t k = 1; k < n; ++k) s += 0.5 * (y[k] + y[k - 1]) * (trace.times[k] - trace.times[k - 1]);
    return s;
  };

  std::size_t first = n - 1;
  while (first > 0 && trace.r_total[first - 1] < 10.0 * rend) --first;
  first = std::min(first, n - 3);

  auto tail = [&](const std::vector<double>& y) {
    const double slope = log_slope(trace.times, y, first, n - 1);
    return slope < 0.0 ? y.back() / (-slope) : 0.0;
  };

  FigureOfMerit out;
  out.p_c = trapezoid(trace.r_cav) + tail(trace.r_cav);
  out.p_f = trapezoid(trace.r_free) + tail(trace.r_free);
  out.ratio = out.p_c / out.p_f;
  out.estimate = static_cast<double>(n_atoms) * c1 / theta0;
  return out;
}

}  // namespace selrad
