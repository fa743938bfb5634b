#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <unsupported/Eigen/NonLinearOptimization>

#include "selrad/analysis.hpp"
#include "selrad/errors.hpp"

namespace selrad {
namespace {

// Residuals of A exp(-g (t - t0)) + b against normalized samples.
struct ExpOffsetFunctor {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  const std::vector<double>& t;
  const std::vector<double>& y;

  int inputs() const { return 3; }
  int values() const { return static_cast<int>(t.size()); }

  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& f) const {
    for (std::size_t k = 0; k < t.size(); ++k) {
      f(static_cast<Eigen::Index>(k)) = p(0) * std::exp(-p(1) * t[k]) + p(2) - y[k];
    }
    return 0;
  }

  int df(const Eigen::VectorXd& p, Eigen::MatrixXd& j) const {
    for (std::size_t k = 0; k < t.size(); ++k) {
      const auto r = static_cast<Eigen::Index>(k);
      const double e = std::exp(-p(1) * t[k]);
      j(r, 0) = e;
      j(r, 1) = -p(0) * t[k] * e;
      j(r, 2) = 1.0;
    }
    return 0;
  }
};

struct RawFit {
  double amplitude, rate, offset, rms;
  int iterations;
};

RawFit fit_once(const std::vector<double>& t, const std::vector<double>& y) {
  // Provisional offset: median of the trailing quarter.
  std::vector<double> tail(y.end() - static_cast<std::ptrdiff_t>(std::max<std::size_t>(2, y.size() / 4)), y.end());
  std::nth_element(tail.begin(), tail.begin() + static_cast<std::ptrdiff_t>(tail.size() / 2), tail.end());
  double b0 = tail[tail.size() / 2];
  if (!(b0 < y.front())) b0 = 0.0;

  // Log-linear fit of y - b0 for the starting amplitude and rate.
  double st = 0, sy = 0, stt = 0, sty = 0;
  int n = 0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double v = y[k] - b0;
    if (!(v > 0.0)) continue;
    const double lv = std::log(v);
    st += t[k];
    sy += lv;
    stt += t[k] * t[k];
    sty += t[k] * lv;
    ++n;
  }
  double rate0 = 1.0 / std::max(t.back(), 1e-300);
  double amp0 = y.front() - b0;
  if (n >= 2) {
    const double den = n * stt - st * st;
    if (den > 0.0) {
      const double slope = (n * sty - st * sy) / den;
      const double icpt = (sy - slope * st) / n;
      if (slope < 0.0) rate0 = -slope;
      amp0 = std::exp(icpt);
    }
  }

  ExpOffsetFunctor functor{t, y};
  Eigen::LevenbergMarquardt<ExpOffsetFunctor> lm(functor);
  lm.parameters.ftol = 1e-15;
  lm.parameters.xtol = 1e-15;
  lm.parameters.maxfev = 2000;
  Eigen::VectorXd p(3);
  p << amp0, rate0, b0;
  const auto status = lm.minimize(p);

  Eigen::VectorXd f(static_cast<Eigen::Index>(t.size()));
  functor(p, f);
  const double rms = std::sqrt(f.squaredNorm() / static_cast<double>(t.size()));
  if (status == Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation ||
      status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters || !p.allFinite()) {
    std::ostringstream os;
    os << "fit_exponential: no convergence (status " << static_cast<int>(status) << "); best iterate "
       << "amplitude " << p(0) << ", rate " << p(1) << ", offset " << p(2);
    throw NumericalError(os.str(), rms);
  }
  return RawFit{p(0), p(1), p(2), rms, static_cast<int>(lm.iter)};
}

}  // namespace

FitResult fit_exponential(std::span<const double> times, std::span<const double> values, TimeWindow window) {
  if (times.size() != values.size()) {
    throw ParameterError("fit_exponential: times and values differ in length");
  }
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] >= window.t_start && times[k] <= window.t_end) {
      if (values[k] < 0.0) throw ParameterError("fit_exponential: negative intensity");
      idx.push_back(k);
    }
  }
  constexpr std::size_t kMinSamples = 8;
  constexpr std::size_t kShifts = 2;
  if (idx.size() < kMinSamples + kShifts) {
    std::ostringstream os;
    os << "fit_exponential: window holds " << idx.size() << " samples, need " << kMinSamples + kShifts;
    throw ParameterError(os.str());
  }

  double scale = 0.0;
  for (auto k : idx) scale = std::max(scale, values[k]);
  if (!(scale > 0.0)) {
    throw ParameterError("fit_exponential: intensity is identically zero in the window");
  }

  FitResult out;
  std::vector<double> rates;
  for (std::size_t shift = 0; shift <= kShifts; ++shift) {
    const double t0 = times[idx[shift]];
    std::vector<double> t, y;
    for (std::size_t k = shift; k < idx.size(); ++k) {
      t.push_back(times[idx[k]] - t0);
      y.push_back(values[idx[k]] / scale);
    }
    const RawFit f = fit_once(t, y);
    rates.push_back(f.rate);
    if (shift == 0) {
      out.gamma_exp = f.rate;
      out.i0 = f.amplitude * scale * std::exp(f.rate * t0);
      out.b = f.offset * scale;
      out.rms_residual = f.rms * scale;
      out.iterations = f.iterations;
      out.window = {t0, times[idx.back()]};
    }
  }
  const auto [lo, hi] = std::minmax_element(rates.begin(), rates.end());
  out.gamma_exp_err = 0.5 * (*hi - *lo);
  return out;
}

}  // namespace selrad
