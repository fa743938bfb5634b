#include "selrad/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <thread>
#include <tuple>

#include "selrad/cavity.hpp"
#include "selrad/errors.hpp"
#include "selrad/spectral.hpp"

namespace selrad {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Runs fn(i) for i in [0, n) on `jobs` threads. Exceptions must be handled inside fn.
template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (unsigned w = 0; w < jobs; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

struct Welford {
  std::vector<double> mean, m2;
  std::size_t n = 0;

  explicit Welford(std::size_t size) : mean(size, 0.0), m2(size, 0.0) {}

  void add(const std::vector<double>& x) {
    ++n;
    const double dn = static_cast<double>(n);
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double delta = x[k] - mean[k];
      mean[k] += delta / dn;
      m2[k] += delta * (x[k] - mean[k]);
    }
  }

  std::vector<double> standard_error() const {
    std::vector<double> se(mean.size(), 0.0);
    if (n < 2) return se;
    const double dn = static_cast<double>(n);
    for (std::size_t k = 0; k < se.size(); ++k) se[k] = std::sqrt(m2[k] / (dn - 1.0) / dn);
    return se;
  }
};

double linear_fit(const std::vector<double>& x, const std::vector<double>& y, double* intercept) {
  const std::size_t n = x.size();
  if (n < 2) {
    *intercept = kNaN;
    return kNaN;
  }
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < n; ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  if (!(sxx > 0.0)) {
    *intercept = kNaN;
    return kNaN;
  }
  const double slope = sxy / sxx;
  *intercept = my - slope * mx;
  return slope;
}

}  // namespace

void CloudSpec::validate() const {
  if (n_atoms < 1) throw ParameterError("cloud: n_atoms must be >= 1");
  if (!(rms_sizes.minCoeff() > 0.0)) throw ParameterError("cloud: rms sizes must be > 0");
  if (!(min_separation >= 0.0)) throw ParameterError("cloud: min_separation must be >= 0");
  if (!center.allFinite()) throw ParameterError("cloud: center must be finite");
  if (surface_z && !(center.z() - 3.0 * rms_sizes.z() > *surface_z)) {
    std::ostringstream os;
    os << "cloud: center.z - 3 rms_z = " << center.z() - 3.0 * rms_sizes.z()
       << " must lie above the surface plane z = " << *surface_z;
    throw ParameterError(os.str());
  }
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index) {
  return splitmix64(splitmix64(master_seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

AtomEnsemble sample_positions(const CloudSpec& cloud, std::uint64_t seed, double k0) {
  cloud.validate();
  const double lambda = 2.0 * kPi / k0;
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double min_sep = cloud.min_separation * lambda;

  AtomEnsemble out;
  out.positions.reserve(static_cast<std::size_t>(cloud.n_atoms));
  for (int i = 0; i < cloud.n_atoms; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxRedraws && !placed; ++attempt) {
      Vec3 r;
      for (int a = 0; a < 3; ++a) r(a) = cloud.center(a) + cloud.rms_sizes(a) * normal(gen);
      if (cloud.surface_z && !(r.z() > *cloud.surface_z)) continue;
      r *= lambda;
      placed = std::all_of(out.positions.begin(), out.positions.end(),
                           [&](const Vec3& p) { return (p - r).norm() >= min_sep && p != r; });
      if (placed) out.positions.push_back(r);
    }
    if (!placed) {
      std::ostringstream os;
      os << "sample_positions: cloud too dense for min_separation (atom " << i << ")";
      throw NumericalError(os.str());
    }
  }
  return out;
}

std::string Protocol::name() const {
  if (!label.empty()) return label;
  switch (kind) {
    case ProtocolKind::SteadyState: return "ss";
    case ProtocolKind::TimedDicke: return "tds";
    case ProtocolKind::Pulse: return "pulse";
  }
  return "unknown";
}

double Protocol::pulse_end() const {
  return shape == PulseShape::Gaussian ? 6.0 * fwhm : duration;
}

PulseEnvelope Protocol::envelope() const {
  if (shape == PulseShape::Gaussian) {
    const double center = 3.0 * fwhm;
    const double a = 4.0 * std::log(2.0) / (fwhm * fwhm);
    return [center, a](double t) { return std::exp(-a * (t - center) * (t - center)); };
  }
  const double end = duration;
  return [end](double t) { return t <= end ? 1.0 : 0.0; };
}

ConfigRecord run_configuration(const CloudSpec& cloud, const PhysicalParams& params, const Protocol& protocol,
                               std::span<const double> time_grid, std::uint64_t seed) {
  ConfigRecord rec;
  rec.seed = seed;
  rec.atoms = sample_positions(cloud, seed, params.k0);
  CouplingMatrix m = build_coupling_matrix(rec.atoms, params);
  rec.c1_mean = m.c1_mean;
  rec.c1_density_mean = m.c1_density_mean;
  m.drive = params.g0 > 0.0 ? drive_vector(rec.atoms, params, protocol.amplitude)
                            : guided_drive_profile(rec.atoms, params, protocol.amplitude);

  switch (protocol.kind) {
    case ProtocolKind::SteadyState: rec.sigma0 = prepare_steady_state(m); break;
    case ProtocolKind::TimedDicke: rec.sigma0 = prepare_timed_dicke(m); break;
    case ProtocolKind::Pulse:
      rec.sigma0 = drive_evolution(m, protocol.envelope(), protocol.pulse_end());
      break;
  }

  const SpectralDecomposition decomp = eigendecompose(m);
  rec.condition_estimate = decomp.condition_estimate;
  rec.decay_rates = decomp.decay_rates;
  rec.amplitudes = decompose_state(decomp, rec.sigma0);
  rec.trace = emission_trace(decomp, rec.amplitudes, m, time_grid);
  rec.integrated = integrated_emission(decomp, rec.amplitudes, m);
  try {
    rec.rates_t0 = decay_rates_at(rec.sigma0, m, 0.0);
  } catch (const NumericalError&) {
    rec.rates_t0.reset();
  }
  return rec;
}

EnsembleStats ensemble_average(const CloudSpec& cloud, const PhysicalParams& params, const Protocol& protocol,
                               std::span<const double> time_grid, const EnsembleOptions& options) {
  if (options.n_configs < 1) throw ParameterError("ensemble_average: n_configs must be >= 1");
  cloud.validate();
  params.validate();

  const std::size_t n_t = time_grid.size();
  Welford cav(n_t), free(n_t), total(n_t), rdc(n_t), rdf(n_t);
  HistogramAccumulator hist(options.hist_bins, options.hist_lo, options.hist_hi);

  EnsembleStats stats;
  stats.times.assign(time_grid.begin(), time_grid.end());
  stats.master_seed = options.master_seed;
  stats.n_configs = options.n_configs;
  stats.configs.resize(options.n_configs);

  double sum_c1 = 0, sum_c1d = 0, sum_pc = 0, sum_pf = 0, sum_pop = 0;
  std::size_t n_ok = 0;

  // Work in blocks to bound memory; reduce each block in index order.
  constexpr std::size_t kBlock = 256;
  std::vector<std::optional<ConfigRecord>> block;
  for (std::size_t start = 0; start < options.n_configs; start += kBlock) {
    const std::size_t len = std::min(kBlock, options.n_configs - start);
    block.assign(len, std::nullopt);
    parallel_for(len, options.jobs, [&](std::size_t j) {
      const std::size_t index = start + j;
      ConfigSummary& s = stats.configs[index];
      s.index = index;
      s.seed = derive_seed(options.master_seed, index);
      try {
        block[j] = run_configuration(cloud, params, protocol, time_grid, s.seed);
        s.ok = true;
      } catch (const Error& e) {
        s.ok = false;
        s.error = e.what();
      }
    });

    for (std::size_t j = 0; j < len; ++j) {
      if (!block[j]) {
        ++stats.n_failed;
        continue;
      }
      const ConfigRecord& rec = *block[j];
      ConfigSummary& s = stats.configs[start + j];
      s.c1_mean = rec.c1_mean;
      s.c1_density_mean = rec.c1_density_mean;
      s.gamma_th0 = rec.rates_t0 ? rec.rates_t0->gamma_th : kNaN;
      s.theta0 = rec.rates_t0 ? rec.rates_t0->theta : kNaN;
      s.p_cav = rec.integrated.p_cav;
      s.p_free = rec.integrated.p_free;
      s.min_decay_rate = rec.decay_rates.size() ? rec.decay_rates.minCoeff() : kNaN;
      s.condition_estimate = rec.condition_estimate;

      cav.add(rec.trace.r_cav);
      free.add(rec.trace.r_free);
      total.add(rec.trace.r_total);
      rdc.add(rec.trace.rdot_cav);
      rdf.add(rec.trace.rdot_free);
      hist.add(rec.amplitudes, rec.decay_rates, params.gamma0);
      sum_c1 += rec.c1_mean;
      sum_c1d += rec.c1_density_mean;
      sum_pc += rec.integrated.p_cav;
      sum_pf += rec.integrated.p_free;
      sum_pop += rec.sigma0.sigma.squaredNorm();
      ++n_ok;
    }
  }

  if (static_cast<double>(stats.n_failed) > options.max_failed_fraction * static_cast<double>(options.n_configs)) {
    std::string first;
    for (const auto& s : stats.configs) {
      if (!s.ok) {
        first = s.error;
        break;
      }
    }
    std::ostringstream os;
    os << "ensemble_average: " << stats.n_failed << " of " << options.n_configs
       << " configurations failed (first: " << first << ")";
    throw NumericalError(os.str(), static_cast<double>(stats.n_failed));
  }

  stats.mean_cav = cav.mean;
  stats.mean_free = free.mean;
  stats.mean_total = total.mean;
  stats.se_cav = cav.standard_error();
  stats.se_free = free.standard_error();
  stats.se_total = total.standard_error();
  stats.mean_rdot_cav = rdc.mean;
  stats.mean_rdot_free = rdf.mean;
  stats.histogram = hist.result();

  const double dn = static_cast<double>(std::max<std::size_t>(n_ok, 1));
  stats.mean_c1 = sum_c1 / dn;
  stats.mean_c1_density = sum_c1d / dn;
  stats.mean_p_cav = sum_pc / dn;
  stats.mean_p_free = sum_pf / dn;
  stats.mean_population0 = sum_pop / dn;

  const double scale = params.gamma0 * stats.mean_population0;
  stats.theta_t.assign(n_t, kNaN);
  for (std::size_t k = 0; k < n_t; ++k) {
    try {
      const DecayRates r = decay_rates_from({stats.mean_cav[k], stats.mean_free[k], stats.mean_total[k]},
                                            {stats.mean_rdot_cav[k], stats.mean_rdot_free[k]},
                                            stats.times[k], scale);
      stats.theta_t[k] = r.theta;
      if (k == 0) stats.rates_t0 = r;
    } catch (const NumericalError&) {
    }
  }
  return stats;
}

CalibrationResult calibrate_g0(const CloudSpec& cloud, const PhysicalParams& params, double target_c1,
                               const CalibrationOptions& options) {
  if (!(target_c1 >= 0.0)) throw ParameterError("calibrate_g0: target C1 must be >= 0");
  if (options.probe_configs < 1) throw ParameterError("calibrate_g0: need at least one probe");
  if (target_c1 == 0.0) return CalibrationResult{0.0, 0.0};

  PhysicalParams unit = params;
  unit.g0 = 1.0;
  const std::uint64_t stream = options.seed ^ 0xc1ca11b0a7e5eedULL;
  double sum = 0.0;
  for (std::size_t p = 0; p < options.probe_configs; ++p) {
    const AtomEnsemble atoms = sample_positions(cloud, derive_seed(stream, p), params.k0);
    double s1 = 0.0, s2 = 0.0;
    for (const Vec3& r : atoms.positions) {
      const double c1 = single_atom_cooperativity(r, unit);
      s1 += c1;
      s2 += c1 * c1;
    }
    sum += options.weighting == C1Weighting::Density ? s1 / static_cast<double>(atoms.n_atoms()) : s2 / s1;
  }
  const double c1_unit = sum / static_cast<double>(options.probe_configs);
  if (!(c1_unit > 0.0) || !std::isfinite(c1_unit)) {
    throw NumericalError("calibrate_g0: probe cooperativity is degenerate", c1_unit);
  }
  CalibrationResult out;
  out.g0 = std::sqrt(target_c1 / c1_unit);
  out.achieved_c1 = c1_unit * out.g0 * out.g0;
  return out;
}

std::vector<double> linear_time_grid(double t_end, std::size_t points) {
  if (points < 2 || !(t_end > 0.0)) throw ParameterError("time grid: need points >= 2 and t_end > 0");
  std::vector<double> t(points);
  for (std::size_t k = 0; k < points; ++k) {
    t[k] = t_end * static_cast<double>(k) / static_cast<double>(points - 1);
  }
  return t;
}

FitResult fit_ensemble_trace(const EnsembleStats& stats, TimeWindow window, bool skip_first_sample,
                             bool* used_total) {
  const bool cav_zero = std::all_of(stats.mean_cav.begin(), stats.mean_cav.end(), [](double v) { return v == 0.0; });
  if (used_total) *used_total = cav_zero;
  const std::vector<double>& y = cav_zero ? stats.mean_total : stats.mean_cav;
  if (skip_first_sample && stats.times.size() > 1) {
    const double dt = stats.times[1] - stats.times[0];
    window.t_start = std::max(window.t_start, stats.times[0] + dt * (1.0 - 1e-9));
  }
  return fit_exponential(stats.times, y, window);
}

std::vector<SweepRow> sweep(const SweepSpec& spec, const CloudSpec& cloud, const PhysicalParams& params,
                            std::span<const double> time_grid, const SweepOptions& options) {
  if (spec.n_values.empty() || spec.c1_values.empty() || spec.protocols.empty()) {
    throw ParameterError("sweep: every axis (n, c1, protocols) needs at least one value");
  }
  std::vector<SweepRow> rows;
  for (int n : spec.n_values) {
    CloudSpec c = cloud;
    c.n_atoms = n;
    for (double c1 : spec.c1_values) {
      const CalibrationResult cal = calibrate_g0(c, params, c1, options.calibration);
      PhysicalParams p = params;
      p.g0 = cal.g0;
      for (const Protocol& proto : spec.protocols) {
        SweepRow row;
        row.n_atoms = n;
        row.c1_target = c1;
        row.protocol = proto.name();
        row.g0 = cal.g0;
        row.c1_achieved = cal.achieved_c1;
        row.stats = ensemble_average(c, p, proto, time_grid, options.ensemble);
        row.rates_t0 = row.stats.rates_t0;
        try {
          row.fit = fit_ensemble_trace(row.stats, options.fit_window, options.skip_first_sample);
        } catch (const Error& e) {
          row.fit_error = e.what();
        }
        row.fom_ratio = row.stats.mean_p_cav / row.stats.mean_p_free;
        row.fom_estimate = row.rates_t0 ? n * c1 / row.rates_t0->theta : kNaN;
        rows.push_back(std::move(row));
      }
    }
  }

  // Extrapolate along C1 at fixed (N, protocol).
  std::map<std::pair<int, std::string>, std::vector<std::size_t>> groups;
  for (std::size_t k = 0; k < rows.size(); ++k) groups[{rows[k].n_atoms, rows[k].protocol}].push_back(k);
  for (const auto& [key, members] : groups) {
    std::vector<double> xe, ye, xt, yt;
    for (auto k : members) {
      if (rows[k].fit) {
        xe.push_back(rows[k].c1_target);
        ye.push_back(rows[k].fit->gamma_exp);
      }
      if (rows[k].rates_t0) {
        xt.push_back(rows[k].c1_target);
        yt.push_back(rows[k].rates_t0->gamma_th);
      }
    }
    double ie = kNaN, it = kNaN;
    const double se = linear_fit(xe, ye, &ie);
    const double st = linear_fit(xt, yt, &it);
    for (auto k : members) {
      SweepRow& r = rows[k];
      r.exp_slope = se;
      r.exp_intercept = ie;
      r.th_slope = st;
      r.th_intercept = it;
      r.gamma_c_extracted = r.fit ? r.fit->gamma_exp - ie : kNaN;
      r.gamma_f_extracted = r.rates_t0 ? ie / r.rates_t0->theta : kNaN;
    }
  }
  return rows;
}

}  // namespace selrad
