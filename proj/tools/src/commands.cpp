#include "selrad_cli/commands.hpp"

#include <cmath>
#include <limits>

#include "selrad/errors.hpp"
#include "selrad_cli/output.hpp"
#include "selrad_cli/version.hpp"

namespace selrad::cli {

using oj = nlohmann::ordered_json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

oj num(double x) { return std::isfinite(x) ? oj(x) : oj(nullptr); }

oj rates_json(const std::optional<DecayRates>& r) {
  if (!r) return nullptr;
  return {{"gamma_total", num(r->gamma_total)}, {"gamma_c", num(r->gamma_c)}, {"gamma_f", num(r->gamma_f)},
          {"theta", num(r->theta)},             {"gamma_th", num(r->gamma_th)}, {"eval_time", r->eval_time}};
}

oj fit_json(const std::optional<FitResult>& f, const std::string& error) {
  if (!f) return {{"error", error}};
  return {{"i0", num(f->i0)},
          {"gamma_exp", num(f->gamma_exp)},
          {"b", num(f->b)},
          {"window", {f->window.first, f->window.second}},
          {"rms_residual", num(f->rms_residual)},
          {"gamma_exp_err", num(f->gamma_exp_err)},
          {"iterations", f->iterations}};
}

oj header(const ExperimentConfig& c, const char* command) {
  oj j;
  j["software"] = {{"name", kSoftwareName}, {"version", kSoftwareVersion}};
  j["command"] = command;
  j["master_seed"] = c.ensemble.master_seed;
  j["warnings"] = c.warnings;
  return j;
}

oj seeds_json(const EnsembleStats& s) {
  oj seeds = oj::array();
  oj failed = oj::array();
  for (const ConfigSummary& cs : s.configs) {
    seeds.push_back(cs.seed);
    if (!cs.ok) failed.push_back({{"index", cs.index}, {"seed", cs.seed}, {"error", cs.error}});
  }
  return {{"config_seeds", seeds}, {"failed_configs", failed}};
}

CalibrationOptions calibration_options(const ExperimentConfig& c) {
  CalibrationOptions o;
  o.probe_configs = c.calibration_probes;
  o.seed = c.ensemble.master_seed;
  o.weighting = c.c1_weighting;
  return o;
}

struct Resolved {
  PhysicalParams params;
  double c1_probe = kNaN;
};

Resolved resolve_coupling(const ExperimentConfig& c, const CloudSpec& cloud) {
  Resolved r{c.physics};
  if (c.c1_target) {
    const CalibrationResult cal = calibrate_g0(cloud, c.physics, *c.c1_target, calibration_options(c));
    r.params.g0 = cal.g0;
    r.c1_probe = cal.achieved_c1;
  }
  return r;
}

EnsembleOptions ensemble_options(const ExperimentConfig& c, const RunOptions& o) {
  EnsembleOptions e = c.ensemble;
  e.jobs = o.jobs;
  return e;
}

double c1_for_estimate(const ExperimentConfig& c, const EnsembleStats& s) {
  if (c.c1_target) return *c.c1_target;
  return c.c1_weighting == C1Weighting::Density ? s.mean_c1_density : s.mean_c1;
}

}  // namespace

std::vector<std::string> cmd_trace(const ExperimentConfig& c, const RunOptions& o) {
  std::vector<std::string> written;
  const Resolved res = resolve_coupling(c, c.cloud);
  const std::vector<double> grid = c.time_grid();

  for (const Protocol& proto : c.protocols) {
    const EnsembleStats s = ensemble_average(c.cloud, res.params, proto, grid, ensemble_options(c, o));

    CsvTable csv({"t_gamma0", "r_cav", "r_free", "r_total", "se_cav", "se_free"});
    for (std::size_t k = 0; k < s.times.size(); ++k) {
      csv.cell(s.times[k]).cell(s.mean_cav[k]).cell(s.mean_free[k]).cell(s.mean_total[k]);
      csv.cell(s.se_cav[k]).cell(s.se_free[k]);
      csv.end_row();
    }
    const std::string stem = c.output_prefix + "_trace_" + proto.name();
    written.push_back(write_file(o.out_dir, stem + ".csv", csv.str()));

    std::optional<FitResult> fit;
    std::string fit_error;
    bool used_total = false;
    try {
      fit = fit_ensemble_trace(s, c.fit_window, c.fit_skip_first_sample, &used_total);
    } catch (const Error& e) {
      fit_error = e.what();
    }

    oj side = header(c, "trace");
    side["protocol"] = proto.name();
    side["n_atoms"] = c.cloud.n_atoms;
    side["n_configs"] = s.n_configs;
    side["n_failed"] = s.n_failed;
    side["g0"] = res.params.g0;
    side["c1_target"] = c.c1_target ? oj(*c.c1_target) : oj(nullptr);
    side["c1_probe"] = num(res.c1_probe);
    side["c1_mean_density"] = s.mean_c1_density;
    side["c1_mean_coupling"] = s.mean_c1;
    side["decay_rates_t0"] = rates_json(s.rates_t0);
    side["theta_t0"] = s.rates_t0 ? num(s.rates_t0->theta) : oj(nullptr);
    side["fit_channel"] = used_total ? "total" : "cavity";
    side["fit"] = fit_json(fit, fit_error);
    const double theta0 = s.rates_t0 ? s.rates_t0->theta : kNaN;
    side["figure_of_merit"] = {{"p_c", s.mean_p_cav},
                               {"p_f", s.mean_p_free},
                               {"ratio", num(s.mean_p_cav / s.mean_p_free)},
                               {"estimate", num(c.cloud.n_atoms * c1_for_estimate(c, s) / theta0)}};
    side.update(seeds_json(s));
    side["config"] = resolved_json(c);
    written.push_back(write_file(o.out_dir, stem + ".json", dump_json(side)));

    if (c.per_config_traces > 0) {
      CsvTable per({"config", "seed", "t_gamma0", "r_cav", "r_free", "r_total"});
      const std::size_t n = std::min(c.per_config_traces, c.ensemble.n_configs);
      for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t seed = derive_seed(c.ensemble.master_seed, i);
        const ConfigRecord rec = run_configuration(c.cloud, res.params, proto, grid, seed);
        for (std::size_t k = 0; k < grid.size(); ++k) {
          per.cell(static_cast<unsigned long long>(i)).cell(static_cast<unsigned long long>(seed)).cell(grid[k]);
          per.cell(rec.trace.r_cav[k]).cell(rec.trace.r_free[k]).cell(rec.trace.r_total[k]);
          per.end_row();
        }
      }
      written.push_back(write_file(o.out_dir, c.output_prefix + "_configs_" + proto.name() + ".csv", per.str()));
    }
  }
  return written;
}

std::vector<std::string> cmd_sweep(const ExperimentConfig& c, const RunOptions& o) {
  if (c.sweep_n.empty() || c.sweep_c1.empty()) {
    throw ConfigError("sweep: sweep.n_values and sweep.c1_values must both be non-empty");
  }
  SweepSpec spec{c.sweep_n, c.sweep_c1, c.protocols};
  SweepOptions so;
  so.ensemble = ensemble_options(c, o);
  so.calibration = calibration_options(c);
  so.fit_window = c.fit_window;
  so.skip_first_sample = c.fit_skip_first_sample;
  const std::vector<SweepRow> rows = sweep(spec, c.cloud, c.physics, c.time_grid(), so);

  CsvTable csv({"n_atoms",     "c1_target",  "c1_achieved", "protocol",       "g0",         "n_failed",
                "gamma_exp",   "gamma_exp_err", "gamma_exp0", "exp_slope",    "gamma_c",    "gamma_f",
                "theta",       "gamma_f_theta", "gamma_th",   "gamma_th0",    "th_slope",   "gamma_total_t0",
                "gamma_c_t0",  "gamma_f_t0", "fom_ratio",    "fom_estimate", "c1_mean_density", "c1_mean_coupling"});
  oj row_meta = oj::array();
  for (const SweepRow& r : rows) {
    const DecayRates d = r.rates_t0.value_or(DecayRates{kNaN, kNaN, kNaN, kNaN, kNaN, 0.0});
    csv.cell(static_cast<long long>(r.n_atoms)).cell(r.c1_target).cell(r.c1_achieved).cell(std::string_view(r.protocol));
    csv.cell(r.g0).cell(static_cast<unsigned long long>(r.stats.n_failed));
    csv.cell(r.fit ? r.fit->gamma_exp : kNaN).cell(r.fit ? r.fit->gamma_exp_err : kNaN);
    csv.cell(r.exp_intercept).cell(r.exp_slope).cell(r.gamma_c_extracted).cell(r.gamma_f_extracted);
    csv.cell(d.theta).cell(d.gamma_f * d.theta).cell(d.gamma_th).cell(r.th_intercept).cell(r.th_slope);
    csv.cell(d.gamma_total).cell(d.gamma_c).cell(d.gamma_f).cell(r.fom_ratio).cell(r.fom_estimate);
    csv.cell(r.stats.mean_c1_density).cell(r.stats.mean_c1);
    csv.end_row();

    oj m = {{"n_atoms", r.n_atoms}, {"c1_target", r.c1_target}, {"protocol", r.protocol}, {"g0", r.g0},
            {"n_failed", r.stats.n_failed}, {"fit", fit_json(r.fit, r.fit_error)}, {"decay_rates_t0", rates_json(r.rates_t0)}};
    oj failed = oj::array();
    for (const ConfigSummary& cs : r.stats.configs) {
      if (!cs.ok) failed.push_back({{"index", cs.index}, {"seed", cs.seed}, {"error", cs.error}});
    }
    m["failed_configs"] = failed;
    row_meta.push_back(m);
  }
  std::vector<std::string> written;
  const std::string stem = c.output_prefix + "_sweep";
  written.push_back(write_file(o.out_dir, stem + ".csv", csv.str()));

  oj side = header(c, "sweep");
  oj seeds = oj::array();
  for (std::size_t i = 0; i < c.ensemble.n_configs; ++i) seeds.push_back(derive_seed(c.ensemble.master_seed, i));
  side["config_seeds"] = seeds;
  side["rows"] = row_meta;
  side["config"] = resolved_json(c);
  written.push_back(write_file(o.out_dir, stem + ".json", dump_json(side)));
  return written;
}

std::vector<std::string> cmd_histogram(const ExperimentConfig& c, const RunOptions& o) {
  const Resolved res = resolve_coupling(c, c.cloud);
  const std::vector<double> grid = linear_time_grid(c.t_end, 2);

  CsvTable csv({"protocol", "bin_lo", "bin_hi", "bin_center", "weight"});
  oj per = oj::array();
  oj seeds;
  for (const Protocol& proto : c.protocols) {
    const EnsembleStats s = ensemble_average(c.cloud, res.params, proto, grid, ensemble_options(c, o));
    const PopulationHistogram& h = s.histogram;
    const std::vector<double> centers = h.bin_centers();
    const double below = h.mass_below(1.0);
    for (std::size_t k = 0; k < h.weights.size(); ++k) {
      csv.cell(std::string_view(proto.name())).cell(h.bin_edges[k]).cell(h.bin_edges[k + 1]).cell(centers[k]);
      csv.cell(h.weights[k]);
      csv.end_row();
    }
    oj p = {{"protocol", proto.name()},
            {"n_configs", s.n_configs},
            {"n_failed", s.n_failed},
            {"n_excluded_modes", h.n_excluded},
            {"mass_below_gamma0", below},
            {"mass_above_gamma0", 1.0 - below},
            {"c1_mean_density", s.mean_c1_density},
            {"c1_mean_coupling", s.mean_c1}};
    const oj sj = seeds_json(s);
    p["failed_configs"] = sj["failed_configs"];
    if (seeds.is_null()) seeds = sj["config_seeds"];
    per.push_back(p);
  }
  std::vector<std::string> written;
  const std::string stem = c.output_prefix + "_histogram";
  written.push_back(write_file(o.out_dir, stem + ".csv", csv.str()));
  oj side = header(c, "histogram");
  side["g0"] = res.params.g0;
  side["c1_target"] = c.c1_target ? oj(*c.c1_target) : oj(nullptr);
  side["c1_probe"] = num(res.c1_probe);
  side["bins"] = {{"count", c.ensemble.hist_bins}, {"lo", c.ensemble.hist_lo}, {"hi", c.ensemble.hist_hi}};
  side["protocols"] = per;
  side["config_seeds"] = seeds;
  side["config"] = resolved_json(c);
  written.push_back(write_file(o.out_dir, stem + ".json", dump_json(side)));
  return written;
}

}  // namespace selrad::cli
