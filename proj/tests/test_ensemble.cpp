#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "selrad/cavity.hpp"
#include "selrad/ensemble.hpp"
#include "selrad/errors.hpp"

using namespace selrad;

namespace {

PhysicalParams params_for(const CloudSpec& c, double g0) {
  PhysicalParams p;
  p.g0 = g0;
  p.z_ref = c.center.z() * p.wavelength();
  return p;
}

CloudSpec small_cloud(int n) {
  CloudSpec c;
  c.n_atoms = n;
  return c;
}

Protocol make(ProtocolKind k) {
  Protocol p;
  p.kind = k;
  return p;
}

}  // namespace

TEST_CASE("sampler basics") {
  CloudSpec c;
  c.n_atoms = 1;
  c.rms_sizes = Vec3(1e-9, 1e-9, 1e-9);
  c.center = Vec3(0.3, -0.2, 0.5);
  const AtomEnsemble a = sample_positions(c, 5);
  CHECK((a.positions[0] - 2 * kPi * c.center).norm() <= 1e-7);

  const CloudSpec d = small_cloud(40);
  const AtomEnsemble x = sample_positions(d, 77), y = sample_positions(d, 77), z = sample_positions(d, 78);
  CHECK(x.positions == y.positions);
  CHECK(x.positions != z.positions);
  CHECK(x.min_pair_distance() >= d.min_separation * 2 * kPi);
  for (const Vec3& r : x.positions) CHECK(r.z() > 0.0);
}

TEST_CASE("sampler rms sizes converge") {
  CloudSpec c;
  c.n_atoms = 100;
  c.surface_z.reset();
  c.min_separation = 0.0;
  c.rms_sizes = Vec3(0.5, 2.3, 0.1);
  Eigen::Vector3d sum = Eigen::Vector3d::Zero(), sum2 = Eigen::Vector3d::Zero();
  int count = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    for (const Vec3& r : sample_positions(c, derive_seed(3, s)).positions) {
      const Vec3 u = r / (2 * kPi) - c.center;
      sum += u;
      sum2 += u.cwiseProduct(u);
      ++count;
    }
  }
  const Eigen::Vector3d mean = sum / count;
  const Eigen::Vector3d rms = (sum2 / count - mean.cwiseProduct(mean)).cwiseSqrt();
  for (int a = 0; a < 3; ++a) CHECK(rms(a) == doctest::Approx(c.rms_sizes(a)).epsilon(0.02));
}

TEST_CASE("sampler and cloud errors") {
  CloudSpec c;
  c.n_atoms = 30;
  c.rms_sizes = Vec3(0.01, 0.01, 0.01);
  c.min_separation = 0.05;
  CHECK_THROWS_WITH_AS(sample_positions(c, 1), doctest::Contains("cloud too dense"), NumericalError);
  CloudSpec low;
  low.center = Vec3(0, 0, 0.2);
  CHECK_THROWS_AS(low.validate(), ParameterError);
  CloudSpec neg;
  neg.rms_sizes = Vec3(0.1, -1, 0.1);
  CHECK_THROWS_AS(neg.validate(), ParameterError);
  CloudSpec zero;
  zero.n_atoms = 0;
  CHECK_THROWS_AS(zero.validate(), ParameterError);
}

TEST_CASE("derived seeds are distinct and stable") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t m = 0; m < 10; ++m)
    for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(m, i));
  CHECK(seen.size() == 10000);
  CHECK(derive_seed(42, 7) == derive_seed(42, 7));
}

TEST_CASE("single atom record is a Purcell exponential for every protocol") {
  const CloudSpec c = small_cloud(1);
  const double c1 = 0.05;
  const std::vector<double> grid = linear_time_grid(4.0, 41);
  PhysicalParams p = params_for(c, 1.0);
  const CalibrationResult cal = calibrate_g0(c, p, c1, CalibrationOptions{});
  p.g0 = cal.g0;
  for (ProtocolKind k : {ProtocolKind::SteadyState, ProtocolKind::TimedDicke, ProtocolKind::Pulse}) {
    const ConfigRecord r = run_configuration(c, p, make(k), grid, 9);
    const double rate = 1.0 + r.c1_mean;
    CHECK(r.decay_rates(0) == doctest::Approx(rate).epsilon(1e-12));
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CHECK(r.trace.r_total[i] == doctest::Approx(r.trace.r_total[0] * std::exp(-rate * grid[i])).epsilon(1e-10));
    }
  }
}

TEST_CASE("steady-state record is stationary and long square pulses reach it") {
  const CloudSpec c = small_cloud(6);
  const PhysicalParams p = params_for(c, 0.5);
  const std::vector<double> grid = linear_time_grid(1.0, 11);
  const ConfigRecord ss = run_configuration(c, p, make(ProtocolKind::SteadyState), grid, 4);
  CouplingMatrix m = build_coupling_matrix(ss.atoms, p);
  m.drive = drive_vector(ss.atoms, p, 0.01);
  CHECK((m.m_total * ss.sigma0.sigma + m.drive).norm() <= 1e-10 * m.drive.norm());

  Protocol sq = make(ProtocolKind::Pulse);
  sq.shape = PulseShape::Square;
  sq.duration = 2.0 * std::log(1e9) / ss.decay_rates.minCoeff();
  const ConfigRecord pr = run_configuration(c, p, sq, grid, 4);
  CHECK((pr.sigma0.sigma - ss.sigma0.sigma).norm() <= 1e-6 * ss.sigma0.sigma.norm());
}

TEST_CASE("protocol envelopes") {
  Protocol g = make(ProtocolKind::Pulse);
  const PulseEnvelope f = g.envelope();
  CHECK(f(3 * g.fwhm) == 1.0);
  CHECK(f(3 * g.fwhm + 0.5 * g.fwhm) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(g.pulse_end() == doctest::Approx(6 * g.fwhm));
  Protocol s = g;
  s.shape = PulseShape::Square;
  CHECK(s.envelope()(s.duration) == 1.0);
  CHECK(s.envelope()(s.duration * 1.001) == 0.0);
  CHECK(make(ProtocolKind::TimedDicke).name() == "tds");
  Protocol l = g;
  l.label = "short";
  CHECK(l.name() == "short");
}

TEST_CASE("ensemble of one equals the configuration") {
  const CloudSpec c = small_cloud(12);
  const PhysicalParams p = params_for(c, 0.5);
  const std::vector<double> grid = linear_time_grid(3.0, 31);
  EnsembleOptions o;
  o.n_configs = 1;
  o.master_seed = 5;
  const EnsembleStats st = ensemble_average(c, p, make(ProtocolKind::TimedDicke), grid, o);
  const ConfigRecord r = run_configuration(c, p, make(ProtocolKind::TimedDicke), grid, derive_seed(5, 0));
  CHECK(st.mean_cav == r.trace.r_cav);
  CHECK(st.mean_free == r.trace.r_free);
  CHECK(st.mean_total == r.trace.r_total);
  REQUIRE(st.rates_t0);
  REQUIRE(r.rates_t0);
  CHECK(st.rates_t0->theta == doctest::Approx(r.rates_t0->theta).epsilon(1e-12));
  CHECK(st.n_failed == 0);
}

TEST_CASE("ensemble is independent of worker count") {
  const CloudSpec c = small_cloud(15);
  const PhysicalParams p = params_for(c, 0.8);
  const std::vector<double> grid = linear_time_grid(3.0, 31);
  EnsembleOptions o;
  o.n_configs = 300;
  o.master_seed = 11;
  o.jobs = 1;
  const EnsembleStats a = ensemble_average(c, p, make(ProtocolKind::SteadyState), grid, o);
  o.jobs = 4;
  const EnsembleStats b = ensemble_average(c, p, make(ProtocolKind::SteadyState), grid, o);
  CHECK(a.mean_cav == b.mean_cav);
  CHECK(a.mean_free == b.mean_free);
  CHECK(a.se_total == b.se_total);
  CHECK(a.histogram.weights == b.histogram.weights);
  CHECK(a.theta_t[0] == b.theta_t[0]);
  CHECK(a.mean_p_cav == b.mean_p_cav);
}

TEST_CASE("standard errors shrink as one over root n") {
  const CloudSpec c = small_cloud(10);
  const PhysicalParams p = params_for(c, 0.8);
  const std::vector<double> grid = linear_time_grid(2.0, 5);
  std::vector<double> se;
  for (std::size_t n : {100u, 400u, 1600u}) {
    EnsembleOptions o;
    o.n_configs = n;
    o.master_seed = 21;
    se.push_back(ensemble_average(c, p, make(ProtocolKind::SteadyState), grid, o).se_free[2]);
  }
  CHECK(se[0] / se[1] == doctest::Approx(2.0).epsilon(0.25));
  CHECK(se[1] / se[2] == doctest::Approx(2.0).epsilon(0.25));
}

TEST_CASE("calibration hits the target cooperativity") {
  const CloudSpec c = small_cloud(30);
  const PhysicalParams p = params_for(c, 1.0);
  for (double target : {0.005, 0.035, 0.05}) {
    CalibrationOptions co;
    co.seed = 8;
    const CalibrationResult cal = calibrate_g0(c, p, target, co);
    CHECK(cal.achieved_c1 == doctest::Approx(target).epsilon(1e-12));
    PhysicalParams q = p;
    q.g0 = cal.g0;
    EnsembleOptions o;
    o.n_configs = 400;
    o.master_seed = 99;
    const EnsembleStats st = ensemble_average(c, q, make(ProtocolKind::TimedDicke), linear_time_grid(1.0, 3), o);
    CHECK(st.mean_c1_density == doctest::Approx(target).epsilon(0.05));
  }
  CHECK(calibrate_g0(c, p, 0.0, CalibrationOptions{}).g0 == 0.0);
  CHECK_THROWS_AS(calibrate_g0(c, p, -1.0, CalibrationOptions{}), ParameterError);
}

TEST_CASE("sweep for a single atom follows the Purcell line") {
  CloudSpec c = small_cloud(1);
  c.rms_sizes = Vec3(1e-7, 1e-7, 1e-7);
  const PhysicalParams p = params_for(c, 1.0);
  SweepSpec spec{{1}, {0.0, 0.022, 0.05}, {make(ProtocolKind::SteadyState)}};
  SweepOptions o;
  o.ensemble.n_configs = 20;
  o.calibration.weighting = C1Weighting::Coupling;
  const std::vector<double> grid = linear_time_grid(4.0, 81);
  const std::vector<SweepRow> rows = sweep(spec, c, p, grid, o);
  REQUIRE(rows.size() == 3);
  for (const SweepRow& r : rows) {
    REQUIRE(r.fit);
    CHECK(r.exp_slope == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(r.exp_intercept == doctest::Approx(1.0).epsilon(1e-6));
  }
  CHECK(rows[0].fit_error.empty());

  SweepSpec one{{5}, {0.02}, {make(ProtocolKind::TimedDicke)}};
  const std::vector<SweepRow> single = sweep(one, small_cloud(5), p, grid, o);
  REQUIRE(single.size() == 1);
  CHECK(std::isnan(single[0].exp_slope));
  CHECK(single[0].stats.n_configs == 20);

  SweepSpec empty{{}, {0.02}, {make(ProtocolKind::TimedDicke)}};
  CHECK_THROWS_AS(sweep(empty, c, p, grid, o), ParameterError);
}
