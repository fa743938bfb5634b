#include <cmath>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "selrad/analysis.hpp"
#include "selrad/ensemble.hpp"
#include "selrad/dynamics.hpp"
#include "selrad/errors.hpp"
#include "selrad/spectral.hpp"

using namespace selrad;

namespace {

CouplingMatrix single_atom(double c1, Complex omega) {
  PhysicalParams p;
  p.g0 = std::sqrt(c1 * p.kappa / 4.0);
  AtomEnsemble e;
  e.positions = {Vec3(0.0, 0.0, p.z_ref)};
  CouplingMatrix m = build_coupling_matrix(e, p);
  m.drive = CVector::Constant(1, omega);
  return m;
}

StateVector random_state(Eigen::Index n, std::uint64_t seed) { return {oracle::random_vector(n, seed).normalized()}; }

}  // namespace

TEST_CASE("steady state") {
  const Complex omega(0.01, 0.003);
  const double c1 = 0.05;
  const StateVector s = prepare_steady_state(single_atom(c1, omega));
  CHECK(std::abs(s.sigma(0) - Complex(0, 2) * omega / (1.0 + c1)) <= 1e-16);

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const CouplingMatrix m = fixture::system(20, 60 + seed);
    const StateVector ss = prepare_steady_state(m);
    CHECK((kI * m.m_total * ss.sigma + kI * m.drive).norm() <= 1e-10 * m.drive.norm());
  }

  CouplingMatrix m = fixture::system(8, 3);
  std::vector<double> norms;
  for (double delta : {1e3, 1e4, 1e5}) {
    CouplingMatrix md = m;
    md.m_total += delta * CMatrix::Identity(m.size(), m.size());
    norms.push_back(prepare_steady_state(md).sigma.norm() * delta);
  }
  CHECK(norms[2] == doctest::Approx(m.drive.norm()).epsilon(1e-4));
  CHECK(std::abs(norms[1] - norms[2]) < std::abs(norms[0] - norms[1]));

  CouplingMatrix zero = m;
  zero.drive.setZero();
  CHECK_THROWS_AS(prepare_steady_state(zero), ParameterError);
}

TEST_CASE("timed-Dicke state") {
  PhysicalParams p;
  p.g0 = 1.0;
  AtomEnsemble flat;
  for (int k = 0; k < 6; ++k) flat.positions.push_back(Vec3(0.5 * k, 0.0, p.z_ref));
  CouplingMatrix m = build_coupling_matrix(flat, p);
  m.drive = drive_vector(flat, p, 0.02);
  const StateVector s = prepare_timed_dicke(m);
  for (Eigen::Index k = 0; k < 6; ++k) CHECK(std::abs(s.sigma(k) - 1.0 / std::sqrt(6.0)) <= 1e-15);

  AtomEnsemble line;
  for (int k = 0; k < 5; ++k) line.positions.push_back(Vec3(0.0, 0.7 * k, 0.2));
  m = build_coupling_matrix(line, p);
  m.drive = drive_vector(line, p, Complex(0.0, 0.01));
  const StateVector t = prepare_timed_dicke(m);
  CHECK(t.sigma.norm() == doctest::Approx(1.0).epsilon(1e-15));
  for (int k = 1; k < 5; ++k) {
    const double dphi = std::arg(t.sigma(k)) - std::arg(t.sigma(0));
    CHECK(std::abs(std::remainder(dphi - p.k_wg() * 0.7 * k, 2 * kPi)) <= 1e-12);
  }
  m.drive.setZero();
  CHECK_THROWS_AS(prepare_timed_dicke(m), ParameterError);
}

TEST_CASE("drive evolution") {
  const CouplingMatrix m = fixture::system(6, 7);
  const StateVector none = drive_evolution(m, [](double) { return 0.0; }, 3.0);
  CHECK(none.sigma.norm() == 0.0);

  const SpectralDecomposition d = eigendecompose(m);
  const double t_end = 2.0 * std::log(1e9) / d.decay_rates.minCoeff();
  const StateVector cw = drive_evolution(m, [](double) { return 1.0; }, t_end);
  const StateVector ss = prepare_steady_state(m);
  CHECK((cw.sigma - ss.sigma).norm() <= 1e-6 * ss.sigma.norm());

  CHECK_THROWS_AS(drive_evolution(m, [](double) { return 1.0; }, 0.0), ParameterError);
}

TEST_CASE("modal decomposition") {
  const CouplingMatrix m = fixture::system(30, 11);
  const SpectralDecomposition d = eigendecompose(m);
  for (Eigen::Index xi : {Eigen::Index{0}, Eigen::Index{13}, Eigen::Index{29}}) {
    const ModalAmplitudes w = decompose_state(d, StateVector{d.eigenvectors.col(xi)});
    CHECK((w.w - CVector::Unit(30, xi)).norm() <= 1e-10);
  }
  CHECK(decompose_state(d, StateVector{CVector::Zero(30)}).w.norm() == 0.0);
  const StateVector s = random_state(30, 12);
  const ModalAmplitudes w = decompose_state(d, s);
  CHECK((d.eigenvectors * w.w - s.sigma).norm() <= 1e-8 * s.sigma.norm());
  CHECK((evolve(d, w, 0.0).sigma - s.sigma).norm() <= 1e-12);
}

TEST_CASE("single eigenstate decays single-exponentially") {
  const CouplingMatrix m = fixture::system(12, 21);
  const SpectralDecomposition d = eigendecompose(m);
  for (Eigen::Index xi = 0; xi < d.size(); xi += 3) {
    const StateVector s{d.eigenvectors.col(xi)};
    const ModalAmplitudes w = decompose_state(d, s);
    const double g = d.decay_rates(xi);
    const std::vector<double> grid = {0.0, 0.5, 1.0, 2.0, 4.0};
    const EmissionTrace tr = emission_trace(d, w, m, grid);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double t = grid[k];
      CHECK(evolve(d, w, t).sigma.squaredNorm() == doctest::Approx(std::exp(-g * t)).epsilon(1e-10));
      CHECK(std::log(tr.r_cav[k] / tr.r_cav[0]) == doctest::Approx(-g * t).epsilon(1e-8));
      CHECK(std::log(tr.r_free[k] / tr.r_free[0]) == doctest::Approx(-g * t).epsilon(1e-8));
      CHECK(tr.rdot_cav[k] == doctest::Approx(-g * tr.r_cav[k]).epsilon(1e-8));
      CHECK(tr.rdot_free[k] == doctest::Approx(-g * tr.r_free[k]).epsilon(1e-8));
    }
  }
}

TEST_CASE("modal evolution matches the ODE oracle") {
  for (std::uint64_t s = 0; s < 8; ++s) {
    const int n = 5 + static_cast<int>(s) * 2;
    const CouplingMatrix m = fixture::system(n, 800 + s);
    const SpectralDecomposition d = eigendecompose(m);
    const StateVector s0 = random_state(n, 900 + s);
    const ModalAmplitudes w = decompose_state(d, s0);
    for (double t : {0.5, 2.0, 5.0}) {
      CHECK((evolve(d, w, t).sigma - oracle::integrate_free(m.m_total, s0.sigma, t)).norm() <= 1e-8);
    }
  }
}

TEST_CASE("emission rates") {
  const double c1 = 0.022;
  const CouplingMatrix m1 = single_atom(c1, 0.01);
  const StateVector s{CVector::Constant(1, Complex(0.3, -0.4))};
  const double p = 0.25;
  const EmissionRates r = emission_rates(s, m1);
  CHECK(r.cav == doctest::Approx(c1 * p).epsilon(1e-13));
  CHECK(r.free == doctest::Approx(p).epsilon(1e-13));
  CHECK(r.total == doctest::Approx((1 + c1) * p).epsilon(1e-13));

  const CouplingMatrix m = fixture::system(10, 5);
  const EmissionRates z = emission_rates(StateVector{CVector::Zero(10)}, m);
  CHECK(z.cav == 0.0);
  CHECK(z.free == 0.0);
  CHECK(z.total == 0.0);
  const RateDerivatives dz = emission_rate_derivatives(StateVector{CVector::Zero(10)}, m);
  CHECK(dz.cav == 0.0);
  CHECK(dz.free == 0.0);
}

TEST_CASE("energy conservation against finite differences of the ODE") {
  for (std::uint64_t s = 0; s < 6; ++s) {
    const int n = 10 + 4 * static_cast<int>(s);
    const CouplingMatrix m = fixture::system(n, 70 + s);
    const CVector s0 = random_state(n, 170 + s).sigma;
    const double h = 1e-4;
    for (int k = 0; k < 20; ++k) {
      const double t = 0.1 + 0.2 * k;
      const double dp = (oracle::population(m.m_total, s0, t + h) - oracle::population(m.m_total, s0, t - h)) / (2 * h);
      const EmissionRates r = emission_rates(StateVector{oracle::integrate_free(m.m_total, s0, t)}, m);
      CHECK(r.total == doctest::Approx(-dp).epsilon(1e-6));
      CHECK(r.total == doctest::Approx(r.cav + r.free).epsilon(1e-10));
    }
  }
}

TEST_CASE("rate derivatives match centred finite differences") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const CouplingMatrix m = fixture::system(15, 30 + s);
    const SpectralDecomposition d = eigendecompose(m);
    const ModalAmplitudes w = decompose_state(d, random_state(15, 31 + s));
    const double h = 1e-4;
    for (double t : {0.0 + 2 * h, 0.3, 1.0, 2.5}) {
      const RateDerivatives dr = emission_rate_derivatives(evolve(d, w, t), m);
      const EmissionRates a = emission_rates(evolve(d, w, t + h), m);
      const EmissionRates b = emission_rates(evolve(d, w, t - h), m);
      CHECK(dr.cav == doctest::Approx((a.cav - b.cav) / (2 * h)).epsilon(1e-6));
      CHECK(dr.free == doctest::Approx((a.free - b.free) / (2 * h)).epsilon(1e-6));
    }
  }
}

TEST_CASE("emission trace") {
  const double c1 = 0.05;
  const CouplingMatrix m1 = single_atom(c1, 0.01);
  const SpectralDecomposition d1 = eigendecompose(m1);
  const ModalAmplitudes w1 = decompose_state(d1, prepare_steady_state(m1));
  const std::vector<double> grid = linear_time_grid(5.0, 51);
  const EmissionTrace t1 = emission_trace(d1, w1, m1, grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    CHECK(t1.r_total[k] == doctest::Approx(t1.r_total[0] * std::exp(-(1 + c1) * grid[k])).epsilon(1e-12));
    CHECK(t1.r_cav[k] / t1.r_free[k] == doctest::Approx(c1).epsilon(1e-12));
  }

  for (std::uint64_t s = 0; s < 5; ++s) {
    const CouplingMatrix m = fixture::system(20, 40 + s);
    const SpectralDecomposition d = eigendecompose(m);
    const ModalAmplitudes w = decompose_state(d, prepare_steady_state(m));
    const EmissionTrace tr = emission_trace(d, w, m, grid);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const EmissionRates r = emission_rates(evolve(d, w, grid[k]), m);
      CHECK(tr.r_cav[k] == doctest::Approx(r.cav).epsilon(1e-10));
      CHECK(tr.r_free[k] == doctest::Approx(r.free).epsilon(1e-10));
      CHECK(tr.r_total[k] == doctest::Approx(tr.r_cav[k] + tr.r_free[k]).epsilon(1e-10));
      CHECK(tr.r_total[k] >= 0.0);
      const double pop = evolve(d, w, grid[k]).sigma.squaredNorm();
      CHECK(pop <= prev * (1 + 1e-12));
      prev = pop;
    }
  }

  const std::vector<double> bad1 = {0.1, 0.2, 0.3};
  const std::vector<double> bad2 = {0.0, 0.2, 0.2};
  CHECK_THROWS_AS(emission_trace(d1, w1, m1, bad1), ParameterError);
  CHECK_THROWS_AS(emission_trace(d1, w1, m1, bad2), ParameterError);
}

TEST_CASE("integrated emission matches quadrature") {
  const CouplingMatrix m = fixture::system(10, 99);
  const SpectralDecomposition d = eigendecompose(m);
  const ModalAmplitudes w = decompose_state(d, prepare_timed_dicke(m));
  const double t_end = 2.0 * std::log(1e12) / d.decay_rates.minCoeff();
  const std::vector<double> grid = linear_time_grid(t_end, 200001);
  const EmissionTrace tr = emission_trace(d, w, m, grid);
  double pc = 0, pf = 0;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double h = grid[k] - grid[k - 1];
    pc += 0.5 * h * (tr.r_cav[k] + tr.r_cav[k - 1]);
    pf += 0.5 * h * (tr.r_free[k] + tr.r_free[k - 1]);
  }
  const IntegratedEmission ie = integrated_emission(d, w, m);
  CHECK(ie.p_cav == doctest::Approx(pc).epsilon(1e-6));
  CHECK(ie.p_free == doctest::Approx(pf).epsilon(1e-6));
  CHECK(ie.p_cav + ie.p_free == doctest::Approx(1.0).epsilon(1e-10));
}
